"""Fisher Vector encodings, single layer and stacked.

Fits a small descriptor vocabulary, encodes one video as a whole-video
Fisher Vector, then as the two-layer variant: FVs over sliding temporal
windows, reduced with PCA, and re-encoded against a second vocabulary.
"""

import numpy as np

from catwalkrank.features import extract_descriptors
from catwalkrank.fisher import fv_length
from catwalkrank.gmm import GmmFitConfig, fit_gmm
from catwalkrank.ingest import Video
from catwalkrank.reduction import fit_pca, project
from catwalkrank.sfv import SfvConfig, encode_fv_baseline, encode_sfv, layer1_fvs
from catwalkrank.synth import render_walker

rng = np.random.default_rng(0)
videos = [
    Video(participant_id=f"p{i:03d}", year=0,
          frames=render_walker(q, frames=16, jitter=1.0, rng=np.random.default_rng(10 + i)))
    for i, q in enumerate([0.15, 0.4, 0.65, 0.9])
]
dsets = [extract_descriptors(v) for v in videos]
pool = np.vstack([d.descriptors for d in dsets])
print(f"pooled training descriptors: {pool.shape}")

k = 4
gmm1 = fit_gmm(pool, GmmFitConfig(n_components=k, max_iterations=20, seed=0))
print(f"vocabulary: K={k} diagonal components, weights {np.round(gmm1.weights, 3)}")

enc = encode_fv_baseline(dsets[0], gmm1, participant_id="p000")
print(f"\nwhole-video FV: length {enc.vector.size} (= 2 x 14 x {k}), "
      f"l2 norm {np.linalg.norm(enc.vector):.6f}")

cfg = SfvConfig(window=5, stride=1)
first = [fv for d in dsets for fv in layer1_fvs(d, gmm1, cfg)]
live = np.stack([fv.values for fv in first if not fv.degenerate])
print(f"\nfirst layer: {live.shape[0]} window FVs of length {fv_length(gmm1)}")

pca = fit_pca(live, energy=0.9)
print(f"PCA keeps p={pca.output_dim} directions for 90% of the energy "
      f"(actual fraction {pca.energy_fraction:.4f})")

gmm2 = fit_gmm(project(pca, live), GmmFitConfig(n_components=3, max_iterations=20, seed=1))
stacked = encode_sfv(dsets[0], gmm1, pca, gmm2, cfg, participant_id="p000")
print(f"\nstacked encoding: method {stacked.method}, length {stacked.vector.size} "
      f"(= 2 x {pca.output_dim} x 3)")

# encodings of different-quality walkers should not collapse together
others = [encode_sfv(d, gmm1, pca, gmm2, cfg) for d in dsets[1:]]
sims = [float(stacked.vector @ o.vector) for o in others]
print(f"cosine similarity of p000 against the rest: {np.round(sims, 3)}")

"""Linear ranking model trained on within-year difference vectors.

One weight vector serves both uses: the pairwise predictor is the sign of
the score difference, and the listwise ordering is the argsort of the
scores.  Training minimizes the L1-hinge SVM objective

    0.5 * ||w||^2 + C * sum max(0, 1 - y * w.z)

over pairs z = v_l - v_k by dual coordinate descent with a seeded,
epoch-fixed visiting order.  No bias term is used.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySet, InvalidArgument, InvalidInput, ParseError, ShapeError, UnsupportedFormat

__all__ = [
    "PairSample",
    "RankModel",
    "pair_label",
    "build_pairs",
    "train_ranksvm",
    "hinge_objective",
    "score",
    "predict_pair",
    "save_rank",
    "load_rank",
]


@dataclass
class PairSample:
    """Difference vector between two same-year encodings plus its label."""

    z: np.ndarray
    label: int  # +1 or -1
    year: int
    id_l: str = ""
    id_k: str = ""

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        if self.z.ndim != 1:
            raise ShapeError(f"z must be 1-D, got shape {self.z.shape}")
        if self.label not in (1, -1):
            raise InvalidArgument(f"label must be +1 or -1, got {self.label}")


@dataclass
class RankModel:
    w: np.ndarray
    C: float = 1.0
    seed: int = 0
    epochs: int = 0
    objectives: np.ndarray | None = None  # dual objective per epoch
    trained_years: tuple = ()

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise ShapeError(f"w must be 1-D, got shape {self.w.shape}")
        if not np.all(np.isfinite(self.w)):
            raise InvalidInput("w contains non-finite values")
        if not self.C > 0:
            raise InvalidArgument(f"C must be positive, got {self.C}")
        self.trained_years = tuple(self.trained_years)

    @property
    def dim(self):
        return self.w.size


def pair_label(score_l, score_k):
    """+1 when the first score is strictly higher, otherwise -1 (ties
    deliberately fall into the -1 branch)."""
    return 1 if score_l > score_k else -1


def build_pairs(groups, drop_ties=False, unordered=False):
    """Difference-vector samples from per-year groups of encoded videos.

    `groups` iterates over (year, encodings, true_scores) triples.  By
    default every ordered pair (l, k), l != k, of a year is emitted; with
    `unordered` only the canonical l < k orientation.  `drop_ties` removes
    pairs with exactly equal true scores instead of labelling them -1.
    Years with fewer than two participants are skipped with a warning.
    """
    pairs = []
    for year, encodings, true_scores in groups:
        scores = np.asarray(true_scores, dtype=np.float64)
        if len(encodings) != scores.size:
            raise ShapeError(
                f"year {year}: {len(encodings)} encodings vs {scores.size} scores"
            )
        if scores.size < 2:
            warnings.warn(f"year {year} has {scores.size} participant(s): no pairs")
            continue
        for l in range(scores.size):
            k_start = l + 1 if unordered else 0
            for k in range(k_start, scores.size):
                if k == l:
                    continue
                if drop_ties and scores[l] == scores[k]:
                    continue
                pairs.append(PairSample(
                    z=encodings[l].vector - encodings[k].vector,
                    label=pair_label(scores[l], scores[k]),
                    year=year,
                    id_l=encodings[l].participant_id,
                    id_k=encodings[k].participant_id,
                ))
    return pairs


def hinge_objective(w, z, labels, c):
    """Primal objective 0.5*||w||^2 + C * sum of hinge losses."""
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    margins = y * (z @ w)
    return 0.5 * float(w @ w) + c * float(np.maximum(0.0, 1.0 - margins).sum())


def train_ranksvm(pairs, c=1.0, tolerance=1e-4, max_epochs=1000, seed=0):
    """Fit the weight vector by dual coordinate descent.

    Pairs are visited in one seeded shuffled order, the same every epoch.
    Stops when the projected-gradient spread falls below `tolerance` or
    after `max_epochs` sweeps.  The dual objective after each sweep is
    kept on the model for descent monitoring.
    """
    if not pairs:
        raise EmptySet("no training pairs")
    if not c > 0:
        raise InvalidArgument(f"C must be positive, got {c}")
    if not tolerance > 0:
        raise InvalidArgument(f"tolerance must be positive, got {tolerance}")
    dims = {p.z.size for p in pairs}
    if len(dims) != 1:
        raise ShapeError(f"pair vectors have mixed dimensions: {sorted(dims)}")
    z = np.stack([p.z for p in pairs])
    if not np.all(np.isfinite(z)):
        raise InvalidInput("pair vectors contain non-finite values")
    y = np.array([p.label for p in pairs], dtype=np.float64)

    zy = z * y[:, None]
    qii = np.einsum("ij,ij->i", zy, zy)
    n, dim = zy.shape
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    alpha = np.zeros(n)
    w = np.zeros(dim)
    objectives = []
    for _ in range(max_epochs):
        pg_max = -np.inf
        pg_min = np.inf
        for i in order:
            if qii[i] == 0.0:
                continue  # zero difference vector: cannot move w
            g = float(w @ zy[i]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == c:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if pg != 0.0:
                new = min(max(alpha[i] - g / qii[i], 0.0), c)
                if new != alpha[i]:
                    w += (new - alpha[i]) * zy[i]
                    alpha[i] = new
        objectives.append(0.5 * float(w @ w) - float(alpha.sum()))
        if pg_max == -np.inf or pg_max - pg_min <= tolerance:
            break
    return RankModel(
        w=w,
        C=float(c),
        seed=seed if isinstance(seed, int) else 0,
        epochs=len(objectives),
        objectives=np.asarray(objectives),
    )


def score(model, v):
    """Listwise score w.v for one encoding vector or a matrix of rows."""
    a = np.asarray(v, dtype=np.float64)
    single = a.ndim == 1
    x = np.atleast_2d(a)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ShapeError(f"expected vectors of dimension {model.dim}, got shape {a.shape}")
    out = x @ model.w
    return float(out[0]) if single else out


def predict_pair(model, v_l, v_k):
    """Pairwise prediction: sign of the score difference, with an exact
    zero mapped to -1.  Computed from the two scores so it agrees with the
    listwise scorer identically."""
    diff = score(model, v_l) - score(model, v_k)
    return 1 if diff > 0 else -1


def save_rank(model, path):
    """Text format: `RANK v1 <dim> <C>` then one weight per line."""
    lines = [f"RANK v1 {model.dim} {'%.17g' % model.C}"]
    lines.extend("%.17g" % x for x in model.w)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_rank(path):
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "RANK":
        raise ParseError(f"{path}: not a ranking model file")
    if head[1] != "v1":
        raise UnsupportedFormat(f"{path}: unsupported version {head[1]!r}")
    try:
        dim = int(head[2])
        c = float(head[3])
    except ValueError:
        raise ParseError(f"{path}: bad header {lines[0]!r}") from None
    if len(lines) != 1 + dim:
        raise ParseError(f"{path}: expected {dim} weights, found {len(lines) - 1}")
    try:
        w = np.array([float(v) for v in lines[1:]], dtype=np.float64)
    except ValueError:
        raise ParseError(f"{path}: non-numeric weight line") from None
    return RankModel(w=w, C=c)

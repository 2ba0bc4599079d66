"""Leave-one-year-out evaluation of the full pipeline.

For every held-out year, all models (first-layer vocabulary, reducer,
second-layer vocabulary, ranking weights) are refit from scratch on the
remaining years, the held-out participants are encoded and scored with
the frozen models, and ranking metrics are collected.  Every fitted model
carries a `trained_years` tag that is checked against the held-out year,
so leakage is a hard error rather than a silent mistake.

Per-stage random seeds derive from (run seed, held-out year, stage), so
reports are byte-identical across runs and independent of fold execution
order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FitError, InvalidArgument
from .features import FeatureConfig, extract_descriptors
from .gmm import GmmFitConfig, fit_gmm
from .ingest import load_dataset
from .metrics import (
    concordance,
    ndcg,
    order_by_score,
    ratings_from_scores,
    winner_predicted_rank,
)
from .rank import build_pairs, score, train_ranksvm
from .reduction import fit_pca, make_random_projection, project
from .sfv import SfvConfig, encode_fv_baseline, encode_sfv, layer1_fvs

__all__ = ["PipelineConfig", "YearResult", "LoyoReport", "run_loyo", "write_report"]

_METHOD_TAGS = {"fv": "FV", "sfv-pca": "SFV-PCA", "sfv-rp": "SFV-RP"}

# stage ids for per-fold seed streams
_STAGE_GMM1, _STAGE_RP, _STAGE_GMM2, _STAGE_RANK = 1, 2, 3, 4


@dataclass
class PipelineConfig:
    method: str = "sfv-pca"  # fv | sfv-pca | sfv-rp
    k: int = 256
    k2: int | None = None  # second-layer vocabulary size, defaults to k
    magnitude_threshold: float = 40.0
    window: int = 5
    stride: int = 1
    svm_c: float = 1.0
    energy: float = 0.9
    seed: int = 0
    sample_cap: int = 500_000
    em_iterations: int = 100
    em_tolerance: float = 1e-5
    parallel_folds: int = 1
    # accepted for interface stability; every code path already reduces in
    # a fixed order, so runs are reproducible with or without it
    deterministic: bool = True

    def __post_init__(self):
        m = self.method.lower()
        if m not in _METHOD_TAGS:
            raise InvalidArgument(
                f"method must be one of {sorted(_METHOD_TAGS)}, got {self.method!r}"
            )
        self.method = m
        if self.k < 1:
            raise InvalidArgument(f"k must be >= 1, got {self.k}")
        if self.k2 is not None and self.k2 < 1:
            raise InvalidArgument(f"k2 must be >= 1, got {self.k2}")
        if self.window < 1 or self.stride < 1:
            raise InvalidArgument(
                f"window and stride must be >= 1, got {self.window}/{self.stride}"
            )
        if not self.svm_c > 0:
            raise InvalidArgument(f"svm_c must be positive, got {self.svm_c}")
        if not 0.0 < self.energy <= 1.0:
            raise InvalidArgument(f"energy must be in (0, 1], got {self.energy}")
        if self.parallel_folds < 1:
            raise InvalidArgument(f"parallel_folds must be >= 1, got {self.parallel_folds}")

    @property
    def method_tag(self):
        return _METHOD_TAGS[self.method]

    @property
    def k_second(self):
        return self.k if self.k2 is None else self.k2


@dataclass
class YearResult:
    year: int
    ndcg: float
    kendall: float
    concordant: int
    discordant: int
    winner_predicted_rank: int
    train_years: tuple = ()


@dataclass
class LoyoReport:
    results: list = field(default_factory=list)
    mean_ndcg: float = 0.0
    mean_kendall: float = 0.0


def _stage_seed(cfg, test_year, stage):
    return [cfg.seed, test_year, stage]


def _gmm_cfg(cfg, n_components, test_year, stage):
    return GmmFitConfig(
        n_components=n_components,
        max_iterations=cfg.em_iterations,
        tolerance=cfg.em_tolerance,
        seed=_stage_seed(cfg, test_year, stage),
        sample_cap=cfg.sample_cap,
    )


def _fit_fold(cfg, extracted, train_years, test_year):
    """Fit every model of one fold on training years only; returns a
    closure that encodes a single video with the frozen models."""
    train_sets = [d for y in train_years for _, d, _ in extracted[y]]
    pool = np.vstack([d.descriptors for d in train_sets])
    gmm1 = fit_gmm(pool, _gmm_cfg(cfg, cfg.k, test_year, _STAGE_GMM1))
    gmm1.trained_years = train_years
    models = [gmm1]

    if cfg.method == "fv":
        def encode(dset, pid, year):
            return encode_fv_baseline(dset, gmm1, participant_id=pid, year=year)
    else:
        scfg = SfvConfig(window=cfg.window, stride=cfg.stride)
        first = [
            fv.values
            for d in train_sets
            for fv in layer1_fvs(d, gmm1, scfg)
            if not fv.degenerate
        ]
        if len(first) < 2:
            raise FitError(
                f"fold {test_year}: only {len(first)} usable first-layer vectors"
            )
        mat = np.stack(first)
        pca = fit_pca(mat, energy=cfg.energy)
        pca.trained_years = train_years
        if cfg.method == "sfv-pca":
            reducer = pca
        else:
            rp_seed = int(np.random.SeedSequence(
                _stage_seed(cfg, test_year, _STAGE_RP)).generate_state(1)[0])
            reducer = make_random_projection(pca.output_dim, mat.shape[1], rp_seed)
            reducer.trained_years = train_years
        models.append(reducer)
        gmm2 = fit_gmm(project(reducer, mat), _gmm_cfg(cfg, cfg.k_second, test_year, _STAGE_GMM2))
        gmm2.trained_years = train_years
        models.append(gmm2)

        def encode(dset, pid, year):
            return encode_sfv(dset, gmm1, reducer, gmm2, scfg, participant_id=pid, year=year)

    return encode, models


def _run_fold(cfg, extracted, years_sorted, test_year):
    train_years = tuple(y for y in years_sorted if y != test_year)
    encode, models = _fit_fold(cfg, extracted, train_years, test_year)

    groups = []
    for year in train_years:
        encs = [encode(d, pid, year) for pid, d, _ in extracted[year]]
        groups.append((year, encs, [s for _, _, s in extracted[year]]))
    ranker = train_ranksvm(
        build_pairs(groups), c=cfg.svm_c, seed=_stage_seed(cfg, test_year, _STAGE_RANK)
    )
    ranker.trained_years = train_years
    models.append(ranker)
    for m in models:
        assert test_year not in m.trained_years, f"model leaked test year {test_year}"

    test_encs = [encode(d, pid, test_year) for pid, d, _ in extracted[test_year]]
    predicted = score(ranker, np.stack([e.vector for e in test_encs]))
    true = np.array([s for _, _, s in extracted[test_year]])
    ratings = ratings_from_scores(true)
    c, d = concordance(predicted, true)
    return YearResult(
        year=test_year,
        ndcg=float(ndcg(order_by_score(predicted), ratings)),
        kendall=(c - d) / (c + d),
        concordant=c,
        discordant=d,
        winner_predicted_rank=winner_predicted_rank(predicted, true),
        train_years=train_years,
    )


def run_loyo(cfg, data):
    """Run the whole protocol on a dataset root path or a loaded list of
    YearSets; returns per-year results plus arithmetic means."""
    years = data if isinstance(data, list) else load_dataset(data)
    if len(years) < 2:
        raise InvalidArgument(f"leave-one-year-out needs >= 2 years, got {len(years)}")
    fcfg = FeatureConfig(magnitude_threshold=cfg.magnitude_threshold)
    extracted = {
        ys.year: [
            (video.participant_id, extract_descriptors(video, fcfg), s)
            for video, s in ys.participants
        ]
        for ys in years
    }
    years_sorted = tuple(sorted(extracted))
    if cfg.parallel_folds > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallel_folds) as pool:
            results = list(pool.map(
                lambda ty: _run_fold(cfg, extracted, years_sorted, ty), years_sorted
            ))
    else:
        results = [_run_fold(cfg, extracted, years_sorted, ty) for ty in years_sorted]
    return LoyoReport(
        results=results,
        mean_ndcg=float(np.mean([r.ndcg for r in results])),
        mean_kendall=float(np.mean([r.kendall for r in results])),
    )


def write_report(report, path):
    """CSV report: one row per held-out year plus an average row."""
    lines = ["year,ndcg,kendall,C,D,winner_predicted_rank"]
    for r in report.results:
        lines.append(
            f"{r.year},{r.ndcg:.6f},{r.kendall:.6f},{r.concordant},"
            f"{r.discordant},{r.winner_predicted_rank}"
        )
    lines.append(f"average,{report.mean_ndcg:.6f},{report.mean_kendall:.6f},,,")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

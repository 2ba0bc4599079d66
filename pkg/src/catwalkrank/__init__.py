"""Rank catwalk videos by predicted judge score.

The pipeline: per-pixel spatio-temporal descriptors (`features`) over
cropped frames (`ingest`), a GMM vocabulary (`gmm`), single- or two-layer
Fisher Vector encodings (`fisher`, `reduction`, `sfv`), a linear ranking
model trained on pairwise differences (`rank`), ranking metrics
(`metrics`), a leave-one-year-out driver (`harness`), and a synthetic
dataset generator (`synth`) for end-to-end verification.
"""

from . import errors
from .features import DescriptorSet, FeatureConfig, FlowField, extract_descriptors, optical_flow
from .fisher import FisherVector, FvConfig, encode_fv
from .gmm import GmmFitConfig, GmmModel, fit_gmm, posterior
from .harness import LoyoReport, PipelineConfig, YearResult, run_loyo, write_report
from .ingest import Video, YearSet, load_dataset
from .metrics import kendall_tau, ndcg, ratings_from_scores
from .rank import RankModel, build_pairs, predict_pair, score, train_ranksvm
from .reduction import PcaModel, RpModel, fit_pca, make_random_projection, project
from .sfv import EncodedVideo, SfvConfig, encode_fv_baseline, encode_sfv
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "errors",
    "DescriptorSet", "FeatureConfig", "FlowField", "extract_descriptors", "optical_flow",
    "FisherVector", "FvConfig", "encode_fv",
    "GmmFitConfig", "GmmModel", "fit_gmm", "posterior",
    "LoyoReport", "PipelineConfig", "YearResult", "run_loyo", "write_report",
    "Video", "YearSet", "load_dataset",
    "kendall_tau", "ndcg", "ratings_from_scores",
    "RankModel", "build_pairs", "predict_pair", "score", "train_ranksvm",
    "PcaModel", "RpModel", "fit_pca", "make_random_projection", "project",
    "EncodedVideo", "SfvConfig", "encode_fv_baseline", "encode_sfv",
    "SynthConfig", "generate",
    "__version__",
]

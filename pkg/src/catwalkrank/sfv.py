"""Video-level encodings: single-layer Fisher Vector baseline and the
two-layer stacked variant.

The stacked encoder computes one FV per sliding window of usable frames,
reduces those vectors with PCA or a random projection, and encodes the
reduced set with a second vocabulary.  Near-constant videos that produce
no descriptors yield flagged zero vectors instead of errors, so a single
degenerate participant cannot abort a whole evaluation.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, ParseError, UnsupportedFormat
from .fisher import FisherVector, FvConfig, encode_fv, fv_length
from .reduction import PcaModel, project

__all__ = [
    "SfvConfig",
    "EncodedVideo",
    "window_starts",
    "layer1_fvs",
    "encode_sfv",
    "encode_fv_baseline",
    "save_encoded",
    "load_encoded",
]

_METHODS = ("FV", "SFV-PCA", "SFV-RP")


@dataclass
class SfvConfig:
    """Sliding-window geometry over usable frames."""

    window: int = 5
    stride: int = 1

    def __post_init__(self):
        if self.window < 1:
            raise InvalidArgument(f"window must be >= 1, got {self.window}")
        if self.stride < 1:
            raise InvalidArgument(f"stride must be >= 1, got {self.stride}")


@dataclass
class EncodedVideo:
    """Final vector representation of one participant's video."""

    participant_id: str
    year: int
    vector: np.ndarray
    method: str  # FV | SFV-PCA | SFV-RP
    degenerate: bool = False

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.method not in _METHODS:
            raise InvalidArgument(f"method must be one of {_METHODS}, got {self.method!r}")


def window_starts(n_frames, cfg):
    """Start indices of the sliding windows over n_frames usable frames.

    Yields max(1, (n_frames - window) // stride + 1) positions; a video
    shorter than one window falls back to a single all-frame window.
    """
    if n_frames < 1:
        raise InvalidArgument(f"need at least one usable frame, got {n_frames}")
    if n_frames < cfg.window:
        warnings.warn(
            f"only {n_frames} usable frames for window {cfg.window}: using one short window"
        )
        return [0]
    return list(range(0, n_frames - cfg.window + 1, cfg.stride))


def layer1_fvs(dset, model, cfg=None, fv_cfg=None):
    """One Fisher Vector per window position over a video's descriptors.

    A window containing no descriptors gives a flagged zero FV so window
    counts stay decoupled from image content.
    """
    if cfg is None:
        cfg = SfvConfig()
    if fv_cfg is None:
        fv_cfg = FvConfig()
    length = fv_length(model)
    off = dset.offsets
    out = []
    for start in window_starts(dset.n_frames, cfg):
        stop = min(start + cfg.window, dset.n_frames)
        rows = dset.descriptors[off[start]:off[stop]]
        if rows.shape[0] == 0:
            out.append(FisherVector(np.zeros(length), normalized=True, degenerate=True))
        else:
            out.append(encode_fv(model, rows, fv_cfg))
    return out


def encode_fv_baseline(dset, model, participant_id="", year=0, fv_cfg=None):
    """Whole-video single-layer encoding (the pooled descriptor set as one
    Fisher Vector)."""
    if dset.n_descriptors == 0:
        return EncodedVideo(
            participant_id=participant_id,
            year=year,
            vector=np.zeros(fv_length(model)),
            method="FV",
            degenerate=True,
        )
    fv = encode_fv(model, dset.descriptors, fv_cfg or FvConfig())
    return EncodedVideo(
        participant_id=participant_id,
        year=year,
        vector=fv.values,
        method="FV",
        degenerate=fv.degenerate,
    )


def encode_sfv(dset, model1, reducer, model2, cfg=None, participant_id="", year=0, fv_cfg=None):
    """Two-layer encoding: window FVs -> reduction -> second-layer FV.

    Degenerate (zero) window FVs are left out of the second layer unless
    every window is degenerate, in which case the result is a flagged
    zero vector of the correct length.
    """
    method = "SFV-PCA" if isinstance(reducer, PcaModel) else "SFV-RP"
    first = layer1_fvs(dset, model1, cfg, fv_cfg)
    live = [fv.values for fv in first if not fv.degenerate]
    if not live:
        return EncodedVideo(
            participant_id=participant_id,
            year=year,
            vector=np.zeros(fv_length(model2)),
            method=method,
            degenerate=True,
        )
    reduced = project(reducer, np.stack(live))
    fv = encode_fv(model2, reduced, fv_cfg or FvConfig())
    return EncodedVideo(
        participant_id=participant_id,
        year=year,
        vector=fv.values,
        method=method,
        degenerate=fv.degenerate,
    )


def save_encoded(enc, path):
    """Text format: `ENC v1 <method> <len>` then one decimal per line."""
    lines = [f"ENC v1 {enc.method} {enc.vector.size}"]
    lines.extend("%.17g" % x for x in enc.vector)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_encoded(path, participant_id="", year=0):
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "ENC":
        raise ParseError(f"{path}: not an encoded-video file")
    if head[1] != "v1":
        raise UnsupportedFormat(f"{path}: unsupported version {head[1]!r}")
    method = head[2]
    if method not in _METHODS:
        raise ParseError(f"{path}: unknown method {method!r}")
    try:
        length = int(head[3])
    except ValueError:
        raise ParseError(f"{path}: bad header {lines[0]!r}") from None
    if len(lines) != 1 + length:
        raise ParseError(f"{path}: expected {length} values, found {len(lines) - 1}")
    try:
        vector = np.array([float(v) for v in lines[1:]], dtype=np.float64)
    except ValueError:
        raise ParseError(f"{path}: non-numeric value line") from None
    return EncodedVideo(
        participant_id=participant_id,
        year=year,
        vector=vector,
        method=method,
        degenerate=not np.any(vector),
    )

"""Per-pixel spatio-temporal descriptors.

Each retained pixel of a usable frame yields a 14-dimensional row::

    [x, y, |Jx|, |Jy|, |Jyy|, |Jxx|, magnitude, orientation,
     u, v, du/dt, dv/dt, divergence, vorticity]

Spatial terms come from finite differences of the intensity image, motion
terms from dense Horn-Schunck optical flow between consecutive frames.
Pixels are kept only where the gradient magnitude exceeds a threshold, so
descriptor counts vary per frame.  Frames 0..T-2 are usable (the last
frame has no forward flow).
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, InvalidInput, ParseError, ShapeError

__all__ = [
    "DESCRIPTOR_DIM",
    "FeatureConfig",
    "FlowField",
    "DescriptorSet",
    "spatial_gradients",
    "optical_flow",
    "flow_features",
    "extract_descriptors",
    "write_descriptor_dump",
    "read_descriptor_dump",
]

DESCRIPTOR_DIM = 14


@dataclass
class FeatureConfig:
    """Extraction settings.  `magnitude_threshold` is the minimum gradient
    magnitude (exclusive) a pixel needs to produce a descriptor."""

    magnitude_threshold: float = 40.0

    def __post_init__(self):
        t = float(self.magnitude_threshold)
        if not np.isfinite(t) or t < 0:
            raise InvalidArgument(f"magnitude_threshold must be >= 0, got {t}")
        self.magnitude_threshold = t


@dataclass
class FlowField:
    """Dense optical flow; u is the horizontal component, v the vertical."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.ndim != 2 or self.u.shape != self.v.shape:
            raise ShapeError(f"u and v must be equal 2-D grids, got {self.u.shape} and {self.v.shape}")

    @property
    def shape(self):
        return self.u.shape


@dataclass
class DescriptorSet:
    """Pooled descriptors of one video plus per-frame counts.

    Row blocks appear in frame order: the first `frame_counts[0]` rows
    belong to usable frame 0, and so on.
    """

    descriptors: np.ndarray  # (N, 14)
    frame_counts: np.ndarray  # (F,) int64

    def __post_init__(self):
        d = np.asarray(self.descriptors, dtype=np.float64)
        c = np.asarray(self.frame_counts, dtype=np.int64)
        if d.ndim != 2 or d.shape[1] != DESCRIPTOR_DIM:
            raise ShapeError(f"descriptors must be (N, {DESCRIPTOR_DIM}), got {d.shape}")
        if c.ndim != 1 or np.any(c < 0) or int(c.sum()) != d.shape[0]:
            raise ShapeError(
                f"frame_counts {c.tolist()} do not partition {d.shape[0]} descriptors"
            )
        self.descriptors = d
        self.frame_counts = c

    @property
    def n_descriptors(self):
        return self.descriptors.shape[0]

    @property
    def n_frames(self):
        return self.frame_counts.size

    @property
    def offsets(self):
        return np.concatenate(([0], np.cumsum(self.frame_counts)))

    def frame_slice(self, t):
        """Descriptor rows of usable frame t."""
        off = self.offsets
        return self.descriptors[off[t]:off[t + 1]]


def _check_frame(frame, name):
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite values")
    return a


def spatial_gradients(frame):
    """Six gradient features per pixel, stacked along the last axis.

    Order: |Jx|, |Jy|, |Jyy|, |Jxx|, magnitude, orientation.  First
    derivatives use central differences inside the image and one-sided
    differences at the borders; second derivatives difference the first
    ones the same way.  Orientation is atan(|Jy|/|Jx|) in [0, pi/2],
    defined as 0 where both derivatives vanish.
    """
    a = _check_frame(frame, "frame")
    jy, jx = np.gradient(a)
    jyy = np.gradient(jy, axis=0)
    jxx = np.gradient(jx, axis=1)
    mag = np.hypot(jx, jy)
    orient = np.arctan2(np.abs(jy), np.abs(jx))
    return np.stack([np.abs(jx), np.abs(jy), np.abs(jyy), np.abs(jxx), mag, orient], axis=-1)


def _flow_derivatives(prev, nxt):
    # 2x2x2 cube averages; the last row/column is replicated so the grids
    # stay frame-sized.
    p = np.pad(prev, ((0, 1), (0, 1)), mode="edge")
    n = np.pad(nxt, ((0, 1), (0, 1)), mode="edge")
    fx = 0.25 * ((p[:-1, 1:] - p[:-1, :-1]) + (p[1:, 1:] - p[1:, :-1])
                 + (n[:-1, 1:] - n[:-1, :-1]) + (n[1:, 1:] - n[1:, :-1]))
    fy = 0.25 * ((p[1:, :-1] - p[:-1, :-1]) + (p[1:, 1:] - p[:-1, 1:])
                 + (n[1:, :-1] - n[:-1, :-1]) + (n[1:, 1:] - n[:-1, 1:]))
    ft = 0.25 * ((n[:-1, :-1] - p[:-1, :-1]) + (n[:-1, 1:] - p[:-1, 1:])
                 + (n[1:, :-1] - p[1:, :-1]) + (n[1:, 1:] - p[1:, 1:]))
    return fx, fy, ft


def _neighbor_mean(a):
    p = np.pad(a, 1, mode="edge")
    return 0.25 * (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:])


def _hs_energy(u, v, fx, fy, ft, regularization):
    # Discrete objective the Jacobi sweep descends: data term plus the
    # 4-neighbor smoothness graph (each edge counted twice, hence /8).
    data = float(np.sum((fx * u + fy * v + ft) ** 2))
    smooth = 0.0
    for g in (u, v):
        p = np.pad(g, 1, mode="edge")
        smooth += float(
            np.sum((g - p[:-2, 1:-1]) ** 2) + np.sum((g - p[2:, 1:-1]) ** 2)
            + np.sum((g - p[1:-1, :-2]) ** 2) + np.sum((g - p[1:-1, 2:]) ** 2)
        )
    return data + regularization / 8.0 * smooth


def optical_flow(prev, nxt, regularization=100.0, iterations=100, return_energies=False):
    """Dense Horn-Schunck flow from `prev` to `nxt`.

    Starts from zero flow and runs a fixed number of Jacobi sweeps, so the
    result is deterministic.  `regularization` is the squared smoothness
    weight.  With `return_energies` the per-sweep objective values are
    returned as well (first entry is the zero-flow energy).
    """
    a = _check_frame(prev, "prev")
    b = _check_frame(nxt, "nxt")
    if a.shape != b.shape:
        raise ShapeError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if not regularization > 0 or not np.isfinite(regularization):
        raise InvalidArgument(f"regularization must be positive, got {regularization}")
    if iterations < 0:
        raise InvalidArgument(f"iterations must be >= 0, got {iterations}")
    fx, fy, ft = _flow_derivatives(a, b)
    denom = regularization + fx ** 2 + fy ** 2
    u = np.zeros_like(a)
    v = np.zeros_like(a)
    energies = [_hs_energy(u, v, fx, fy, ft, regularization)] if return_energies else None
    for _ in range(iterations):
        ubar = _neighbor_mean(u)
        vbar = _neighbor_mean(v)
        gain = (fx * ubar + fy * vbar + ft) / denom
        u = ubar - fx * gain
        v = vbar - fy * gain
        if return_energies:
            energies.append(_hs_energy(u, v, fx, fy, ft, regularization))
    flow = FlowField(u=u, v=v)
    if return_energies:
        return flow, np.asarray(energies)
    return flow


def flow_features(flow, prev_flow=None):
    """Six motion features per pixel, stacked along the last axis.

    Order: u, v, du/dt, dv/dt, divergence, vorticity.  Temporal
    derivatives are backward differences against `prev_flow` and zero when
    there is no previous flow.  Spatial derivatives follow the same
    central-difference scheme as the intensity gradients.
    """
    u, v = flow.u, flow.v
    if prev_flow is None:
        dudt = np.zeros_like(u)
        dvdt = np.zeros_like(v)
    else:
        if prev_flow.shape != flow.shape:
            raise ShapeError(f"flow shapes differ: {prev_flow.shape} vs {flow.shape}")
        dudt = u - prev_flow.u
        dvdt = v - prev_flow.v
    div = np.gradient(u, axis=1) + np.gradient(v, axis=0)
    vort = np.gradient(v, axis=1) - np.gradient(u, axis=0)
    return np.stack([u, v, dudt, dvdt, div, vort], axis=-1)


def extract_descriptors(video, cfg=None):
    """Pool thresholded descriptors over all usable frames of a video.

    For each frame t in 0..T-2, flow is computed towards frame t+1 and a
    descriptor is emitted for every pixel whose gradient magnitude
    strictly exceeds the threshold.
    """
    if cfg is None:
        cfg = FeatureConfig()
    frames = video.frames
    n_usable = frames.shape[0] - 1
    flows = [optical_flow(frames[t], frames[t + 1]) for t in range(n_usable)]
    counts = np.zeros(n_usable, dtype=np.int64)
    blocks = []
    for t in range(n_usable):
        g = spatial_gradients(frames[t])
        o = flow_features(flows[t], flows[t - 1] if t > 0 else None)
        mask = g[..., 4] > cfg.magnitude_threshold
        ys, xs = np.nonzero(mask)
        counts[t] = xs.size
        if xs.size:
            blocks.append(np.column_stack([
                xs.astype(np.float64), ys.astype(np.float64), g[mask], o[mask],
            ]))
    if blocks:
        descriptors = np.vstack(blocks)
    else:
        descriptors = np.empty((0, DESCRIPTOR_DIM), dtype=np.float64)
    return DescriptorSet(descriptors=descriptors, frame_counts=counts)


def write_descriptor_dump(dset, path):
    """Text dump: one row per descriptor, frame index then 14 decimals."""
    off = dset.offsets
    with open(path, "w", encoding="ascii") as fh:
        for t in range(dset.n_frames):
            for row in dset.descriptors[off[t]:off[t + 1]]:
                fh.write("%d " % t + " ".join("%.17g" % x for x in row) + "\n")


def read_descriptor_dump(path):
    """Inverse of write_descriptor_dump.

    Trailing frames that emitted no descriptors are not recoverable from
    the dump; counts are rebuilt up to the last frame present.
    """
    path = Path(path)
    ts = []
    rows = []
    for ln, line in enumerate(path.read_text(encoding="ascii").splitlines(), 1):
        parts = line.split()
        if len(parts) != DESCRIPTOR_DIM + 1:
            raise ParseError(f"{path}:{ln}: expected {DESCRIPTOR_DIM + 1} fields, got {len(parts)}")
        try:
            t = int(parts[0])
            vals = [float(x) for x in parts[1:]]
        except ValueError:
            raise ParseError(f"{path}:{ln}: non-numeric field") from None
        if t < 0 or (ts and t < ts[-1]):
            raise ParseError(f"{path}:{ln}: frame indices must be non-decreasing")
        ts.append(t)
        rows.append(vals)
    if not rows:
        return DescriptorSet(np.empty((0, DESCRIPTOR_DIM)), np.zeros(0, dtype=np.int64))
    counts = np.bincount(np.asarray(ts, dtype=np.int64))
    return DescriptorSet(np.asarray(rows, dtype=np.float64), counts)

"""Fisher Vector encoding of a descriptor set against a GMM vocabulary.

The encoding accumulates, per component, responsibility-weighted
deviations of the descriptors from the component mean (first block) and
from the component variance (second block), giving a 2*d*K vector.  It is
then power-normalized elementwise and scaled to unit l2 norm.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySet, InvalidArgument, ParseError, UnsupportedFormat
from .gmm import posterior

__all__ = [
    "FisherVector",
    "FvConfig",
    "fv_length",
    "power_normalize",
    "l2_normalize",
    "encode_fv",
    "save_fv",
    "load_fv",
]

# rows per accumulation block; fixed so the reduction order never varies
_BLOCK = 16384


@dataclass
class FvConfig:
    """`exponent` is the power-normalization coefficient."""

    exponent: float = 0.5

    def __post_init__(self):
        e = float(self.exponent)
        if not 0.0 < e <= 1.0:
            raise InvalidArgument(f"exponent must be in (0, 1], got {e}")
        self.exponent = e


@dataclass
class FisherVector:
    values: np.ndarray  # (2*d*K,)
    normalized: bool = False
    degenerate: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self):
        return self.values.size


def fv_length(model):
    """Encoded length for a given vocabulary: 2 * d * K."""
    return 2 * model.dim * model.n_components


def power_normalize(v, exponent=0.5):
    """Elementwise sign(z) * |z|**exponent."""
    a = np.asarray(v, dtype=np.float64)
    return np.sign(a) * np.abs(a) ** exponent


def l2_normalize(v):
    """Scale to unit l2 norm; a zero vector is returned unchanged with a
    degenerate flag instead of dividing by zero."""
    a = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return a.copy(), True
    return a / norm, False


def encode_fv(model, descriptors, cfg=None):
    """Encode N descriptor rows as a normalized Fisher Vector.

    Layout: mean-deviation blocks for components 0..K-1, then the
    variance-deviation blocks in the same order.  Raises EmptySet for
    N = 0; callers that tolerate empty sets handle that case themselves.
    """
    if cfg is None:
        cfg = FvConfig()
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        if x.ndim == 2:
            raise EmptySet("cannot encode an empty descriptor set")
        raise EmptySet(f"descriptors must be a non-empty 2-D matrix, got shape {x.shape}")
    n = x.shape[0]

    # sufficient statistics: s0 = sum gamma, s1 = gamma.T @ x, s2 = gamma.T @ x**2
    k, d = model.n_components, model.dim
    s0 = np.zeros(k)
    s1 = np.zeros((k, d))
    s2 = np.zeros((k, d))
    for start in range(0, n, _BLOCK):
        chunk = x[start:start + _BLOCK]
        g = posterior(model, chunk)
        s0 += g.sum(axis=0)
        s1 += g.T @ chunk
        s2 += g.T @ chunk ** 2

    mu = model.means
    var = model.variances
    sigma = np.sqrt(var)
    w = model.weights
    g_mu = (s1 - mu * s0[:, None]) / sigma / (n * np.sqrt(w))[:, None]
    g_var = ((s2 - 2.0 * mu * s1 + mu ** 2 * s0[:, None]) / var - s0[:, None]) / (
        n * np.sqrt(2.0 * w)
    )[:, None]
    raw = np.concatenate([g_mu.ravel(), g_var.ravel()])
    values, degenerate = l2_normalize(power_normalize(raw, cfg.exponent))
    return FisherVector(values=values, normalized=True, degenerate=degenerate)


def save_fv(fv, path):
    """Text format: header `FV v1 <len>`, then one decimal per line."""
    lines = [f"FV v1 {len(fv)}"]
    lines.extend("%.17g" % x for x in fv.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_fv(path):
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "FV":
        raise ParseError(f"{path}: not a Fisher Vector file")
    if head[1] != "v1":
        raise UnsupportedFormat(f"{path}: unsupported version {head[1]!r}")
    try:
        length = int(head[2])
    except ValueError:
        raise ParseError(f"{path}: bad header {lines[0]!r}") from None
    if len(lines) != 1 + length:
        raise ParseError(f"{path}: expected {length} values, found {len(lines) - 1}")
    try:
        values = np.array([float(v) for v in lines[1:]], dtype=np.float64)
    except ValueError:
        raise ParseError(f"{path}: non-numeric value line") from None
    norm = float(np.linalg.norm(values))
    return FisherVector(values=values, normalized=True, degenerate=(norm == 0.0))

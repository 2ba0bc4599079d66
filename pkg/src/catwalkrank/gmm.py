"""Diagonal-covariance Gaussian mixture vocabulary.

Fitted with EM from a seeded k-means++ initialization.  All likelihood
work is done in log space; posterior and sufficient-statistic passes run
over fixed-size row blocks in a fixed order, so results do not depend on
available memory and repeat bitwise for the same seed.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import FitError, InvalidArgument, InvalidInput, ParseError, ShapeError, UnsupportedFormat

__all__ = [
    "VARIANCE_FLOOR",
    "GmmModel",
    "GmmFitConfig",
    "fit_gmm",
    "posterior",
    "log_likelihood",
    "save_gmm",
    "load_gmm",
]

VARIANCE_FLOOR = 1e-6

# rows per block in E-step / posterior accumulation
_BLOCK = 16384

_LOG2PI = float(np.log(2.0 * np.pi))


@dataclass
class GmmModel:
    """Mixture parameters (weights, means, per-dimension variances)."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    variances: np.ndarray  # (K, d)
    trained_years: tuple = ()
    log_likelihoods: np.ndarray | None = None  # training trajectory

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.asarray(self.means, dtype=np.float64)
        v = np.asarray(self.variances, dtype=np.float64)
        if w.ndim != 1 or m.ndim != 2 or v.shape != m.shape or w.size != m.shape[0]:
            raise ShapeError(
                f"inconsistent parameter shapes: weights {w.shape}, means {m.shape}, variances {v.shape}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(m)) and np.all(np.isfinite(v))):
            raise InvalidInput("model parameters contain non-finite values")
        if np.any(w <= 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise InvalidArgument("weights must be positive and sum to 1")
        if np.any(v < VARIANCE_FLOOR):
            raise InvalidArgument(f"variances must be >= {VARIANCE_FLOOR}")
        self.weights = w
        self.means = m
        self.variances = v
        self.trained_years = tuple(self.trained_years)

    @property
    def n_components(self):
        return self.weights.size

    @property
    def dim(self):
        return self.means.shape[1]


@dataclass
class GmmFitConfig:
    n_components: int
    max_iterations: int = 100
    tolerance: float = 1e-5  # relative log-likelihood change
    seed: object = 0  # anything np.random.default_rng accepts
    sample_cap: int = 500_000

    def __post_init__(self):
        if self.n_components < 1:
            raise InvalidArgument(f"n_components must be >= 1, got {self.n_components}")
        if self.max_iterations < 1:
            raise InvalidArgument(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise InvalidArgument(f"tolerance must be > 0, got {self.tolerance}")
        if self.sample_cap < 1:
            raise InvalidArgument(f"sample_cap must be >= 1, got {self.sample_cap}")


def _check_data(x, dim=None):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"descriptor matrix must be 2-D, got shape {a.shape}")
    if dim is not None and a.shape[1] != dim:
        raise ShapeError(f"descriptor dimension {a.shape[1]} does not match model dimension {dim}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("descriptors contain non-finite values")
    return a


def _log_weighted_densities(weights, means, variances, x):
    """log(w_k * N(x | mu_k, var_k)) for each row of x; shape (n, K)."""
    inv = 1.0 / variances  # (K, d)
    const = np.log(weights) - 0.5 * (
        means.shape[1] * _LOG2PI + np.log(variances).sum(axis=1)
    )
    quad = (
        x ** 2 @ inv.T
        - 2.0 * (x @ (means * inv).T)
        + (means ** 2 * inv).sum(axis=1)[None, :]
    )
    return const[None, :] - 0.5 * quad


def posterior(model, f):
    """Component responsibilities gamma for one vector or a matrix of rows.

    Rows sum to 1; computed in log space so far-away points do not
    underflow to an all-zero row.
    """
    single = np.asarray(f).ndim == 1
    x = _check_data(np.atleast_2d(np.asarray(f, dtype=np.float64)), model.dim)
    out = np.empty((x.shape[0], model.n_components))
    for start in range(0, x.shape[0], _BLOCK):
        chunk = x[start:start + _BLOCK]
        ld = _log_weighted_densities(model.weights, model.means, model.variances, chunk)
        out[start:start + chunk.shape[0]] = np.exp(ld - logsumexp(ld, axis=1, keepdims=True))
    return out[0] if single else out


def log_likelihood(model, x):
    """Total log-likelihood of the rows of x under the model."""
    x = _check_data(x, model.dim)
    total = 0.0
    for start in range(0, x.shape[0], _BLOCK):
        ld = _log_weighted_densities(model.weights, model.means, model.variances, x[start:start + _BLOCK])
        total += float(logsumexp(ld, axis=1).sum())
    return total


def _kmeans_pp(unique_rows, k, rng):
    """Seeded k-means++ seeding over the distinct rows."""
    n = unique_rows.shape[0]
    centers = np.empty((k, unique_rows.shape[1]))
    centers[0] = unique_rows[rng.integers(n)]
    d2 = ((unique_rows - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # cannot happen with >= k distinct rows, kept as a guard
            idx = rng.integers(n)
        centers[j] = unique_rows[idx]
        d2 = np.minimum(d2, ((unique_rows - centers[j]) ** 2).sum(axis=1))
    return centers


def _hard_assign_stats(x, centers):
    """Counts and per-cluster sums of x and x**2 for the nearest centers."""
    k, d = centers.shape
    c2 = (centers ** 2).sum(axis=1)
    counts = np.zeros(k, dtype=np.int64)
    s1 = np.zeros((k, d))
    s2 = np.zeros((k, d))
    for start in range(0, x.shape[0], _BLOCK):
        chunk = x[start:start + _BLOCK]
        labels = np.argmin(chunk @ (-2.0 * centers.T) + c2[None, :], axis=1)
        counts += np.bincount(labels, minlength=k)
        for j in range(d):
            s1[:, j] += np.bincount(labels, weights=chunk[:, j], minlength=k)
            s2[:, j] += np.bincount(labels, weights=chunk[:, j] ** 2, minlength=k)
    return counts, s1, s2


def _estep_stats(weights, means, variances, x, want_stats=True):
    """One fixed-order pass: total log-likelihood and, if wanted, the
    sufficient statistics (sum gamma, gamma.T @ x, gamma.T @ x**2)."""
    k = weights.size
    ll = 0.0
    nk = np.zeros(k)
    s1 = np.zeros((k, x.shape[1]))
    s2 = np.zeros((k, x.shape[1]))
    for start in range(0, x.shape[0], _BLOCK):
        chunk = x[start:start + _BLOCK]
        ld = _log_weighted_densities(weights, means, variances, chunk)
        lse = logsumexp(ld, axis=1)
        ll += float(lse.sum())
        if want_stats:
            g = np.exp(ld - lse[:, None])
            nk += g.sum(axis=0)
            s1 += g.T @ chunk
            s2 += g.T @ chunk ** 2
    return ll, nk, s1, s2


def fit_gmm(descriptors, cfg):
    """Fit a diagonal GMM with EM.

    Training data beyond `cfg.sample_cap` rows is subsampled (seeded).
    Initialization is k-means++ over the distinct rows followed by one
    hard assignment, which makes the fit invariant to duplicated inputs.
    Raises FitError when there are fewer distinct rows than components.
    """
    x = _check_data(descriptors)
    rng = np.random.default_rng(cfg.seed)
    if x.shape[0] > cfg.sample_cap:
        x = x[rng.choice(x.shape[0], cfg.sample_cap, replace=False)]
    unique_rows = np.unique(x, axis=0)
    k = cfg.n_components
    if unique_rows.shape[0] < k:
        raise FitError(
            f"need at least {k} distinct descriptors, got {unique_rows.shape[0]}"
        )

    centers = _kmeans_pp(unique_rows, k, rng)
    counts, s1, s2 = _hard_assign_stats(x, centers)
    n_total = x.shape[0]
    weights = counts / n_total
    means = s1 / counts[:, None]
    variances = np.maximum(s2 / counts[:, None] - means ** 2, VARIANCE_FLOOR)

    lls = []
    for it in range(cfg.max_iterations):
        ll, nk, s1, s2 = _estep_stats(weights, means, variances, x)
        lls.append(ll)
        if it > 0 and abs(lls[-1] - lls[-2]) <= cfg.tolerance * max(1.0, abs(lls[-2])):
            break
        dead = nk <= 0.0
        safe = np.where(dead, 1.0, nk)
        new_means = s1 / safe[:, None]
        new_vars = np.maximum(s2 / safe[:, None] - new_means ** 2, VARIANCE_FLOOR)
        # a component that captured nothing keeps its parameters
        means = np.where(dead[:, None], means, new_means)
        variances = np.where(dead[:, None], variances, new_vars)
        weights = np.maximum(nk / n_total, 1e-300)
        weights = weights / weights.sum()
    else:
        # ran out of iterations: record the likelihood of the final M-step
        ll, _, _, _ = _estep_stats(weights, means, variances, x, want_stats=False)
        lls.append(ll)

    return GmmModel(
        weights=weights,
        means=means,
        variances=variances,
        log_likelihoods=np.asarray(lls),
    )


def save_gmm(model, path):
    """Versioned text format: header `GMM v1 K d`, then one weight line,
    one means line and one variances line per component."""
    lines = [f"GMM v1 {model.n_components} {model.dim}"]
    for k in range(model.n_components):
        lines.append("%.17g" % model.weights[k])
        lines.append(" ".join("%.17g" % m for m in model.means[k]))
        lines.append(" ".join("%.17g" % v for v in model.variances[k]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_gmm(path):
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "GMM":
        raise ParseError(f"{path}: not a GMM model file")
    if head[1] != "v1":
        raise UnsupportedFormat(f"{path}: unsupported version {head[1]!r}")
    try:
        k, d = int(head[2]), int(head[3])
    except ValueError:
        raise ParseError(f"{path}: bad header {lines[0]!r}") from None
    if k < 1 or d < 1:
        raise ParseError(f"{path}: bad dimensions K={k} d={d}")
    if len(lines) != 1 + 3 * k:
        raise ParseError(f"{path}: expected {1 + 3 * k} lines, found {len(lines)}")
    weights = np.empty(k)
    means = np.empty((k, d))
    variances = np.empty((k, d))
    try:
        for i in range(k):
            weights[i] = float(lines[1 + 3 * i])
            means[i] = [float(v) for v in lines[2 + 3 * i].split()]
            variances[i] = [float(v) for v in lines[3 + 3 * i].split()]
    except ValueError:
        raise ParseError(f"{path}: malformed component block {i}") from None
    return GmmModel(weights=weights, means=means, variances=variances)

"""Dimensionality reduction between the two Fisher Vector layers.

Two interchangeable reducers: PCA keeping a fixed fraction of the
spectrum energy, and a seeded Gaussian random projection whose output
dimension is taken from the paired PCA fit.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FitError, InvalidArgument, InvalidInput, ParseError, ShapeError, UnsupportedFormat

__all__ = [
    "PcaModel",
    "RpModel",
    "fit_pca",
    "make_random_projection",
    "project",
    "save_pca",
    "save_rp",
    "load_reducer",
]


@dataclass
class PcaModel:
    mean: np.ndarray  # (D,)
    basis: np.ndarray  # (p, D) orthonormal rows, descending eigenvalue order
    eigenvalues: np.ndarray  # (p,)
    energy_fraction: float
    trained_years: tuple = ()

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.basis = np.asarray(self.basis, dtype=np.float64)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if (
            self.mean.ndim != 1
            or self.basis.ndim != 2
            or self.basis.shape[1] != self.mean.size
            or self.eigenvalues.shape != (self.basis.shape[0],)
        ):
            raise ShapeError(
                f"inconsistent PCA shapes: mean {self.mean.shape}, basis {self.basis.shape}, "
                f"eigenvalues {self.eigenvalues.shape}"
            )
        self.trained_years = tuple(self.trained_years)

    @property
    def output_dim(self):
        return self.basis.shape[0]

    @property
    def input_dim(self):
        return self.basis.shape[1]


@dataclass
class RpModel:
    matrix: np.ndarray  # (p, D), entries i.i.d. Gaussian(0, 1/p)
    seed: int
    trained_years: tuple = ()

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ShapeError(f"projection matrix must be 2-D, got shape {self.matrix.shape}")
        self.seed = int(self.seed)
        self.trained_years = tuple(self.trained_years)

    @property
    def output_dim(self):
        return self.matrix.shape[0]

    @property
    def input_dim(self):
        return self.matrix.shape[1]


def _flip_signs(basis):
    # deterministic sign convention: largest-magnitude entry of each row
    # is positive
    lead = basis[np.arange(basis.shape[0]), np.argmax(np.abs(basis), axis=1)]
    return basis * np.where(lead < 0, -1.0, 1.0)[:, None]


def fit_pca(vectors, energy=0.9):
    """PCA of the rows of `vectors`, keeping the smallest p whose leading
    eigenvalues reach `energy` of the total.

    Mean-centers the data.  When there are fewer rows than columns the
    eigendecomposition runs on the n x n Gram matrix instead of the D x D
    covariance; both give the same retained subspace.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"vectors must be 2-D, got shape {x.shape}")
    if x.shape[0] < 2:
        raise FitError(f"PCA needs at least 2 vectors, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("vectors contain non-finite values")
    if not 0.0 < energy <= 1.0:
        raise InvalidArgument(f"energy must be in (0, 1], got {energy}")
    n, dim = x.shape
    mean = x.mean(axis=0)
    xc = x - mean

    if n >= dim:
        cov = (xc.T @ xc) / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        evals = evals[::-1]
        evecs = evecs[:, ::-1]
        basis_full = evecs.T
    else:
        gram = (xc @ xc.T) / (n - 1)
        evals, u = np.linalg.eigh(gram)
        evals = evals[::-1]
        u = u[:, ::-1]
        # map Gram eigenvectors back to feature space; zero eigenvalues
        # carry no direction and are dropped from the mapping
        pos = evals > max(evals[0], 0.0) * 1e-12
        basis_full = np.zeros((evals.size, dim))
        if np.any(pos):
            basis_full[pos] = (xc.T @ u[:, pos] / np.sqrt((n - 1) * evals[pos])).T

    evals = np.maximum(evals, 0.0)
    total = float(evals.sum())
    if total <= 0.0:
        raise FitError("vectors have no variance")
    cumulative = np.cumsum(evals)
    p = int(np.searchsorted(cumulative, energy * total, side="left")) + 1
    return PcaModel(
        mean=mean,
        basis=_flip_signs(basis_full[:p]),
        eigenvalues=evals[:p],
        energy_fraction=float(cumulative[p - 1] / total),
    )


def make_random_projection(output_dim, input_dim, seed):
    """Seeded Gaussian projection with entries drawn from N(0, 1/p)."""
    if output_dim < 1 or input_dim < 1:
        raise InvalidArgument(f"dimensions must be >= 1, got {output_dim}x{input_dim}")
    seed = int(seed)
    rng = np.random.default_rng(seed)
    matrix = rng.normal(0.0, 1.0 / np.sqrt(output_dim), size=(output_dim, input_dim))
    return RpModel(matrix=matrix, seed=seed)


def project(model, v):
    """Apply a fitted reducer to one vector or a matrix of row vectors."""
    if not isinstance(model, (PcaModel, RpModel)):
        raise InvalidArgument(f"not a reducer model: {type(model).__name__}")
    a = np.asarray(v, dtype=np.float64)
    single = a.ndim == 1
    x = np.atleast_2d(a)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeError(f"expected vectors of dimension {model.input_dim}, got shape {a.shape}")
    if isinstance(model, PcaModel):
        out = (x - model.mean) @ model.basis.T
    else:
        out = x @ model.matrix.T
    return out[0] if single else out


def save_pca(model, path):
    """Text format: `PCA v1 p D`, energy line, mean line, eigenvalue line,
    then p basis rows."""
    lines = [
        f"PCA v1 {model.output_dim} {model.input_dim}",
        "%.17g" % model.energy_fraction,
        " ".join("%.17g" % m for m in model.mean),
        " ".join("%.17g" % e for e in model.eigenvalues),
    ]
    lines.extend(" ".join("%.17g" % b for b in row) for row in model.basis)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def save_rp(model, path):
    """Text format: `RP v1 p D seed` then p matrix rows."""
    lines = [f"RP v1 {model.output_dim} {model.input_dim} {model.seed}"]
    lines.extend(" ".join("%.17g" % m for m in row) for row in model.matrix)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_reducer(path):
    """Load either reducer file, dispatching on the header magic."""
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = lines[0].split()
    try:
        if len(head) == 4 and head[0] == "PCA":
            if head[1] != "v1":
                raise UnsupportedFormat(f"{path}: unsupported version {head[1]!r}")
            p, dim = int(head[2]), int(head[3])
            if len(lines) != 4 + p:
                raise ParseError(f"{path}: expected {4 + p} lines, found {len(lines)}")
            model = PcaModel(
                mean=[float(v) for v in lines[2].split()],
                basis=[[float(v) for v in lines[4 + i].split()] for i in range(p)],
                eigenvalues=[float(v) for v in lines[3].split()],
                energy_fraction=float(lines[1]),
            )
            if model.input_dim != dim:
                raise ParseError(f"{path}: header says D={dim}, rows have {model.input_dim}")
            return model
        if len(head) == 5 and head[0] == "RP":
            if head[1] != "v1":
                raise UnsupportedFormat(f"{path}: unsupported version {head[1]!r}")
            p, dim, seed = int(head[2]), int(head[3]), int(head[4])
            if len(lines) != 1 + p:
                raise ParseError(f"{path}: expected {1 + p} lines, found {len(lines)}")
            model = RpModel(
                matrix=[[float(v) for v in lines[1 + i].split()] for i in range(p)],
                seed=seed,
            )
            if model.input_dim != dim:
                raise ParseError(f"{path}: header says D={dim}, rows have {model.input_dim}")
            return model
    except (ValueError, ShapeError):
        raise ParseError(f"{path}: malformed reducer file") from None
    raise ParseError(f"{path}: not a reducer model file")

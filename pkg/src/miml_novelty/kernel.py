"""Gaussian kernel: pointwise values, kernel vectors and Gram matrices.

k(x, y) = exp(-gamma * ||x - y||^2) with gamma >= 0. Gram matrices are
built from one evaluation per pair, so symmetry is exact (not just up to
rounding), the diagonal is exactly 1, and entries lie in (0, 1] barring
underflow at extreme gamma.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel bandwidth. gamma = 0 degenerates to the constant 1
    kernel and is only useful in tests; trained models require gamma > 0."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0.0:
            raise ParameterError(f"kernel gamma must be finite and >= 0, got {self.gamma}")


def _as_matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise ParameterError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


def squared_distance_matrix(a, b=None):
    """Pairwise squared Euclidean distances, clipped at 0.

    With b=None returns the symmetric matrix over rows of a.
    """
    a = _as_matrix(a, "a")
    sym = b is None
    b = a if sym else _as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ParameterError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    sq_a = np.einsum("ij,ij->i", a, a)
    sq_b = sq_a if sym else np.einsum("ij,ij->i", b, b)
    d = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    if sym:
        # mirror the strict upper triangle so each pair is computed once
        d = np.triu(d, 1)
        d = d + d.T
    return d


def gaussian(x, y, cfg: KernelConfig) -> float:
    """Kernel value for a single pair of equal-dimension vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ParameterError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("gaussian kernel requires finite inputs")
    d = x - y
    return float(np.exp(-cfg.gamma * float(d @ d)))


def kernel_vector(x, training, cfg: KernelConfig):
    """k(x) = (k(x, x_1), ..., k(x, x_L)) over the rows of `training`."""
    training = _as_matrix(training, "training")
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != training.shape[1]:
        raise ParameterError(f"dimension mismatch: x has {x.shape[0]}, training has {training.shape[1]}")
    diff = training - x[None, :]
    return np.exp(-cfg.gamma * np.einsum("ij,ij->i", diff, diff))


def kernel_matrix(xs, training, cfg: KernelConfig):
    """Cross-kernel matrix, rows of xs against rows of training."""
    return np.exp(-cfg.gamma * squared_distance_matrix(xs, training))


def gram_from_sqdist(sqdist, cfg: KernelConfig):
    """Gram matrix from a precomputed symmetric squared-distance matrix."""
    k = np.exp(-cfg.gamma * sqdist)
    np.fill_diagonal(k, 1.0)
    return k


def gram(training, cfg: KernelConfig):
    """L x L Gram matrix over the rows of `training` (exactly symmetric,
    unit diagonal)."""
    training = _as_matrix(training, "training")
    return gram_from_sqdist(squared_distance_matrix(training), cfg)

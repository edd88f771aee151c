"""Smooth-function minimization (L-BFGS with Armijo backtracking) and PCA.

The L-BFGS implementation is the standard two-loop recursion with a
scaled identity seed. It only ever accepts steps that satisfy the Armijo
sufficient-decrease condition, so the sequence of accepted objective
values is non-increasing by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericsError, ParameterError


@dataclass(frozen=True)
class LbfgsConfig:
    """Solver settings. Defaults suit smooth convex problems of a few
    thousand variables."""

    memory: int = 10
    max_iters: int = 200
    grad_tol: float = 1e-6          # sup-norm stopping threshold
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    f_tol: float = 0.0              # optional: also stop on tiny objective progress

    def __post_init__(self):
        if self.memory < 1:
            raise ParameterError("lbfgs memory must be >= 1")
        if self.max_iters < 1:
            raise ParameterError("lbfgs max_iters must be >= 1")
        if not (self.grad_tol > 0.0):
            raise ParameterError("lbfgs grad_tol must be > 0")
        if self.f_tol < 0.0:
            raise ParameterError("f_tol must be >= 0")
        if not (0.0 < self.armijo_c1 < 1.0):
            raise ParameterError("armijo_c1 must lie in (0, 1)")
        if not (0.0 < self.backtrack < 1.0):
            raise ParameterError("backtrack factor must lie in (0, 1)")


@dataclass
class LbfgsResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool        # gradient sup-norm fell below grad_tol
    stalled: bool          # line search found no Armijo decrease
    f_trace: list = field(default_factory=list)  # accepted objective values


def _checked_eval(oracle, x):
    f, g = oracle(x)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != x.shape:
        raise ParameterError(f"oracle gradient shape {g.shape} != point shape {x.shape}")
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericsError("oracle returned a non-finite value or gradient")
    return float(f), g


def lbfgs_minimize(oracle, x0, cfg: LbfgsConfig = LbfgsConfig()) -> LbfgsResult:
    """Minimize f via L-BFGS; `oracle(x)` returns (value, gradient).

    Stops when the gradient sup-norm drops below cfg.grad_tol, the
    iteration budget runs out, or backtracking cannot find an Armijo
    decrease (result flagged `stalled`).
    """
    x = np.array(x0, dtype=np.float64).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ParameterError("x0 must be non-empty and finite")
    f, g = _checked_eval(oracle, x)
    s_hist, y_hist, rho_hist = [], [], []
    trace = [f]
    iterations = 0
    converged = bool(np.max(np.abs(g)) <= cfg.grad_tol)
    stalled = False

    while not converged and iterations < cfg.max_iters:
        # two-loop recursion for p = -H g
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            s, y = s_hist[-1], y_hist[-1]
            q *= (s @ y) / (y @ y)
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        p = -q
        gp = g @ p
        if gp >= 0.0:
            # history produced a non-descent direction; fall back to steepest
            p = -g
            gp = -(g @ g)

        step = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks):
            x_new = x + step * p
            f_new, g_new = _checked_eval(oracle, x_new)
            if f_new <= f + cfg.armijo_c1 * step * gp:
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            stalled = True
            break

        s_vec = x_new - x
        y_vec = g_new - g
        sy = s_vec @ y_vec
        # skip pairs with no usable curvature (hinge kinks, flat regions)
        if sy > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)

        drop = f - f_new
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        iterations += 1
        converged = bool(np.max(np.abs(g)) <= cfg.grad_tol)
        if cfg.f_tol > 0.0 and drop <= cfg.f_tol * max(1.0, abs(f)):
            break

    return LbfgsResult(x=x, fun=f, iterations=iterations,
                       converged=converged, stalled=stalled, f_trace=trace)


@dataclass(frozen=True)
class PcaProjection:
    """Affine projection onto the top-k principal directions."""

    mean: np.ndarray                 # (d,)
    components: np.ndarray           # (k, d), orthonormal rows
    explained_variance: np.ndarray   # (k,), non-increasing


def pca_fit(data, k: int) -> PcaProjection:
    """Top-k PCA of the rows of `data` via the sample covariance
    (denominator n - 1)."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ParameterError(f"data must be 2-D, got shape {data.shape}")
    n, d = data.shape
    if n < 2:
        raise ParameterError("pca_fit needs at least 2 rows")
    if not (1 <= k <= d):
        raise ParameterError(f"k must lie in [1, {d}], got {k}")
    if not np.all(np.isfinite(data)):
        raise ParameterError("pca_fit requires finite data")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = (centered.T @ centered) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)      # ascending
    order = np.argsort(evals)[::-1][:k]
    variance = np.maximum(evals[order], 0.0)
    components = evecs[:, order].T
    return PcaProjection(mean=mean, components=components, explained_variance=variance)


def pca_transform(proj: PcaProjection, x):
    """Project a d-vector (or an (n, d) batch) to k coordinates."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != proj.mean.shape[0]:
        raise ParameterError(f"expected dimension {proj.mean.shape[0]}, got shape {x.shape}")
    z = (x - proj.mean) @ proj.components.T
    return z[0] if single else z

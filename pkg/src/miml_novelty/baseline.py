"""One-class SVM baseline (Gaussian kernel) and its nu-sweep ROC.

Solves the standard one-class dual

    min 0.5 a' K a   s.t.  0 <= a_i <= 1/(nu*L),  sum a_i = 1

with SMO-style maximal-violating-pair updates on the equality-constrained
box. The decision function is sum_i a_i k(x, x_i) - rho; negative means
"not normal". The comparison protocol trains one model per nu in a fixed
sweep, takes each model's (FPR, TPR) at decision 0 as one ROC point, and
picks the kernel bandwidth post-hoc by best AUC - a deliberately generous
treatment of the baseline.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from .detector import RocCurve, trapezoid_area
from .errors import ConvergenceError, EvaluationError, ParameterError
from .kernel import KernelConfig
from .model import LabeledDataset


@dataclass
class OcsvmModel:
    kernel: KernelConfig
    nu: float
    training: np.ndarray          # (L, d)
    support_weights: np.ndarray   # (L,), in [0, 1/(nu L)], summing to 1
    rho: float


def default_nu_sweep(step: float = 0.02) -> tuple:
    """nu values step, 2*step, ..., 1.0."""
    if not (0 < step <= 1):
        raise ParameterError("nu step must lie in (0, 1]")
    n = int(round(1.0 / step))
    return tuple(min(1.0, step * k) for k in range(1, n + 1))


@dataclass(frozen=True)
class NuSweep:
    """Ascending nu grid in (0, 1]; defaults to a 0.02-step sweep."""

    step: float = 0.02
    nu_values: tuple = ()

    def __post_init__(self):
        values = self.nu_values or default_nu_sweep(self.step)
        values = tuple(float(v) for v in values)
        if any(not (0 < v <= 1) for v in values):
            raise ParameterError("nu values must lie in (0, 1]")
        if any(a >= b for a, b in zip(values, values[1:])):
            raise ParameterError("nu values must be strictly ascending")
        object.__setattr__(self, "nu_values", values)


def ocsvm_train(normal_instances, nu: float, kernel_cfg: KernelConfig,
                tol: float = 1e-5, max_iter: int = 500_000) -> OcsvmModel:
    """Fit the one-class dual to KKT tolerance `tol`.

    Starts from the uniform feasible point a_i = 1/L and applies
    two-coordinate updates along the maximal violating pair; box clipping
    is exact. rho comes from the free support vectors (mean of their
    decision values before offset), falling back to the midpoint of the
    KKT interval, or its finite end when only one side is populated.
    """
    x = np.atleast_2d(np.asarray(normal_instances, dtype=np.float64))
    l_count = x.shape[0]
    if not (0.0 < nu <= 1.0):
        raise ParameterError(f"nu must lie in (0, 1], got {nu}")
    if l_count < 2:
        raise ParameterError("one-class training needs at least 2 instances")
    k = _kernel.gram(x, kernel_cfg)
    cap = 1.0 / (nu * l_count)
    alpha = np.full(l_count, 1.0 / l_count)
    grad = k @ alpha
    eps = 1e-12 * max(cap, 1.0)
    converged = False
    for _ in range(max_iter):
        can_up = alpha < cap - eps
        can_down = alpha > eps
        if not can_up.any() or not can_down.any():
            converged = True      # nu = 1: the box admits a single point
            break
        i = int(np.where(can_up, grad, np.inf).argmin())
        j = int(np.where(can_down, grad, -np.inf).argmax())
        violation = grad[j] - grad[i]
        if violation <= tol:
            converged = True
            break
        curv = k[i, i] + k[j, j] - 2.0 * k[i, j]
        delta = violation / max(curv, 1e-12)
        delta = min(delta, cap - alpha[i], alpha[j])
        alpha[i] += delta
        alpha[j] -= delta
        # snap to the box so bound detection stays exact
        if alpha[i] > cap - eps:
            alpha[i] = cap
        if alpha[j] < eps:
            alpha[j] = 0.0
        grad += delta * (k[:, i] - k[:, j])
    if not converged:
        residual = float(np.where(can_down, grad, -np.inf).max()
                         - np.where(can_up, grad, np.inf).min())
        raise ConvergenceError(
            f"one-class SMO hit {max_iter} iterations with KKT residual {residual:.3e}")

    free = (alpha > eps) & (alpha < cap - eps)
    decision_values = k @ alpha
    if free.any():
        rho = float(decision_values[free].mean())
    else:
        upper = alpha >= cap - eps
        lower = alpha <= eps
        lb = float(decision_values[upper].max()) if upper.any() else -np.inf
        ub = float(decision_values[lower].min()) if lower.any() else np.inf
        if np.isfinite(lb) and np.isfinite(ub):
            rho = 0.5 * (lb + ub)
        else:
            rho = lb if np.isfinite(lb) else ub
    return OcsvmModel(kernel=kernel_cfg, nu=nu, training=x.copy(),
                      support_weights=alpha, rho=rho)


def ocsvm_decision(model: OcsvmModel, x) -> float:
    """sum_i a_i k(x, x_i) - rho; >= 0 means 'normal'."""
    kv = _kernel.kernel_vector(x, model.training, model.kernel)
    return float(model.support_weights @ kv - model.rho)


def ocsvm_decisions(model: OcsvmModel, xs) -> np.ndarray:
    km = _kernel.kernel_matrix(xs, model.training, model.kernel)
    return km @ model.support_weights - model.rho


def dual_objective(model: OcsvmModel) -> float:
    k = _kernel.gram(model.training, model.kernel)
    a = model.support_weights
    return 0.5 * float(a @ k @ a)


def known_class_instances(dataset: LabeledDataset) -> np.ndarray:
    """Instances whose ground-truth class lies in the dataset's known label
    set - the oracle-labeled 'normal' training data the baseline gets."""
    tags = dataset.true_classes_flat()
    if any(t is None for t in tags):
        raise ParameterError("dataset bags need ground-truth class tags")
    known = set(dataset.known_labels)
    mask = np.array([t in known for t in tags], dtype=bool)
    if not mask.any():
        raise ParameterError("no instances of known classes in the dataset")
    return dataset.instances[mask]


def _sweep_curve(points):
    """FPR-sorted polyline through the sweep's operating points with (0,0)
    and (1,1) appended; threshold slots carry nu (NaN for the endpoints)."""
    pts = sorted(points, key=lambda p: (p[1], p[2]))
    nus = np.array([np.nan] + [p[0] for p in pts] + [np.nan])
    fpr = np.array([0.0] + [p[1] for p in pts] + [1.0])
    tpr = np.array([0.0] + [p[2] for p in pts] + [1.0])
    return RocCurve(thresholds=nus, fpr=fpr, tpr=tpr, auc=trapezoid_area(fpr, tpr))


def ocsvm_roc(normal_train, eval_dataset: LabeledDataset,
              sweep: NuSweep = NuSweep(), gamma_grid=(0.25, 1.0, 4.0)):
    """Best nu-sweep ROC over a bandwidth grid, chosen post-hoc by AUC.

    Each nu contributes one operating point: instances with negative
    decision are flagged novel. Ground-truth novelty comes from the
    evaluation dataset's tags against its known label set. Returns
    (best curve, chosen gamma); AUC ties prefer the smaller gamma.
    """
    tags = eval_dataset.true_classes_flat()
    if any(t is None for t in tags):
        raise EvaluationError("every evaluation instance needs a ground-truth class tag")
    known = set(eval_dataset.known_labels)
    novel_mask = np.array([t not in known for t in tags], dtype=bool)
    n_novel = int(novel_mask.sum())
    n_known = novel_mask.size - n_novel
    if n_novel == 0 or n_known == 0:
        raise EvaluationError(
            f"ROC undefined: {n_novel} novel and {n_known} known instances")

    best_curve, best_gamma = None, None
    for gamma in sorted(float(g) for g in gamma_grid):
        kcfg = KernelConfig(gamma)
        points = []
        for nu in sweep.nu_values:
            model = ocsvm_train(normal_train, nu, kcfg)
            flagged = ocsvm_decisions(model, eval_dataset.instances) < 0.0
            tpr = float(np.count_nonzero(flagged & novel_mask)) / n_novel
            fpr = float(np.count_nonzero(flagged & ~novel_mask)) / n_known
            points.append((nu, fpr, tpr))
        curve = _sweep_curve(points)
        if best_curve is None or curve.auc > best_curve.auc:
            best_curve, best_gamma = curve, gamma
    return best_curve, best_gamma

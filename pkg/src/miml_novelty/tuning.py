"""Hyperparameter grid search over (lambda, gamma).

Model selection follows the training-bag zero-one loss: a (bag, class)
pair counts as an error when y_ic * max_j f_c(x_ij) < 0 (strictly).
Selection on training bags is optimistic by construction; callers that
want a held-out selection can simply pass a different dataset to
zero_one_bag_loss.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from .errors import ParameterError, TrainingError
from .kernel import KernelConfig
from .model import LabeledDataset, ScoreModel, TrainConfig, score_matrix, train, train_config_with_seed


@dataclass(frozen=True)
class GridSpec:
    """Strictly positive, ascending candidate grids for lambda and gamma."""

    lambda_grid: tuple
    gamma_grid: tuple

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "gamma_grid", tuple(float(v) for v in self.gamma_grid))
        for name, grid in (("lambda_grid", self.lambda_grid), ("gamma_grid", self.gamma_grid)):
            if not grid:
                raise ParameterError(f"{name} must be non-empty")
            if any(not (v > 0) or not np.isfinite(v) for v in grid):
                raise ParameterError(f"{name} must be strictly positive and finite")
            if any(a >= b for a, b in zip(grid, grid[1:])):
                raise ParameterError(f"{name} must be sorted strictly ascending")


@dataclass
class GridCell:
    lam: float
    gamma: float
    zero_one_loss: int | None
    objective: float | None
    failed: bool = False


@dataclass
class TuningReport:
    best_lambda: float
    best_gamma: float
    best_model: ScoreModel
    table: list = field(default_factory=list)   # GridCell rows, grid order


def median_sq_distance(x, cap: int = 512) -> float:
    """Median squared pairwise distance (the usual bandwidth heuristic).

    Rows are thinned deterministically to at most `cap` before the
    all-pairs computation. Returns 1.0 when every pair coincides.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("median_sq_distance needs at least 2 rows")
    if x.shape[0] > cap:
        idx = np.unique(np.linspace(0, x.shape[0] - 1, cap).astype(np.intp))
        x = x[idx]
    d = _kernel.squared_distance_matrix(x)
    off_diag = d[np.triu_indices(d.shape[0], k=1)]
    med = float(np.median(off_diag))
    return med if med > 0.0 else 1.0


def default_grid(x) -> GridSpec:
    """Log-spaced lambda grid and a gamma grid centered on the inverse
    median squared distance of the rows of x."""
    med = median_sq_distance(x)
    gammas = tuple(sorted(m / med for m in (2.0 ** -6, 2.0 ** -4, 2.0 ** -2, 1.0, 2.0 ** 2, 2.0 ** 4)))
    return GridSpec(lambda_grid=(1e-4, 1e-3, 1e-2, 1e-1, 1.0), gamma_grid=gammas)


def zero_one_bag_loss(model: ScoreModel, dataset: LabeledDataset) -> int:
    """Number of (bag, class) pairs with y_ic * max_j f_c(x_ij) < 0."""
    scores = score_matrix(model, dataset.instances)
    signs = dataset.label_signs(model.label_order)
    errors = 0
    for i in range(dataset.n_bags):
        mx = scores[dataset.bag_slice(i)].max(axis=0)
        errors += int(np.count_nonzero(signs[i] * mx < 0.0))
    return errors


def _cell_seed(seed: int, il: int, ig: int) -> int:
    # keyed by grid position, not enumeration order
    ss = np.random.SeedSequence([seed & ((1 << 64) - 1), il, ig])
    return int(ss.generate_state(1, np.uint64)[0])


def grid_search(dataset: LabeledDataset, grid: GridSpec,
                cfg: TrainConfig = TrainConfig()) -> TuningReport:
    """Train one model per (lambda, gamma) cell and keep the cell with the
    smallest training-bag zero-one loss.

    Ties break by smaller final objective, then smaller lambda, then
    smaller gamma; each cell trains from its own RNG stream keyed by the
    cell's position in the (sorted) grids, so the outcome is independent
    of enumeration order. Cells whose training fails outright are marked
    and skipped; if every cell fails, a TrainingError is raised.
    """
    sqd = _kernel.squared_distance_matrix(dataset.instances)
    table = []
    best_key, best_model = None, None
    for ig, gamma in enumerate(grid.gamma_grid):
        kcfg = KernelConfig(gamma)
        gram_matrix = _kernel.gram_from_sqdist(sqd, kcfg)
        for il, lam in enumerate(grid.lambda_grid):
            cell_cfg = train_config_with_seed(cfg, _cell_seed(cfg.seed, il, ig))
            try:
                result = train(dataset, lam, kcfg, cell_cfg, gram_matrix=gram_matrix)
            except TrainingError:
                table.append(GridCell(lam, gamma, None, None, failed=True))
                continue
            loss = zero_one_bag_loss(result.model, dataset)
            table.append(GridCell(lam, gamma, loss, result.final_objective))
            key = (loss, result.final_objective, lam, gamma)
            if best_key is None or key < best_key:
                best_key, best_model = key, result.model
    if best_model is None:
        raise TrainingError("every grid cell failed to train")
    return TuningReport(best_lambda=best_key[2], best_gamma=best_key[3],
                        best_model=best_model, table=table)

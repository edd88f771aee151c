import numpy as np
import pytest

from miml_novelty.datagen import BagGenConfig, gaussian_ring_pool, generate_bags
from miml_novelty.errors import ParameterError
from miml_novelty.kernel import KernelConfig
from miml_novelty.model import TrainConfig, score_matrix, train
from miml_novelty.optim import LbfgsConfig
from miml_novelty.tuning import (GridSpec, default_grid, grid_search, median_sq_distance,
                                 zero_one_bag_loss)

from helpers import random_dataset, random_model

FAST = TrainConfig(outer_iters=6, restarts=2, seed=11,
                   lbfgs=LbfgsConfig(max_iters=50, grad_tol=1e-5))


def _separable_dataset(seed=4):
    pool = gaussian_ring_pool(50, seed=seed, n_classes=4, radius=10.0)
    return generate_bags(pool, BagGenConfig(n_bags=14, bag_size=5,
                                            known_labels=("0", "2"), beta=0.5, seed=seed))


def test_gridspec_validation():
    with pytest.raises(ParameterError):
        GridSpec(lambda_grid=(), gamma_grid=(1.0,))
    with pytest.raises(ParameterError):
        GridSpec(lambda_grid=(1.0, 0.5), gamma_grid=(1.0,))
    with pytest.raises(ParameterError):
        GridSpec(lambda_grid=(0.0, 1.0), gamma_grid=(1.0,))


def test_zero_one_loss_zero_weights_counts_nothing():
    # every product is exactly 0 and the indicator is strict "< 0"
    ds = random_dataset(np.random.default_rng(0), n_bags=6)
    model = random_model(np.random.default_rng(1), ds, scale=0.0)
    assert zero_one_bag_loss(model, ds) == 0


def test_zero_one_loss_perfect_model():
    ds = _separable_dataset()
    cfg = TrainConfig(outer_iters=20, restarts=2, seed=5,
                      lbfgs=LbfgsConfig(max_iters=150, grad_tol=1e-5))
    result = train(ds, lam=0.01, kernel_cfg=KernelConfig(0.1), cfg=cfg)
    assert zero_one_bag_loss(result.model, ds) == 0


def test_zero_one_loss_matches_recount():
    rng = np.random.default_rng(2)
    ds = random_dataset(rng, n_bags=4)
    model = random_model(rng, ds)
    scores = score_matrix(model, ds.instances)
    signs = ds.label_signs()
    expected = 0
    for i in range(ds.n_bags):
        mx = scores[ds.bag_slice(i)].max(axis=0)
        expected += int(np.sum(signs[i] * mx < 0))
    assert zero_one_bag_loss(model, ds) == expected
    assert zero_one_bag_loss(model, ds) <= ds.n_bags * 3


def test_grid_search_single_cell():
    ds = _separable_dataset()
    report = grid_search(ds, GridSpec(lambda_grid=(0.05,), gamma_grid=(0.1,)), FAST)
    assert report.best_lambda == 0.05
    assert report.best_gamma == 0.1
    assert len(report.table) == 1


def test_grid_search_prefers_sane_gamma():
    # gamma = 1e6 turns the Gram matrix into the identity: every unseen
    # instance scores ~0 and training bags cannot satisfy their margins
    ds = _separable_dataset()
    report = grid_search(ds, GridSpec(lambda_grid=(0.01,), gamma_grid=(0.1, 1e6)), FAST)
    assert report.best_gamma == 0.1
    losses = {cell.gamma: cell.zero_one_loss for cell in report.table}
    assert losses[0.1] <= losses[1e6]


def test_grid_search_tie_breaks_by_objective_then_lambda():
    ds = _separable_dataset()
    report = grid_search(ds, GridSpec(lambda_grid=(0.01, 0.02), gamma_grid=(0.1,)), FAST)
    cells = {(c.lam, c.gamma): c for c in report.table}
    best_key = min((c.zero_one_loss, c.objective, c.lam, c.gamma) for c in report.table)
    assert (report.best_lambda, report.best_gamma) == (best_key[2], best_key[3])
    assert cells[(report.best_lambda, report.best_gamma)].zero_one_loss == best_key[0]


def test_grid_search_selection_invariant_to_enumeration():
    # selection key is total, so it never depends on table order
    ds = _separable_dataset(seed=6)
    grid = GridSpec(lambda_grid=(0.01, 0.1), gamma_grid=(0.05, 0.2))
    report = grid_search(ds, grid, FAST)
    keys = [(c.zero_one_loss, c.objective, c.lam, c.gamma)
            for c in report.table if not c.failed]
    assert (report.best_lambda, report.best_gamma) == (min(keys)[2], min(keys)[3])


def test_median_sq_distance_and_default_grid():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((100, 2))
    med = median_sq_distance(x)
    assert med > 0
    grid = default_grid(x)
    assert len(grid.lambda_grid) == 5
    assert len(grid.gamma_grid) == 6
    assert abs(grid.gamma_grid[3] * med - 1.0) < 1e-9 or any(
        abs(g * med - 1.0) < 1e-9 for g in grid.gamma_grid)


def test_median_sq_distance_degenerate_points():
    assert median_sq_distance(np.zeros((10, 3))) == 1.0

"""Miniature end-to-end reproduction run: seeded replications, tuning,
per-replication ROC files, and a deterministic summary document.

The full-size configuration lives in the acceptance suite; this one is
scaled down to finish in under a minute.
"""

import json
from pathlib import Path

from miml_novelty import ExperimentConfig, LbfgsConfig, TrainConfig, run_baseline, run_experiment

config = ExperimentConfig(
    source="synthetic-gaussian",
    known_labels=("0", "1", "3", "7"),
    n_train_bags=25, n_test_bags=25, bag_size=10, beta=0.1,
    replications=3, seed=2024, pool_per_class=80,
    lambda_grid=(1e-3, 1e-2),
    gamma_scale_grid=(1.0, 4.0),
    train=TrainConfig(outer_iters=8, restarts=2, seed=0,
                      lbfgs=LbfgsConfig(max_iters=60, grad_tol=1e-4, f_tol=1e-8)),
    baseline_nu_step=0.05,
)

out = Path("demo_runs")
report = run_experiment(config, out)
print(f"detector:      mean AUC {report.mean_auc:.4f} (std {report.std_auc:.4f})")
for rep in report.replications:
    print(f"  rep {rep.index}: auc {rep.auc:.4f} lambda {rep.chosen_lambda:g} "
          f"gamma {rep.chosen_gamma:.4f}")

baseline = run_baseline(config, out)
print(f"one-class SVM: mean AUC {baseline.mean_auc:.4f} (std {baseline.std_auc:.4f})")

summary = json.loads((out / "experiment_summary.json").read_text())
print(f"\nsummary document: {out / 'experiment_summary.json'}")
print(f"  completed replications: {summary['completed']}")
print(f"  per-replication artifacts: {[r['roc_file'] for r in summary['replications']]}")

"""End-to-end experiment runner with seeded replications.

Each replication derives every randomized stage (instance pools, train
bags, test bags, tuning) from its own stream keyed by (master seed,
replication index, stage tag), so a replication is reproducible in
isolation and the filtered/unfiltered training variants of the same seed
see identical pools and identical test bags. Reports are deterministic:
summary JSON and ROC CSVs never contain timing, which goes to a separate
timing file.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .baseline import NuSweep, known_class_instances, ocsvm_roc
from .datagen import BagGenConfig, InstancePool, gaussian_ring_pool, generate_bags, load_idx, split_pool
from .detector import roc, threshold_grid
from .errors import EvaluationError, ParameterError
from .model import LabeledDataset, TrainConfig, restrict_known_labels, train_config_with_seed
from .optim import LbfgsConfig, pca_fit, pca_transform
from .tuning import GridSpec, default_grid, grid_search, median_sq_distance

_SEED_MASK = (1 << 64) - 1
_TAG_POOL, _TAG_TRAIN_BAGS, _TAG_TEST_BAGS, _TAG_TUNE, _TAG_SPLIT = 1, 2, 3, 4, 5

SOURCES = ("synthetic-gaussian", "mnist-idx", "csv")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from integer key parts."""
    ss = np.random.SeedSequence([int(p) & _SEED_MASK for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a reproduction run needs; JSON round-trippable."""

    source: str
    known_labels: tuple
    n_train_bags: int = 100
    n_test_bags: int = 100
    bag_size: int = 20
    beta: float = 0.1                      # scalar or per-universe-class list
    filter_train: bool = False             # redraw empty-label training bags
    filter_test: bool = False
    replications: int = 10
    seed: int = 0
    lambda_grid: tuple | None = None       # None -> median-heuristic default
    gamma_grid: tuple | None = None
    train: TrainConfig = TrainConfig()
    pool_per_class: int = 200              # synthetic source, per half
    pca_dim: int = 20                      # mnist source
    mnist_images: str | None = None
    mnist_labels: str | None = None
    csv_instances: str | None = None
    csv_labels: str | None = None
    baseline_nu_step: float = 0.02
    baseline_gamma_grid: tuple | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ParameterError(f"unknown source {self.source!r}; pick one of {SOURCES}")
        object.__setattr__(self, "known_labels", tuple(str(v) for v in self.known_labels))
        if not self.known_labels:
            raise ParameterError("known_labels must be non-empty")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if self.source == "mnist-idx" and not (self.mnist_images and self.mnist_labels):
            raise ParameterError("mnist-idx source needs mnist_images and mnist_labels paths")
        if self.source == "csv" and not (self.csv_instances and self.csv_labels):
            raise ParameterError("csv source needs csv_instances and csv_labels paths")

    def grid_for(self, instances) -> GridSpec:
        if self.lambda_grid is None and self.gamma_grid is None:
            return default_grid(instances)
        base = default_grid(instances)
        return GridSpec(lambda_grid=self.lambda_grid or base.lambda_grid,
                        gamma_grid=self.gamma_grid or base.gamma_grid)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["known_labels"] = list(self.known_labels)
        for key in ("lambda_grid", "gamma_grid", "baseline_gamma_grid"):
            if doc[key] is not None:
                doc[key] = list(doc[key])
        if not np.isscalar(self.beta):
            doc["beta"] = [float(b) for b in np.asarray(self.beta).ravel()]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        train_doc = doc.pop("train", None) or {}
        lbfgs_doc = train_doc.pop("lbfgs", None) or {}
        train_cfg = TrainConfig(lbfgs=LbfgsConfig(**lbfgs_doc), **train_doc)
        for key in ("known_labels", "lambda_grid", "gamma_grid", "baseline_gamma_grid", "beta"):
            if isinstance(doc.get(key), list):
                doc[key] = tuple(doc[key])
        try:
            return cls(train=train_cfg, **doc)
        except TypeError as exc:
            raise ParameterError(f"bad experiment config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"{path}: invalid JSON config ({exc})") from exc
        return cls.from_dict(doc)


@dataclass
class ReplicationResult:
    index: int
    auc: float | None = None
    chosen_lambda: float | None = None
    chosen_gamma: float | None = None
    zero_one_loss: int | None = None
    skipped: bool = False
    reason: str = ""
    roc_file: str = ""
    model_file: str = ""
    seconds: float = 0.0


@dataclass
class RunReport:
    config: dict
    replications: list = field(default_factory=list)   # ReplicationResult
    mean_auc: float | None = None
    std_auc: float | None = None
    seconds: float = 0.0

    def finalize(self):
        aucs = [r.auc for r in self.replications if not r.skipped]
        if aucs:
            self.mean_auc = float(np.mean(aucs))
            self.std_auc = float(np.std(aucs))
        return self


_CSV_CACHE: dict = {}


def _csv_source_dataset(config: ExperimentConfig) -> LabeledDataset:
    key = (config.csv_instances, config.csv_labels)
    if key not in _CSV_CACHE:
        _CSV_CACHE[key] = formats.load_csv_dataset(*key)
    return _CSV_CACHE[key]


def _transform_pool(pool: InstancePool, proj) -> InstancePool:
    return InstancePool({tag: pca_transform(proj, rows) for tag, rows in pool.by_class.items()})


def replication_data(config: ExperimentConfig, rep: int):
    """Build the (train, test) datasets for one replication.

    Training and testing draw from disjoint instance pools; for the csv
    source, bags themselves are split into disjoint halves and re-keyed to
    the configured known label set.
    """
    master = config.seed
    if config.source == "csv":
        full = _csv_source_dataset(config)
        full = restrict_known_labels(full, config.known_labels)
        rng = np.random.default_rng([derive_seed(master, rep, _TAG_SPLIT)])
        perm = rng.permutation(full.n_bags)
        half = full.n_bags // 2
        train_bags = [full.bags[i] for i in sorted(perm[:half])]
        test_bags = [full.bags[i] for i in sorted(perm[half:])]
        return (LabeledDataset(train_bags, full.known_labels),
                LabeledDataset(test_bags, full.known_labels))

    if config.source == "synthetic-gaussian":
        pool = gaussian_ring_pool(2 * config.pool_per_class,
                                  seed=derive_seed(master, rep, _TAG_POOL))
        train_pool, test_pool = split_pool(pool, seed=derive_seed(master, rep, _TAG_SPLIT))
    else:   # mnist-idx
        pool = load_idx(config.mnist_images, config.mnist_labels)
        train_pool, test_pool = split_pool(pool, seed=derive_seed(master, rep, _TAG_SPLIT))
        stacked = np.concatenate([train_pool.by_class[t] for t in train_pool.classes], axis=0)
        proj = pca_fit(stacked, config.pca_dim)
        train_pool = _transform_pool(train_pool, proj)
        test_pool = _transform_pool(test_pool, proj)

    train_ds = generate_bags(train_pool, BagGenConfig(
        n_bags=config.n_train_bags, bag_size=config.bag_size,
        known_labels=config.known_labels, beta=config.beta,
        seed=derive_seed(master, rep, _TAG_TRAIN_BAGS),
        filter_empty=config.filter_train))
    test_ds = generate_bags(test_pool, BagGenConfig(
        n_bags=config.n_test_bags, bag_size=config.bag_size,
        known_labels=config.known_labels, beta=config.beta,
        seed=derive_seed(master, rep, _TAG_TEST_BAGS),
        filter_empty=config.filter_test))
    return train_ds, test_ds


def _rep_dir(output_dir, rep: int) -> Path:
    path = Path(output_dir) / f"rep_{rep:03d}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _run_one_replication(config: ExperimentConfig, rep: int, output_dir) -> ReplicationResult:
    started = time.perf_counter()
    result = ReplicationResult(index=rep)
    train_ds, test_ds = replication_data(config, rep)
    grid = config.grid_for(train_ds.instances)
    cfg = train_config_with_seed(config.train, derive_seed(config.seed, rep, _TAG_TUNE))
    report = grid_search(train_ds, grid, cfg)
    thresholds = threshold_grid(report.best_model, train_ds)
    result.chosen_lambda = report.best_lambda
    result.chosen_gamma = report.best_gamma
    best_cells = [c for c in report.table
                  if c.lam == report.best_lambda and c.gamma == report.best_gamma]
    result.zero_one_loss = best_cells[0].zero_one_loss if best_cells else None
    try:
        curve = roc(report.best_model, test_ds, thresholds)
    except EvaluationError as exc:
        result.skipped = True
        result.reason = str(exc)
        result.seconds = time.perf_counter() - started
        return result
    rep_dir = _rep_dir(output_dir, rep)
    formats.write_roc_csv(curve, rep_dir / "roc.csv")
    formats.save_model(rep_dir / "model.json", report.best_model, thresholds)
    result.roc_file = f"rep_{rep:03d}/roc.csv"
    result.model_file = f"rep_{rep:03d}/model.json"
    result.auc = curve.auc
    result.seconds = time.perf_counter() - started
    return result


def _run_one_baseline(config: ExperimentConfig, rep: int, output_dir) -> ReplicationResult:
    started = time.perf_counter()
    result = ReplicationResult(index=rep)
    train_ds, test_ds = replication_data(config, rep)
    normal = known_class_instances(train_ds)
    if config.baseline_gamma_grid is not None:
        gammas = tuple(config.baseline_gamma_grid)
    else:
        med = median_sq_distance(normal)
        gammas = tuple(sorted(m / med for m in (2.0 ** -4, 2.0 ** -2, 1.0, 2.0 ** 2, 2.0 ** 4)))
    try:
        curve, gamma = ocsvm_roc(normal, test_ds, NuSweep(step=config.baseline_nu_step), gammas)
    except EvaluationError as exc:
        result.skipped = True
        result.reason = str(exc)
        result.seconds = time.perf_counter() - started
        return result
    rep_dir = _rep_dir(output_dir, rep)
    formats.write_roc_csv(curve, rep_dir / "baseline_roc.csv")
    result.roc_file = f"rep_{rep:03d}/baseline_roc.csv"
    result.chosen_gamma = gamma
    result.auc = curve.auc
    result.seconds = time.perf_counter() - started
    return result


def _write_report(report: RunReport, output_dir, name: str):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": f"miml-novelty-{name}-report",
        "version": 1,
        "config": report.config,
        "replications": [
            {"index": r.index, "auc": r.auc, "lambda": r.chosen_lambda,
             "gamma": r.chosen_gamma, "zero_one_loss": r.zero_one_loss,
             "skipped": r.skipped, "reason": r.reason, "roc_file": r.roc_file,
             "model_file": r.model_file}
            for r in report.replications
        ],
        "completed": sum(1 for r in report.replications if not r.skipped),
        "mean_auc": report.mean_auc,
        "std_auc": report.std_auc,
    }
    with open(out / f"{name}_summary.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    with open(out / f"{name}_timing.txt", "w", encoding="utf-8") as fh:
        for r in report.replications:
            fh.write(f"rep {r.index}: {r.seconds:.3f} s\n")
        fh.write(f"total: {report.seconds:.3f} s\n")


def _run_all(config, output_dir, worker, name, threads=1) -> RunReport:
    started = time.perf_counter()
    # output_dir stays out of the summary so reruns elsewhere byte-match
    cfg_doc = config.to_dict()
    reps = range(config.replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: worker(config, r, output_dir), reps))
    else:
        results = [worker(config, r, output_dir) for r in reps]
    report = RunReport(config=cfg_doc, replications=results).finalize()
    report.seconds = time.perf_counter() - started
    _write_report(report, output_dir, name)
    return report


def run_experiment(config: ExperimentConfig, output_dir, threads: int = 1) -> RunReport:
    """Tune, train, and evaluate the score-function detector over all
    replications; writes experiment_summary.json plus per-replication ROC
    and model files under output_dir."""
    return _run_all(config, output_dir, _run_one_replication, "experiment", threads)


def run_baseline(config: ExperimentConfig, output_dir, threads: int = 1) -> RunReport:
    """Run the one-class SVM protocol on the same replication bags as
    run_experiment (identical seeds, identical pools)."""
    return _run_all(config, output_dir, _run_one_baseline, "baseline", threads)

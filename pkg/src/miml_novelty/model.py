"""Bag-labeled data types, per-class kernel score functions, and training.

A score function for class c is f_c(x) = alpha_c . k(x), where k(x) is the
kernel vector of x against every training instance. Training minimizes

    (lambda/2) sum_c alpha_c' K alpha_c
      + 1/(N*C) sum_i sum_c max{0, 1 - y_ic * max_j f_c(x_ij)}

by alternating between (a) freezing, per bag and class, the instance with
the highest score (the "support" instance), which makes the objective
convex, and (b) minimizing that convex surrogate over all alpha_c jointly
with L-BFGS. The non-convex objective is attacked from several random
unit-norm initializations and the run with the smallest final objective
wins.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernel as _kernel
from .errors import NumericsError, ParameterError, TrainingError
from .kernel import KernelConfig
from .optim import LbfgsConfig, lbfgs_minimize

_SEED_MASK = (1 << 64) - 1


@dataclass
class Bag:
    """A set of instances sharing one bag-level label set.

    true_classes, when present, carries one ground-truth class tag per
    instance. It exists for data generation and evaluation only; training
    never reads it.
    """

    bag_id: str
    instances: np.ndarray            # (m, d)
    labels: frozenset
    true_classes: tuple | None = None

    def __post_init__(self):
        self.instances = np.atleast_2d(np.asarray(self.instances, dtype=np.float64))
        if self.instances.shape[0] == 0 or self.instances.shape[1] == 0:
            raise ParameterError(f"bag {self.bag_id!r} must contain at least one instance")
        if not np.all(np.isfinite(self.instances)):
            raise ParameterError(f"bag {self.bag_id!r} contains non-finite values")
        self.labels = frozenset(self.labels)
        if self.true_classes is not None:
            self.true_classes = tuple(self.true_classes)
            if len(self.true_classes) != self.instances.shape[0]:
                raise ParameterError(
                    f"bag {self.bag_id!r}: {len(self.true_classes)} class tags "
                    f"for {self.instances.shape[0]} instances")

    @property
    def size(self) -> int:
        return self.instances.shape[0]


class LabeledDataset:
    """A collection of labeled bags over an ordered known label set Y.

    Bag instances are flattened into rows 0..L-1 of `instances`;
    `instance_location` maps a flat row back to its (bag, offset) pair.
    Empty bag label sets are allowed (bags of purely novel instances),
    but every non-empty label set must be a subset of Y.
    """

    def __init__(self, bags, known_labels):
        self.bags = list(bags)
        self.known_labels = tuple(known_labels)
        if not self.bags:
            raise ParameterError("dataset needs at least one bag")
        if not self.known_labels:
            raise ParameterError("known label set must be non-empty")
        if len(set(self.known_labels)) != len(self.known_labels):
            raise ParameterError("known label set contains duplicates")
        d = self.bags[0].instances.shape[1]
        label_set = set(self.known_labels)
        slices, start = [], 0
        for bag in self.bags:
            if bag.instances.shape[1] != d:
                raise ParameterError(
                    f"bag {bag.bag_id!r} has dimension {bag.instances.shape[1]}, expected {d}")
            if not bag.labels <= label_set:
                raise ParameterError(
                    f"bag {bag.bag_id!r} labels {sorted(map(str, bag.labels - label_set))} "
                    "are outside the known label set")
            slices.append((start, start + bag.size))
            start += bag.size
        self.dimension = d
        self._slices = slices
        self._instances = np.concatenate([b.instances for b in self.bags], axis=0)
        self._bag_of_row = np.concatenate(
            [np.full(b.size, i, dtype=np.intp) for i, b in enumerate(self.bags)])

    @property
    def instances(self) -> np.ndarray:
        """All bag instances stacked, shape (L, d)."""
        return self._instances

    @property
    def n_bags(self) -> int:
        return len(self.bags)

    @property
    def instance_count(self) -> int:
        return self._instances.shape[0]

    def bag_slice(self, i: int) -> slice:
        start, stop = self._slices[i]
        return slice(start, stop)

    def bag_starts(self) -> np.ndarray:
        return np.array([s for s, _ in self._slices], dtype=np.intp)

    def flat_index(self, bag_index: int, offset: int) -> int:
        start, stop = self._slices[bag_index]
        if not (0 <= offset < stop - start):
            raise ParameterError(f"offset {offset} out of range for bag {bag_index}")
        return start + offset

    def instance_location(self, row: int):
        """Back-reference for a flat instance row: (bag index, offset)."""
        if not (0 <= row < self.instance_count):
            raise ParameterError(f"instance row {row} out of range")
        i = int(self._bag_of_row[row])
        return i, row - self._slices[i][0]

    def true_classes_flat(self):
        """Per-row ground-truth tags; None entries where a bag has none."""
        out = []
        for bag in self.bags:
            if bag.true_classes is None:
                out.extend([None] * bag.size)
            else:
                out.extend(bag.true_classes)
        return out

    def label_signs(self, label_order=None) -> np.ndarray:
        """(N, C) matrix of +1/-1: +1 iff the bag carries the class label."""
        order = self.known_labels if label_order is None else tuple(label_order)
        signs = np.full((self.n_bags, len(order)), -1.0)
        for i, bag in enumerate(self.bags):
            for c, lab in enumerate(order):
                if lab in bag.labels:
                    signs[i, c] = 1.0
        return signs


def restrict_known_labels(dataset: LabeledDataset, known_labels) -> LabeledDataset:
    """Re-key a dataset to a smaller known label set; bag label sets are
    intersected with it, true class tags are kept untouched."""
    known = tuple(known_labels)
    keep = set(known)
    bags = [Bag(b.bag_id, b.instances, b.labels & keep, b.true_classes)
            for b in dataset.bags]
    return LabeledDataset(bags, known)


@dataclass
class ScoreModel:
    """Trained per-class score functions over the kernel expansion of the
    training instances (all of them, labeled or not)."""

    kernel: KernelConfig
    lam: float
    training: np.ndarray      # (L, d)
    alphas: np.ndarray        # (C, L), one weight vector per known class
    label_order: tuple

    def __post_init__(self):
        self.training = np.atleast_2d(np.asarray(self.training, dtype=np.float64))
        self.alphas = np.atleast_2d(np.asarray(self.alphas, dtype=np.float64))
        self.label_order = tuple(self.label_order)
        if self.alphas.shape != (len(self.label_order), self.training.shape[0]):
            raise ParameterError(
                f"alphas shape {self.alphas.shape} does not match "
                f"{len(self.label_order)} classes x {self.training.shape[0]} instances")
        if not np.all(np.isfinite(self.alphas)):
            raise ParameterError("alphas must be finite")
        if not (self.lam > 0):
            raise ParameterError("lambda must be > 0")

    @property
    def n_classes(self) -> int:
        return len(self.label_order)

    def class_index(self, c: int) -> int:
        if not (0 <= c < self.n_classes):
            raise ParameterError(f"class index {c} out of range [0, {self.n_classes})")
        return c


@dataclass(frozen=True)
class TrainConfig:
    """Alternating-minimization settings: T outer support refreshes and a
    number of independent random restarts."""

    outer_iters: int = 30
    restarts: int = 5
    seed: int = 0
    lbfgs: LbfgsConfig = LbfgsConfig()

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ParameterError("outer_iters must be >= 1")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")


@dataclass
class TrainResult:
    model: ScoreModel
    final_objective: float
    trace: list                      # length T+1 objective values
    surrogate_pairs: list = field(default_factory=list)  # (before, after) per L-BFGS call
    restart_index: int = 0


def score(model: ScoreModel, x, c: int) -> float:
    """f_c(x) = alpha_c . k(x)."""
    c = model.class_index(c)
    kv = _kernel.kernel_vector(x, model.training, model.kernel)
    return float(model.alphas[c] @ kv)


def score_matrix(model: ScoreModel, xs) -> np.ndarray:
    """All class scores for a batch of instances, shape (n, C)."""
    km = _kernel.kernel_matrix(xs, model.training, model.kernel)
    return km @ model.alphas.T


def bag_hinge(model: ScoreModel, bag: Bag, c: int):
    """Bag-level hinge for class c: max{0, 1 - y * max_j f_c(x_ij)}.

    Returns (loss, support_offset); the support is the bag instance with
    the highest class-c score, ties going to the smallest offset.
    """
    c = model.class_index(c)
    scores = score_matrix(model, bag.instances)[:, c]
    off = int(np.argmax(scores))
    y = 1.0 if model.label_order[c] in bag.labels else -1.0
    loss = max(0.0, 1.0 - y * float(scores[off]))
    return loss, off


def support_instances(model: ScoreModel, dataset: LabeledDataset) -> np.ndarray:
    """(N, C) within-bag offsets of each bag's highest-scoring instance per
    class (smallest offset on ties)."""
    scores = score_matrix(model, dataset.instances)
    out = np.empty((dataset.n_bags, model.n_classes), dtype=np.intp)
    for i in range(dataset.n_bags):
        out[i] = np.argmax(scores[dataset.bag_slice(i)], axis=0)
    return out


def _regularizer(model: ScoreModel, gram_matrix) -> float:
    ga = model.alphas @ gram_matrix
    return 0.5 * model.lam * float(np.einsum("cl,cl->", ga, model.alphas))


def objective(model: ScoreModel, dataset: LabeledDataset) -> float:
    """Regularizer plus averaged bag hinges; the Gram matrix is taken over
    the model's own training instances."""
    if dataset.dimension != model.training.shape[1]:
        raise ParameterError("dataset dimension does not match the model")
    k = _kernel.gram(model.training, model.kernel)
    reg = _regularizer(model, k)
    scores = score_matrix(model, dataset.instances)
    signs = dataset.label_signs(model.label_order)
    total = 0.0
    for i in range(dataset.n_bags):
        mx = scores[dataset.bag_slice(i)].max(axis=0)
        total += np.maximum(0.0, 1.0 - signs[i] * mx).sum()
    n, c = dataset.n_bags, model.n_classes
    return reg + total / (n * c)


def fixed_support_objective(model: ScoreModel, dataset: LabeledDataset, supports) -> float:
    """Objective with the per-(bag, class) support instances frozen; this is
    the convex surrogate minimized inside each outer training step."""
    supports = np.asarray(supports, dtype=np.intp)
    if supports.shape != (dataset.n_bags, model.n_classes):
        raise ParameterError(f"supports must have shape (N, C), got {supports.shape}")
    starts = dataset.bag_starts()
    for i in range(dataset.n_bags):
        width = dataset.bag_slice(i).stop - dataset.bag_slice(i).start
        if np.any(supports[i] < 0) or np.any(supports[i] >= width):
            raise ParameterError(f"support offset out of range for bag {i}")
    rows = starts[:, None] + supports                      # (N, C) flat rows
    scores = score_matrix(model, dataset.instances)
    f_sup = scores[rows, np.arange(model.n_classes)[None, :]]   # (N, C)
    signs = dataset.label_signs(model.label_order)
    hinge = np.maximum(0.0, 1.0 - signs * f_sup).sum()
    k = _kernel.gram(model.training, model.kernel)
    return _regularizer(model, k) + hinge / (dataset.n_bags * model.n_classes)


def subgradient(model: ScoreModel, dataset: LabeledDataset, c: int, supports) -> np.ndarray:
    """Gradient of the fixed-support surrogate along alpha_c:

        lambda * K alpha_c
          - 1/(N*C) sum_i y_ic * k(x_ic) * 1{1 - y_ic f_c(x_ic) > 0}

    `supports` gives one within-bag offset per bag (the frozen supports for
    class c); the indicator is the exact one-sided choice, zero at the kink.
    """
    c = model.class_index(c)
    supports = np.asarray(supports, dtype=np.intp).ravel()
    if supports.shape[0] != dataset.n_bags:
        raise ParameterError(f"need one support offset per bag, got {supports.shape[0]}")
    rows = []
    for i in range(dataset.n_bags):
        rows.append(dataset.flat_index(i, int(supports[i])))
    sup_x = dataset.instances[rows]                       # (N, d)
    kv = _kernel.kernel_matrix(sup_x, model.training, model.kernel)   # (N, L)
    f_sup = kv @ model.alphas[c]
    y = dataset.label_signs(model.label_order)[:, c]
    active = (1.0 - y * f_sup) > 0.0
    k = _kernel.gram(model.training, model.kernel)
    scale = 1.0 / (dataset.n_bags * model.n_classes)
    return model.lam * (k @ model.alphas[c]) - scale * ((y * active) @ kv)


def _objective_and_supports(g_scores, a, slices, signs_t, lam, scale):
    """True objective and per-class support rows from G = A @ K.

    g_scores: (C, L) class scores at every training instance.
    Returns (objective, sup_rows (C, N) flat indices into the L rows).
    """
    c_count = g_scores.shape[0]
    n = len(slices)
    sup_rows = np.empty((c_count, n), dtype=np.intp)
    mx = np.empty((c_count, n))
    for i, (start, stop) in enumerate(slices):
        seg = g_scores[:, start:stop]
        off = np.argmax(seg, axis=1)
        sup_rows[:, i] = start + off
        mx[:, i] = seg[np.arange(c_count), off]
    reg = 0.5 * lam * float(np.einsum("cl,cl->", g_scores, a))
    hinge = np.maximum(0.0, 1.0 - signs_t * mx).sum()
    return reg + hinge * scale, sup_rows


def train(dataset: LabeledDataset, lam: float, kernel_cfg: KernelConfig,
          cfg: TrainConfig = TrainConfig(), gram_matrix=None) -> TrainResult:
    """Fit per-class score functions by alternating support selection and
    convex-surrogate minimization, over cfg.restarts random starts.

    Each restart draws every alpha_c uniformly on the unit sphere, then
    repeats T times: recompute supports, freeze them, minimize the convex
    surrogate jointly over all classes with L-BFGS. The restart with the
    smallest final (true) objective wins; the reported objective and trace
    always re-derive supports at the current weights, so they are genuine
    objective values rather than surrogate values.

    `gram_matrix` optionally supplies the precomputed Gram matrix of
    dataset.instances (a tuning-loop optimization); it must match exactly
    what `kernel.gram` would produce.
    """
    if not (lam > 0):
        raise ParameterError("lambda must be > 0")
    if not (kernel_cfg.gamma > 0):
        raise ParameterError("training requires gamma > 0")
    x = dataset.instances
    n, c_count = dataset.n_bags, len(dataset.known_labels)
    l_count = dataset.instance_count
    if gram_matrix is None:
        gram_matrix = _kernel.gram(x, kernel_cfg)
    else:
        gram_matrix = np.asarray(gram_matrix, dtype=np.float64)
        if gram_matrix.shape != (l_count, l_count):
            raise ParameterError(f"gram_matrix must be {l_count} x {l_count}")
    slices = [(dataset.bag_slice(i).start, dataset.bag_slice(i).stop)
              for i in range(n)]
    signs_t = dataset.label_signs().T                     # (C, N)
    scale = 1.0 / (n * c_count)
    class_idx = np.arange(c_count)

    best = None
    failures = []
    for r in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed & _SEED_MASK, r])
        a = rng.standard_normal((c_count, l_count))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        try:
            g = a @ gram_matrix
            obj, sup_rows = _objective_and_supports(g, a, slices, signs_t, lam, scale)
            if not np.isfinite(obj):
                raise NumericsError("non-finite objective at initialization")
            trace = [obj]
            pairs = []
            for _t in range(cfg.outer_iters):
                k_cols = [gram_matrix[:, sup_rows[c]] for c in range(c_count)]

                def surrogate(avec, _k_cols=k_cols, _sup=sup_rows):
                    a_ = avec.reshape(c_count, l_count)
                    g_ = a_ @ gram_matrix
                    reg = 0.5 * lam * float(np.einsum("cl,cl->", g_, a_))
                    f_sup = g_[class_idx[:, None], _sup]          # (C, N)
                    margins = 1.0 - signs_t * f_sup
                    value = reg + np.maximum(0.0, margins).sum() * scale
                    weights = np.where(margins > 0.0, signs_t, 0.0)
                    grad = lam * g_
                    for c in range(c_count):
                        grad[c] -= scale * (_k_cols[c] @ weights[c])
                    return value, grad.ravel()

                res = lbfgs_minimize(surrogate, a.ravel(), cfg.lbfgs)
                pairs.append((res.f_trace[0], res.fun))
                a = res.x.reshape(c_count, l_count)
                g = a @ gram_matrix
                obj, sup_rows = _objective_and_supports(g, a, slices, signs_t, lam, scale)
                if not np.isfinite(obj):
                    raise NumericsError(f"non-finite objective in outer step {_t + 1}")
                trace.append(obj)
        except NumericsError as exc:
            failures.append(f"restart {r}: {exc}")
            continue
        if best is None or trace[-1] < best[0]:
            best = (trace[-1], a, trace, pairs, r)

    if best is None:
        raise TrainingError("all restarts failed: " + "; ".join(failures))
    final_obj, a, trace, pairs, r = best
    model = ScoreModel(kernel=kernel_cfg, lam=lam, training=x.copy(),
                       alphas=a, label_order=dataset.known_labels)
    return TrainResult(model=model, final_objective=final_obj, trace=trace,
                       surrogate_pairs=pairs, restart_index=r)


def train_config_with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    """Copy of cfg with a different seed (grid cells, replications)."""
    return replace(cfg, seed=int(seed) & _SEED_MASK)

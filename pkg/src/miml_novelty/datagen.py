"""Synthetic bag generation, the toy co-occurrence rate, and data sources.

Bags are built by drawing per-class proportions from a Dirichlet
distribution, allocating the bag's M instance slots to classes by those
proportions, and sampling instances uniformly (with replacement) from
per-class pools. The bag's label set is the intersection of the known
label set with the classes actually present; optionally, bags whose label
set comes up empty are redrawn ("filtration").
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, GenerationError, ParameterError
from .model import Bag, LabeledDataset

_SEED_MASK = (1 << 64) - 1


@dataclass
class InstancePool:
    """Per-class pools of feature vectors; the key order defines the class
    universe order (and the beta vector alignment)."""

    by_class: dict

    def __post_init__(self):
        cleaned = {}
        dim = None
        for tag, rows in self.by_class.items():
            rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
            if rows.shape[0] == 0:
                raise ParameterError(f"class {tag!r} has an empty pool")
            if dim is None:
                dim = rows.shape[1]
            elif rows.shape[1] != dim:
                raise ParameterError(f"class {tag!r} dimension {rows.shape[1]} != {dim}")
            cleaned[tag] = rows
        if not cleaned:
            raise ParameterError("instance pool is empty")
        self.by_class = cleaned

    @property
    def classes(self) -> tuple:
        return tuple(self.by_class.keys())

    @property
    def dimension(self) -> int:
        return next(iter(self.by_class.values())).shape[1]

    def counts(self) -> dict:
        return {tag: rows.shape[0] for tag, rows in self.by_class.items()}


@dataclass(frozen=True)
class BagGenConfig:
    """Inputs of the bag generation procedure.

    beta may be a scalar (broadcast over the class universe) or one
    concentration per universe class. filter_empty redraws bags until the
    label set is non-empty.
    """

    n_bags: int
    bag_size: int
    known_labels: tuple
    beta: object = 0.1
    seed: int = 0
    filter_empty: bool = False
    redraw_cap: int = 10_000
    allocation: str = "multinomial"   # or "rounded" (largest remainder)

    def __post_init__(self):
        if self.n_bags < 1 or self.bag_size < 1:
            raise ParameterError("n_bags and bag_size must be >= 1")
        object.__setattr__(self, "known_labels", tuple(self.known_labels))
        if not self.known_labels:
            raise ParameterError("known label set must be non-empty")
        if self.allocation not in ("multinomial", "rounded"):
            raise ParameterError(f"unknown allocation mode {self.allocation!r}")

    def beta_vector(self, n_classes: int) -> np.ndarray:
        beta = np.asarray(self.beta, dtype=np.float64).ravel()
        if beta.size == 1:
            beta = np.full(n_classes, float(beta[0]))
        if beta.size != n_classes:
            raise ParameterError(f"beta has {beta.size} entries for {n_classes} classes")
        if np.any(beta <= 0) or not np.all(np.isfinite(beta)):
            raise ParameterError("all beta entries must be positive and finite")
        return beta


def dirichlet_sample(beta, rng) -> np.ndarray:
    """One Dirichlet draw via normalized Gamma(beta_i, 1) variates.

    Shapes below 1 use the boost identity Gamma(a) = Gamma(a+1) * U^(1/a)
    evaluated in log space, so arbitrarily small concentrations (where a
    plain gamma draw underflows to 0) still normalize correctly.
    """
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if beta.size == 0 or np.any(beta <= 0) or not np.all(np.isfinite(beta)):
        raise ParameterError("beta must be positive and finite")
    log_g = np.empty_like(beta)
    small = beta < 1.0
    if small.any():
        boosted = rng.gamma(beta[small] + 1.0)
        u = 1.0 - rng.random(small.sum())           # in (0, 1]
        log_g[small] = np.log(boosted) + np.log(u) / beta[small]
    if (~small).any():
        log_g[~small] = np.log(rng.gamma(beta[~small]))
    w = np.exp(log_g - log_g.max())
    p = w / w.sum()
    # dominated components may underflow to exactly 0; keep them positive
    return np.maximum(p, 5e-324)


def _allocate(m, proportions, rng, mode):
    if mode == "multinomial":
        return rng.multinomial(m, proportions)
    # largest-remainder rounding, ties by class index
    raw = m * proportions
    counts = np.floor(raw).astype(np.intp)
    short = m - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def generate_bags(pool: InstancePool, cfg: BagGenConfig) -> LabeledDataset:
    """Generate a bag dataset from per-class pools.

    Per bag: draw proportions ~ Dirichlet(beta), allocate bag_size slots,
    sample uniformly with replacement from each class pool, and set the
    label set to known_labels intersected with the classes present. With
    filter_empty the bag is redrawn (up to redraw_cap times) until the
    label set is non-empty. Every instance keeps its true class tag. Each
    bag owns the RNG stream keyed by (seed, bag index).
    """
    universe = pool.classes
    known = set(cfg.known_labels)
    if not known <= set(universe):
        raise ParameterError("known labels must be part of the pool's class universe")
    beta = cfg.beta_vector(len(universe))
    bags = []
    for i in range(cfg.n_bags):
        rng = np.random.default_rng([cfg.seed & _SEED_MASK, i])
        for _ in range(cfg.redraw_cap):
            proportions = dirichlet_sample(beta, rng)
            counts = _allocate(cfg.bag_size, proportions, rng, cfg.allocation)
            present = {universe[j] for j in range(len(universe)) if counts[j] > 0}
            labels = known & present
            if labels or not cfg.filter_empty:
                rows, tags = [], []
                for j, tag in enumerate(universe):
                    if counts[j] == 0:
                        continue
                    source = pool.by_class[tag]
                    picks = rng.integers(0, source.shape[0], size=int(counts[j]))
                    rows.append(source[picks])
                    tags.extend([tag] * int(counts[j]))
                bags.append(Bag(bag_id=str(i), instances=np.concatenate(rows, axis=0),
                                labels=labels, true_classes=tuple(tags)))
                break
        else:
            raise GenerationError(
                f"bag {i}: no non-empty label set within {cfg.redraw_cap} redraws")
    return LabeledDataset(bags, cfg.known_labels)


def co_occurrence(dataset: LabeledDataset, instance_type, label) -> float:
    """Fraction of bags where the instance type and the bag label agree in
    presence (both present, or both absent)."""
    if label not in dataset.known_labels:
        raise ParameterError(f"unknown label {label!r}")
    type_universe = set()
    for bag in dataset.bags:
        if bag.true_classes is None:
            raise ParameterError("co_occurrence needs per-instance type tags on every bag")
        type_universe.update(bag.true_classes)
    if instance_type not in type_universe:
        raise ParameterError(f"unknown instance type {instance_type!r}")
    agree = 0
    for bag in dataset.bags:
        has_type = instance_type in bag.true_classes
        has_label = label in bag.labels
        if has_type == has_label:
            agree += 1
    return agree / dataset.n_bags


def toy_dataset() -> LabeledDataset:
    """Four hand-built bags over two known labels and four instance types,
    one of which (the diamond) never has a matching label.

    The agreement rates are exact rationals: triangles co-occur with label
    I in every bag, squares with label II in every bag, and the diamond
    agrees with either label in only one bag of four.
    """
    coords = {"triangle": (0.0, 0.0), "triangle_down": (1.0, 0.0),
              "square": (0.0, 1.0), "diamond": (1.0, 1.0)}

    def bag(bag_id, types, labels):
        return Bag(bag_id=bag_id, instances=np.array([coords[t] for t in types]),
                   labels=frozenset(labels), true_classes=tuple(types))

    bags = [
        bag("1", ("triangle", "triangle", "square", "triangle_down"), ("I", "II")),
        bag("2", ("triangle", "triangle", "diamond", "triangle_down"), ("I",)),
        bag("3", ("square", "square", "square", "diamond", "diamond"), ("II",)),
        bag("4", ("triangle", "triangle", "square"), ("I", "II")),
    ]
    return LabeledDataset(bags, ("I", "II"))


def split_pool(pool: InstancePool, seed: int):
    """Shuffle each class pool and split it into disjoint halves
    (train half first). Classes with a single instance put it in both
    halves rather than leaving one side empty."""
    rng = np.random.default_rng([seed & _SEED_MASK, 0xD15])
    train, test = {}, {}
    for tag in pool.classes:
        rows = pool.by_class[tag]
        if rows.shape[0] == 1:
            train[tag] = rows.copy()
            test[tag] = rows.copy()
            continue
        perm = rng.permutation(rows.shape[0])
        half = rows.shape[0] // 2
        train[tag] = rows[perm[:half]]
        test[tag] = rows[perm[half:]]
    return InstancePool(train), InstancePool(test)


def gaussian_ring_pool(n_per_class: int, seed: int, n_classes: int = 10,
                       radius: float = 6.0) -> InstancePool:
    """Unit-variance 2-D Gaussian classes with means spread on a circle;
    class tags are the strings '0'..'n_classes-1'."""
    if n_per_class < 1 or n_classes < 2:
        raise ParameterError("need n_per_class >= 1 and n_classes >= 2")
    rng = np.random.default_rng([seed & _SEED_MASK, 0x919])
    by_class = {}
    for c in range(n_classes):
        angle = 2.0 * np.pi * c / n_classes
        mean = radius * np.array([np.cos(angle), np.sin(angle)])
        by_class[str(c)] = mean + rng.standard_normal((n_per_class, 2))
    return InstancePool(by_class)


_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801


def _read_be32(buf, offset, path):
    if offset + 4 > len(buf):
        raise FormatError(f"{path}: truncated header at byte {offset}")
    return int.from_bytes(buf[offset:offset + 4], "big"), offset + 4


def load_idx(images_path, labels_path) -> InstancePool:
    """Load an IDX image/label file pair into per-digit pools.

    Pixels are scaled to [0, 1]; class tags are the digit strings. Raises
    FormatError (naming the offending byte offset) on bad magic numbers,
    truncated payloads, or image/label count mismatches.
    """
    with open(images_path, "rb") as fh:
        img = fh.read()
    with open(labels_path, "rb") as fh:
        lab = fh.read()
    magic, pos = _read_be32(img, 0, images_path)
    if magic != _IDX_IMAGE_MAGIC:
        raise FormatError(f"{images_path}: bad image magic 0x{magic:08x} at byte 0")
    n_img, pos = _read_be32(img, pos, images_path)
    rows, pos = _read_be32(img, pos, images_path)
    cols, pos = _read_be32(img, pos, images_path)
    need = n_img * rows * cols
    if len(img) - pos < need:
        raise FormatError(
            f"{images_path}: payload truncated at byte {len(img)} (need {pos + need} bytes)")
    pixels = np.frombuffer(img, dtype=np.uint8, count=need, offset=pos)

    magic, pos = _read_be32(lab, 0, labels_path)
    if magic != _IDX_LABEL_MAGIC:
        raise FormatError(f"{labels_path}: bad label magic 0x{magic:08x} at byte 0")
    n_lab, pos = _read_be32(lab, pos, labels_path)
    if len(lab) - pos < n_lab:
        raise FormatError(
            f"{labels_path}: payload truncated at byte {len(lab)} (need {pos + n_lab} bytes)")
    labels = np.frombuffer(lab, dtype=np.uint8, count=n_lab, offset=pos)
    if n_img != n_lab:
        raise FormatError(f"{images_path}: {n_img} images but {n_lab} labels")

    features = pixels.reshape(n_img, rows * cols).astype(np.float64) / 255.0
    by_class = {}
    for digit in np.unique(labels):
        by_class[str(int(digit))] = features[labels == digit]
    return InstancePool(by_class)

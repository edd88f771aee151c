"""File formats: model documents, dataset CSV pairs, and ROC CSV files.

Model files are versioned JSON documents holding the kernel bandwidth,
regularization weight, label order, training matrix, per-class weight
vectors, and (optionally) the training-derived threshold grid. Floats are
serialized via repr and round-trip exactly.

Dataset CSV contract: an instances file with header
`bag_id,instance_id,true_class,f0..f{d-1}` (true_class is `-` when
absent) and a labels file with header `bag_id,labels` where labels are
`;`-separated tokens (empty cell = empty label set).
"""

import csv
import json

import numpy as np

from .detector import RocCurve, trapezoid_area
from .errors import FormatError, ParameterError
from .kernel import KernelConfig
from .model import Bag, LabeledDataset, ScoreModel

MODEL_FORMAT = "miml-novelty-model"
MODEL_VERSION = 1


def save_model(path, model: ScoreModel, thresholds=None):
    """Write a model document; `thresholds` is the optional training-derived
    grid (the -inf/+inf sentinels are stripped and re-added on load)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "gamma": float(model.kernel.gamma),
        "lambda": float(model.lam),
        "label_order": [str(lab) for lab in model.label_order],
        "dimension": int(model.training.shape[1]),
        "training": [[float(v) for v in row] for row in model.training],
        "alphas": [[float(v) for v in row] for row in model.alphas],
        "thresholds": None if thresholds is None else
                      [float(t) for t in np.asarray(thresholds).ravel() if np.isfinite(t)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Read a model document; returns (ScoreModel, thresholds or None)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: not a valid model document ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: missing or wrong format marker")
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {doc.get('version')!r}")
    try:
        training = np.asarray(doc["training"], dtype=np.float64)
        alphas = np.asarray(doc["alphas"], dtype=np.float64)
        model = ScoreModel(kernel=KernelConfig(float(doc["gamma"])),
                           lam=float(doc["lambda"]),
                           training=training, alphas=alphas,
                           label_order=tuple(doc["label_order"]))
        if training.shape[1] != int(doc["dimension"]):
            raise FormatError(f"{path}: dimension field disagrees with the training matrix")
        raw = doc["thresholds"]
    except (KeyError, TypeError, ValueError, ParameterError) as exc:
        raise FormatError(f"{path}: malformed model payload ({exc})") from exc
    thresholds = None
    if raw is not None:
        finite = np.asarray(raw, dtype=np.float64)
        thresholds = np.concatenate(([-np.inf], np.unique(finite), [np.inf]))
    return model, thresholds


def write_dataset_csv(dataset: LabeledDataset, instances_path, labels_path):
    """Write a dataset as the instances/labels CSV pair."""
    d = dataset.dimension
    with open(instances_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bag_id", "instance_id", "true_class"] + [f"f{j}" for j in range(d)])
        for bag in dataset.bags:
            for off in range(bag.size):
                tag = "-" if bag.true_classes is None or bag.true_classes[off] is None \
                    else str(bag.true_classes[off])
                writer.writerow([bag.bag_id, f"{bag.bag_id}.{off}", tag]
                                + [repr(float(v)) for v in bag.instances[off]])
    with open(labels_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bag_id", "labels"])
        for bag in dataset.bags:
            writer.writerow([bag.bag_id, ";".join(sorted(str(v) for v in bag.labels))])


def load_csv_instances(path):
    """Read an instances CSV; returns (instance_ids, bag_ids, tags, X).

    tags entries are None where the true_class cell is `-`.
    """
    ids, bag_ids, tags, rows = [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 4 or header[:3] != ["bag_id", "instance_id", "true_class"]:
            raise FormatError(f"{path}: line 1: expected header bag_id,instance_id,true_class,f0,...")
        d = len(header) - 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 3:
                raise FormatError(f"{path}: line {lineno}: expected {d + 3} cells, got {len(row)}")
            try:
                rows.append([float(v) for v in row[3:]])
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: non-numeric feature ({exc})") from exc
            ids.append(row[1])
            bag_ids.append(row[0])
            tags.append(None if row[2] == "-" else row[2])
    if not rows:
        raise FormatError(f"{path}: no instance rows")
    return ids, bag_ids, tags, np.asarray(rows, dtype=np.float64)


def load_csv_dataset(instances_path, labels_path) -> LabeledDataset:
    """Assemble bags by bag_id from an instances/labels CSV pair.

    The known label set is the sorted union of all label tokens; bags with
    an empty labels cell (or with no labels row at all) get an empty label
    set.
    """
    _, bag_ids, tags, x = load_csv_instances(instances_path)
    order = []
    members = {}
    for row, bid in enumerate(bag_ids):
        if bid not in members:
            members[bid] = []
            order.append(bid)
        members[bid].append(row)

    labels_by_bag = {}
    with open(labels_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["bag_id", "labels"]:
            raise FormatError(f"{labels_path}: line 1: expected header bag_id,labels")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{labels_path}: line {lineno}: expected 2 cells, got {len(row)}")
            bid, cell = row
            if bid not in members:
                raise FormatError(
                    f"{labels_path}: line {lineno}: bag_id {bid!r} has no instance rows")
            if bid in labels_by_bag:
                raise FormatError(f"{labels_path}: line {lineno}: duplicate bag_id {bid!r}")
            labels_by_bag[bid] = frozenset(t for t in cell.split(";") if t)

    bags = []
    for bid in order:
        rows = members[bid]
        bag_tags = [tags[r] for r in rows]
        bags.append(Bag(bag_id=bid, instances=x[rows],
                        labels=labels_by_bag.get(bid, frozenset()),
                        true_classes=None if all(t is None for t in bag_tags) else tuple(bag_tags)))
    known = sorted({lab for bag in bags for lab in bag.labels})
    if not known:
        raise FormatError(f"{labels_path}: no bag carries any label token")
    return LabeledDataset(bags, tuple(known))


def write_roc_csv(curve: RocCurve, path):
    """Persist a curve as threshold,fpr,tpr rows (plot-ready)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in curve.points:
            writer.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


def read_roc_csv(path) -> RocCurve:
    """Read a persisted curve; the AUC is recomputed from the points."""
    thresholds, fpr, tpr = [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["threshold", "fpr", "tpr"]:
            raise FormatError(f"{path}: line 1: expected header threshold,fpr,tpr")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}: line {lineno}: expected 3 cells")
            try:
                thresholds.append(float(row[0]))
                fpr.append(float(row[1]))
                tpr.append(float(row[2]))
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: non-numeric cell ({exc})") from exc
    fpr = np.asarray(fpr)
    tpr = np.asarray(tpr)
    return RocCurve(thresholds=np.asarray(thresholds), fpr=fpr, tpr=tpr,
                    auc=trapezoid_area(fpr, tpr))

import json

import numpy as np
import pytest

from miml_novelty.datagen import BagGenConfig, gaussian_ring_pool, generate_bags
from miml_novelty.detector import max_score, roc, roc_from_scores, threshold_grid
from miml_novelty.errors import FormatError
from miml_novelty.formats import (load_csv_dataset, load_csv_instances, load_model,
                                  read_roc_csv, save_model, write_dataset_csv, write_roc_csv)
from miml_novelty.kernel import KernelConfig
from miml_novelty.model import TrainConfig, train
from miml_novelty.optim import LbfgsConfig

from helpers import random_dataset, random_model


def _toy_model(seed=0):
    ds = random_dataset(np.random.default_rng(seed), n_bags=5, max_bag=3)
    return ds, random_model(np.random.default_rng(seed + 1), ds)


def test_model_round_trip_scores(tmp_path):
    ds, model = _toy_model()
    thresholds = threshold_grid(model, ds)
    path = tmp_path / "model.json"
    save_model(path, model, thresholds)
    loaded, loaded_thresholds = load_model(path)
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.standard_normal(2)
        before = max_score(model, x)
        after = max_score(loaded, x)
        assert abs(before[0] - after[0]) < 1e-12
        assert before[1] == after[1]
    assert np.array_equal(loaded_thresholds, thresholds)


def test_model_round_trip_preserves_auc(tmp_path):
    pool = gaussian_ring_pool(30, seed=5, n_classes=4, radius=9.0)
    ds = generate_bags(pool, BagGenConfig(n_bags=12, bag_size=5,
                                          known_labels=("0", "1"), beta=0.4, seed=6))
    cfg = TrainConfig(outer_iters=8, restarts=2, seed=1,
                      lbfgs=LbfgsConfig(max_iters=60, grad_tol=1e-5))
    result = train(ds, lam=0.01, kernel_cfg=KernelConfig(0.1), cfg=cfg)
    test_pool = gaussian_ring_pool(30, seed=7, n_classes=4, radius=9.0)
    test_ds = generate_bags(test_pool, BagGenConfig(n_bags=12, bag_size=5,
                                                    known_labels=("0", "1"), beta=0.4, seed=8))
    curve = roc(result.model, test_ds)
    path = tmp_path / "model.json"
    save_model(path, result.model)
    loaded, _ = load_model(path)
    assert roc(loaded, test_ds).auc == curve.auc


def test_model_label_order_preserved(tmp_path):
    ds, model = _toy_model(seed=10)
    path = tmp_path / "model.json"
    save_model(path, model)
    loaded, _ = load_model(path)
    assert loaded.label_order == tuple(str(v) for v in model.label_order)
    rng = np.random.default_rng(11)
    for _ in range(10):
        x = rng.standard_normal(2)
        assert max_score(loaded, x)[1] == max_score(model, x)[1]


def test_model_truncated_file_is_format_error(tmp_path):
    ds, model = _toy_model(seed=20)
    path = tmp_path / "model.json"
    save_model(path, model)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FormatError):
        load_model(path)
    del ds


def test_model_version_mismatch(tmp_path):
    ds, model = _toy_model(seed=30)
    path = tmp_path / "model.json"
    save_model(path, model)
    doc = json.loads(path.read_text())
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError, match="version"):
        load_model(path)
    del ds


def test_dataset_csv_round_trip(tmp_path):
    pool = gaussian_ring_pool(20, seed=40, n_classes=4)
    ds = generate_bags(pool, BagGenConfig(n_bags=8, bag_size=4,
                                          known_labels=("0", "3"), beta=0.4, seed=41))
    inst, lab = tmp_path / "i.csv", tmp_path / "l.csv"
    write_dataset_csv(ds, inst, lab)
    loaded = load_csv_dataset(inst, lab)
    assert loaded.n_bags == ds.n_bags
    assert np.array_equal(loaded.instances, ds.instances)
    assert [b.labels for b in loaded.bags] == [b.labels for b in ds.bags]
    assert [b.true_classes for b in loaded.bags] == [b.true_classes for b in ds.bags]


def test_csv_empty_label_cell_allowed(tmp_path):
    inst = tmp_path / "i.csv"
    lab = tmp_path / "l.csv"
    inst.write_text("bag_id,instance_id,true_class,f0,f1\n"
                    "b1,b1.0,-,0.0,1.0\n"
                    "b2,b2.0,-,1.0,0.0\n")
    lab.write_text("bag_id,labels\nb1,x;y\nb2,\n")
    ds = load_csv_dataset(inst, lab)
    assert ds.known_labels == ("x", "y")
    assert ds.bags[1].labels == frozenset()


def test_csv_ragged_row_names_line(tmp_path):
    inst = tmp_path / "i.csv"
    inst.write_text("bag_id,instance_id,true_class,f0,f1\n"
                    "b1,b1.0,-,0.0,1.0\n"
                    "b1,b1.1,-,0.5\n")
    with pytest.raises(FormatError, match="line 3"):
        load_csv_instances(inst)


def test_csv_non_numeric_feature(tmp_path):
    inst = tmp_path / "i.csv"
    inst.write_text("bag_id,instance_id,true_class,f0\nb1,b1.0,-,abc\n")
    with pytest.raises(FormatError, match="line 2"):
        load_csv_instances(inst)


def test_csv_label_without_instances(tmp_path):
    inst = tmp_path / "i.csv"
    lab = tmp_path / "l.csv"
    inst.write_text("bag_id,instance_id,true_class,f0\nb1,b1.0,-,0.0\n")
    lab.write_text("bag_id,labels\nb1,x\nghost,y\n")
    with pytest.raises(FormatError, match="line 3"):
        load_csv_dataset(inst, lab)


def test_csv_birdsong_shaped_file(tmp_path):
    # 548 bags / 4998 instances of 38 features over 13 classes
    rng = np.random.default_rng(42)
    n_bags, n_rows, dim, n_classes = 548, 4998, 38, 13
    sizes = np.full(n_bags, n_rows // n_bags)
    sizes[: n_rows - sizes.sum()] += 1
    assert sizes.sum() == n_rows
    inst_lines = ["bag_id,instance_id,true_class," + ",".join(f"f{j}" for j in range(dim))]
    label_lines = ["bag_id,labels"]
    for b, size in enumerate(sizes):
        classes = rng.integers(1, n_classes + 1, size=size)
        for off in range(size):
            feats = ",".join(repr(float(v)) for v in rng.standard_normal(dim))
            inst_lines.append(f"bag{b},bag{b}.{off},{classes[off]},{feats}")
        labels = ";".join(str(c) for c in sorted(set(classes.tolist())))
        label_lines.append(f"bag{b},{labels}")
    inst = tmp_path / "i.csv"
    lab = tmp_path / "l.csv"
    inst.write_text("\n".join(inst_lines) + "\n")
    lab.write_text("\n".join(label_lines) + "\n")
    ds = load_csv_dataset(inst, lab)
    assert ds.n_bags == n_bags
    assert ds.instance_count == n_rows
    assert ds.dimension == dim
    assert len(ds.known_labels) <= 13
    assert abs(ds.instance_count / ds.n_bags - 9.12) < 0.2


def test_roc_csv_replays_to_same_auc(tmp_path):
    rng = np.random.default_rng(50)
    scores = rng.standard_normal(60)
    novel = rng.uniform(size=60) < 0.5
    novel[0], novel[1] = True, False
    curve = roc_from_scores(scores, novel)
    path = tmp_path / "roc.csv"
    write_roc_csv(curve, path)
    replay = read_roc_csv(path)
    assert replay.auc == curve.auc
    assert np.array_equal(replay.fpr, curve.fpr)
    assert np.array_equal(replay.thresholds, curve.thresholds)


def test_roc_csv_bad_header(tmp_path):
    path = tmp_path / "roc.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(FormatError):
        read_roc_csv(path)

import json
import os

import numpy as np
import pytest

from mgm.cli import main
from mgm.config import resolve_config
from mgm.errors import ConfigError


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    code = main([
        "synth", "--n-nodes", "150", "--components", "3", "--classes", "3",
        "--homophily", "0.8", "--synth-label-fraction", "0.3",
        "--noise", "1.0", "--synth-seed", "1", "--out", str(root),
    ])
    assert code == 0
    return root


def config_file(tmp_path, dataset, **kw):
    cfg = {
        "nodes": str(dataset / "nodes.tsv"),
        "edges": str(dataset / "edges.tsv"),
        "labels": str(dataset / "labels.tsv"),
        "label_names": ["class0", "class1", "class2"],
        "encoder": "gcn",
        "hidden": [8, 8],
        "seeds": [0],
        "em_iters": 3,
        "pretrain_epochs": 30,
        "out": str(tmp_path / "run"),
    }
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_synth_writes_all_files(dataset):
    for name in ("nodes.tsv", "edges.tsv", "labels.tsv", "gold.tsv",
                 "config.echo.json"):
        assert (dataset / name).exists()


def test_train_writes_artifacts(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset)
    assert main(["train", "--config", str(cfg)]) == 0
    run = tmp_path / "run"
    for name in ("config.echo.json", "aggregate.json", "timing.json"):
        assert (run / name).exists()
    seed_dir = run / "seed_0"
    for name in ("checkpoint.json", "metrics.json", "predictions.tsv",
                 "probabilities.json", "history.csv", "timing.json"):
        assert (seed_dir / name).exists()
    assert (run / "figures" / "training_seed0.png").exists()

    # predictions cover every node
    lines = (seed_dir / "predictions.tsv").read_text().strip().split("\n")
    assert len(lines) - 1 == 150

    metrics = json.loads((seed_dir / "metrics.json").read_text())
    assert "macro_f1" in metrics["metrics"]
    assert metrics["config"]["encoder"] == "gcn"

    aggregate = json.loads((run / "aggregate.json").read_text())
    for key in ("macro_f1", "accuracy", "avg_recall"):
        assert set(aggregate["aggregate"][key]) == {"mean", "std"}
    timing = json.loads((run / "timing.json").read_text())
    assert "per_seed_minutes" in timing and "mean_minutes" in timing


def test_no_figures_flag(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset)
    assert main(["train", "--config", str(cfg), "--no-figures",
                 "--out", str(tmp_path / "nofig")]) == 0
    assert not (tmp_path / "nofig" / "figures").exists()


def test_rerun_is_bit_identical(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "det"))
    assert main(["train", "--config", str(cfg)]) == 0
    out = tmp_path / "det"
    snapshot = {}
    for base, _, files in os.walk(out):
        for f in files:
            p = os.path.join(base, f)
            snapshot[os.path.relpath(p, out)] = open(p, "rb").read()
    assert main(["train", "--config", str(cfg)]) == 0
    for rel, blob in snapshot.items():
        if "timing" in rel:
            continue
        now = open(os.path.join(out, rel), "rb").read()
        assert now == blob, f"{rel} changed across reruns"


def test_rerun_from_echoed_config(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "echo1"))
    assert main(["train", "--config", str(cfg)]) == 0
    echoed = tmp_path / "echo1" / "config.echo.json"
    data = json.loads(echoed.read_text())
    data["out"] = str(tmp_path / "echo2")
    redo = tmp_path / "redo.json"
    redo.write_text(json.dumps(data))
    assert main(["train", "--config", str(redo)]) == 0
    a = (tmp_path / "echo1" / "seed_0" / "predictions.tsv").read_bytes()
    b = (tmp_path / "echo2" / "seed_0" / "predictions.tsv").read_bytes()
    assert a == b


def test_error_category_line_and_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"nodes": "/nonexistent/x.tsv",
                               "edges": "/nonexistent/y.tsv",
                               "labels": "/nonexistent/z.tsv"}))
    code = main(["train", "--config", str(cfg)])
    assert code != 0
    err = capsys.readouterr().err
    assert err.startswith("error category=config")


def test_seed_precedence_flag_over_env_over_file(tmp_path, dataset, monkeypatch):
    cfg = config_file(tmp_path, dataset, seeds=[5, 6])
    resolved = resolve_config(str(cfg))
    assert resolved.seeds == [5, 6]
    monkeypatch.setenv("MGM_SEED", "7")
    resolved = resolve_config(str(cfg))
    assert resolved.seeds == [7]
    resolved = resolve_config(str(cfg), overrides={"seeds": [3]})
    assert resolved.seeds == [3]


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "weird.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    with pytest.raises(ConfigError, match="bogus_key"):
        resolve_config(str(cfg))


def test_predict_roundtrip_and_eta_flag(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "trainrun"))
    assert main(["train", "--config", str(cfg)]) == 0
    ckpt = tmp_path / "trainrun" / "seed_0" / "checkpoint.json"
    assert main([
        "predict", "--config", str(cfg), "--checkpoint", str(ckpt),
        "--out", str(tmp_path / "pred"),
    ]) == 0
    lines = (tmp_path / "pred" / "predictions.tsv").read_text().strip().split("\n")
    assert len(lines) - 1 == 150
    # rerunning predict is bit-identical
    a = (tmp_path / "pred" / "predictions.tsv").read_bytes()
    assert main([
        "predict", "--config", str(cfg), "--checkpoint", str(ckpt),
        "--out", str(tmp_path / "pred2"),
    ]) == 0
    assert (tmp_path / "pred2" / "predictions.tsv").read_bytes() == a


def test_eval_command(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "evrun"))
    assert main(["train", "--config", str(cfg)]) == 0
    pred = tmp_path / "evrun" / "seed_0" / "predictions.tsv"
    assert main([
        "eval", "--predictions", str(pred),
        "--labels", str(dataset / "gold.tsv"),
        "--label-names", "class0,class1,class2",
        "--out", str(tmp_path / "eval"),
    ]) == 0
    metrics = json.loads((tmp_path / "eval" / "metrics.json").read_text())
    assert 0.0 <= metrics["metrics"]["macro_f1"] <= 100.0


def test_sweep_singleton_grid_and_vanilla_column(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "sweep"))
    assert main([
        "sweep", "--config", str(cfg), "--k-grid", "3", "--eta-grid", "0.8",
    ]) == 0
    rows = (tmp_path / "sweep" / "sweep.csv").read_text().strip().split("\n")
    header = rows[0].split(",")
    assert header[:3] == ["k", "eta", "seed"]
    etas = {r.split(",")[1] for r in rows[1:]}
    assert "1.0" in etas  # vanilla baseline enforced
    assert (tmp_path / "sweep" / "sweep.png").exists()


def test_label_fraction_consistency_with_train(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "lf"),
                      memory_mode="sampled")
    assert main([
        "label-fraction", "--config", str(cfg), "--fractions", "1.0",
    ]) == 0
    rows = (tmp_path / "lf" / "label_fraction.csv").read_text().strip().split("\n")
    mgm_f1 = [float(r.split(",")[3]) for r in rows[1:] if ",mgm," in r]

    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "tr")]) == 0
    metrics = json.loads((tmp_path / "tr" / "seed_0" / "metrics.json").read_text())
    assert abs(mgm_f1[0] - metrics["metrics"]["macro_f1"]) < 1e-9
    assert (tmp_path / "lf" / "label_fraction.png").exists()


def test_memory_fraction_command(tmp_path, dataset):
    cfg = config_file(tmp_path, dataset, out=str(tmp_path / "mf"))
    assert main([
        "memory-fraction", "--config", str(cfg), "--fractions", "0.6,1.0",
    ]) == 0
    rows = (tmp_path / "mf" / "memory_fraction.csv").read_text().strip().split("\n")
    assert len(rows) == 3  # header + 2 fractions x 1 seed
    assert (tmp_path / "mf" / "memory_fraction.png").exists()


def test_fuse_command_stage1_and_2(tmp_path):
    rng = np.random.default_rng(0)
    ids = [f"m{i:03d}" for i in range(80)]
    gold = {i: int(rng.integers(0, 3)) for i in ids}
    text, graph = {}, {}
    for i in ids:
        onehot = np.eye(3)[gold[i]]
        if rng.random() > 0.45:
            z = 2.5 * onehot + rng.normal(scale=0.8, size=3)
            text[i] = (np.exp(z) / np.exp(z).sum()).tolist()
        z = 1.8 * onehot + rng.normal(scale=1.0, size=3)
        graph[i] = (np.exp(z) / np.exp(z).sum()).tolist()

    (tmp_path / "text.json").write_text(json.dumps(text))
    (tmp_path / "graph.json").write_text(json.dumps(graph))
    (tmp_path / "gold.tsv").write_text(
        "\n".join(f"{i}\tclass{gold[i]}" for i in ids) + "\n"
    )
    (tmp_path / "train.txt").write_text("\n".join(ids[:56]) + "\n")
    (tmp_path / "test.txt").write_text("\n".join(ids[56:]) + "\n")

    common = [
        "--gold", str(tmp_path / "gold.tsv"),
        "--label-names", "class0,class1,class2",
        "--train-ids", str(tmp_path / "train.txt"),
        "--test-ids", str(tmp_path / "test.txt"),
    ]
    assert main(["fuse", "--stage", "1", *common,
                 "--text", str(tmp_path / "text.json"),
                 "--out", str(tmp_path / "s1")]) == 0
    assert main(["fuse", "--stage", "2", *common,
                 "--text", str(tmp_path / "text.json"),
                 "--graph", str(tmp_path / "graph.json"),
                 "--out", str(tmp_path / "s2")]) == 0
    m1 = json.loads((tmp_path / "s1" / "metrics.json").read_text())
    m2 = json.loads((tmp_path / "s2" / "metrics.json").read_text())
    assert m2["metrics"]["macro_f1"] > m1["metrics"]["macro_f1"]
    assert (tmp_path / "s2" / "fused.json").exists()


def test_fuse_missing_table_is_pipeline_error(tmp_path, capsys):
    (tmp_path / "gold.tsv").write_text("a\tclass0\nb\tclass1\n")
    (tmp_path / "train.txt").write_text("a\n")
    (tmp_path / "test.txt").write_text("b\n")
    (tmp_path / "text.json").write_text("{}")
    code = main([
        "fuse", "--stage", "2",
        "--gold", str(tmp_path / "gold.tsv"),
        "--label-names", "class0,class1",
        "--train-ids", str(tmp_path / "train.txt"),
        "--test-ids", str(tmp_path / "test.txt"),
        "--text", str(tmp_path / "text.json"),
        "--out", str(tmp_path / "out"),
    ])
    assert code != 0
    assert "category=pipeline" in capsys.readouterr().err

import json

import numpy as np
import pytest

from someip_ids import cli, netsim, pipeline, workflow
from someip_ids.evaluation import cross_validate, test_models
from someip_ids.evaluation.metrics import class_metrics
from someip_ids.netsim import AttackType
from someip_ids.seqnet import EncoderHashMismatch, TrainConfig, load_model

FAST = ["--epochs", "2", "--hidden", "6", "4", "--batch-size", "50"]


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Two small generate runs and a prepared dataset, built through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    for name, attack, seed in (("eoe", "error_on_error", 1), ("mreq", "missing_request", 2),
                               ("eoev", "error_on_event", 3), ("mresp", "missing_response", 4)):
        assert cli.main(["generate", "--attack", attack, "--seed", str(seed), "--attacks", "6",
                         "--out-dir", str(root / name)]) == 0
    assert cli.main(["prepare", *(str(root / n) for n in ("eoe", "mreq", "eoev", "mresp")),
                     "--out-dir", str(root / "prep")]) == 0
    return root


def test_generate_outputs_and_manifest(runs):
    doc = json.loads((runs / "eoe" / "manifest.json").read_text())
    assert doc["command"] == "generate" and doc["seed"] == 1
    assert set(doc["outputs"]) == {"output.pcap", "labels.jsonl"}
    assert doc["summary"]["sessions_per_class"]["2"] == 6
    assert doc["outputs"]["output.pcap"] == workflow.sha256_file(runs / "eoe" / "output.pcap")


def test_generate_deterministic(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["generate", "--attack", "error_on_event", "--seed", "8",
                         "--out-dir", str(tmp_path / d)]) == 0
    for f in ("output.pcap", "labels.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_generate_zero_attacks_all_normal(tmp_path):
    assert cli.main(["generate", "--attack", "error_on_error", "--attacks", "0",
                     "--out-dir", str(tmp_path)]) == 0
    labels = netsim.read_labels(tmp_path / "labels.jsonl")
    assert set(labels) == {0}


def test_generate_config_file(tmp_path):
    cfg = netsim.reference_scenario(AttackType.MISSING_RESPONSE, seed=3)
    netsim.dump_scenario(cfg, tmp_path / "scenario.yaml")
    assert cli.main(["generate", "--config", str(tmp_path / "scenario.yaml"),
                     "--out-dir", str(tmp_path / "run")]) == 0
    doc = workflow.read_manifest(tmp_path / "run")
    assert doc["config_hash"] == cfg.config_hash()


def test_generate_config_errors(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("devices: 3\n")
    assert cli.main(["generate", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["generate", "--attacks", "500", "--attack", "missing_request",
                     "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["generate", "--config", str(tmp_path / "missing.yaml")]) == 3


def test_out_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["generate", "--attacks", "0"]) == 0
    assert (tmp_path / "env" / "generate" / "manifest.json").exists()


def test_prepare_manifest(runs):
    doc = workflow.read_manifest(runs / "prep")
    counts = doc["class_counts"]
    assert counts["Error on Error"] == counts["Missing Request"] == 6
    assert sum(counts.values()) == doc["sequences"] == 4 * 104
    assert doc["encoder_width"] == sum(doc["block_widths"])


def test_prepare_tampered_labels_exit_4(runs, tmp_path, capsys):
    src = runs / "eoe"
    rows = [json.loads(line) for line in (src / "labels.jsonl").read_text().splitlines()]
    for r in rows:
        r["label"] = 0
    labels = tmp_path / "labels.jsonl"
    labels.write_text("".join(json.dumps(r) + "\n" for r in rows))
    code = cli.main(["prepare", f"{src / 'output.pcap'}:{labels}", "--out-dir", str(tmp_path / "p")])
    assert code == 4
    assert "first disagreeing session" in capsys.readouterr().err


def test_prepare_hash_chain_exit_4(runs, tmp_path):
    import shutil

    copy = tmp_path / "eoe"
    shutil.copytree(runs / "eoe", copy)
    with open(copy / "labels.jsonl", "a") as fh:
        fh.write("\n")
    assert cli.main(["prepare", str(copy), "--out-dir", str(tmp_path / "p")]) == 4


def test_train_and_evaluate(runs, tmp_path):
    assert cli.main(["train", str(runs / "prep"), *FAST, "--out-dir", str(tmp_path / "t")]) == 0
    doc = workflow.read_manifest(tmp_path / "t")
    assert doc["checkpoints"] == ["model_fold1.ckpt", "model_fold2.ckpt", "model_fold3.ckpt"]
    assert doc["config"]["learning_rate"] == 0.001
    assert cli.main(["evaluate", str(runs / "prep"), str(tmp_path / "t"),
                     "--out-dir", str(tmp_path / "e")]) == 0
    agg = json.loads((tmp_path / "e" / "aggregate.json").read_text())
    assert agg["models"] == 3
    rep = json.loads((tmp_path / "e" / "model1_test.json").read_text())
    assert {"recall", "precision", "f1"} <= set(rep["classes"][0])
    assert len(rep["roc"]) == 7
    assert (tmp_path / "e" / "model1_test_roc.csv").exists()
    assert (tmp_path / "e" / "model1_test_confusion.csv").exists()


def test_train_weight_file(runs, tmp_path):
    table = tmp_path / "weights.json"
    table.write_text(json.dumps({str(k): v for k, v in pipeline.PUBLISHED_CLASS_WEIGHTS.items()}))
    assert cli.main(["train", str(runs / "prep"), *FAST, "--folds", "2", "--class-weights", str(table),
                     "--out-dir", str(tmp_path / "t")]) == 0
    report = json.loads((tmp_path / "t" / "cv_report.json").read_text())
    assert report["class_weights"] == {"0": 0.16, "1": 6.68, "2": 10.35, "3": 4.33, "4": 4.86}


def test_train_class_too_small_exit_5(tmp_path):
    assert cli.main(["generate", "--attack", "error_on_event", "--attacks", "1", "--seed", "2",
                     "--out-dir", str(tmp_path / "g")]) == 0
    assert cli.main(["prepare", str(tmp_path / "g"), "--out-dir", str(tmp_path / "p")]) == 0
    assert cli.main(["train", str(tmp_path / "p"), "--folds", "2", *FAST,
                     "--out-dir", str(tmp_path / "t")]) == 5


def test_evaluate_encoder_mismatch_exit_6(runs, tmp_path):
    assert cli.main(["train", str(runs / "prep"), *FAST, "--folds", "2",
                     "--out-dir", str(tmp_path / "t")]) == 0
    assert cli.main(["generate", "--attacks", "0", "--out-dir", str(tmp_path / "g")]) == 0
    assert cli.main(["prepare", str(tmp_path / "g"), "--out-dir", str(tmp_path / "p")]) == 0
    assert cli.main(["evaluate", str(tmp_path / "p"), str(tmp_path / "t"),
                     "--out-dir", str(tmp_path / "e")]) == 6


def test_prepare_with_shared_encoder(runs, tmp_path):
    assert cli.main(["generate", "--attacks", "0", "--seed", "77", "--out-dir", str(tmp_path / "g")]) == 0
    assert cli.main(["prepare", str(tmp_path / "g"), "--encoder", str(runs / "prep"),
                     "--out-dir", str(tmp_path / "p")]) == 0
    a = workflow.load_prepared(runs / "prep")
    b = workflow.load_prepared(tmp_path / "p")
    assert a.encoder == b.encoder


# --- library-level protocol checks ------------------------------------------


def test_cross_validate_three_models_deterministic(runs):
    ds = workflow.load_prepared(runs / "prep")
    cfg = TrainConfig(max_epochs=1, hidden=(4, 3), batch_size=100)
    rep_a, models_a = cross_validate(ds, cfg, k=3)
    rep_b, _ = cross_validate(ds, cfg, k=3)
    assert len(models_a) == 3 and len(rep_a.folds) == 3
    assert json.dumps(rep_a.to_json()) == json.dumps(rep_b.to_json())
    assert sum(f.val_size for f in rep_a.folds) == len(ds)


def test_test_models_rejects_other_encoder(runs, tmp_path):
    ds = workflow.load_prepared(runs / "prep")
    cfg = TrainConfig(max_epochs=1, hidden=(4, 3))
    _, models = cross_validate(ds, cfg, k=2)
    models[0].encoder_hash = "0" * 64
    with pytest.raises(EncoderHashMismatch):
        test_models(models, ds)


def test_ground_truth_predictor_scores_one():
    y = np.array([0, 1, 2, 3, 4, 0, 0])
    assert all(m.f1 == 1.0 for m in class_metrics(y, y))


def test_comparison_table_reference_column_independent_of_results():
    agg = {"models": 3, "per_class": {
        name: {"recall": [0.5] * 3, "precision": [0.5] * 3, "f1": [0.5] * 3, "auc": [0.5] * 3}
        for name in netsim.CLASS_NAMES}}
    table = workflow.comparison_table(agg)
    agg2 = json.loads(json.dumps(agg))
    for row in agg2["per_class"].values():
        row["f1"] = [0.9] * 3
    table2 = workflow.comparison_table(agg2)
    ref = [line.split("|")[1] for line in table.splitlines()]
    ref2 = [line.split("|")[1] for line in table2.splitlines()]
    assert ref == ref2
    # [PAPER] model 1, Error on Error test row: 0.67 / 0.97 / 0.79
    row = next(line for line in table.splitlines() if line.startswith("1 ") and "Error on Error" in line)
    assert row.split("|")[1].split() == ["0.67", "0.97", "0.79"]


def test_checkpoint_carries_encoder_hash(runs, tmp_path):
    assert cli.main(["train", str(runs / "prep"), *FAST, "--folds", "2",
                     "--out-dir", str(tmp_path / "t")]) == 0
    ds = workflow.load_prepared(runs / "prep")
    m = load_model(tmp_path / "t" / "model_fold1.ckpt", encoder_hash=ds.encoder.digest())
    assert m.encoder_hash == ds.encoder.digest()
    assert isinstance(workflow.read_manifest(tmp_path / "t"), dict)

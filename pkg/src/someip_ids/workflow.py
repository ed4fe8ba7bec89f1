"""The four pipeline stages (generate, prepare, train, evaluate) and the full
reproduction run, each writing its outputs plus a ``manifest.json`` into a run
directory. Downstream stages verify the file hashes recorded upstream.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path

import numpy as np

from . import __version__, netsim, pipeline, reference
from .evaluation import cross_validate, test_models
from .netsim.config import CLASS_NAMES, AttackType, ScenarioConfig
from .seqnet import TrainConfig, load_model, save_model

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
DATASET_FILE = "dataset.sids"
ENCODER_FILE = "encoder.json"
LABELS_FILE = "labels.jsonl"

# Attack runs per class, chosen so that with 10 attacks per run the attack
# counts land on the published training/testing class counts.
TRAIN_PLAN = {
    AttackType.ERROR_ON_EVENT: 6,
    AttackType.ERROR_ON_ERROR: 4,
    AttackType.MISSING_RESPONSE: 9,
    AttackType.MISSING_REQUEST: 8,
}
TEST_PLAN = {
    AttackType.ERROR_ON_EVENT: 5,
    AttackType.ERROR_ON_ERROR: 5,
    AttackType.MISSING_RESPONSE: 8,
    AttackType.MISSING_REQUEST: 11,
}


class IntegrityError(ValueError):
    """An input file does not match the hash its producing stage recorded."""


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, *, config=None, seed=None, inputs=(), outputs=(),
                   started: float | None = None, **extra) -> dict:
    doc = {
        "tool": "someip-ids",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
        **extra,
    }
    if started is not None:
        doc["elapsed_s"] = round(time.time() - started, 3)
    (out_dir / MANIFEST).write_text(json.dumps(doc, indent=2, default=str) + "\n")
    return doc


def read_manifest(run_dir: str | Path, verify: bool = True) -> dict:
    run_dir = Path(run_dir)
    doc = json.loads((run_dir / MANIFEST).read_text())
    if verify:
        for name, digest in doc.get("outputs", {}).items():
            actual = sha256_file(run_dir / name)
            if actual != digest:
                raise IntegrityError(f"{run_dir / name}: hash {actual[:12]} != manifest {digest[:12]}")
    return doc


def named_counts(counts: dict[int, int]) -> dict[str, int]:
    return {CLASS_NAMES[c]: int(counts.get(c, 0)) for c in range(len(CLASS_NAMES))}


# --- generate ----------------------------------------------------------------


def generate(cfg: ScenarioConfig, out_dir: str | Path, pcap_name: str | None = None) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    packets = netsim.simulate(cfg)
    pcap = out_dir / (pcap_name or Path(cfg.output_path).name)
    labels = out_dir / LABELS_FILE
    netsim.write_pcap(packets, pcap)
    netsim.write_labels(packets, labels)
    summary = netsim.summarize(packets)
    return write_manifest(
        out_dir, "generate", config=cfg.to_dict(), seed=cfg.seed, outputs=[pcap, labels],
        started=started, config_hash=cfg.config_hash(), pcap=pcap.name, labels=labels.name,
        summary=summary,
        note="per-class counts are sequences (sessions); packet counts are listed separately",
    )


# --- prepare -----------------------------------------------------------------


def _resolve_capture(spec: str) -> tuple[Path, Path, dict | None]:
    """A generate run directory (hash-verified) or an explicit ``PCAP:LABELS`` pair."""
    path = Path(spec)
    if path.is_dir():
        doc = read_manifest(path)
        return path / doc["pcap"], path / doc["labels"], doc
    if ":" in spec:
        pcap, labels = spec.rsplit(":", 1)
        return Path(pcap), Path(labels), None
    raise FileNotFoundError(f"{spec}: neither a run directory nor PCAP:LABELS")


def load_encoder(spec: str | Path) -> pipeline.Encoder:
    path = Path(spec)
    if path.is_dir():
        read_manifest(path)
        path = path / ENCODER_FILE
    return pipeline.Encoder.from_json(json.loads(path.read_text()))


def prepare(inputs, out_dir: str | Path, max_len: int = pipeline.DEFAULT_MAX_LEN,
            encoder: pipeline.Encoder | None = None) -> dict:
    """Read labeled captures, encode, group, pad and concatenate them into one dataset.

    The encoder is fitted on the union of all inputs unless one is given.
    Raises :class:`pipeline.OracleDisagreement` when a session's labels
    contradict the conformance check.
    """
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    captures = []
    sources = []
    for spec in inputs:
        pcap, labels, _ = _resolve_capture(str(spec))
        captures.append(netsim.read_labeled(pcap, labels))
        sources.append(pcap)
        sources.append(labels)
    if encoder is None:
        encoder = pipeline.fit_encoder(
            pipeline.extract_features(p) for packets in captures for p in packets
        )
    parts = [
        pipeline.Dataset(pipeline.sequences_from_packets(packets, encoder, max_len), encoder, max_len)
        for packets in captures
    ]
    ds = pipeline.concat(parts)
    data_path = out_dir / DATASET_FILE
    enc_path = out_dir / ENCODER_FILE
    pipeline.save_dataset(ds, data_path)
    enc_path.write_text(json.dumps(encoder.to_json(), indent=1) + "\n")
    counts = ds.class_counts
    total = len(ds)
    return write_manifest(
        out_dir, "prepare", inputs=sources, outputs=[data_path, enc_path], started=started,
        dataset=data_path.name, encoder=enc_path.name, encoder_hash=encoder.digest(),
        encoder_width=encoder.total_width, block_widths=[len(v) for v in encoder.vocab],
        max_len=max_len, sequences=total, class_counts=named_counts(counts),
        class_proportions={CLASS_NAMES[c]: counts[c] / total if total else 0.0 for c in counts},
        class_weights_inverse_frequency={CLASS_NAMES[c]: w for c, w in ds.class_weights.items()},
    )


def load_prepared(spec: str | Path) -> pipeline.Dataset:
    path = Path(spec)
    if path.is_dir():
        doc = read_manifest(path)
        path = path / doc["dataset"]
    return pipeline.load_dataset(path)


# --- train -------------------------------------------------------------------


def resolve_class_weights(spec: str | None, ds: pipeline.Dataset) -> dict[int, float]:
    if spec in (None, "auto"):
        present = {c: n for c, n in ds.class_counts.items() if n}
        return pipeline.compute_class_weights(present)
    if spec == "published":
        return dict(pipeline.PUBLISHED_CLASS_WEIGHTS)
    table = pipeline.load_weight_table(spec)
    return pipeline.compute_class_weights(ds.class_counts, "explicit", table)


def train_cv(dataset_spec, out_dir: str | Path, cfg: TrainConfig, folds: int = 3,
             class_weights: str | None = "auto") -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_prepared(dataset_spec)
    weights = resolve_class_weights(class_weights, ds)
    report, models = cross_validate(ds, cfg, k=folds, class_weights=weights)
    ckpts = []
    for fold, model in zip(report.folds, models):
        path = out_dir / f"model_fold{fold.fold}.ckpt"
        save_model(model, path)
        ckpts.append(path)
        fold.report.write(out_dir)
    report_path = out_dir / "cv_report.json"
    doc = report.to_json()
    doc["class_weights"] = {str(c): w for c, w in sorted(weights.items())}
    report_path.write_text(json.dumps(doc, indent=1) + "\n")
    inputs = [Path(dataset_spec) / DATASET_FILE] if Path(dataset_spec).is_dir() else [dataset_spec]
    return write_manifest(
        out_dir, "train", config=cfg.to_dict(), seed=cfg.seed, inputs=inputs,
        outputs=ckpts + [report_path], started=started, folds=folds,
        checkpoints=[p.name for p in ckpts], encoder_hash=ds.encoder.digest(),
        class_weights={CLASS_NAMES[c]: w for c, w in sorted(weights.items())},
        summary=report.summary(),
    )


# --- evaluate ----------------------------------------------------------------


def _resolve_models(specs) -> list[Path]:
    paths = []
    for spec in specs:
        path = Path(spec)
        if path.is_dir():
            doc = read_manifest(path)
            paths.extend(path / name for name in doc["checkpoints"])
        else:
            paths.append(path)
    return paths


def evaluate_models(model_specs, dataset_spec, out_dir: str | Path) -> dict:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_prepared(dataset_spec)
    digest = ds.encoder.digest()
    paths = _resolve_models(model_specs)
    models = [load_model(p, encoder_hash=digest) for p in paths]
    names = [f"model{i + 1}_test" for i in range(len(models))]
    reports = test_models(models, ds, names)
    for rep, path in zip(reports, paths):
        rep.extra["checkpoint"] = str(path)
        rep.write(out_dir)
    aggregate = aggregate_reports(reports)
    agg_path = out_dir / "aggregate.json"
    agg_path.write_text(json.dumps(aggregate, indent=1) + "\n")
    outputs = [out_dir / f"{n}.json" for n in names] + [agg_path]
    return write_manifest(
        out_dir, "evaluate", inputs=paths, outputs=outputs, started=started,
        encoder_hash=digest, reports=[p.name for p in outputs[:-1]], aggregate=aggregate,
    )


def aggregate_reports(reports) -> dict:
    per_class = {}
    for c, name in enumerate(CLASS_NAMES):
        f1 = [r.f1(c) for r in reports]
        auc = [r.auc(f"class_{c}") for r in reports]
        per_class[name] = {
            "f1": f1,
            "f1_mean": float(np.mean(f1)),
            "auc": auc,
            "recall": [r.classes[c].recall for r in reports],
            "precision": [r.classes[c].precision for r in reports],
        }
    return {
        "models": len(reports),
        "per_class": per_class,
        "micro_auc": [r.auc("micro") for r in reports],
        "macro_auc": [r.auc("macro") for r in reports],
        "accuracy": [r.accuracy for r in reports],
    }


# --- reproduce ---------------------------------------------------------------


def generate_corpus(plan: dict[AttackType, int], out_dir: Path, seed: int,
                    base: ScenarioConfig | None = None) -> list[Path]:
    runs = []
    i = 0
    for attack, n_runs in plan.items():
        for _ in range(n_runs):
            run_seed = seed + i
            cfg = (base or netsim.reference_scenario()).replace(attack_type=attack, seed=run_seed)
            run_dir = out_dir / f"run{i:02d}_{attack.value}"
            generate(cfg, run_dir)
            runs.append(run_dir)
            i += 1
    return runs


def comparison_table(aggregate: dict) -> str:
    """Obtained per-class test metrics next to the published testing results."""
    lines = [
        f"{'model':<6}{'class':<18}{'recall':>8}{'prec':>8}{'f1':>8}{'auc':>8}"
        f"   |{'pub R':>9}{'pub P':>9}{'pub F1':>10}"
    ]
    nan = float("nan")
    for i in range(aggregate["models"]):
        ref = reference.TEST_RESULTS.get(i + 1, {})
        for name in CLASS_NAMES:
            row = aggregate["per_class"][name]
            auc = row["auc"][i]
            pr, pp, pf = ref.get(name, (nan, nan, nan))
            lines.append(
                f"{i + 1:<6}{name:<18}{row['recall'][i]:>8.3f}{row['precision'][i]:>8.3f}"
                f"{row['f1'][i]:>8.3f}{(nan if auc is None else auc):>8.3f}"
                f"   |{pr:>9.2f}{pp:>9.2f}{pf:>10.2f}"
            )
    return "\n".join(lines)


def reproduce(out_dir: str | Path, seed: int = 0, cfg: TrainConfig | None = None, folds: int = 3,
              class_weights: str = "published", train_plan=None, test_plan=None) -> dict:
    """Generate training and testing corpora, prepare, cross-validate and test."""
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = cfg or TrainConfig(seed=seed)
    timings = {}

    t = time.time()
    train_runs = generate_corpus(train_plan or TRAIN_PLAN, out_dir / "generate" / "train", seed * 1000)
    test_runs = generate_corpus(test_plan or TEST_PLAN, out_dir / "generate" / "test", seed * 1000 + 500)
    timings["generate"] = time.time() - t

    t = time.time()
    train_doc = prepare(train_runs, out_dir / "prepare" / "train")
    encoder = load_encoder(out_dir / "prepare" / "train")
    test_doc = prepare(test_runs, out_dir / "prepare" / "test", encoder=encoder)
    timings["prepare"] = time.time() - t

    t = time.time()
    train_doc_cv = train_cv(out_dir / "prepare" / "train", out_dir / "train", cfg, folds, class_weights)
    timings["train"] = time.time() - t

    t = time.time()
    eval_doc = evaluate_models([out_dir / "train"], out_dir / "prepare" / "test", out_dir / "evaluate")
    timings["evaluate"] = time.time() - t

    table = comparison_table(eval_doc["aggregate"])
    (out_dir / "comparison.txt").write_text(table + "\n")
    return write_manifest(
        out_dir, "reproduce", config=cfg.to_dict(), seed=seed, started=started,
        outputs=[out_dir / "comparison.txt"],
        train_class_counts=train_doc["class_counts"], test_class_counts=test_doc["class_counts"],
        encoder_width=train_doc["encoder_width"], cv_summary=train_doc_cv["summary"],
        test_aggregate=eval_doc["aggregate"],
        timings_s={k: round(v, 2) for k, v in timings.items()}, comparison=table.splitlines(),
    )

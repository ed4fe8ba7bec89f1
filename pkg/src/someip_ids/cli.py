"""Command-line front end: ``someip-ids generate|prepare|train|evaluate|reproduce``.

Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 corpus integrity
failure, 5 training failure, 6 encoder mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, netsim, pipeline, workflow
from .evaluation import ClassTooSmall
from .netsim.config import AttackType, ConfigError
from .seqnet import CheckpointError, EmptySplit, EncoderHashMismatch, TrainConfig

OUT_ENV = "SOMEIP_IDS_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTEGRITY = 4
EXIT_TRAINING = 5
EXIT_ENCODER = 6

log = logging.getLogger("someip_ids")


def _out_dir(args, command: str) -> Path:
    """``--out-dir`` wins; otherwise ``$SOMEIP_IDS_OUT/<command>``; otherwise ``runs/<command>``."""
    if args.out_dir:
        return Path(args.out_dir)
    base = os.environ.get(OUT_ENV)
    return Path(base or "runs") / command


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        hidden=tuple(args.hidden),
        patience=args.patience,
        clip_norm=None if args.no_clip else args.clip_norm,
        mask_padding=args.mask_padding,
        seed=args.seed,
    )


def cmd_generate(args) -> int:
    cfg = netsim.load_scenario(args.config) if args.config else netsim.reference_scenario()
    changes = {}
    if args.attack is not None:
        changes["attack_type"] = AttackType(args.attack)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.attacks is not None:
        changes["attacks_to_execute"] = args.attacks
    cfg = cfg.replace(**changes)
    netsim.config.validate(cfg)
    out = _out_dir(args, "generate")
    doc = workflow.generate(cfg, out, args.pcap_name)
    s = doc["summary"]
    print(f"{out / doc['pcap']}: {s['packets']} packets, {s['sessions']} sessions")
    print(f"sessions per class: {json.dumps(s['sessions_per_class'])}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    encoder = workflow.load_encoder(args.encoder) if args.encoder else None
    out = _out_dir(args, "prepare")
    doc = workflow.prepare(args.inputs, out, args.max_len, encoder)
    print(f"{out / doc['dataset']}: {doc['sequences']} sequences, width {doc['encoder_width']}")
    for name, n in doc["class_counts"].items():
        print(f"  {name:<18}{n:>7}  {doc['class_proportions'][name]:.4f}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _train_config(args)
    out = _out_dir(args, "train")
    doc = workflow.train_cv(args.dataset, out, cfg, args.folds, args.class_weights)
    for name in doc["checkpoints"]:
        print(out / name)
    print(json.dumps(doc["summary"], indent=1))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _out_dir(args, "evaluate")
    doc = workflow.evaluate_models(args.models, args.dataset, out)
    print(workflow.comparison_table(doc["aggregate"]))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = _train_config(args)
    out = _out_dir(args, "reproduce")
    doc = workflow.reproduce(out, seed=args.seed, cfg=cfg, folds=args.folds,
                             class_weights=args.class_weights)
    print("\n".join(doc["comparison"]))
    print(f"timings (s): {json.dumps(doc['timings_s'])}")
    return EXIT_OK


def _add_train_flags(p: argparse.ArgumentParser, default_weights: str) -> None:
    d = TrainConfig()
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--epochs", type=int, default=d.max_epochs)
    p.add_argument("--hidden", type=int, nargs=2, default=list(d.hidden), metavar=("H1", "H2"))
    p.add_argument("--patience", type=int, default=d.patience)
    p.add_argument("--clip-norm", type=float, default=d.clip_norm)
    p.add_argument("--no-clip", action="store_true", help="disable gradient clipping")
    p.add_argument("--mask-padding", action="store_true",
                   help="freeze the hidden state on padded steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--class-weights", default=default_weights,
                   help="'auto' (inverse frequency), 'published', or a JSON file {class: weight}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="someip-ids", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate one labeled capture")
    p.add_argument("--config", help="scenario YAML/JSON (default: built-in reference scenario)")
    p.add_argument("--attack", choices=[a.value for a in AttackType])
    p.add_argument("--seed", type=int)
    p.add_argument("--attacks", type=int, help="override attacks_to_execute")
    p.add_argument("--pcap-name", help="pcap file name inside the run directory")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("prepare", help="turn captures into a padded sequence dataset")
    p.add_argument("inputs", nargs="+", help="generate run directories or PCAP:LABELS pairs")
    p.add_argument("--encoder", help="reuse an encoder (prepare run dir or encoder.json)")
    p.add_argument("--max-len", type=int, default=pipeline.DEFAULT_MAX_LEN)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="k-fold cross-validated training")
    p.add_argument("dataset", help="prepare run directory or dataset file")
    _add_train_flags(p, "auto")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score checkpoints on a held-out dataset")
    p.add_argument("dataset", help="prepare run directory or dataset file")
    p.add_argument("models", nargs="+", help="train run directories or checkpoint files")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce", help="full generate/prepare/train/evaluate run")
    _add_train_flags(p, "published")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except pipeline.OracleDisagreement as exc:
        print(f"error: corpus integrity: first disagreeing session {exc.session_key}: {exc}",
              file=sys.stderr)
        return EXIT_INTEGRITY
    except (workflow.IntegrityError, netsim.IndexMismatch, pipeline.MixedEvidence) as exc:
        print(f"error: corpus integrity: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (EncoderHashMismatch, pipeline.EncoderMismatch) as exc:
        print(f"error: encoder mismatch: {exc}", file=sys.stderr)
        return EXIT_ENCODER
    except (ClassTooSmall, EmptySplit, pipeline.ZeroCount) as exc:
        print(f"error: training failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (ConfigError, netsim.NotEnoughSessions) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, netsim.PcapError, pipeline.ContainerError, CheckpointError,
            json.JSONDecodeError) as exc:
        print(f"error: I/O: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``reactmotion <command> [options]``.

Every command accepts ``--config FILE`` (a JSON document) whose values are
overridden by explicit flags.  Commands that write to an output directory
also write ``run_config.json`` there: the resolved parameters and their hash.
Exit status: 0 on success, 2 for usage errors (bad flags, missing paths,
malformed config), 1 for failures while running.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .motiondata import (
    JOINT_NAMES,
    load_clip,
    load_dataset,
    load_sbu_directory,
    make_synthetic_dataset,
    save_dataset,
    split_loso,
)
from .motiondata.sbu import EXCLUDED
from .traineval import (
    RecognizerConfig,
    TrainConfig,
    afd_report,
    config_hash,
    generator_variants,
    load_generator,
    load_recognizer,
    loss_variants,
    map_ordered,
    recognition_accuracy,
    run_ablation,
    save_models,
    save_recognizer,
    synthesize_clips,
    train_gan,
    train_recognizer,
)
from .traineval.metrics import NearestNeighbour

DATA_ENV = "REACTMOTION_DATA"
log = logging.getLogger("reactmotion")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config resolution

def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed config {path}: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return doc


def _resolve(args, keys: dict, section: str | None = None) -> dict:
    """Merge defaults < config file < explicit flags for the options in ``keys``."""
    doc = _read_config(getattr(args, "config", None))
    file_values = doc.get(section, {}) if section else doc
    if not isinstance(file_values, dict):
        raise UsageError(f"config section {section!r} must be an object")
    out = dict(keys)
    for k in keys:
        if k in file_values:
            out[k] = file_values[k]
        flag = getattr(args, k, None)
        if flag is not None:
            out[k] = flag
    return out


def _train_config(args) -> TrainConfig:
    doc = _read_config(args.config)
    section = doc.get("train", {})
    if not isinstance(section, dict):
        raise UsageError("config section 'train' must be an object")
    preset = args.preset or doc.get("preset", "synthetic")
    values = dict(section)
    flags = {
        "epochs": args.epochs, "batch_size": args.batch_size, "lr": args.lr, "seed": args.seed,
        "part_hidden": args.part_hidden, "disc_hidden": args.disc_hidden, "attn_hidden": args.attn_hidden,
        "loss_subset": args.loss_subset, "smoothing": args.smoothing,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    for attr, key in (("no_attention", "use_attention"), ("no_parts", "use_parts"),
                      ("no_multiclass", "use_multiclass")):
        if getattr(args, attr):
            values[key] = False
    if args.non_saturating:
        values["non_saturating"] = True
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            values[key] = json.loads(raw)
        except json.JSONDecodeError:
            values[key] = raw
    try:
        base = TrainConfig.preset(preset)
        return TrainConfig.from_dict({**base.to_dict(), **values})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _write_run_config(out_dir, command: str, doc: dict) -> str:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h = config_hash({"command": command, "config": doc})
    payload = {"command": command, "config": doc, "config_hash": h}
    (out_dir / "run_config.json").write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return h


def _data_path(value) -> Path:
    path = value or os.environ.get(DATA_ENV)
    if not path:
        raise UsageError(f"no data path given (use --data or set {DATA_ENV})")
    path = Path(path)
    if not path.exists():
        raise UsageError(f"no such file or directory: {path}")
    return path


def _existing(value, what: str) -> Path:
    if value is None:
        raise UsageError(f"missing {what}")
    path = Path(value)
    if not path.exists():
        raise UsageError(f"no such file or directory: {path}")
    return path


def _split(clips, held_out):
    if held_out is None:
        return clips, clips
    train, test = split_loso(clips, held_out)
    if not train:
        raise UsageError(f"holding out {held_out!r} leaves no training clips")
    return train, test


# ---------------------------------------------------------------------------
# commands

def cmd_synth_data(args) -> int:
    p = _resolve(args, {"classes": 2, "clips": 8, "len": 40, "noise": 0.0, "seed": 0, "pairs": 3})
    clips = make_synthetic_dataset(p["classes"], p["clips"], p["len"], p["noise"], p["seed"], p["pairs"])
    save_dataset(args.out, clips)
    h = _write_run_config(args.out, "synth-data", p)
    print(f"wrote {len(clips)} clips to {args.out} (config {h})")
    return 0


def cmd_import_sbu(args) -> int:
    root = _data_path(args.root)
    p = _resolve(args, {"window": 40, "stride": 5, "prescale": None, "exclude": list(EXCLUDED)})
    p["normalize"] = not args.no_normalize
    clips = load_sbu_directory(root, exclude=tuple(p["exclude"]), normalize=p["normalize"],
                               window=p["window"], stride=p["stride"], prescale=p["prescale"])
    save_dataset(args.out, clips)
    p["root"] = str(root)
    h = _write_run_config(args.out, "import-sbu", p)
    print(f"wrote {len(clips)} clips to {args.out} (config {h})")
    return 0


def cmd_train(args) -> int:
    config = _train_config(args)
    clips = load_dataset(_data_path(args.data))
    train, _ = _split(clips, args.held_out)
    out = Path(args.out)

    def progress(record):
        log.info("epoch %d  g_loss %.4f  d_loss %.4f  l1 %.4f", record["epoch"], record.get("g_loss", np.nan),
                 record.get("d_loss", np.nan), record.get("l1", np.nan))

    result = train_gan(train, config, callback=progress)
    paths = save_models(out, result, config)
    result.log.save(paths["log"], timing_path=out / "timing.jsonl")
    doc = {"train": config.to_dict(), "held_out": args.held_out, "n_train": len(train)}
    _write_run_config(out, "train", doc)
    final = result.log.records[-1] if result.log.records else {}
    print(f"trained {config.epochs} epochs on {len(train)} clips; config {config.hash()}; "
          f"final l1 {final.get('l1', float('nan')):.6g}")
    return 0


def _generator_from(path):
    path = _existing(path, "--model")
    if path.is_dir():
        path = path / "generator.ckpt"
    return load_generator(path)


def cmd_synthesize(args) -> int:
    gen, config = _generator_from(args.model)
    clips = load_dataset(_data_path(args.data))
    _, clips = _split(clips, args.held_out)
    out = Path(args.out)
    preds = synthesize_clips(gen, clips)
    synthesized = [c.with_motion_b(p) for c, p in zip(clips, preds)]
    save_dataset(out, synthesized)
    if args.attention:
        if not config.use_attention:
            raise UsageError("this generator has no attention")
        for i, clip in enumerate(clips):
            _, amap = gen.synthesize(clip.motion_a)
            amap.save(out / f"attention_{i:04d}.txt")
    _write_run_config(out, "synthesize", {"model": str(args.model), "data": str(args.data),
                                          "held_out": args.held_out, "model_config": config.hash()})
    print(f"synthesized {len(clips)} clips into {out}")
    return 0


def cmd_eval_afd(args) -> int:
    pred = load_dataset(_existing(args.pred, "--pred"))
    truth = load_dataset(_existing(args.truth, "--truth"))
    if len(pred) != len(truth):
        raise UsageError(f"{len(pred)} predicted clips vs {len(truth)} ground-truth clips")
    report = afd_report([p.motion_b for p in pred], truth, per_joint=args.per_joint, jobs=args.jobs)
    print(repr(report.mean))
    if args.per_class:
        for label, value in report.per_class().items():
            print(f"class {label} {value!r}")
    return 0


def cmd_eval_recognition(args) -> int:
    p = _resolve(args, {"hidden": 512, "layers": 2, "epochs": 300, "lr": 0.01, "batch_size": 16, "seed": 0},
                 section="recognizer")
    test = load_dataset(_existing(args.test, "--test"))
    if args.recognizer:
        model = load_recognizer(_existing(args.recognizer, "--recognizer"))
    else:
        train = load_dataset(_existing(args.train, "--train"))
        model = train_recognizer(train, RecognizerConfig(**p, b_only=args.b_only))
        if args.save_recognizer:
            save_recognizer(args.save_recognizer, model)
    if args.pred:
        pred = load_dataset(_existing(args.pred, "--pred"))
        if len(pred) != len(test):
            raise UsageError(f"{len(pred)} predicted clips vs {len(test)} test clips")
        test = [t.with_motion_b(q.motion_b) for t, q in zip(test, pred)]
    report = recognition_accuracy(model, test)
    print(json.dumps({"overall": report.overall, "per_class": {str(k): v for k, v in report.per_class.items()},
                      "n": report.n}, sort_keys=True))
    return 0


def cmd_baseline_nn(args) -> int:
    train = load_dataset(_existing(args.train, "--train"))
    query = load_dataset(_existing(args.query, "--query"))
    nn = NearestNeighbour(train)
    preds = map_ordered(nn, [q.motion_a for q in query], args.jobs)
    save_dataset(args.out, [q.with_motion_b(p) for q, p in zip(query, preds)])
    _write_run_config(args.out, "baseline-nn", {"train": str(args.train), "query": str(args.query)})
    print(f"wrote {len(query)} nearest-neighbour reactions to {args.out}")
    return 0


def cmd_ablate(args) -> int:
    config = _train_config(args)
    if args.train and args.test:
        train, test = load_dataset(_existing(args.train, "--train")), load_dataset(_existing(args.test, "--test"))
    else:
        clips = load_dataset(_data_path(args.data))
        if args.held_out is None:
            raise UsageError("ablate needs --held-out SUBJECT or both --train and --test")
        train, test = _split(clips, args.held_out)
    variants = generator_variants(config) if args.kind == "generator" else loss_variants(config)
    recognizer = load_recognizer(_existing(args.recognizer, "--recognizer")) if args.recognizer else None
    report = run_ablation(train, test, variants, recognizer=recognizer, jobs=args.jobs,
                          progress=lambda name, cfg: log.info("training variant %s", name))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_csv(), encoding="utf-8")
    _write_run_config(out.parent, "ablate", {"train": config.to_dict(), "kind": args.kind,
                                             "held_out": args.held_out})
    sys.stdout.write(report.to_csv())
    return 0


def cmd_export_attention(args) -> int:
    gen, config = _generator_from(args.model)
    if not config.use_attention:
        raise UsageError("this generator has no attention")
    clip = load_clip(_existing(args.clip, "--clip"))
    _, amap = gen.synthesize(clip.motion_a)
    amap.save(args.out)
    print(f"wrote {amap.weights.shape[0]}x{amap.weights.shape[1]} attention map to {args.out}")
    return 0


def cmd_export_motion(args) -> int:
    clip = load_clip(_existing(args.clip, "--clip"))
    chars = {"a": ["a"], "b": ["b"], "both": ["a", "b"]}[args.character]
    header = ["frame"] + [f"{c}_{joint}_{axis}" for c in chars for joint in JOINT_NAMES for axis in "xyz"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t in range(len(clip)):
            row = [t]
            for c in chars:
                row += [repr(float(v)) for v in (clip.motion_a if c == "a" else clip.motion_b)[t]]
            writer.writerow(row)
    print(f"wrote {len(clip)} frames to {args.out}")
    return 0


def cmd_grad_check(args) -> int:
    from .traineval.diagnostics import pipeline_grad_check

    result = pipeline_grad_check(seed=args.seed, n_samples=args.samples)
    name, idx = result.worst if result.worst else ("-", ())
    print(f"max relative error {result.max_rel_error:.3e} over {result.n_checked} entries (worst {name}{list(idx)})")
    return 0 if result.ok(args.tol) else 1


# ---------------------------------------------------------------------------
# parser

def _add_train_flags(p):
    p.add_argument("--preset", choices=["synthetic", "sbu", "hhoi"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--part-hidden", type=int)
    p.add_argument("--disc-hidden", type=int)
    p.add_argument("--attn-hidden", type=int)
    p.add_argument("--loss-subset")
    p.add_argument("--smoothing", type=float)
    p.add_argument("--no-attention", action="store_true")
    p.add_argument("--no-parts", action="store_true")
    p.add_argument("--no-multiclass", action="store_true")
    p.add_argument("--non-saturating", action="store_true")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="any training option")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reactmotion", description="Reactive two-character motion synthesis.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config")
        p.set_defaults(func=fn)
        return p

    p = command("synth-data", cmd_synth_data, "write the synthetic two-class dataset")
    p.add_argument("--classes", type=int)
    p.add_argument("--clips", type=int, help="clips per class")
    p.add_argument("--len", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--out", required=True)

    p = command("import-sbu", cmd_import_sbu, "convert an SBU Kinect tree to normalized windowed clips")
    p.add_argument("--root")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--prescale", type=float)
    p.add_argument("--exclude", nargs="*")
    p.add_argument("--no-normalize", action="store_true")

    p = command("train", cmd_train, "train generator and discriminator")
    p.add_argument("--data")
    p.add_argument("--held-out")
    p.add_argument("--out", required=True)
    _add_train_flags(p)

    p = command("synthesize", cmd_synthesize, "synthesize B for every clip")
    p.add_argument("--model", required=True)
    p.add_argument("--data")
    p.add_argument("--held-out")
    p.add_argument("--out", required=True)
    p.add_argument("--attention", action="store_true", help="also write attention maps")

    p = command("eval-afd", cmd_eval_afd, "average frame distance between two clip sets")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--per-joint", action="store_true")
    p.add_argument("--per-class", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    p = command("eval-recognition", cmd_eval_recognition, "recognition accuracy on real or synthesized B")
    p.add_argument("--train")
    p.add_argument("--test", required=True)
    p.add_argument("--pred")
    p.add_argument("--recognizer")
    p.add_argument("--save-recognizer")
    p.add_argument("--b-only", action="store_true")
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)

    p = command("baseline-nn", cmd_baseline_nn, "frame-wise nearest-neighbour reactions")
    p.add_argument("--train", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = command("ablate", cmd_ablate, "train variants and tabulate their metrics")
    p.add_argument("--data")
    p.add_argument("--held-out")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--kind", choices=["generator", "loss"], default="generator")
    p.add_argument("--recognizer")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_train_flags(p)

    p = command("export-attention", cmd_export_attention, "write one clip's S x T attention map")
    p.add_argument("--model", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--out", required=True)

    p = command("export-motion", cmd_export_motion, "write a clip as a per-frame CSV table")
    p.add_argument("--clip", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--character", choices=["a", "b", "both"], default="both")

    p = command("grad-check", cmd_grad_check, "finite-difference check of the full pipeline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-4)
    return parser


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"reactmotion: usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - one line per failure, by contract
        message = str(exc).replace("\n", " ")
        print(f"reactmotion: error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

"""Command-line driver: gen, disturb, segment, train, eval, harmonize-export, mi-demo.

Configuration is a flat ``section.key = value`` file (``#`` starts a comment).
Sections are ``generator``, ``disturbance``, ``pools``, ``train``, ``encoder``,
``schedule`` and ``experiment``; ``--set section.key=value`` overrides the file.
Every command writes ``config.resolved`` beside its outputs, which can be fed
back through ``--config`` to reproduce the run.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .autodiff import config_hash, load_checkpoint
from .data import (disturb_dataset, generate_mvd, make_splits, read_intervals,
                   read_segments, write_intervals, write_json, write_segments)
from .errors import ConfigError, SegHarmonyError
from .evaluation import example_joints, mi_gain, summarize_reports
from .model import CoherentClassifier, EncoderConfig
from .pipeline import ExperimentConfig, build_pools
from .training import evaluate, train

OUT_ENV = "SEGHARMONY_OUT"
SNAPSHOT = "config.resolved"


# ---------------------------------------------------------------------------
# flat config files
# ---------------------------------------------------------------------------
def _sections(cfg: ExperimentConfig):
    return {
        "generator": cfg.generator,
        "disturbance": cfg.disturbance,
        "pools": cfg.pools,
        "train": cfg.train,
        "encoder": cfg.train.encoder,
        "schedule": cfg.train.schedule,
    }


_NESTED = {"encoder", "schedule"}
_EXPERIMENT_KEYS = ("fold", "data_seed", "scheme")


def _parse_value(raw, current, key):
    raw = raw.strip()
    try:
        if isinstance(current, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, (tuple, list)):
            if not raw:
                return type(current)()
            if key.endswith("duration_ranges"):
                pairs = [p.split("-") for p in raw.split(",")]
                return [(int(a), int(b)) for a, b in pairs]
            return tuple(int(x) for x in raw.split(","))
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {type(current).__name__}", key) from None


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        if v and isinstance(v[0], (tuple, list)):
            return ",".join(f"{a}-{b}" for a, b in v)
        return ",".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def apply_setting(cfg: ExperimentConfig, key, raw):
    """Set one ``section.key`` on ``cfg``; unknown keys raise ConfigError."""
    if "." not in key:
        raise ConfigError("keys must be written as section.name", key)
    section, name = key.split(".", 1)
    if section == "experiment":
        if name not in _EXPERIMENT_KEYS:
            raise ConfigError("unknown key", key)
        setattr(cfg, name, _parse_value(raw, getattr(cfg, name), key))
        return
    target = _sections(cfg).get(section)
    if target is None:
        raise ConfigError("unknown section", key)
    fields = {f.name for f in dataclasses.fields(target)} - (_NESTED if section == "train" else set())
    if name not in fields:
        raise ConfigError("unknown key", key)
    setattr(target, name, _parse_value(raw, getattr(target, name), key))


def parse_config_text(text, cfg=None, source="<config>"):
    cfg = cfg or ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value", line)
        key, raw = line.split("=", 1)
        apply_setting(cfg, key.strip(), raw)
    return cfg


def render_config(cfg: ExperimentConfig):
    lines = []
    for section, obj in _sections(cfg).items():
        for f in dataclasses.fields(obj):
            if section == "train" and f.name in _NESTED:
                continue
            lines.append(f"{section}.{f.name} = {_format_value(getattr(obj, f.name))}")
    for name in _EXPERIMENT_KEYS:
        lines.append(f"experiment.{name} = {_format_value(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"


def resolve_config(args):
    cfg = ExperimentConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}", "--config")
        parse_config_text(path.read_text(), cfg, str(path))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError("--set expects section.key=value", item)
        key, raw = item.split("=", 1)
        apply_setting(cfg, key.strip(), raw)
    if args.seed is not None:
        cfg.data_seed = args.seed
        cfg.disturbance.seed = args.seed
        cfg.train.seed = args.seed
    return cfg


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
def _out_dir(args, default_name):
    root = args.out or os.path.join(os.environ.get(OUT_ENV, "runs"), default_name)
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(path, flag):
    if path is None:
        raise ConfigError("required", flag)
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"input not found: {p}", flag)
    return p


def _finish(out, cfg, command, outputs, extra=None):
    snapshot = render_config(cfg)
    (out / SNAPSHOT).write_text(snapshot)
    manifest = {
        "command": command,
        "version": __version__,
        "config_hash": config_hash(cfg.to_dict()),
        "outputs": sorted(outputs),
    }
    manifest.update(extra or {})
    write_json(out / f"{command}.manifest.json", manifest)
    print(json.dumps({"command": command, "out": str(out), "outputs": sorted(outputs)}))


def _model_from_checkpoint(path):
    params, manifest = load_checkpoint(path)
    enc = dict(manifest["config"]["encoder"])
    for key in ("conv_channels", "conv_kernels", "conv_strides"):
        enc[key] = tuple(enc[key])
    model = CoherentClassifier(EncoderConfig(**enc), manifest["n_classes"])
    model.load_state_dict(params)
    return model, manifest


def _bundle_record(bundle):
    return {
        "interval_id": int(bundle.interval_id),
        "p_hat": bundle.p_hat.tolist(),
        "p_tilde": bundle.p_tilde.tolist(),
        "p_bar": bundle.p_bar.tolist(),
        "y_hat": bundle.labels.tolist(),
        "tanh_params": [p.as_list() for p in bundle.tanh_params],
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_gen(args, cfg):
    out = _out_dir(args, "gen")
    intervals = generate_mvd(cfg.generator.validate(), cfg.data_seed)
    write_intervals(out / "dataset.jsonl", intervals)
    _finish(out, cfg, "gen", ["dataset.jsonl"], {"n_recordings": len(intervals),
                                                 "seed": cfg.data_seed})


def cmd_disturb(args, cfg):
    src = _require(args.input, "--input")
    out = _out_dir(args, "disturb")
    intervals = read_intervals(src)
    disturbed = disturb_dataset(intervals, cfg.disturbance)
    write_intervals(out / "dataset.jsonl", disturbed)
    n_changed = int(sum((a.labels != b.labels).sum() for a, b in zip(intervals, disturbed)))
    _finish(out, cfg, "disturb", ["dataset.jsonl"], {"input": str(src), "changed_points": n_changed})


def cmd_segment(args, cfg):
    src = _require(args.input, "--input")
    out = _out_dir(args, "segment")
    intervals = read_intervals(src)
    plan = make_splits(sorted({iv.group_id for iv in intervals}), cfg.scheme)
    if not 0 <= cfg.fold < len(plan.folds):
        raise ConfigError(f"fold {cfg.fold} out of range 0..{len(plan.folds) - 1}", "experiment.fold")
    fold = plan.folds[cfg.fold]
    pools = build_pools(intervals, fold, cfg.pools, cfg.data_seed)
    names = []
    for name, seqs in zip(("train", "val", "test"), pools):
        write_segments(out / f"{name}.jsonl", seqs)
        names.append(f"{name}.jsonl")
    _finish(out, cfg, "segment", names, {
        "fold": dataclasses.asdict(fold), "counts": {n: len(s) for n, s in zip(("train", "val", "test"), pools)}})


def cmd_train(args, cfg):
    src = _require(args.input, "--input")
    out = _out_dir(args, "train")
    train_seqs = read_segments(src / "train.jsonl")
    val_path = src / "val.jsonl"
    val_seqs = read_segments(val_path) if val_path.exists() else []
    if not train_seqs:
        raise ConfigError("training pool is empty", str(src / "train.jsonl"))
    cfg.train.encoder.n_features = int(train_seqs[0].segments.shape[-1])
    cfg.train.encoder.window_len = int(train_seqs[0].window_len)
    n_classes = cfg.generator.n_classes
    result = train(cfg.train, train_seqs, val_seqs, n_classes, checkpoint_path=out / "checkpoint.zip")
    write_json(out / "train_log.json", result.log)
    write_json(out / "label_state.json", {"interval_id": [s.interval_id for s in train_seqs],
                                          "y0": result.state.y0, "y_cur": result.state.y_cur,
                                          "p_e": result.state.p_e})
    _finish(out, cfg, "train", ["checkpoint.zip", "train_log.json", "label_state.json"],
            {"input": str(src), "best_epoch": result.best_epoch, "best_val_macro_f1": result.best_val_f1})


def _eval_one(job):
    checkpoint, test_path, tol = job
    model, manifest = _model_from_checkpoint(checkpoint)
    seqs = read_segments(test_path)
    report, bundles = evaluate(model, seqs, manifest["n_classes"], tol=tol)
    return report.to_dict(), [_bundle_record(b) for b in bundles]


def cmd_eval(args, cfg):
    ckpts = args.checkpoint or []
    inputs = args.input_list or []
    if not ckpts:
        raise ConfigError("at least one --checkpoint is required", "--checkpoint")
    if len(ckpts) != len(inputs):
        raise ConfigError("give one --input per --checkpoint", "--input")
    jobs = [(str(_require(c, "--checkpoint")), str(_require(i, "--input")), args.tolerance)
            for c, i in zip(ckpts, inputs)]
    out = _out_dir(args, "eval")
    if len(jobs) > 1 and args.workers > 1:
        with ProcessPoolExecutor(max_workers=min(args.workers, len(jobs))) as pool:
            results = list(pool.map(_eval_one, jobs))
    else:
        results = [_eval_one(j) for j in jobs]
    outputs = []
    for k, (report, records) in enumerate(results):
        suffix = "" if len(jobs) == 1 else f"_{k}"
        write_json(out / f"metrics{suffix}.json", report)
        with open(out / f"predictions{suffix}.jsonl", "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        outputs += [f"metrics{suffix}.json", f"predictions{suffix}.jsonl"]
    write_json(out / "summary.json", summarize_reports([r for r, _ in results]))
    outputs.append("summary.json")
    _finish(out, cfg, "eval", outputs, {"checkpoints": ckpts, "inputs": inputs})


def cmd_harmonize_export(args, cfg):
    src = _require(args.input, "--input")
    segs = _require(args.segments, "--segments")
    out = _out_dir(args, "harmonize")
    with open(src / "label_state.json") as fh:
        state = json.load(fh)
    seqs = read_segments(segs / "train.jsonl")
    if len(seqs) != len(state["y_cur"]):
        raise ConfigError("segment file does not match the training run", str(segs / "train.jsonl"))
    with open(out / "harmonized.jsonl", "w") as fh:
        for s, y0, y in zip(seqs, state["y0"], state["y_cur"]):
            rec = {"interval_id": int(s.interval_id), "source_id": int(s.source_id), "start": int(s.start),
                   "disturbed": y0, "harmonized": y,
                   "clean": None if s.clean_seg_labels is None else s.clean_seg_labels.tolist()}
            fh.write(json.dumps(rec) + "\n")
    _finish(out, cfg, "harmonize-export", ["harmonized.jsonl"], {"input": str(src)})


def cmd_mi_demo(args, cfg):
    out = _out_dir(args, "mi-demo")
    table = {}
    for name, joint in example_joints().items():
        i_x, i_xa, gain = mi_gain(joint)
        table[name] = {"I_y_x": i_x, "I_y_x_ctx": i_xa, "gain": gain}
        print(f"{name:22s} I(y;x)={i_x:.6f}  I(y;x,ctx)={i_xa:.6f}  gain={gain:.6f}")
    write_json(out / "mi_table.json", table)
    _finish(out, cfg, "mi-demo", ["mi_table.json"])


COMMANDS = {
    "gen": cmd_gen,
    "disturb": cmd_disturb,
    "segment": cmd_segment,
    "train": cmd_train,
    "eval": cmd_eval,
    "harmonize-export": cmd_harmonize_export,
    "mi-demo": cmd_mi_demo,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat section.key = value file")
    common.add_argument("--seed", type=int, help="overrides data, disturbance and training seeds")
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/<command>)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="segharmony", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="generate synthetic recordings")
    p = sub.add_parser("disturb", parents=[common], help="relocate class boundaries")
    p.add_argument("--input", required=True, help="dataset.jsonl")
    p = sub.add_parser("segment", parents=[common], help="sample and segment fold pools")
    p.add_argument("--input", required=True, help="dataset.jsonl")
    p = sub.add_parser("train", parents=[common], help="train with label harmonization")
    p.add_argument("--input", required=True, help="directory written by segment")
    p = sub.add_parser("eval", parents=[common], help="score checkpoints on test pools")
    p.add_argument("--checkpoint", action="append")
    p.add_argument("--input", dest="input_list", action="append", help="test.jsonl, one per checkpoint")
    p.add_argument("--tolerance", type=int, default=2, help="change-point tolerance in segments")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p = sub.add_parser("harmonize-export", parents=[common], help="write harmonized training labels")
    p.add_argument("--input", required=True, help="directory written by train")
    p.add_argument("--segments", required=True, help="directory written by segment")
    sub.add_parser("mi-demo", parents=[common], help="context information-gain table")
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SegHarmonyError, OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

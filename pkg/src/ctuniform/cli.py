"""Command-line interface.

Subcommands cover the full workflow: synthesize phantoms, uniformize volumes
to a fixed shape, fit normalization statistics, train, evaluate, cross-
validate, count parameters, and run the method/preprocessing ablation grid.

Exit codes: 0 on success, 1 on runtime failures (missing or malformed files,
degenerate data), 2 on usage errors (bad flags or invalid combinations such
as --zero-center without --normalize).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, CtuniformError
from .evalkit import cross_validate, export_roc, make_report
from .fileio import write_nifti_fixture
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.model import ModelConfig, count_parameters
from .nn.train import TrainConfig, predict_scores, train
from .parallel import parallel_map
from .pipeline import (
    PreprocessPlan,
    WINDOW_FIXED,
    WINDOW_MINMAX,
    fit_plan_stats,
    load_dataset,
    load_manifest,
    load_volume,
    normalize_stack,
    plan_from_extra,
    plan_to_extra,
    uniformize_files,
    write_manifest,
)
from .preprocess import DEFAULT_HU_WINDOW, fit_stats, save_stats, zero_center
from .synthgen import SynthSpec, depth_localized_variant, generate_one
from .uniformize import Method, UniformizeSpec, uniformize


class UsageError(Exception):
    """Invalid flag combination or value; maps to exit code 2."""


def _parse_plane(text):
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise UsageError(f"plane must look like 128x128, got {text!r}")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError as exc:
        raise UsageError(f"plane must be two integers, got {text!r}") from exc


def _parse_range(text, kind=float):
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"range must look like LO:HI, got {text!r}")
    try:
        return (kind(parts[0]), kind(parts[1]))
    except ValueError as exc:
        raise UsageError(f"range bounds must be numbers, got {text!r}") from exc


def _parse_window(text):
    """Returns (mode, (lo, hi))."""
    if text == WINDOW_MINMAX:
        return WINDOW_MINMAX, DEFAULT_HU_WINDOW
    return WINDOW_FIXED, _parse_range(text)


def _parse_ints(text):
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _build_plan(args) -> PreprocessPlan:
    mode, window = _parse_window(args.hu_window)
    try:
        return PreprocessPlan(
            normalize=args.normalize,
            zero_center=args.zero_center,
            window_mode=mode,
            window=window,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _model_config(args, input_shape) -> ModelConfig:
    kwargs = {
        "input_shape": input_shape,
        "conv_filters": _parse_ints(args.filters),
        "fc_width": args.fc,
    }
    if args.dropout is not None:
        kwargs["dropout_rates"] = (args.dropout, args.dropout)
    return ModelConfig(**kwargs)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        lr=args.lr,
        momentum=args.momentum,
        batch_size=args.batch,
        epochs=args.epochs,
        seed=args.seed,
    )


def _prepare_features(stack, plan, stats=None):
    """Normalize and (when asked) zero-center; returns (features, stats)."""
    feats = normalize_stack(stack, plan)
    if plan.zero_center and stats is None:
        stats = fit_plan_stats(feats, plan)
    if plan.zero_center:
        feats = zero_center(feats, stats)
    return feats, stats


def cmd_synth(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(
        count=args.count,
        plane=_parse_plane(args.plane),
        depth_range=_parse_range(args.depth_range, int),
        tau=args.tau,
        positive_fraction=args.positive_fraction,
        seed=args.seed,
    )
    if args.depth_localized:
        spec = depth_localized_variant(spec, _parse_range(args.band))

    def one(index):
        sample = generate_one(spec, index)
        name = sample.volume.source_id + ".nii"
        write_nifti_fixture(sample.volume, out_dir / name)
        return (sample.volume.source_id, name, sample.label)

    entries = parallel_map(one, range(spec.count), args.threads)
    write_manifest(entries, out_dir / "manifest.csv")
    positives = sum(e[2] for e in entries)
    print(f"wrote {len(entries)} volumes ({positives} positive) to {out_dir}")
    return 0


def cmd_uniformize(args):
    spec = UniformizeSpec(
        method=Method(args.method),
        target_depth=args.depth,
        target_plane=_parse_plane(args.plane),
    )
    rows = load_manifest(args.manifest)
    manifest_path = uniformize_files(rows, spec, args.out, args.threads)
    print(f"wrote {len(rows)} tensors, manifest {manifest_path}")
    return 0


def cmd_stats(args):
    mode, window = _parse_window(args.hu_window)
    plan = PreprocessPlan(normalize=True, window_mode=mode, window=window)
    rows = load_manifest(args.manifest)
    _, stack, _ = load_dataset(rows, args.threads)
    normalized = normalize_stack(stack, plan)
    recorded = window if mode == WINDOW_FIXED else (0.0, 1.0)
    stats = fit_stats(list(normalized), hu_window=recorded)
    save_stats(stats, args.out)
    print(f"mean={stats.dataset_mean!r} over {stats.computed_over} volumes")
    return 0


def cmd_train(args):
    plan = _build_plan(args)
    rows = load_manifest(args.manifest)
    _, stack, labels = load_dataset(rows, args.threads)
    feats, stats = _prepare_features(stack, plan)
    model_config = _model_config(args, feats.shape[1:])
    train_config = _train_config(args)
    model, optimizer, history = train(feats, labels, model_config, train_config)
    save_checkpoint(args.out, model, optimizer, train_config, plan_to_extra(plan, stats))
    if args.history:
        lines = ["epoch,loss,acc"]
        lines.extend(f"{h.epoch},{h.loss!r},{h.acc!r}" for h in history)
        Path(args.history).write_text("\n".join(lines) + "\n", encoding="ascii")
    last = history[-1] if history else None
    if last is not None:
        print(f"trained {len(history)} epochs: loss={last.loss!r} acc={last.acc!r}")
    print(f"wrote checkpoint {args.out}")
    return 0


def cmd_eval(args):
    bundle = load_checkpoint(args.checkpoint)
    plan, stats = plan_from_extra(bundle.extra)
    rows = load_manifest(args.manifest)
    ids, stack, labels = load_dataset(rows, args.threads)
    feats, _ = _prepare_features(stack, plan, stats)
    scores = predict_scores(bundle.model, feats, batch_size=args.batch)
    report = make_report(ids, scores, labels)
    lines = ["id,score,label"]
    lines.extend(f"{s.id},{s.score!r},{s.label}" for s in report.samples)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    if args.roc:
        export_roc(scores, labels, args.roc)
    print(f"auc={report.auc!r} acc={report.acc!r} n={len(report.samples)}")
    return 0


def _uniformize_rows(rows, spec, threads):
    def one(row):
        vol = load_volume(row.path)
        if row.path.suffix == ".vol1":
            expected = spec.target_plane + (spec.target_depth,)
            if vol.shape != expected:
                raise ConfigError(
                    f"{row.path}: pre-uniformized shape {vol.shape} != target {expected}"
                )
            return vol.data
        return uniformize(vol, spec).tensor

    return parallel_map(one, rows, threads)


def cmd_crossval(args):
    plan = _build_plan(args)
    spec = UniformizeSpec(
        method=Method(args.method),
        target_depth=args.depth,
        target_plane=_parse_plane(args.plane),
    )
    rows = load_manifest(args.manifest)
    tensors = _uniformize_rows(rows, spec, args.threads)
    labels = np.array([r.label for r in rows], dtype=np.int64)
    model_config = _model_config(args, tensors[0].shape)
    train_config = _train_config(args)

    def pipeline(train_payloads, train_labels, test_payloads, rng):
        feats, stats = _prepare_features(np.stack(train_payloads), plan)
        per_trial = replace(train_config, seed=int(rng.integers(2 ** 31)))
        model, _, _ = train(feats, train_labels, model_config, per_trial)
        test_feats, _ = _prepare_features(np.stack(test_payloads), plan, stats)
        return predict_scores(model, test_feats)

    summary = cross_validate(
        tensors, labels, pipeline,
        trials=args.trials, train_fraction=args.train_fraction, seed=args.seed,
    )
    lines = ["trial,auc,acc"]
    lines.extend(f"{t.trial},{t.auc!r},{t.acc!r}" for t in summary.trials)
    lines.append(f"mean,{summary.mean_auc!r},{summary.mean_acc!r}")
    lines.append(f"std,{summary.std_auc!r},{summary.std_acc!r}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    print(
        f"auc={summary.mean_auc!r} (std {summary.std_auc!r}) "
        f"acc={summary.mean_acc!r} (std {summary.std_acc!r}) over {args.trials} trials"
    )
    return 0


def cmd_params(args):
    config = ModelConfig(
        input_shape=tuple(int(e) for e in args.input_shape.lower().split("x")),
        conv_filters=_parse_ints(args.filters),
        fc_width=args.fc,
        classes=args.classes,
    )
    print(count_parameters(config))
    return 0


def cmd_ablate(args):
    rows = load_manifest(args.manifest)
    labels = np.array([r.label for r in rows], dtype=np.int64)
    if args.test_manifest:
        test_rows = load_manifest(args.test_manifest)
        train_rows = rows
    else:
        rng = np.random.default_rng([args.seed])
        perm = rng.permutation(len(rows))
        n_train = int(args.train_fraction * len(rows))
        if n_train < 1 or n_train >= len(rows):
            raise UsageError(f"train fraction {args.train_fraction} leaves an empty fold")
        train_rows = [rows[i] for i in perm[:n_train]]
        test_rows = [rows[i] for i in perm[n_train:]]
    test_labels = np.array([r.label for r in test_rows], dtype=np.int64)
    train_labels = np.array([r.label for r in train_rows], dtype=np.int64)

    mode, window = _parse_window(args.hu_window)
    combos = [(False, False), (True, False), (True, True)]
    lines = ["method,normalize,zero_center,auc,acc"]
    summary = []
    for method in (Method.SSS, Method.ESS, Method.SIZ):
        spec = UniformizeSpec(method, args.depth, _parse_plane(args.plane))
        train_tensors = np.stack(_uniformize_rows(train_rows, spec, args.threads))
        test_tensors = np.stack(_uniformize_rows(test_rows, spec, args.threads))
        model_config = _model_config(args, train_tensors.shape[1:])
        train_config = _train_config(args)
        for do_norm, do_zc in combos:
            plan = PreprocessPlan(do_norm, do_zc, mode, window)
            feats, stats = _prepare_features(train_tensors, plan)
            model, _, _ = train(feats, train_labels, model_config, train_config)
            test_feats, _ = _prepare_features(test_tensors, plan, stats)
            scores = predict_scores(model, test_feats)
            report = make_report([r.id for r in test_rows], scores, test_labels)
            lines.append(
                f"{method.value},{int(do_norm)},{int(do_zc)},{report.auc!r},{report.acc!r}"
            )
            summary.append((method.value, do_norm, do_zc, report.auc))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    best = max(summary, key=lambda s: s[3])
    print(f"best auc={best[3]!r} ({best[0]}, normalize={best[1]}, zero_center={best[2]})")
    return 0


def _add_common_model_flags(p):
    p.add_argument("--filters", default="64,64,128,256", help="conv filters per stage")
    p.add_argument("--fc", type=int, default=512, help="hidden dense width")
    p.add_argument("--dropout", type=float, default=None, help="rate for both dropout layers")
    p.add_argument("--lr", type=float, default=1e-6)
    p.add_argument("--momentum", type=float, default=0.99)
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--epochs", type=int, default=1)


def _add_preprocess_flags(p):
    p.add_argument("--normalize", action="store_true", help="window HU to [0, 1]")
    p.add_argument("--zero-center", action="store_true", help="subtract the training mean")
    p.add_argument(
        "--hu-window", default="-1000:400",
        help="LO:HI clamp window, or 'minmax' for per-volume scaling",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ctuniform",
        description="Uniformize variable-depth CT volumes and train a 3-D classifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic phantom volumes")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--plane", default="64x64")
    p.add_argument("--depth-range", default="50:400")
    p.add_argument("--tau", type=float, default=1e-4)
    p.add_argument("--positive-fraction", type=float, default=0.5)
    p.add_argument("--depth-localized", action="store_true",
                   help="confine positive lesions to a depth band")
    p.add_argument("--band", default="0.35:0.45")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("uniformize", help="resample volumes to a fixed shape")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--plane", default="128x128")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_uniformize)

    p = sub.add_parser("stats", help="fit normalization statistics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--hu-window", default="-1000:400")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="stats file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train the classifier")
    p.add_argument("--manifest", required=True)
    _add_preprocess_flags(p)
    _add_common_model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--history", default=None, help="per-epoch CSV")
    p.add_argument("--out", required=True, help="checkpoint file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a manifest with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--roc", default=None, help="optional ROC CSV")
    p.add_argument("--out", required=True, help="report CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crossval", help="repeated random-split evaluation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--plane", default="128x128")
    _add_preprocess_flags(p)
    _add_common_model_flags(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="summary CSV")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("params", help="count trainable parameters")
    p.add_argument("--input-shape", default="128x128x64")
    p.add_argument("--filters", default="64,64,128,256")
    p.add_argument("--fc", type=int, default=512)
    p.add_argument("--classes", type=int, default=2)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("ablate", help="method x preprocessing grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--test-manifest", default=None)
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--plane", default="128x128")
    _add_preprocess_flags(p)
    _add_common_model_flags(p)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="grid CSV")
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CtuniformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

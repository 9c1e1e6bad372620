"""Command-line interface.

Commands: `train` (fit a model from a config, persist it, report),
`eval` (score a saved model on a test file), `bench` (train the
divide-and-conquer pipeline and an undecomposed baseline on identical
splits and report the error reduction), `inspect` (dump decomposition
diagnostics from a saved file).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

import argparse
import os
import sys
import time

import numpy as np

from .config import config_echo, load_config
from .dataio import apply_feature_scale, load_libsvm, max_abs_scale, split
from .errors import ConfigError, DataError, FeatdcError, NumericError
from .fuse import LearnerSpec, evaluate, predict_dc, train_dc, train_learner
from .persist import load_dc_model, load_model_file, save_dc_model
from .report import build_report, format_report, write_report


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="featdc",
        description="divide-and-conquer classification by feature-space "
                    "decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="config file (JSON)")
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for local training")
        p.add_argument("--out", default=None, help="output directory")

    common(sub.add_parser("train", help="train and persist a model"))
    pe = sub.add_parser("eval", help="evaluate a saved model on a test file")
    pe.add_argument("--model", required=True, help="saved model file")
    pe.add_argument("--test", required=True, help="test data (libsvm text)")
    common(pe, config=False)
    common(sub.add_parser("bench", help="pipeline vs. undecomposed baseline"))
    pi = sub.add_parser("inspect", help="dump decomposition diagnostics")
    pi.add_argument("--model", required=True, help="saved model or "
                                                   "decomposition file")
    return parser


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        cfg.threads = args.threads
    if args.out is not None:
        cfg.out_dir = args.out


def _prepare_data(cfg):
    """Parse the training file; scale and split per config. Returns
    (train, test_or_none, parse_seconds, scale_or_none)."""
    t0 = time.perf_counter()
    train = load_libsvm(cfg.train_path, n_features=cfg.n_features_override,
                        positive_label=cfg.positive_label)
    test = None
    if cfg.test_path is not None:
        n_feat = max(train.n_features, cfg.n_features_override or 1)
        test = load_libsvm(cfg.test_path, n_features=n_feat,
                           positive_label=cfg.positive_label)
    parse_s = time.perf_counter() - t0
    scale = None
    if cfg.scale_features:
        train, scale = max_abs_scale(train)
        if test is not None:
            test = apply_feature_scale(test, scale)
    if test is None and cfg.split is not None:
        train, test = split(train, cfg.split)
    return train, test, parse_s, scale


def _snapshot(cfg, scale):
    snap = config_echo(cfg)
    if scale is not None:
        snap["feature_scale"] = [v.hex() for v in scale.tolist()]
    return snap


def _train_model(cfg, train):
    return train_dc(
        train,
        cfg.plan_triples(),
        local=cfg.local,
        global_=cfg.global_,
        seed=cfg.seed,
        threads=cfg.threads,
        guards=cfg.guards,
        crossfit=cfg.crossfit_fusion,
        dca_ridge=cfg.dca_ridge,
    )


def cmd_train(args):
    t_start = time.perf_counter()
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    train, test, parse_s, scale = _prepare_data(cfg)

    model = _train_model(cfg, train)
    model.config_snapshot.update(_snapshot(cfg, scale))

    timings = {"parse": parse_s}
    timings.update(model.fit_timings)

    metrics = None
    t0 = time.perf_counter()
    if test is not None:
        labels, _ = predict_dc(model, test, threads=cfg.threads)
        metrics = evaluate(labels, test.y)
    timings["prediction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    os.makedirs(cfg.out_dir, exist_ok=True)
    model_path = os.path.join(cfg.out_dir, "model.json")
    save_dc_model(model, model_path)
    report = build_report("train", cfg.seed, timings, config_echo(cfg),
                          metrics, artifacts={"model": model_path})
    timings["persist"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start
    report["timings_s"] = {k: float(v) for k, v in timings.items()}

    path = write_report(report, cfg.out_dir, "train_report.json")
    print(format_report(report))
    print(f"model written to {model_path}")
    print(f"report written to {path}")
    return 0


def cmd_eval(args):
    t_start = time.perf_counter()
    model = load_dc_model(args.model)
    snap = model.config_snapshot or {}
    threads = args.threads or snap.get("threads") or 1

    t0 = time.perf_counter()
    test = load_libsvm(
        args.test,
        n_features=model.decomposition.n_features_in,
        positive_label=snap.get("positive_label"),
    )
    if "feature_scale" in snap:
        scale = np.array([float.fromhex(s) for s in snap["feature_scale"]])
        test = apply_feature_scale(test, scale)
    parse_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    labels, _ = predict_dc(model, test, threads=threads)
    metrics = evaluate(labels, test.y)
    predict_s = time.perf_counter() - t0

    timings = {"parse": parse_s, "prediction": predict_s,
               "total": time.perf_counter() - t_start}
    report = build_report("eval", snap.get("seed", 0), timings,
                          snap, metrics, artifacts={"model": args.model})
    out_dir = args.out or "."
    path = write_report(report, out_dir, "eval_report.json")
    print(format_report(report))
    print(f"error rate: {metrics['error_rate_pct']:.2f}")
    print(f"report written to {path}")
    return 0


def cmd_bench(args):
    t_start = time.perf_counter()
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    train, test, parse_s, scale = _prepare_data(cfg)
    if test is None:
        raise ConfigError("bench needs test data: give test_path or split")

    model = _train_model(cfg, train)
    model.config_snapshot.update(_snapshot(cfg, scale))
    timings = {"parse": parse_s}
    timings.update(model.fit_timings)

    t0 = time.perf_counter()
    labels, _ = predict_dc(model, test, threads=cfg.threads)
    dc_metrics = evaluate(labels, test.y)
    timings["prediction"] = time.perf_counter() - t0

    baseline_spec = LearnerSpec(type=cfg.baseline, lam=cfg.global_.lam,
                                sigma=cfg.global_.sigma, p=cfg.global_.p)
    t0 = time.perf_counter()
    baseline, reduction = None, None
    try:
        base_model = train_learner(baseline_spec, train.X,
                                   train.y.astype(np.float64), cfg.guards,
                                   cfg.seed)
        base_labels = base_model.predict(test.X)
        baseline = evaluate(base_labels, test.y)
        err_b, err_dc = baseline["error_rate_pct"], dc_metrics["error_rate_pct"]
        reduction = 0.0 if err_b == 0.0 else 100.0 * (err_b - err_dc) / err_b
    except ConfigError as exc:
        baseline = {"skipped": True, "reason": str(exc)}
    timings["baseline"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    os.makedirs(cfg.out_dir, exist_ok=True)
    model_path = os.path.join(cfg.out_dir, "model.json")
    save_dc_model(model, model_path)
    report = build_report(
        "bench", cfg.seed, timings, config_echo(cfg), dc_metrics,
        artifacts={"model": model_path},
        extra={"baseline": baseline, "reduction": reduction},
    )
    timings["persist"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start
    report["timings_s"] = {k: float(v) for k, v in timings.items()}

    path = write_report(report, cfg.out_dir, "bench_report.json")
    print(format_report(report))
    if reduction is not None:
        print(f"error reduction over baseline: {reduction:.2f}%")
    else:
        print(f"baseline skipped: {baseline['reason']}")
    print(f"report written to {path}")
    return 0


def _spectrum_line(values, limit=8):
    vals = np.asarray(values)
    shown = ", ".join(f"{v:.6g}" for v in vals[:limit])
    if vals.size > limit:
        shown += f", ... ({vals.size} total, min {vals.min():.6g})"
    return shown


def cmd_inspect(args):
    kind, obj = load_model_file(args.model)
    comp = obj if kind == "decomposition" else obj.decomposition
    print(f"kind: {kind}")
    print(f"features in: {comp.n_features_in}   subspaces h: {comp.h}")
    for k, part in enumerate(comp.parts):
        print(f"part {k}: {part.method}  "
              f"{part.n_features_in} -> {part.n_features_out} features, "
              f"{part.n_subspaces} groups of "
              f"{[len(g) for g in part.index_groups][0]}")
        if part.eigenvalues is not None:
            print(f"  eigenvalues: {_spectrum_line(part.eigenvalues)}")
        for name, value in part.fit_stats.items():
            print(f"  {name}: {value:.6g}")
    if kind == "dc_model":
        locals_desc = {}
        for m in obj.locals:
            key = type(m).__name__
            locals_desc[key] = locals_desc.get(key, 0) + 1
        print(f"locals: " + ", ".join(f"{n} x {t}" for t, n
                                      in sorted(locals_desc.items())))
        g = obj.global_model
        print(f"global: {type(g).__name__} on {obj.h} fused inputs")
        print(f"fusion row shift range: [{obj.r_shift.min():.6g}, "
              f"{obj.r_shift.max():.6g}]")
        print(f"fusion row scale range: [{obj.r_scale.min():.6g}, "
              f"{obj.r_scale.max():.6g}]")
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"train": cmd_train, "eval": cmd_eval, "bench": cmd_bench,
                "inspect": cmd_inspect}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except FeatdcError as exc:  # base-class fallback
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

One executable, eight subcommands: ``ingest`` (benchmark text to canonical
day files), ``synth`` (generate synthetic days), ``label`` (attach smoothed
labels to canonical days), ``train``, ``evaluate`` (setup 1 / setup 2 /
rolling), ``backtest``, ``explain`` and ``bench``.

Commands talk to each other only through the on-disk formats; every command
writes a manifest (config hash, package version, seed, argv) into its output
directory so a run can be reproduced exactly.

Exit codes: 0 success, 2 usage, 3 configuration error, 4 data/path error,
5 runtime failure.

The environment variable ``LOBNET_THREADS`` caps BLAS/OpenMP threads; it is
applied before numpy is first imported, which is why this module defers all
heavy imports into the handlers.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

logger = logging.getLogger("lobnet")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_RUNTIME = 5

_EPILOG = """\
exit codes:
  0  success
  2  usage error (unknown flag or subcommand)
  3  configuration error (missing/invalid config or paths in it)
  4  data error (missing or malformed input files)
  5  runtime failure (e.g. diverged training, corrupt checkpoint)

environment:
  LOBNET_THREADS   cap BLAS/OpenMP thread count (applied before numpy loads)
"""


def _configure_threads() -> None:
    threads = os.environ.get("LOBNET_THREADS")
    if threads:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="run configuration file (YAML)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--horizon", type=int, default=None, help="restrict to one prediction horizon")
    p.add_argument("--alpha", type=float, default=None, help="labelling threshold override")
    p.add_argument(
        "--method", choices=("future-mean", "bilateral-mean"), default=None,
        help="labelling method override",
    )
    p.add_argument("--setup", choices=("1", "2", "rolling"), default=None,
                   help="evaluation protocol override")
    p.add_argument("--data", type=Path, default=None, help="dataset path override")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lobnet",
        description="Order-book price-movement prediction pipeline",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, doc in (
        ("ingest", cmd_ingest, "convert benchmark text matrices to canonical day files"),
        ("synth", cmd_synth, "generate a synthetic dataset into canonical day files"),
        ("label", cmd_label, "compute smoothed labels for canonical day files"),
        ("train", cmd_train, "train one model per horizon on the configured split"),
        ("evaluate", cmd_evaluate, "run a full train+test protocol and report metrics"),
        ("backtest", cmd_backtest, "trade a trained model over the test days"),
        ("explain", cmd_explain, "perturbation explanation of one window's prediction"),
        ("bench", cmd_bench, "forward-pass latency benchmark"),
    ):
        p = sub.add_parser(name, help=doc, description=doc)
        _add_common(p)
        if name in ("backtest", "explain"):
            p.add_argument("--checkpoint", type=Path, default=None,
                           help="checkpoint file (default: <out>/checkpoint.lobc from train)")
        if name == "explain":
            p.add_argument("--day", type=int, default=None, help="day index to explain")
            p.add_argument("--anchor", type=int, default=None, help="window anchor within the day")
        p.set_defaults(func=func)
    return parser


def _load_config(args):
    from .config import RunConfig

    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if args.alpha is not None:
        overrides["labels.alpha"] = args.alpha
    if args.method is not None:
        overrides["labels.method"] = args.method
    if args.horizon is not None:
        overrides["labels.horizons"] = [args.horizon]
    if args.setup is not None:
        overrides["dataset.setup"] = args.setup if args.setup == "rolling" else int(args.setup)
    if args.data is not None:
        overrides["dataset.path"] = str(args.data)
    return RunConfig.load(args.config, overrides)


def _dataset_path(cfg, must_exist: bool = True) -> Path:
    from .errors import ConfigError

    path = cfg["dataset"]["path"]
    if path is None:
        raise ConfigError("dataset.path is not configured")
    path = Path(path)
    if must_exist and not path.exists():
        raise ConfigError(f"dataset path {path} does not exist")
    return path


def _load_raw_days(cfg):
    """Days as stored on disk (or freshly generated for kind=synth)."""
    from .data import load_days, read_days, synth_generate
    from .errors import ConfigError

    kind = cfg["dataset"]["kind"]
    if kind == "synth":
        return synth_generate(cfg.generator_config(), cfg.seed)
    path = _dataset_path(cfg)
    if kind == "fi2010":
        return load_days(path)
    if kind == "canonical":
        return read_days(path)
    raise ConfigError(f"unknown dataset.kind {kind!r}")


def _alpha_map(cfg, horizons, train_days):
    """Per-horizon thresholds; tercile-tuned on the given days when not set."""
    from .data import tercile_alpha

    method = cfg["labels"]["method"]
    past = cfg["labels"]["past_window"]
    out = {}
    for k in horizons:
        alpha = cfg.alpha_for(k)
        if alpha is None:
            alpha = tercile_alpha([d.mids for d in train_days], k, method=method, past_window=past)
            logger.info("horizon %d: tercile-tuned alpha = %.3g", k, alpha)
        out[k] = alpha
    return out


def _attach_labels(cfg, days, horizons, alpha_by_k):
    from .data import smooth_labels

    method = cfg["labels"]["method"]
    past = cfg["labels"]["past_window"]
    for day in days:
        for k in horizons:
            if k not in day.labels:
                day.labels[k] = smooth_labels(day.mids, k, alpha_by_k[k], method=method, past_window=past)


def _prepared_splits(cfg):
    """Load, normalise, label and split according to the configured protocol."""
    from .data import DatasetSplits, rolling_zscore, split_days
    from .errors import ConfigError

    days = _load_raw_days(cfg)
    setup = cfg["dataset"]["setup"]
    horizons = [int(k) for k in cfg["labels"]["horizons"]]
    if cfg.should_normalize():
        days, _ = rolling_zscore(days, lookback=int(cfg["dataset"]["lookback"]))
    if setup == "rolling":
        n = len(days)
        n_train = max(int(round(n * float(cfg["dataset"]["train_frac"]))), 1)
        n_val = max(int(round(n * float(cfg["dataset"]["val_frac"]))), 1)
        if n_train + n_val >= n:
            raise ConfigError("rolling split leaves no test days")
        splits = DatasetSplits(
            train=days[:n_train], val=days[n_train : n_train + n_val],
            test=days[n_train + n_val :],
        )
    else:
        splits = split_days(days, setup=int(setup), fold=int(cfg["dataset"]["fold"]),
                            val_fraction=float(cfg["dataset"]["val_fraction"]))
    needs_labels = [
        k for k in horizons
        if any(k not in d.labels for d in splits.train + splits.val + splits.test)
    ]
    if needs_labels:
        alpha_by_k = _alpha_map(cfg, needs_labels, splits.train)
        _attach_labels(cfg, splits.train + splits.val + splits.test, needs_labels, alpha_by_k)
    return splits, horizons


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    from .config import write_manifest
    from .data import load_days, write_days

    cfg = _load_config(args)
    days = load_days(_dataset_path(cfg))
    out = cfg.out_dir
    paths = write_days(out, days)
    write_manifest(out, cfg, "ingest", sys.argv[1:])
    print(f"ingested {len(paths)} days into {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .config import write_manifest
    from .data import synth_generate, write_days

    cfg = _load_config(args)
    days = synth_generate(cfg.generator_config(), cfg.seed)
    out = cfg.out_dir
    paths = write_days(out, days)
    write_manifest(out, cfg, "synth", sys.argv[1:])
    print(f"generated {len(paths)} days into {out}")
    return EXIT_OK


def cmd_label(args) -> int:
    from .config import write_manifest
    from .data import read_days, write_days

    cfg = _load_config(args)
    days = read_days(_dataset_path(cfg))
    horizons = [int(k) for k in cfg["labels"]["horizons"]]
    train_frac = float(cfg["dataset"]["train_frac"])
    n_ref = max(int(round(len(days) * train_frac)), 1)
    alpha_by_k = _alpha_map(cfg, horizons, days[:n_ref])
    _attach_labels(cfg, days, horizons, alpha_by_k)
    out = cfg.out_dir
    write_days(out, days)
    write_manifest(out, cfg, "label", sys.argv[1:])
    print(f"labelled {len(days)} days for horizons {horizons} into {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .config import write_manifest
    from .data import ConcatWindows, make_windows
    from .model import build, parameter_count
    from .train import ClassifierData, train

    cfg = _load_config(args)
    splits, horizons = _prepared_splits(cfg)
    model_cfg = cfg.model_config()
    schedule = cfg.train_schedule()
    stride = int(cfg["train"]["train_stride"])
    out = cfg.out_dir
    for k in horizons:
        train_ws = ConcatWindows([make_windows(d, [k]) for d in splits.train])
        if stride > 1:
            train_ws = train_ws.subsample(stride)
        val_ws = ConcatWindows([make_windows(d, [k]) for d in splits.val]) if splits.val else None
        params = build(model_cfg, seed=cfg.seed)
        logger.info("horizon %d: %d train windows, %d parameters",
                    k, len(train_ws), parameter_count(params))
        run_dir = out / f"h{k}"
        val_data = ClassifierData(val_ws, k) if val_ws is not None and len(val_ws) else None
        result = train(params, ClassifierData(train_ws, k), val_data, schedule, model_cfg, out_dir=run_dir)
        print(
            f"horizon {k}: best epoch {result.best_epoch}, "
            f"val_acc {result.best_val_acc:.4f} ({result.stop_reason}); run dir {run_dir}"
        )
    write_manifest(out, cfg, "train", sys.argv[1:])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .config import write_manifest
    from .data import load_days
    from .evaluation import (
        default_trainer, format_report_table, run_rolling, run_setup1, run_setup2,
        write_confusion_csv, write_report_csv, write_report_json,
    )

    cfg = _load_config(args)
    setup = cfg["dataset"]["setup"]
    horizons = [int(k) for k in cfg["labels"]["horizons"]]
    model_cfg = cfg.model_config()
    trainer = default_trainer(model_cfg, cfg.train_schedule(), build_seed=cfg.seed)
    stride = int(cfg["train"]["train_stride"])
    out = cfg.out_dir

    if setup == "rolling":
        days = _load_raw_days(cfg)
        k_alpha = {k: cfg.alpha_for(k) for k in horizons}
        k_alpha = {k: v for k, v in k_alpha.items() if v is not None}
        outcomes = run_rolling(
            days, horizons, trainer, k_alpha=k_alpha,
            method=cfg["labels"]["method"], past_window=cfg["labels"]["past_window"],
            lookback=int(cfg["dataset"]["lookback"]),
            train_frac=float(cfg["dataset"]["train_frac"]),
            val_frac=float(cfg["dataset"]["val_frac"]), train_stride=stride,
        )
    else:
        days = load_days(_dataset_path(cfg)) if cfg["dataset"]["kind"] == "fi2010" else None
        if days is None:
            splits, _ = _prepared_splits(cfg)
            days = splits.train + splits.val + splits.test
        if int(setup) == 1:
            results = run_setup1(days, horizons, trainer,
                                 val_fraction=float(cfg["dataset"]["val_fraction"]),
                                 train_stride=stride)
            out.mkdir(parents=True, exist_ok=True)
            outcomes = {}
            for k, res in results.items():
                outcomes[k] = res["folds"][-1]
                print(f"horizon {k}: mean over {len(res['folds'])} folds -> "
                      f"acc {100 * res['mean'].accuracy:.2f}% f1 {100 * res['mean'].f1:.2f}%")
            write_report_json(out / "setup1_report.json",
                              {k: res["folds"][-1] for k, res in results.items()})
        else:
            outcomes = run_setup2(days, horizons, trainer,
                                  val_fraction=float(cfg["dataset"]["val_fraction"]),
                                  train_stride=stride)

    out.mkdir(parents=True, exist_ok=True)
    print(format_report_table(outcomes))
    write_report_json(out / "report.json", outcomes)
    write_report_csv(out / "report.csv", outcomes)
    for k, outcome in outcomes.items():
        write_confusion_csv(out / f"confusion_h{k}.csv", outcome.confusion)
        write_confusion_csv(out / f"confusion_h{k}_pct.csv", outcome.confusion, normalised=True)
    write_manifest(out, cfg, "evaluate", sys.argv[1:])
    return EXIT_OK


def _load_params(args, cfg, model_cfg):
    from .checkpoint import load_checkpoint
    from .errors import ConfigError

    path = args.checkpoint
    if path is None:
        horizons = cfg["labels"]["horizons"]
        path = cfg.out_dir / f"h{int(horizons[0])}" / "checkpoint.lobc"
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint {path} does not exist (train first, or pass --checkpoint)")
    return load_checkpoint(path).params


def cmd_backtest(args) -> int:
    import numpy as np

    from .config import write_manifest
    from .data import make_windows
    from .model import predict_proba
    from .trading import (
        merge_ledgers, signals_from_probs, simulate, t_statistic,
        write_cumulative_csv, write_daily_csv, write_ledger_csv,
    )

    cfg = _load_config(args)
    model_cfg = cfg.model_config()
    params = _load_params(args, cfg, model_cfg)
    splits, horizons = _prepared_splits(cfg)
    mu = float(cfg["trading"]["mu"])
    delay = int(cfg["trading"]["delay"])
    close_only = bool(cfg["trading"]["close_only"])

    ledgers = []
    for day in splits.test:
        ws = make_windows(day, [])  # every full window, labels not required
        if not len(ws):
            continue
        probs = predict_proba(params, ws.inputs(np.arange(len(ws)))[:, None, :, :], model_cfg)
        signals = signals_from_probs(probs, anchors=ws.anchors)
        ledgers.append(simulate(day.mids, signals, day=day.day_id, mu=mu, delay=delay,
                                close_only=close_only))
    ledger = merge_ledgers(ledgers)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_ledger_csv(out / "trades.csv", ledger)
    write_daily_csv(out / "daily.csv", ledger)
    write_cumulative_csv(out / "cumulative.csv", ledger)
    days_with_trades = sum(1 for d in ledger.daily if d.n_trades)
    t_stat = t_statistic(ledger) if days_with_trades >= 2 else float("nan")
    print(f"days {len(ledger.daily)}, trades {len(ledger.trades)}, "
          f"total profit {ledger.total_profit:.4f}, t-statistic {t_stat:.3f}")
    write_manifest(out, cfg, "backtest", sys.argv[1:])
    return EXIT_OK


def cmd_explain(args) -> int:
    import numpy as np

    from .config import write_manifest
    from .data import make_windows
    from .errors import ConfigError
    from .explain import explain, write_attribution_csv, write_heatmap_ppm
    from .model import predict_proba

    cfg = _load_config(args)
    model_cfg = cfg.model_config()
    params = _load_params(args, cfg, model_cfg)
    splits, _ = _prepared_splits(cfg)
    days = splits.test or splits.train
    day_index = args.day if args.day is not None else int(cfg["explain"]["day_index"])
    if not 0 <= day_index < len(days):
        raise ConfigError(f"day index {day_index} out of range ({len(days)} test days)")
    day = days[day_index]
    ws = make_windows(day, [])
    if not len(ws):
        raise ConfigError(f"day {day.day_id} is too short for a window")
    anchor = args.anchor if args.anchor is not None else cfg["explain"]["anchor"]
    anchors = list(ws.anchors)
    if anchor is None:
        pos = len(anchors) - 1
    else:
        if int(anchor) not in anchors:
            raise ConfigError(f"anchor {anchor} has no full window in day {day.day_id}")
        pos = anchors.index(int(anchor))
    window = ws.inputs(np.asarray([pos]))[0]

    predict_fn = lambda xb: predict_proba(params, xb, model_cfg)  # noqa: E731
    target = cfg["explain"]["target_class"]
    if target is None:
        target = int(predict_fn(window[None, None, :, :]).argmax(axis=1)[0])
    expl = explain(predict_fn, window, target_class=int(target),
                   n_samples=int(cfg["explain"]["n_samples"]), seed=cfg.seed)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_attribution_csv(out / "attribution.csv", expl)
    write_heatmap_ppm(out / "heatmap.ppm", expl)
    print(f"explained day {day.day_id} anchor {anchors[pos]} class {target - 1} "
          f"(p={expl.full_probability:.3f}, local R2 {expl.r2:.3f})")
    print(f"top supportive tiles: {expl.top_positive[:3]}")
    print(f"top opposing tiles:   {expl.top_negative[:3]}")
    write_manifest(out, cfg, "explain", sys.argv[1:])
    return EXIT_OK


def cmd_bench(args) -> int:
    import json

    from .config import write_manifest
    from .evaluation import bench_forward
    from .model import build

    cfg = _load_config(args)
    model_cfg = cfg.model_config()
    params = build(model_cfg, seed=cfg.seed)
    report = bench_forward(
        params, model_cfg,
        batch_sizes=tuple(int(b) for b in cfg["bench"]["batch_sizes"]),
        repeats=int(cfg["bench"]["repeats"]),
    )
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    print(f"parameters: {report['parameter_count']}")
    for row in report["timings"]:
        print(f"batch {row['batch_size']:>4}: median {row['median_ms']:.3f} ms, "
              f"p99 {row['p99_ms']:.3f} ms")
    write_manifest(out, cfg, "bench", sys.argv[1:])
    return EXIT_OK


def main(argv=None) -> int:
    _configure_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    from .errors import ConfigError, DataFormatError, LobnetError

    try:
        return args.func(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (DataFormatError, FileNotFoundError) as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except LobnetError as exc:
        logger.error("runtime error: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

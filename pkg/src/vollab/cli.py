"""Command-line driver.

Subcommands: generate, features, select, run, report, plot, vix.
Exit codes: 0 success, 1 usage, 2 data error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import RunConfig, load_config, manifest
from .creditvix import implied_variance, implied_vol, load_option_chain
from .errors import DataError, NumericError, UsageError, VollabError
from .features import engineer
from .frames import TimeSeriesFrame, align, generate_synthetic, load_csv, partition
from .grids import ParamState, enumerate_grid
from .report import write_report
from .plots import write_plots
from .selection import rf_importance, select_top_k
from .walkforward import ExperimentData, derive_seed, run_experiment, write_records_csv


def _load_frame(cfg: RunConfig) -> TimeSeriesFrame:
    if "synthetic" in cfg.data:
        spec = cfg.data["synthetic"]
        return generate_synthetic(
            seed=spec.get("seed", cfg.seed),
            n_days=spec.get("n_days", 600),
            n_series=spec.get("n_series", 3),
        )
    frames = [load_csv(p) for p in cfg.data["csv"]]
    return frames[0] if len(frames) == 1 else align(frames)


def _volume_columns(cfg: RunConfig, frame: TimeSeriesFrame) -> set:
    if cfg.volume_columns is not None:
        return set(cfg.volume_columns)
    return {n for n in frame.names if n.startswith("volume")}


def _prepare(cfg: RunConfig) -> ExperimentData:
    frame = _load_frame(cfg)
    span = cfg.partition_spec("span")
    if span is not None:
        frame = partition(frame, span)
    if cfg.target_column not in frame.names:
        raise DataError(f"target column {cfg.target_column!r} not in data")
    feature_frame = TimeSeriesFrame(
        frame.dates,
        {n: c for n, c in frame.columns.items() if n != cfg.target_column},
    )
    feats = engineer(feature_frame, _volume_columns(cfg, frame))
    levels = frame.column(cfg.target_column)[len(frame) - len(feats):]
    data = ExperimentData(feats.dates, levels, feats)
    if cfg.top_k is not None:
        data = _select_features(cfg, data)
    return data


def _select_features(cfg: RunConfig, data: ExperimentData) -> ExperimentData:
    from .features import log_diff

    diffs = log_diff(data.levels)
    sel = cfg.partition_spec("selection")
    if sel is not None:
        keep = [i for i, d in enumerate(data.dates[:-1]) if sel.start <= d <= sel.end]
    else:
        # default: the first half of the pre-test span, well before any test date
        cut = max(60, (len(data.dates) - cfg.horizon) // 2)
        keep = list(range(min(cut, len(data.dates) - 1)))
    X = data.features.select(data.features.names)  # copy
    sub = type(X)(tuple(X.dates[i] for i in keep), X.names, X.values[keep],
                  X.zero_variance)
    report = rf_importance(sub, diffs[keep], seed=derive_seed(cfg.seed, "select"))
    names = select_top_k(report, min(cfg.top_k, len(X.names)))
    return ExperimentData(data.dates, data.levels, data.features.select(names))


def _grid_for(cfg: RunConfig, kind: str):
    entries = cfg.grids.get(kind)
    if entries is None:
        return None
    full = enumerate_grid(kind)
    out = []
    for item in entries:
        if isinstance(item, int):
            if not 0 <= item < len(full):
                raise UsageError(
                    f"grid index {item} out of range for {kind} (size {len(full)})"
                )
            out.append(full[item])
        elif isinstance(item, str):
            out.append(ParamState.from_text(kind, item))
        else:
            raise UsageError(f"grid entries must be indexes or text states, got {item!r}")
    return out


def cmd_generate(args) -> int:
    frame = generate_synthetic(args.seed, args.days, args.series)
    frame.to_csv(args.out)
    print(f"wrote {len(frame)} days x {len(frame.names)} series to {args.out}")
    return 0


def cmd_features(args) -> int:
    cfg = load_config(args.config)
    data = _prepare(cfg)
    out = args.out or os.path.join(cfg.out, "features.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    data.features.to_csv(out)
    print(f"wrote {len(data.features)} rows x {len(data.features.names)} features to {out}")
    return 0


def cmd_select(args) -> int:
    cfg = load_config(args.config)
    frame = _load_frame(cfg)
    feature_frame = TimeSeriesFrame(
        frame.dates,
        {n: c for n, c in frame.columns.items() if n != cfg.target_column},
    )
    feats = engineer(feature_frame, _volume_columns(cfg, frame))
    from .features import log_diff

    levels = frame.column(cfg.target_column)[len(frame) - len(feats):]
    diffs = log_diff(levels)
    sub = type(feats)(feats.dates[:-1], feats.names, feats.values[:-1],
                      feats.zero_variance)
    report = rf_importance(sub, diffs, seed=derive_seed(cfg.seed, "select"))
    out = args.out or os.path.join(cfg.out, "importance.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    report.to_csv(out)
    k = cfg.top_k or 10
    print("selected:", ", ".join(select_top_k(report, min(k, len(feats.names)))))
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = RunConfig(**{**cfg.as_dict(), "seed": args.seed})
    if args.out is not None:
        cfg = RunConfig(**{**cfg.as_dict(), "out": args.out})
    if args.threads is not None:
        cfg = RunConfig(**{**cfg.as_dict(), "threads": args.threads})
    data = _prepare(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    written = []
    try:
        for kind in cfg.models:
            for window in cfg.windows:
                records = run_experiment(
                    data,
                    kind,
                    window,
                    horizon=cfg.horizon,
                    s=cfg.sequence_length,
                    root_seed=cfg.seed,
                    grid=_grid_for(cfg, kind),
                    model_options=cfg.model_options or None,
                    threads=cfg.threads,
                )
                path = os.path.join(cfg.out, f"records_{kind}_{window}.csv")
                write_records_csv(records, path)
                written.append(path)
    except Exception:
        with open(os.path.join(cfg.out, "INCOMPLETE"), "w") as fh:
            fh.write("run aborted; partial outputs:\n" + "\n".join(written) + "\n")
        raise
    write_report(cfg.out, cfg.out)
    seeds = {
        f"{kind}_{window}": derive_seed(cfg.seed, kind, window, "root")
        for kind in cfg.models for window in cfg.windows
    }
    grid_sizes = {k: len(enumerate_grid(k)) for k in ("svr", "gbdt")}
    with open(os.path.join(cfg.out, "manifest.json"), "w") as fh:
        fh.write(manifest(cfg, {"derived_seeds": seeds, "grid_sizes": grid_sizes}))
    print(f"wrote {len(written)} record files and report to {cfg.out}")
    return 0


def cmd_report(args) -> int:
    paths = write_report(args.records, args.out or args.records)
    print("wrote " + ", ".join(paths))
    return 0


def cmd_plot(args) -> int:
    paths = write_plots(args.records, args.out or args.records)
    print(f"wrote {len(paths)} figures to {args.out or args.records}")
    return 0


def cmd_vix(args) -> int:
    inputs = load_option_chain(args.chain)
    var = implied_variance(inputs)
    print(f"implied variance: {var!r}")
    print(f"implied volatility: {implied_vol(inputs)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vollab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic daily dataset as CSV")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--days", type=int, default=600)
    g.add_argument("--series", type=int, default=3)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("features", help="emit the engineered feature matrix")
    f.add_argument("--config", required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_features)

    s = sub.add_parser("select", help="rank features by forest importance")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    r = sub.add_parser("run", help="run the walk-forward experiments")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--threads", type=int)
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="build metric tables from record files")
    rp.add_argument("--records", required=True)
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)

    pl = sub.add_parser("plot", help="emit SVG figures with CSV sidecars")
    pl.add_argument("--records", required=True)
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)

    v = sub.add_parser("vix", help="implied variance from an option chain CSV")
    v.add_argument("--chain", required=True)
    v.set_defaults(func=cmd_vix)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error (usage): {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error (data): {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error (numeric): {exc}", file=sys.stderr)
        return 3
    except VollabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

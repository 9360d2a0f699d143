"""Command-line entry point: ``hybriddr <subcommand> ...``.

Every subcommand writes machine-readable JSON or CSV, to ``--out`` when
given and to stdout otherwise. Errors exit with status 1 and a one-line
message naming the failing stage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import timedelta

import numpy as np

from . import __version__
from .exceptions import HybridDRError, StageError
from .forecast import forecast_at_events, forecast_k, residual_diagnostics
from .ingest import AlignedSeries, CsvSchema, filter_workdays, load_csv, parse_timestamp, time_of_day_mask, write_csv
from .pipeline import RunConfig, csv_text, dumps, run_pipeline
from .spikeprob import DEFAULT_WINDOWS, conditional_spike_prob, parse_price_range
from .stats import (
    acf,
    anova_oneway,
    hourly_summary,
    moments,
    pacf,
    post_surge_groups,
    quantile,
    surge_onsets,
)
from .sysid import ArxModel, fit_ar, fit_arrays, moderate_rows, peak_rows, select_lags, split_regimes
from .synth import PlantSpec, gen_demand, load_spec, parse_start, prices_from_spec, series_from_spec
from .welfare import POLICIES, dwl_series, load_schedule


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _window(text):
    lo, hi = text.split("-")
    return lo.strip(), hi.strip()


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_input(p, positional=True):
    if positional:
        p.add_argument("input", help="CSV file with timestamp, price and load columns")
    p.add_argument("--interval-mins", type=int, default=15, help="sampling interval in minutes (default 15)")
    p.add_argument("--timestamp-col", default="timestamp")
    p.add_argument("--price-col", default="price")
    p.add_argument("--load-col", default="load")
    p.add_argument("--lenient", action="store_true", help="skip malformed rows instead of failing")
    p.add_argument("--workdays-only", action="store_true", help="mask weekends")


def _read(args, path=None):
    path = path or args.input
    try:
        schema = CsvSchema(args.timestamp_col, args.price_col, args.load_col)
        series, errors = load_csv(path, schema, args.interval_mins, args.lenient)
    except (OSError, HybridDRError) as exc:
        raise StageError("ingest", exc) from exc
    if args.workdays_only:
        series = filter_workdays(series)
    return series, errors


def _threshold(args, series):
    if getattr(args, "threshold", None) is not None:
        return float(args.threshold)
    return split_regimes(series, q=args.quantile).threshold


def cmd_ingest(args):
    series, errors = _read(args)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(series, fh)
    info = {"start": series.start, "n": len(series), "n_valid": series.n_valid,
            "interval_mins": series.interval, "row_errors": [f"line {e.line}: {e.reason}" for e in errors]}
    sys.stdout.write(dumps(info))


def cmd_stats(args):
    series, _ = _read(args)
    x = series.masked_prices() if args.field == "price" else series.masked_loads()
    kind = args.kind
    if kind == "moments":
        text = dumps(moments(x).to_dict())
    elif kind == "quantile":
        text = dumps({"q": args.q, "value": quantile(x[np.isfinite(x)], args.q)})
    elif kind in ("acf", "pacf"):
        r = (acf if kind == "acf" else pacf)(x, args.max_lag)
        text = csv_text(["lag", kind, "band"], [(int(k), v, r.confidence_band) for k, v in zip(r.lags, r.values)])
    elif kind == "hourly":
        rows = [(b.bucket, b.start_minute, b.count, b.q1, b.median, b.q3, b.whisker_low, b.whisker_high)
                for b in hourly_summary(series, args.field, args.resolution)]
        text = csv_text(["bucket", "start_minute", "count", "q1", "median", "q3", "whisker_low", "whisker_high"],
                        rows)
    else:
        th = _threshold(args, series)
        win = time_of_day_mask(series, *_window(args.window)) if args.window else None
        events = surge_onsets(series, th, win)
        table = anova_oneway(post_surge_groups(series, events, args.max_lag))
        d = table.to_dict()
        d.update({"threshold": th, "n_events": int(events.size)})
        text = dumps(d)
    _emit(text, args.out)


def cmd_fit(args):
    series, _ = _read(args)
    q, p = series.masked_loads(), series.masked_prices()
    method = "joint" if args.joint else "two-step"
    if args.kind == "ar":
        lags = args.lags or select_lags(series, args.max_lag)
        fit = fit_ar(series, lags)
    elif args.kind == "arx":
        th = _threshold(args, series)
        xlags = args.xlags or (1, 2)
        rows = moderate_rows(series, th, xlags)
        fit = fit_arrays(q, p, args.lags or (1, 3, 5), xlags, args.transform or "identity", args.log_base,
                         rows, method, series.interval)
    else:
        xlags = args.xlags or (4,)
        th = _threshold(args, series) if args.surge_days_only else None
        rows = peak_rows(series, max(xlags), _window(args.window), th, args.surge_days_only)
        fit = fit_arrays(q, p, args.lags or (1, 2, 4), xlags, args.transform or "log", args.log_base,
                         rows, method, series.interval)
    if args.model_out:
        _emit(dumps(fit.model.to_dict()), args.model_out)
    _emit(dumps(fit.report()), args.out)


def cmd_forecast(args):
    with open(args.model, encoding="utf-8") as fh:
        model = ArxModel.from_dict(json.load(fh))
    series, _ = _read(args, args.history)
    q, p = series.masked_loads(), series.masked_prices()
    if args.origin is not None:
        res = forecast_k(model, q, p, args.horizon, origin=args.origin)
    else:
        mode = args.mode or ("one-step" if args.horizon == 1 else "open-loop")
        targets = np.arange(len(series))
        if args.window:
            targets = np.flatnonzero(time_of_day_mask(series, *_window(args.window)))
        res = forecast_at_events(model, q, p, targets - args.horizon, args.horizon, mode)
    _emit(csv_text(["t", "forecast", "realized", "residual"], res.rows()), args.out)
    if args.diagnostics and res.realized is not None:
        _emit(dumps(residual_diagnostics(res).to_dict()), args.diagnostics)


def cmd_spikeprob(args):
    series, _ = _read(args)
    p = series.masked_prices()
    th = _threshold(args, series)
    rng = parse_price_range(args.range, p[np.isfinite(p)]) if args.range else None
    windows = [_window(w) for w in args.window] if args.window else list(DEFAULT_WINDOWS)
    rows = []
    for w in windows:
        prof = conditional_spike_prob(series, rng, w, range(1, args.max_delay + 1), th)
        rows += [(f"{w[0]}-{w[1]}",) + r for r in prof.rows()]
    _emit(csv_text(["window", "lag", "conditional", "baseline", "count"], rows), args.out)


def cmd_welfare(args):
    try:
        schedule = load_schedule(args.scenario)
    except OSError as exc:
        raise StageError("ingest", exc) from exc
    res = dwl_series(schedule, args.policy, args.interval_hours)
    _emit(csv_text(["interval", "case", "p_star", "q_star", "p_real", "q_real", "dwl"], res.rows()), args.out)
    sys.stdout.write(dumps({"policy": res.policy, "total": res.total, "interval_hours": res.interval_hours}))


def _read_prices(path):
    with open(path, encoding="utf-8", newline="") as fh:
        recs = list(csv.DictReader(fh))
    if not recs:
        raise StageError("ingest", f"no price rows in {path}")
    return parse_timestamp(recs[0]["timestamp"]), np.array([float(r["price"]) for r in recs])


def cmd_synth(args):
    spec = load_spec(args.spec) if args.spec else {}
    start = parse_start(args.start or spec.get("start"))
    interval = int(spec.get("interval_mins", 15))
    if args.kind == "prices":
        prices = prices_from_spec(spec.get("prices", {}), args.n, (args.seed, 0), start)
        step = timedelta(minutes=interval)
        rows = [((start + i * step).strftime("%Y-%m-%d %H:%M"), float(v)) for i, v in enumerate(prices)]
        _emit(csv_text(["timestamp", "price"], rows), args.out)
        return
    if args.prices:
        try:
            start, prices = _read_prices(args.prices)
        except OSError as exc:
            raise StageError("ingest", exc) from exc
        loads = gen_demand(PlantSpec.from_dict(spec.get("plant", {})), prices, (args.seed, 1))
        series = AlignedSeries(start, prices, loads, interval=interval)
    else:
        spec = dict(spec, start=start.strftime("%Y-%m-%d %H:%M"))
        series = series_from_spec(spec, seed=args.seed, n=args.n)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(series, fh)
    else:
        write_csv(series, sys.stdout)


def cmd_run(args):
    config = RunConfig.load(args.config) if args.config else RunConfig()
    config = config.replace(
        input=args.input, output_dir=args.output_dir, seed=args.seed, quantile=args.quantile,
        threshold=args.threshold, forecast_mode=args.forecast_mode, welfare_scenario=args.welfare_scenario,
        welfare_policy=args.welfare_policy, surge_days_only=args.surge_days_only or None,
        joint=args.joint or None,
    )
    res = run_pipeline(config)
    sys.stdout.write(f"wrote {config.output_dir} ({len(res)} result groups)\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="hybriddr", description="Price-responsive demand identification toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ingest", help="validate and align a price/load CSV")
    _add_input(p)
    p.add_argument("--out", help="write the aligned series back as CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="descriptive and inferential statistics")
    p.add_argument("kind", choices=("moments", "quantile", "acf", "pacf", "hourly", "anova"))
    _add_input(p)
    p.add_argument("--field", choices=("price", "load"), default="load")
    p.add_argument("--q", type=float, default=0.95, help="quantile level")
    p.add_argument("--max-lag", type=int, default=10, help="ACF/PACF lags, or ANOVA post-surge lags")
    p.add_argument("--resolution", type=int, default=60, help="hourly bucket width in minutes")
    p.add_argument("--quantile", type=float, default=0.95, help="surge threshold quantile (anova)")
    p.add_argument("--threshold", type=float, help="explicit surge threshold (anova)")
    p.add_argument("--window", help="time-of-day window HH:MM-HH:MM for surge onsets (anova)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="identify AR, moderate ARX or peak log-price models")
    p.add_argument("kind", choices=("ar", "arx", "peak"))
    _add_input(p)
    p.add_argument("--lags", type=_int_list, help="AR lags, e.g. 1,3,5")
    p.add_argument("--xlags", type=_int_list, help="price lags, e.g. 1,2")
    p.add_argument("--max-lag", type=int, default=10, help="largest lag tried by t-pruning (ar without --lags)")
    p.add_argument("--transform", choices=("identity", "log"))
    p.add_argument("--log-base", type=float)
    p.add_argument("--quantile", type=float, default=0.95, help="regime split quantile")
    p.add_argument("--threshold", type=float, help="explicit regime threshold")
    p.add_argument("--window", default="14:00-14:30", help="peak price window HH:MM-HH:MM")
    p.add_argument("--joint", action="store_true", help="one joint regression instead of two steps")
    p.add_argument("--surge-days-only", action="store_true", help="peak rows only on days with a surge")
    p.add_argument("--model-out", help="write the model JSON here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="forecast loads with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--history", required=True, help="CSV with loads and prices")
    _add_input(p, positional=False)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--origin", type=int, help="single iterated forecast starting at this grid index")
    p.add_argument("--mode", choices=("one-step", "open-loop"))
    p.add_argument("--window", help="only forecast targets inside HH:MM-HH:MM")
    p.add_argument("--diagnostics", help="write residual diagnostics JSON here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("spikeprob", help="conditional spike probability by delay")
    _add_input(p)
    p.add_argument("--window", action="append", help="HH:MM-HH:MM (repeatable)")
    p.add_argument("--range", help="conditioning price range lo:hi, bounds may be qNN percentiles")
    p.add_argument("--max-delay", type=int, default=24)
    p.add_argument("--quantile", type=float, default=0.95, help="spike threshold quantile")
    p.add_argument("--threshold", type=float, help="explicit spike threshold")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spikeprob)

    p = sub.add_parser("welfare", help="deadweight loss of a supply/demand schedule")
    p.add_argument("--scenario", required=True, help="JSON list of intervals")
    p.add_argument("--policy", choices=POLICIES, default="fixed")
    p.add_argument("--interval-hours", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_welfare)

    p = sub.add_parser("synth", help="generate synthetic prices or price/load series")
    p.add_argument("kind", choices=("prices", "demand"))
    p.add_argument("--spec", help="JSON spec with 'prices' and 'plant' sections")
    p.add_argument("--n", type=int, default=96 * 365)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", help="first timestamp, YYYY-MM-DD HH:MM")
    p.add_argument("--prices", help="drive the plant with prices from this CSV (demand only)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="full pipeline from a JSON config")
    p.add_argument("--config", help="JSON config; flags below override it")
    p.add_argument("--input")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--quantile", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--forecast-mode", choices=("one-step", "open-loop"))
    p.add_argument("--welfare-scenario")
    p.add_argument("--welfare-policy", choices=POLICIES)
    p.add_argument("--surge-days-only", action="store_true")
    p.add_argument("--joint", action="store_true")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: stage={exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    except (HybridDRError, OSError, ValueError) as exc:
        print(f"error: stage={args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

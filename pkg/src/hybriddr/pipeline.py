"""Config-driven batch run: ingest, statistics, regime fits, forecasts, spike profiles, welfare.

Artifacts are plain JSON/CSV/text with fixed key order and float formatting,
and the manifest records only content hashes, so identical configs and
inputs give byte-identical output directories.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, fields
from datetime import datetime

import numpy as np

from . import __version__
from .exceptions import InsufficientDataError, StageError
from .forecast import forecast_at_events, residual_diagnostics
from .ingest import CsvSchema, filter_workdays, load_csv, time_of_day_mask
from .spikeprob import DEFAULT_WINDOWS, conditional_spike_prob, parse_price_range
from .stats import (
    acf,
    anova_oneway,
    avg_change_profile,
    hourly_summary,
    lagged_correlation,
    moments,
    pacf,
    post_surge_groups,
    price_jumps,
    quantile,
    surge_onsets,
)
from .sysid import fit_arrays, moderate_rows, peak_rows, split_regimes, stability, to_transfer_function
from .welfare import dwl_series, load_schedule

STAGES = ("ingest", "stats", "split", "fit", "forecast", "spikeprob", "welfare", "report")


@dataclass
class RunConfig:
    """Every knob of a pipeline run. Defaults follow the reference study design."""

    input: str | None = None
    synth: dict | None = None
    output_dir: str = "out"
    interval: int = 15
    timestamp_col: str = "timestamp"
    price_col: str = "price"
    load_col: str = "load"
    lenient: bool = False
    workdays_only: bool = False
    quantile: float = 0.95
    threshold: float | None = None
    moderate_lags: tuple = (1, 3, 5)
    moderate_xlags: tuple = (1, 2)
    peak_lags: tuple = (1, 2, 4)
    peak_xlags: tuple = (4,)
    peak_window: tuple = ("14:00", "14:30")
    transform_base: float | None = None
    surge_days_only: bool = False
    joint: bool = False
    acf_max_lag: int = 96
    response_max_lag: int = 10
    forecast_mode: str = "one-step"
    spike_windows: tuple = DEFAULT_WINDOWS
    spike_range: str | None = None
    spike_max_delay: int = 24
    welfare_scenario: str | None = None
    welfare_policy: str = "rtrp-inertia"
    seed: int = 0

    _TUPLES = ("moderate_lags", "moderate_xlags", "peak_lags", "peak_xlags", "peak_window")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for k in cls._TUPLES:
            if k in d and d[k] is not None:
                d[k] = tuple(d[k])
        if "spike_windows" in d:
            d["spike_windows"] = tuple(tuple(w) for w in d["spike_windows"])
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **overrides):
        d = asdict(self)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return type(self).from_dict(d)

    def to_dict(self):
        return json.loads(dumps(asdict(self)))

    def digest(self):
        return hashlib.sha256(dumps(self.to_dict()).encode()).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, datetime):
        return obj.strftime("%Y-%m-%d %H:%M")
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, non-finite floats as null."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


class ArtifactWriter:
    """Writes files under one directory and remembers their hashes."""

    def __init__(self, root):
        self.root = root
        self.files = {}
        os.makedirs(root, exist_ok=True)

    def text(self, name, content):
        path = os.path.join(self.root, name)
        data = content.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def json(self, name, obj):
        return self.text(name, dumps(obj))

    def csv(self, name, header, rows):
        return self.text(name, csv_text(header, rows))


def _coef_table(fit):
    lines = [f"{'':<14}{'Estimate':>14}{'SE':>12}{'tStat':>12}{'pValue':>12}"]
    for name, est, se, t, p in fit.table():
        lines.append(f"{name:<14}{est:>14.6g}{se:>12.5g}{t:>12.5g}{p:>12.4g}")
    lines.append(f"n = {fit.n_obs}, RMSE = {fit.rmse:.6g}, R^2 = {fit.r2:.4f}, "
                 f"F = {fit.f_stat:.6g}, p = {fit.f_p_value:.4g}")
    return lines


def _fit_section(title, fit):
    out = [title, "=" * len(title)]
    out.append("Step 1: load on lagged load")
    out += _coef_table(fit.step1)
    if fit.step2 is not None:
        out.append("Step 2: step-1 residual on lagged price input")
        out += _coef_table(fit.step2)
    out.append(f"Combined: R^2 = {fit.r2:.4f}, RMSE = {fit.rmse:.6g}, rows = {fit.rows.size}")
    out.append(f"Transfer function: {to_transfer_function(fit.model).rounded(5)}")
    st = stability(fit.model)
    out.append("Pole moduli: " + ", ".join(f"{m:.4f}" for m in st.moduli) + f" (stable: {st.stable})")
    out.append("")
    return out


def _moments_section(stats):
    out = ["Descriptive statistics", "======================",
           f"{'':<8}{'Mean':>12}{'Std':>12}{'Kurtosis':>12}{'Skewness':>12}{'q95':>12}"]
    for key in ("price", "load"):
        m = stats[key]
        out.append(f"{key:<8}{m['mean']:>12.6g}{m['std']:>12.6g}{m['kurtosis']:>12.6g}"
                   f"{m['skewness']:>12.6g}{m['q95']:>12.6g}")
    out.append("")
    return out


def _anova_section(table):
    out = ["Post-surge load ANOVA", "=====================",
           f"{'Source':<8}{'SS':>16}{'df':>8}{'MS':>16}{'F':>10}{'p':>12}"]
    for src, ss, df, ms, f, p in table.rows():
        out.append(f"{src:<8}{ss:>16.6g}{df:>8d}{'' if ms is None else format(ms, '.6g'):>16}"
                   f"{'' if f is None else format(f, '.4f'):>10}{'' if p is None else format(p, '.4g'):>12}")
    out.append("")
    return out


def load_series(config: RunConfig):
    """The run's input series: a CSV file, or a synthetic series described by ``config.synth``."""
    if config.input is not None:
        schema = CsvSchema(config.timestamp_col, config.price_col, config.load_col)
        series, _ = load_csv(config.input, schema, config.interval, config.lenient)
    elif config.synth is not None:
        from .synth import series_from_spec
        series = series_from_spec(config.synth, seed=config.seed)
    else:
        raise ValueError("config needs an input file or a synth spec")
    if config.workdays_only:
        series = filter_workdays(series)
    return series


def run_pipeline(config: RunConfig):
    """Run every stage and write artifacts to ``config.output_dir``.

    Returns a dict of the main in-memory results. Failures raise
    ``StageError`` naming the stage; the manifest written so far lists the
    partial artifacts.
    """
    out = ArtifactWriter(config.output_dir)
    results = {}
    summary = []
    stage = "ingest"

    def manifest(status, error=None):
        m = {
            "tool": "hybriddr",
            "version": __version__,
            "config_sha256": config.digest(),
            "status": status,
            "files": dict(sorted(out.files.items())),
        }
        if error is not None:
            m["error"] = error
        out.json("manifest.json", m)

    try:
        out.json("config.json", config.to_dict())
        series = load_series(config)
        results["series"] = series
        out.json("ingest.json", {"start": series.start, "n": len(series), "n_valid": series.n_valid,
                                 "interval_mins": series.interval})

        stage = "stats"
        p, q = series.masked_prices(), series.masked_loads()
        desc = {}
        for key, x in (("price", p), ("load", q)):
            m = moments(x).to_dict()
            m["q95"] = quantile(x[np.isfinite(x)], 0.95)
            desc[key] = m
        out.json("descriptive.json", desc)
        summary += _moments_section(desc)
        ra = acf(q, config.acf_max_lag)
        rp = pacf(q, config.acf_max_lag)
        out.csv("acf_load.csv", ["lag", "acf", "pacf", "band"],
                [(int(k), a, b, ra.confidence_band) for k, a, b in zip(ra.lags, ra.values, rp.values)])
        out.csv("hourly_load.csv", ["bucket", "start_minute", "count", "q1", "median", "q3", "whisker_low", "whisker_high"],
                [(b.bucket, b.start_minute, b.count, b.q1, b.median, b.q3, b.whisker_low, b.whisker_high)
                 for b in hourly_summary(series, "load")])
        results["descriptive"] = desc

        stage = "split"
        if config.threshold is not None:
            split = split_regimes(series, threshold=config.threshold)
        else:
            split = split_regimes(series, q=config.quantile)
        th = split.threshold
        out.json("regimes.json", {"threshold": th, "n_moderate": int(split.moderate.size),
                                  "n_high": int(split.high.size)})
        summary += [f"Regime threshold: {th:.6g} $/MWh ({split.high.size} high-price samples)", ""]
        results["split"] = split

        # surge response around the peak window
        win = time_of_day_mask(series, *config.peak_window)
        events = surge_onsets(series, th, win)
        jumps = price_jumps(series)
        prof = avg_change_profile(series, th, np.inf, config.response_max_lag)
        corr = []
        for k in range(config.response_max_lag + 1):
            try:
                corr.append(lagged_correlation(events, jumps, q, k))
            except (InsufficientDataError, ValueError):
                corr.append(float("nan"))
        out.csv("surge_response.csv", ["lag", "avg_change", "jump_correlation"],
                [(k, a, c) for k, (a, c) in enumerate(zip(prof, corr))])
        if events.size >= 2:
            table = anova_oneway(post_surge_groups(series, events, config.response_max_lag))
            out.json("anova.json", table.to_dict())
            summary += _anova_section(table)
            results["anova"] = table

        stage = "fit"
        method = "joint" if config.joint else "two-step"
        mrows = moderate_rows(series, th, config.moderate_xlags)
        mod = fit_arrays(q, p, config.moderate_lags, config.moderate_xlags, "identity", None, mrows,
                         method, series.interval)
        anchor = max(config.peak_xlags)
        prow = peak_rows(series, anchor, config.peak_window, th if config.surge_days_only else None,
                         config.surge_days_only)
        peak = fit_arrays(q, p, config.peak_lags, config.peak_xlags, "log", config.transform_base, prow,
                          method, series.interval)
        for name, fit in (("moderate", mod), ("peak", peak)):
            report = fit.report()
            tf = to_transfer_function(fit.model)
            report["transfer_function"] = {"num": tf.num, "den": tf.den}
            report["stability"] = stability(fit.model).to_dict()
            out.json(f"fit_{name}.json", report)
            out.json(f"model_{name}.json", fit.model.to_dict())
        summary += _fit_section("Moderate-price model", mod)
        summary += _fit_section("Peak-window model (log price)", peak)
        results["moderate"], results["peak"] = mod, peak

        stage = "forecast"
        targets = np.flatnonzero(prow)
        horizon = 1 if config.forecast_mode == "one-step" else anchor
        fc = forecast_at_events(peak.model, q, p, targets - horizon, horizon, config.forecast_mode)
        out.csv("forecast_peak.csv", ["t", "forecast", "realized", "residual"], fc.rows())
        if fc.horizon >= 4:
            diag = residual_diagnostics(fc)
            out.json("forecast_peak.json", diag.to_dict())
            summary += ["Peak forecast diagnostics", "=========================",
                        f"n = {diag.n}, residual kurtosis = {diag.kurtosis:.4f}, "
                        f"forecast/realized correlation = {diag.correlation:.4f}", ""]
            results["forecast"] = diag

        stage = "spikeprob"
        rng = None if config.spike_range is None else parse_price_range(config.spike_range, p[np.isfinite(p)])
        delays = range(1, config.spike_max_delay + 1)
        summary += ["Spike recurrence", "================"]
        for w in config.spike_windows:
            prof = conditional_spike_prob(series, rng, tuple(w), delays, th)
            tag = f"{w[0]}-{w[1]}".replace(":", "")
            out.csv(f"spikeprob_{tag}.csv", ["lag", "conditional", "baseline", "count"], prof.rows())
            best = np.nanmax(prof.probabilities) if np.any(prof.counts > 0) else float("nan")
            summary.append(f"window {w[0]}-{w[1]}: baseline {prof.baseline:.4f}, max conditional {best:.4f}")
        summary.append("")

        stage = "welfare"
        if config.welfare_scenario is not None:
            ws = dwl_series(load_schedule(config.welfare_scenario), config.welfare_policy,
                            config.interval / 60.0)
            out.csv("welfare.csv", ["interval", "case", "p_star", "q_star", "p_real", "q_real", "dwl"], ws.rows())
            out.json("welfare.json", {"policy": ws.policy, "total": ws.total})
            summary += [f"Deadweight loss ({ws.policy}): total {ws.total:.6g} $", ""]

        stage = "report"
        out.text("summary.txt", "\n".join(summary))
    except StageError:
        raise
    except Exception as exc:
        manifest("failed", {"stage": stage, "cause": f"{type(exc).__name__}: {exc}"})
        raise StageError(stage, exc, sorted(out.files)) from exc
    manifest("ok")
    return results

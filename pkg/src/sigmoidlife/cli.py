"""``sigmoidlife`` command line: batch fits, lifepaths, distributions, sampling.

Exit codes: 0 success, 1 usage, 2 data error, 3 every fit failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from . import dist as dist_mod
from .entropy import entropy_by_entity
from .fit import FitOptions, InsufficientDataError, fit_linear, fit_sigmoid
from .genmodel import GenerativeModelParams, sample_population, to_order_counts
from .ingestion import (
    DataError,
    bin_monthly,
    bin_occurrences,
    month_label,
    month_ordinal,
    parse_events,
    parse_month,
    parse_occurrences,
    window_for,
)
from .lifepath import display_inflection, expanding_window_fits, lifepath_table
from .series import cumulative, denormalize_params, normalize
from .validate import EmptyCohortError, score_cohort, select_cohort

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SAMPLE_SIZE = 6065


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)) or v is None or isinstance(v, str):
        return v if not isinstance(v, np.bool_) else bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    # Round-trip through the 9-digit text form so JSON matches the CSVs.
    return float(format(float(v), ".9g"))


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            vals = [row[h] for h in header] if isinstance(row, dict) else row
            w.writerow([_fmt(v) for v in vals])


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- configuration -----------------------------------------------------------

def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _fit_options(args, cfg):
    try:
        opts = FitOptions.from_mapping(cfg.get("fit", {}))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    pad = args.pad if args.pad is not None else cfg.get("pad_length")
    if pad is not None:
        if pad < 0:
            raise UsageError("--pad must be >= 0")
        opts = FitOptions.from_mapping({**cfg.get("fit", {}), "pad_length": int(pad)})
    return opts


def _model_params(cfg):
    model = cfg.get("model", {})
    try:
        if isinstance(model, str):
            with open(model, encoding="utf-8") as fh:
                model = json.load(fh)
        return GenerativeModelParams.from_mapping(model)
    except (OSError, TypeError, ValueError) as exc:
        raise UsageError(f"bad model parameters: {exc}") from exc


def _read_series(args, cfg):
    if not args.input:
        raise UsageError("--input is required")
    records = []
    for path in args.input:
        with open(path, encoding="utf-8", newline="") as fh:
            records.extend(parse_events(fh) if args.kind == "events" else parse_occurrences(fh))
    if not records:
        raise DataError("input holds no records")
    end = args.end or cfg.get("end")
    window = window_for(records, parse_month(end) if end else None)
    binner = bin_monthly if args.kind == "events" else bin_occurrences
    series = binner(records, window)
    if not series:
        raise DataError("input holds no activity")
    return series, window


def _cutoff_months(args, window):
    """Cutoffs as month ordinals; ``YYYY`` means December of that year."""
    out = []
    for text in args.cutoff or []:
        try:
            month = min(month_ordinal(int(text), 12), window.end_month) if text.isdigit() else parse_month(text)
        except ValueError as exc:
            raise UsageError(f"bad cutoff {text!r}: {exc}") from exc
        if not window.contains(month):
            raise UsageError(f"cutoff {text} lies outside the data window")
        out.append(month)
    return sorted(set(out)) or [window.end_month]


def _cutoff_years(args, window, default):
    years = []
    for text in args.cutoff or []:
        if not text.isdigit():
            raise UsageError(f"analysis cutoffs are years here, got {text!r}")
        y = int(text)
        if not window.epoch_month // 12 <= y <= window.end_month // 12:
            raise UsageError(f"cutoff {y} lies outside the data window")
        years.append(y)
    return sorted(set(years)) or list(default)


def _pool_map(func, items, jobs):
    if jobs <= 1 or len(items) < 2:
        return [func(x) for x in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(func, items, chunksize=chunk))


# --- fit ---------------------------------------------------------------------

FIT_COLUMNS = [
    "entity_id", "cutoff", "flag", "amplitude", "slope", "ln_slope", "inflection_date",
    "saturation_status", "saturated", "reduced_chi2_sigmoid", "reduced_chi2_linear",
    "converged", "display_inflection", "display_amplitude", "total",
]
CURVE_COLUMNS = ["entity_id", "cutoff", "month", "observed", "fitted"]


def _fit_one(series, cutoffs, opts):
    rows, curves = [], []
    for cutoff in cutoffs:
        row = dict.fromkeys(FIT_COLUMNS)
        row.update(entity_id=series.entity_id, cutoff=month_label(cutoff))
        if cutoff < series.start_month:
            row["flag"] = "not_started"
            rows.append(row)
            continue
        window = series.truncate(cutoff)
        row["total"] = window.total
        if window.insufficient_history:
            row["flag"] = "insufficient_history"
            rows.append(row)
            continue
        cum = cumulative(window)
        nc = normalize(cum, opts.pad_length, first_activity_month=window.start_month)
        try:
            fit = fit_sigmoid(nc, opts)
            lin = fit_linear(nc)
        except (InsufficientDataError, ValueError, FloatingPointError) as exc:
            row["flag"] = f"failed: {exc}"
            rows.append(row)
            continue
        cal = denormalize_params(fit, nc.scale)
        shown_year, shown_amp = display_inflection(cal, cutoff)
        row.update(
            flag="ok" if fit.converged else "not_converged",
            amplitude=cal.amplitude,
            slope=cal.slope,
            ln_slope=cal.ln_slope_per_month,
            inflection_date=cal.inflection_year,
            saturation_status=cal.saturation_status,
            saturated=cal.saturation_status <= 1.0,
            reduced_chi2_sigmoid=fit.reduced_chi2,
            reduced_chi2_linear=lin.reduced_chi2,
            converged=fit.converged,
            display_inflection=shown_year,
            display_amplitude=shown_amp,
        )
        rows.append(row)
        months = np.arange(window.start_month, cutoff + 1)
        t = nc.t[nc.scale.pad_length:]
        fitted = fit(t) * nc.scale.final_cumulative
        label = month_label(cutoff)
        for m, obs, f in zip(months, cum, fitted):
            curves.append([series.entity_id, label, month_label(int(m)), obs, f])
    return rows, curves


def cmd_fit(args, cfg):
    series, window = _read_series(args, cfg)
    opts = _fit_options(args, cfg)
    cutoffs = _cutoff_months(args, window)
    work = [series[k] for k in sorted(series)]
    results = _pool_map(partial(_fit_one, cutoffs=cutoffs, opts=opts), work, args.jobs)
    rows = [r for rs, _ in results for r in rs]
    curves = [c for _, cs in results for c in cs]
    _write_csv(os.path.join(args.out, "fits.csv"), FIT_COLUMNS, rows)
    _write_csv(os.path.join(args.out, "curves.csv"), CURVE_COLUMNS, curves)
    for r in rows:
        if r["flag"] not in ("ok", "not_converged", "insufficient_history", "not_started"):
            print(f"warning: {r['entity_id']} at {r['cutoff']}: {r['flag']}", file=sys.stderr)
    if not any(r["converged"] for r in rows):
        print("error: no fit converged", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --- lifepath / validate -----------------------------------------------------

LIFEPATH_COLUMNS = [
    "entity_id", "analysis_year", "amplitude", "ln_slope", "inflection_date",
    "expected_leave", "expected_total", "status", "converged",
]


def _lifepath_one(series, years, opts):
    usable = [y for y in years if y <= series.end_month // 12]
    return expanding_window_fits(series, usable, opts)


def _lifepaths(args, cfg, years, series, opts):
    work = [series[k] for k in sorted(series)]
    return _pool_map(partial(_lifepath_one, years=years, opts=opts), work, args.jobs)


def cmd_lifepath(args, cfg):
    series, window = _read_series(args, cfg)
    opts = _fit_options(args, cfg)
    years = _cutoff_years(args, window, range(window.epoch_month // 12, window.end_month // 12 + 1))
    paths = _lifepaths(args, cfg, years, series, opts)
    rows = lifepath_table(paths)
    _write_csv(os.path.join(args.out, "lifepath.csv"), LIFEPATH_COLUMNS, rows)
    if not any(r["converged"] for r in rows):
        print("error: no fit converged", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_validate(args, cfg):
    leave_year = args.leave_year if args.leave_year is not None else cfg.get("leave_year")
    if leave_year is None:
        raise UsageError("validate needs --leave-year")
    series, window = _read_series(args, cfg)
    if window.end_month < month_ordinal(leave_year, 12):
        raise UsageError(f"data end before December {leave_year}")
    opts = _fit_options(args, cfg)
    first = window.epoch_month // 12
    default = range(max(first, leave_year - 5), min(leave_year + 3, window.end_month // 12) + 1)
    years = _cutoff_years(args, window, default)
    # Only the cohort's lifepaths are needed; select on the raw series first.
    leavers = {k: s for k, s in series.items() if s.last_active_month // 12 == leave_year}
    if not leavers:
        raise DataError(f"no entity left in {leave_year}")
    paths = _lifepaths(args, cfg, years, leavers, opts)
    cohort = select_cohort(paths, leave_year)
    report = score_cohort(cohort, leave_year)
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        doc = json.loads(report.to_json())
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    rows = report.to_rows()
    _write_csv(os.path.join(args.out, "report.csv"), list(rows[0]), rows)
    return EXIT_OK


# --- distributions -----------------------------------------------------------

def _dist_outputs(out_dir, dists, seg_source, cfg):
    dcfg = cfg.get("dist", {})
    rows = [[d.window_years, j, n] for d in dists for j, n in zip(d.J, d.N)]
    _write_csv(os.path.join(out_dir, "distribution.csv"), ["window_years", "J", "N"], rows)
    seg = dist_mod.fit_segmented_powerlaw(
        seg_source, jmin=dcfg.get("jmin", 1), nmin=dcfg.get("nmin", 1),
    )
    _write_json(os.path.join(out_dir, "segmented.json"), seg.to_dict())
    return seg


def cmd_dist(args, cfg):
    if args.cutoff:
        raise UsageError("dist uses the full window; set its end with --end")
    series, window = _read_series(args, cfg)
    n_years = window.n_months // 12
    if n_years < 1:
        raise DataError("dist needs at least one full year of data")
    dists = []
    for y in range(1, n_years + 1):
        last = window.epoch_month + 12 * y - 1
        totals = [s.truncate(last).total for s in series.values() if s.start_month <= last]
        totals = np.array([t for t in totals if t > 0])
        if totals.size:
            dists.append(dist_mod.survival(np.round(totals).astype(np.int64), window_years=y))
    try:
        _dist_outputs(args.out, dists, dists[-1], cfg)
    except ValueError as exc:
        raise DataError(f"segmented fit: {exc}") from exc
    if len(dists) >= 3:
        bins = cfg.get("dist", {}).get("bins", dist_mod.COLLAPSE_BINS)
        res = dist_mod.scaling_collapse(dists, bins=bins)
        _write_json(os.path.join(args.out, "collapse.json"), res.to_dict())
    else:
        print("warning: fewer than three yearly windows, no collapse", file=sys.stderr)
    return EXIT_OK


def cmd_sample(args, cfg):
    if args.input or args.cutoff:
        raise UsageError("sample takes no --input or --cutoff")
    model = _model_params(cfg)
    n = args.n if args.n is not None else int(cfg.get("sample_size", DEFAULT_SAMPLE_SIZE))
    if n < 1:
        raise UsageError("sample size must be positive")
    seed = args.seed if args.seed is not None else cfg.get("seed")
    pop = sample_population(n, model, seed=seed)
    orders = to_order_counts(pop)
    rows = [[i, pop.t0[i], pop.m_prime[i], pop.A_prime[i], int(pop.band[i]), orders[i]] for i in range(n)]
    _write_csv(os.path.join(args.out, "population.csv"),
               ["index", "t0", "m_prime", "A_prime", "band", "orders"], rows)
    d = dist_mod.survival(orders)
    try:
        seg = _dist_outputs(args.out, [d], d, cfg)
    except ValueError as exc:
        print(f"error: segmented fit: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    freq = np.bincount(pop.band, minlength=len(model.regime_weights)) / n
    _write_json(os.path.join(args.out, "summary.json"), {
        "n": n, "seed": seed, "band_frequencies": list(freq),
        "two_regime": not seg.degenerate, "model": model.to_dict(),
    })
    return EXIT_OK


def cmd_entropy(args, cfg):
    if args.kind != "occurrences":
        raise UsageError("entropy needs --kind occurrences with a state column")
    if not args.input:
        raise UsageError("--input is required")
    records = []
    for path in args.input:
        with open(path, encoding="utf-8", newline="") as fh:
            records.extend(parse_occurrences(fh))
    values = entropy_by_entity(records)
    if not values:
        raise DataError("no entity has any occurrences")
    _write_csv(os.path.join(args.out, "entropy.csv"), ["entity_id", "entropy"], sorted(values.items()))
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "lifepath": cmd_lifepath,
    "dist": cmd_dist,
    "sample": cmd_sample,
    "validate": cmd_validate,
    "entropy": cmd_entropy,
}


def build_parser():
    p = _Parser(prog="sigmoidlife", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input", action="append", help="CSV input (repeatable)")
        s.add_argument("--kind", choices=("events", "occurrences"), default="events")
        s.add_argument("--pad", type=int, help="leading zero months (default 100)")
        s.add_argument("--cutoff", action="append",
                       help="YYYY or YYYY-MM; repeatable. lifepath/validate take years")
        s.add_argument("--end", help="last month of the data window, YYYY-MM")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--config", help="JSON config")
        if name == "validate":
            s.add_argument("--leave-year", type=int)
        if name == "sample":
            s.add_argument("--n", type=int, help=f"population size (default {DEFAULT_SAMPLE_SIZE})")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = _load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"sigmoidlife {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, EmptyCohortError) as exc:
        print(f"sigmoidlife {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

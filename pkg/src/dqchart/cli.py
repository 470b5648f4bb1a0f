"""Command-line front end: ``python -m dqchart <command> ...``.

Exit codes: 0 ok, 1 gate failure or alert, 2 input error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from dataclasses import replace
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .chart import (ChartSeries, SingularCovarianceError, chart_point, run_chart, series_to_csv,
                    series_to_json)
from .diagnostics import acf, bartlett_sphericity, cov_to_corr, daily_mean_rows, mardia_test
from .generator import FaultSpec, ScenarioConfig, generate_study, missing_fraction
from .ingest import (DEFAULT_SIGNS, IngestError, PlausibilityRanges, clean, daily_summary,
                     parse_long_csv, write_long_csv, write_removal_report)
from .myt import myt_decompose
from .published import center_a, center_b
from .robust import (InsufficientDataError, RobustEstimationError, complete_case_matrix,
                     load_estimates, ogk_estimate, save_estimates)
from .ucl_sim import LazyUclTable, UclConfig, UclSimulationError, UclTable, n_bar, ucl_table

EXIT_OK, EXIT_GATE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out, args, inputs, started) -> None:
    settings = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
                if k != "func"}
    manifest = {
        "command": args.command,
        "config_digest": hashlib.sha256(json.dumps(settings, sort_keys=True, default=str)
                                        .encode()).hexdigest(),
        "settings": settings,
        "inputs": {str(p): _sha256(p) for p in inputs if p is not None},
        "seed": getattr(args, "seed", None),
        "versions": {"dqchart": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _apply_config(args) -> None:
    """Fill options still at their defaults from a JSON ``--config`` file."""
    if getattr(args, "config", None) is None or args.command == "generate":
        return
    doc = json.loads(Path(args.config).read_text())
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) == args._defaults.get(attr):
            setattr(args, attr, value)


def _signs(args) -> tuple[str, ...]:
    s = args.signs
    return tuple(s.split(",")) if isinstance(s, str) else tuple(s)


def _load_clean(args):
    data = parse_long_csv(Path(args.csv), _signs(args))
    ranges = PlausibilityRanges.default()
    if args.ranges:
        ranges = ranges.override(json.loads(Path(args.ranges).read_text()))
    data, removals = clean(data, ranges)
    return data, removals


def _phase1(data, k: int):
    if k < 1:
        raise ValueError("--phase1-days must be positive")
    return data.days[:k]


def cmd_estimate(args) -> int:
    started = _now()
    data, removals = _load_clean(args)
    if args.removals:
        write_removal_report(removals, args.removals)
    rows = complete_case_matrix(data, _phase1(data, args.phase1_days))
    est = ogk_estimate(rows, data.signs)
    save_estimates(est, args.out)
    _write_manifest(args.out, args, [args.csv, args.ranges, args.config], started)
    print(f"estimates from {est.n_used} complete rows written to {args.out}")
    return EXIT_OK


def cmd_ucl(args) -> int:
    started = _now()
    est = load_estimates(args.estimates)
    inputs = [args.estimates, args.config]
    nb = args.n_bar
    if args.csv:
        data, _ = _load_clean(args)
        nb = n_bar(data, _phase1(data, args.phase1_days))
        inputs.append(args.csv)
    if nb is None:
        raise ValueError("give --n-bar or --csv")
    m = args.m if args.m is not None else args.phase1_days
    cfg = UclConfig(m=m, n_bar=nb, alpha=args.alpha, inner_reps=args.inner,
                    outer_reps=args.outer, seed=args.seed)
    table = ucl_table(est.mu_hat, est.sigma_hat, cfg, est.signs)
    table.save(args.out)
    _write_manifest(args.out, args, inputs, started)
    full = table[est.signs]
    print(f"{len(table)} subset limits written to {args.out}; full-set UCL {full:.4f}")
    return EXIT_OK


def _reestimating_series(data, args) -> ChartSeries:
    """Prospective chart whose parameters are refit daily until the threshold."""
    points = []
    frozen = None
    est = None
    for t, day in enumerate(data.days):
        if t < args.min_phase1_days:
            continue
        if frozen is None:
            history = data.days[:min(t, args.reestimate_until)]
            try:
                est = ogk_estimate(complete_case_matrix(data, history), data.signs)
            except (InsufficientDataError, RobustEstimationError):
                continue
            cfg = UclConfig(m=len(history), n_bar=n_bar(data, history), alpha=args.alpha,
                            inner_reps=args.inner, outer_reps=args.outer, seed=args.seed)
            table = LazyUclTable(est.mu_hat, est.sigma_hat, cfg, est.signs)
            if len(history) >= args.reestimate_until:
                frozen = (est, table)
        else:
            est, table = frozen
        points.append(chart_point(daily_summary(data, day), est, table, False, True))
    if est is None:
        raise InsufficientDataError("insufficient Phase I data for any re-estimation")
    return ChartSeries(points, est, ())


def cmd_monitor(args) -> int:
    started = _now()
    data, _ = _load_clean(args)
    inputs = [args.csv, args.config]
    if args.reestimate_until:
        if args.mode != "prospective":
            raise ValueError("--reestimate-until needs --mode prospective")
        series = _reestimating_series(data, args)
    else:
        est = load_estimates(args.estimates)
        table = UclTable.load(args.ucl)
        inputs += [args.estimates, args.ucl]
        series = run_chart(data, est, table, _phase1(data, args.phase1_days),
                           include_phase1=True)
    Path(args.out_csv).write_text(series_to_csv(series))
    if args.out_json:
        Path(args.out_json).write_text(series_to_json(series) + "\n")
    _write_manifest(args.out_csv, args, inputs, started)
    sigs = series.signals(prospective_only=args.mode == "prospective")
    for pt in sigs:
        who = sorted(pt.myt.implicated_signs) if pt.myt is not None else []
        print(f"{pt.day} signal T2={pt.t2:.3f} UCL={pt.ucl:.3f} implicated={','.join(who) or '-'}")
    if args.mode == "prospective" and series.alert:
        return EXIT_GATE
    return EXIT_OK


def cmd_decompose(args) -> int:
    data, _ = _load_clean(args)
    est = load_estimates(args.estimates)
    table = UclTable.load(args.ucl)
    day = date.fromisoformat(args.date)
    report = myt_decompose(daily_summary(data, day), est, table)
    print(f"{'subset':<28}{'T2':>12}{'UCL':>10}  exceeds")
    for e in report.ranked():
        print(f"{'+'.join(e.subset):<28}{e.t2:>12.4f}{e.ucl:>10.4f}  {'yes' if e.exceeds else 'no'}")
    for e in report.entries:
        if e.status != "ok":
            print(f"{'+'.join(e.subset):<28}{'indeterminate':>12}")
    print("implicated: " + ("; ".join("+".join(s) for s in report.implicated) or "none"))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    data, _ = _load_clean(args)
    phase1 = _phase1(data, args.phase1_days)
    results = []
    _, mean_rows = daily_mean_rows(data, phase1)
    results.append(mardia_test(mean_rows, level=args.level))
    if args.estimates:
        est = load_estimates(args.estimates)
        corr, n_rows = cov_to_corr(est.sigma_hat), est.n_used
    else:
        # sample correlation keeps the chi-square reference exact under sphericity
        rows = complete_case_matrix(data, phase1)
        corr, n_rows = np.corrcoef(rows, rowvar=False), rows.shape[0]
    results.append(bartlett_sphericity(corr, n_rows, level=args.level))

    mardia, bartlett = results
    print(f"{'test':<24}{'statistic':>14}{'p-value':>12}  gate")
    print(f"{'mardia:skewness':<24}{mardia.statistics['skewness']:>14.4f}"
          f"{mardia.p_values['skewness']:>12.4g}  {'pass' if mardia.passed else 'FAIL'}")
    print(f"{'mardia:kurtosis':<24}{mardia.statistics['kurtosis_z']:>14.4f}"
          f"{mardia.p_values['kurtosis']:>12.4g}  {'pass' if mardia.passed else 'FAIL'}")
    print(f"{'bartlett:sphericity':<24}{bartlett.statistics['chi2']:>14.4f}"
          f"{bartlett.p_values['chi2']:>12.4g}  {'pass' if bartlett.passed else 'FAIL'}")
    gates = [r.passed for r in results]
    for s in data.signs:
        series = [np.mean(list(v.values())) if (v := data.day_values(d, s)) else None
                  for d in data.days]
        res = acf(series, args.max_lag)
        out = res.outside_band()
        # independence gate: at most 10% of lags outside the white-noise band
        ok = out.size <= 0.1 * (res.lags.size - 1)
        gates.append(ok)
        print(f"{'acf:' + s:<24}{res.values[1]:>14.4f}{'':>12}  {'pass' if ok else 'FAIL'}"
              f"  ({out.size}/{res.lags.size - 1} lags outside +-{res.band:.3f})")
    return EXIT_OK if all(gates) else EXIT_GATE


def _parse_fault(text: str, kind: str) -> FaultSpec:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"fault must be SIGN:VALUE:START[:END], got {text!r}")
    end = date.fromisoformat(parts[3]) if len(parts) == 4 else None
    return FaultSpec(kind, parts[0], float(parts[1]), date.fromisoformat(parts[2]), end)


def cmd_generate(args) -> int:
    started = _now()
    if args.config:
        cfg = ScenarioConfig.load(args.config)
    else:
        est = center_a() if args.preset == "center-a" else center_b()
        cfg = ScenarioConfig(est.mu_hat, est.sigma_hat, signs=est.signs,
                             n=24 if args.preset == "center-a" else 12)
    doc = cfg.to_dict()
    for key in ("n", "n_days", "q_day", "q_sign", "seed"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if args.start:
        doc["start"] = args.start
    faults = [_parse_fault(t, k) for k, opt in (("cap", args.cap), ("fix", args.fix),
                                                 ("shift", args.shift)) for t in opt or ()]
    cfg = ScenarioConfig.from_dict(doc)
    if faults:
        cfg = replace(cfg, faults=cfg.faults + tuple(faults))
    data = generate_study(cfg)
    write_long_csv(data, args.out)
    _write_manifest(args.out, args, [args.config], started)
    _, overall = missing_fraction(data)
    print(f"{len(data.cells)} cells over {len(data.days)} days written to {args.out} "
          f"(missing {overall:.3f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqchart", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", type=Path, help="JSON file with option defaults")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--alpha", type=float, default=0.02)
        p.add_argument("--phase1-days", type=int, default=19)
        if data:
            p.add_argument("--signs", default=",".join(DEFAULT_SIGNS))
            p.add_argument("--ranges", type=Path, help="JSON plausibility range overrides")

    p = sub.add_parser("estimate", help="robust Phase I estimates")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--removals", type=Path, help="write the cleaning report here")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ucl", help="simulate control limits for all sign subsets")
    p.add_argument("--estimates", type=Path, required=True)
    p.add_argument("--csv", type=Path, help="derive n_bar from this study's Phase I days")
    p.add_argument("--n-bar", type=int)
    p.add_argument("--m", type=int, help="Phase I day count (default: --phase1-days)")
    p.add_argument("--inner", type=int, default=10_000)
    p.add_argument("--outer", type=int, default=100)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=cmd_ucl)

    p = sub.add_parser("monitor", help="run the chart over a study")
    p.add_argument("csv", type=Path)
    p.add_argument("--estimates", type=Path)
    p.add_argument("--ucl", type=Path)
    p.add_argument("--mode", choices=("retro", "prospective"), default="retro")
    p.add_argument("--out-csv", type=Path, required=True)
    p.add_argument("--out-json", type=Path)
    p.add_argument("--reestimate-until", type=int, default=0,
                   help="prospective: refit parameters daily until this many days")
    p.add_argument("--min-phase1-days", type=int, default=5)
    p.add_argument("--inner", type=int, default=10_000)
    p.add_argument("--outer", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("decompose", help="subset decomposition for one day")
    p.add_argument("csv", type=Path)
    p.add_argument("--estimates", type=Path, required=True)
    p.add_argument("--ucl", type=Path, required=True)
    p.add_argument("--date", required=True)
    common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("diagnose", help="normality, sphericity and autocorrelation checks")
    p.add_argument("csv", type=Path)
    p.add_argument("--estimates", type=Path)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--max-lag", type=int, default=10)
    common(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("generate", help="synthetic study")
    p.add_argument("--preset", choices=("center-a", "center-b"), default="center-a")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n-days", type=int)
    p.add_argument("--start")
    p.add_argument("--q-day", type=float)
    p.add_argument("--q-sign", type=float)
    p.add_argument("--cap", action="append", metavar="SIGN:VALUE:START[:END]")
    p.add_argument("--fix", action="append", metavar="SIGN:VALUE:START[:END]")
    p.add_argument("--shift", action="append", metavar="SIGN:VALUE:START[:END]")
    common(p, data=False)
    p.set_defaults(func=cmd_generate, seed=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    args._defaults = {a.dest: a.default for a in sub._actions}
    try:
        _apply_config(args)
        del args._defaults
        if args.command == "monitor" and not args.reestimate_until and not (args.estimates and args.ucl):
            raise ValueError("monitor needs --estimates and --ucl (or --reestimate-until)")
        return args.func(args)
    except (InsufficientDataError, RobustEstimationError, SingularCovarianceError,
            UclSimulationError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (IngestError, ValueError, KeyError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

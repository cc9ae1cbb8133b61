"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import io as fio
from . import pipeline as pl
from .econometrics import risk_summary, simulate_stationary
from .errors import NumericalError, ValidationError
from .index import build_index, pca
from .panel import DEFAULT_REVERSED, PanelConfig, load_panel, to_log_returns

log = logging.getLogger("swbi")


def _panel_config(args) -> PanelConfig:
    rev = DEFAULT_REVERSED if args.reversed is None else pl._names(args.reversed)
    factors = pl._names(args.factors) if args.factors else None
    return PanelConfig(factors, tuple(rev), args.first_year, args.last_year)


def cmd_panel_validate(args) -> int:
    panel = load_panel(args.file, _panel_config(args))
    n, t = panel.shape
    print(f"ok: {n} factors x {t} years ({panel.years[0]}-{panel.years[-1]})")
    for name, flag in zip(panel.factor_names, panel.reverse_sign):
        print(f"  {name}{'  (sign reversed)' if flag else ''}")
    return 0


def cmd_panel_returns(args) -> int:
    rp = to_log_returns(load_panel(args.file, _panel_config(args)))
    pl.write_returns(args.out, rp, Path(args.file).name)
    print(f"wrote {args.out}")
    return 0


def cmd_index_build(args) -> int:
    ix = build_index(pl.read_returns(args.returns), include_base_year=not args.exclude_base_year)
    out, side = pl.write_index(args.out, ix, Path(args.returns).name)
    print(f"wrote {out} and {side}")
    return 0


def cmd_index_pca(args) -> int:
    s = pca(pl.read_returns(args.returns), include_base_year=not args.exclude_base_year)
    rows = [[k + 1, e, p, c] for k, (e, p, c) in enumerate(zip(s.eigenvalues, s.proportions, s.cumulative))]
    fio.write_table(args.out, ["component", "eigenvalue", "proportion", "cumulative"], rows, {"kind": "pca"})
    print(f"first component explains {s.proportions[0]:.1%}; 95% reached at component {s.components_for(0.95)}")
    return 0


def cmd_fit_garch(args) -> int:
    out, model, extra = pl.fit_model_file(
        args.index, args.innovations, args.out, lambda0=args.lambda0, riskfree=args.riskfree, method=args.method
    )
    print(f"ar={model.ar:.6g} ma={model.ma:.6g} omega={model.omega:.6g} a={model.a:.6g} b={model.b:.6g} loglik={model.loglik:.6g}")
    if model.innovation is not None:
        p = model.innovation
        print(f"innovations {p.variant}: lambda={p.lam:.6g} alpha={p.alpha:.6g} beta={p.beta:.6g} delta={p.delta:.6g} mu={p.mu:.6g}")
        print(f"KS p={extra['ks_pvalue']:.4g}  AD p={extra['ad_pvalue']:.4g}")
    if model.boundary:
        print("warning: a + b is at the stationarity bound", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    s = simulate_stationary(pl.read_model(args.model), args.n, args.seed, workers=args.workers)
    pl.write_scenarios(args.out, s)
    print(f"wrote {len(s)} scenarios to {args.out}")
    return 0


def cmd_risk(args) -> int:
    summary = risk_summary(pl.read_scenarios(args.scenarios), fio.parse_floats(args.levels))
    rows = pl.risk_rows(summary)
    if args.out:
        fio.write_table(args.out, ["statistic", "value"], rows, {"kind": "risk summary", "n": summary.n})
    for k, v in rows:
        print(f"{k:>16s} {v: .6f}")
    return 0


def cmd_price(args) -> int:
    model = pl.read_model(args.model)
    if args.riskfree is not None or args.lambda0 is not None:
        from dataclasses import replace

        model = replace(
            model,
            riskfree=model.riskfree if args.riskfree is None else args.riskfree,
            lambda0=model.lambda0 if args.lambda0 is None else args.lambda0,
        )
    maturities = [int(t) for t in fio.parse_floats(args.maturities)]
    _, grid = pl.price_file(model, args.I0, fio.parse_floats(args.strikes), maturities, args.n, args.seed, args.out, args.workers)
    print(f"priced {grid.call.size} options on {grid.n_paths} paths; wrote {args.out}")
    return 0


def cmd_budget(args) -> int:
    _, table = pl.budget_file(pl.read_returns(args.returns), fio.parse_floats(args.levels), args.out, not args.exclude_base_year)
    print("factor".ljust(18) + "".join(c.rjust(12) for c in table.columns))
    for row in table.rows():
        print(row[0].ljust(18) + "".join(f"{v:12.4%}" for v in row[1:]))
    return 0


def cmd_stress(args) -> int:
    reps = pl.stress_reports(
        args.index, args.stressor, fio.parse_floats(args.levels), args.n, args.seed, variant=args.variant, n_boot=args.bootstrap
    )
    pl.write_stress(args.out, reps)
    for rep in reps:
        print(f"{rep.stressor}: observed correlation {rep.correlation:+.3f}")
        for q in rep.levels:
            m = rep.measures[q]
            print(f"  q={q:<5g} CoES={m.coes: .4f} CoVaR={m.covar: .4f} CoETL={m.coetl: .4f}")
    return 0


def cmd_run(args) -> int:
    cfg = pl.load_config(args.config)
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    manifest = pl.run_pipeline(cfg, dry_run=args.dry_run)
    if args.dry_run:
        for key, value in manifest.to_kv().items():
            print(f"{key} = {fio.fmt(value)}")
    else:
        extra = manifest.n_files - manifest.n_artifacts
        note = f" (+{extra} sidecar)" if extra else ""
        print(f"wrote {manifest.n_artifacts} artifacts{note} and manifest.txt to {cfg.output_dir}")
    return 0


def cmd_fixture(args) -> int:
    cfg = pl.write_fixture(args.directory)
    print(f"wrote synthetic fixture and {cfg}")
    return 0


def _panel_opts(p):
    p.add_argument("file")
    p.add_argument("--factors", help="comma-separated factor subset, in output order")
    p.add_argument("--reversed", help="comma-separated sign-reversal set (default: the standard seven)")
    p.add_argument("--first-year", type=int)
    p.add_argument("--last-year", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swbi", description="Well-being index construction, GH-GARCH pricing and tail risk.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    panel = sub.add_parser("panel", help="validate or transform a factor panel").add_subparsers(dest="action", required=True)
    p = panel.add_parser("validate")
    _panel_opts(p)
    p.set_defaults(func=cmd_panel_validate)
    p = panel.add_parser("returns")
    _panel_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_panel_returns)

    index = sub.add_parser("index", help="build the index or run the PCA").add_subparsers(dest="action", required=True)
    for name, fn in (("build", cmd_index_build), ("pca", cmd_index_pca)):
        p = index.add_parser(name)
        p.add_argument("returns")
        p.add_argument("--out", required=True)
        p.add_argument("--exclude-base-year", action="store_true", help="leave the zeroed base year out of the estimates")
        p.set_defaults(func=fn)

    fit = sub.add_parser("fit", help="fit models").add_subparsers(dest="action", required=True)
    p = fit.add_parser("garch")
    p.add_argument("index")
    p.add_argument("--innovations", choices=("normal", "vg", "nig", "gh"), default="vg")
    p.add_argument("--method", choices=("two-stage", "joint"), default="two-stage")
    p.add_argument("--lambda0", type=float, default=0.0)
    p.add_argument("--riskfree", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_garch)

    p = sub.add_parser("simulate", help="stationary return scenarios")
    p.add_argument("--model", required=True)
    p.add_argument("-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("risk", help="summary statistics, VaR and ES of a scenario file")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--levels", default="0.01,0.05,0.10")
    p.add_argument("--out")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("price", help="risk-neutral Monte Carlo option grid")
    p.add_argument("--model", required=True)
    p.add_argument("--I0", type=float, required=True)
    p.add_argument("--strikes", required=True)
    p.add_argument("--maturities", default="1..10")
    p.add_argument("-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--riskfree", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("budget", help="Std and ETL risk budgets")
    p.add_argument("--returns", required=True)
    p.add_argument("--levels", default="0.95,0.99")
    p.add_argument("--exclude-base-year", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("stress", help="CoVaR, CoES and CoETL of the index under stressors")
    p.add_argument("--index", required=True)
    p.add_argument("--stressor", required=True, action="append", help="one-column level file; repeatable")
    p.add_argument("--levels", default="0.01,0.05,0.10")
    p.add_argument("-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--variant", choices=("GH", "VG", "NIG"), default="GH")
    p.add_argument("--bootstrap", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stress)

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the configured output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--dry-run", action="store_true", help="print the planned manifest without writing anything")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fixture", help="write the bundled synthetic inputs and a config")
    p.add_argument("directory")
    p.set_defaults(func=cmd_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

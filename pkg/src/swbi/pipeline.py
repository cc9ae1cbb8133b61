"""Run configuration, file-level step functions and the end-to-end pipeline.

Each step reads its inputs from files and writes one artifact, so the CLI
subcommands and ``run_pipeline`` share a single code path.
"""
from __future__ import annotations

import configparser
import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fio
from .econometrics import GarchModel, ScenarioSet, fit_garch, fit_innovation_law, fit_joint, risk_summary, simulate_stationary
from .errors import SwbiError, ValidationError
from .index import IndexSeries, build_index, pca
from .panel import DEFAULT_REVERSED, PanelConfig, ReturnPanel, load_panel, read_table, to_log_returns
from .pricing import GRID_COLUMNS, price_options, simulate_riskneutral_horizons
from .riskbudget import risk_budget_table
from .stress import REPORT_COLUMNS, run_stress

log = logging.getLogger(__name__)

STEPS = ("panel", "index", "fit", "simulate", "risk", "price", "budget", "stress")
STOCHASTIC = ("simulate", "price", "stress")
DATA_DIR = Path(__file__).resolve().parent / "data"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- file-level readers ------------------------------------------------------


def write_returns(path, rp: ReturnPanel, source: str = "") -> Path:
    rows = [[int(y), *rp.returns[:, t]] for t, y in enumerate(rp.years)]
    prov = {"kind": "log-returns", "source": source, "reversed": ";".join(n for n, f in zip(rp.factor_names, rp.reverse_sign) if f)}
    return fio.write_table(path, ["year", *rp.factor_names], rows, prov)


def read_returns(path) -> ReturnPanel:
    names, years, values = read_table(path)
    prov = fio.read_provenance(path)
    rev = set(filter(None, prov.get("reversed", "").split(";")))
    flags = np.array([n in rev for n in names])
    return ReturnPanel(tuple(names), np.array(years), values, flags)


def write_index(path, ix: IndexSeries, source: str = "") -> tuple[Path, Path]:
    prov = {"kind": "index", "source": source, "base_year": int(ix.years[0]), "include_base_year": ix.include_base_year}
    out = fio.write_table(path, ["year", "value"], [[int(y), v] for y, v in zip(ix.years, ix.r)], prov)
    meta = {"m": ix.m, "s": ix.s}
    for name, mi, si in zip(ix.factor_names, ix.factor_means, ix.factor_scales):
        meta[f"m.{name}"] = mi
        meta[f"s.{name}"] = si
    side = fio.write_kv(Path(str(path) + ".meta"), meta, {"kind": "index metadata"})
    return out, side


def read_index(path) -> tuple[np.ndarray, np.ndarray]:
    """(years, values); the first row is the base year."""
    cols = fio.read_columns(path)
    if "year" not in cols or "value" not in cols:
        raise ValidationError(f"{path}: expected columns year,value")
    return cols["year"].astype(int), cols["value"]


def active_index(path) -> tuple[np.ndarray, np.ndarray]:
    """Index years and returns without the base-year row."""
    years, values = read_index(path)
    if values.size < 2:
        raise ValidationError(f"{path}: index has no observations after the base year")
    return years[1:], values[1:]


def write_model(path, model: GarchModel, extra: dict | None = None) -> Path:
    return fio.write_kv(path, model.to_dict(), {"kind": "garch model", **(extra or {})})


def read_model(path) -> GarchModel:
    return GarchModel.from_dict(fio.read_kv(path))


def write_scenarios(path, s: ScenarioSet) -> Path:
    prov = {"kind": s.kind, "seed": s.seed if s.seed is not None else "none", "n": len(s), **s.provenance}
    return fio.write_values(path, s.draws, prov)


def read_scenarios(path) -> ScenarioSet:
    prov = fio.read_provenance(path)
    kind = prov.pop("kind", "return")
    seed = prov.pop("seed", "none")
    prov.pop("n", None)
    return ScenarioSet(fio.read_values(path), None if seed == "none" else int(seed), prov, kind)


def stressor_returns(path, years: np.ndarray) -> tuple[str, np.ndarray]:
    """Log-returns of a one-column level file, aligned to ``years`` (each needs the prior year)."""
    names, yrs, vals = read_table(path)
    if len(names) != 1:
        raise ValidationError(f"{path}: a stressor file has one value column, found {len(names)}")
    level = dict(zip(yrs, vals[0]))
    out = []
    for y in years:
        a, b = level.get(int(y) - 1), level.get(int(y))
        if a is None or b is None or not (a > 0 and b > 0):
            raise ValidationError(f"{path}: stressor {names[0]!r} needs positive levels for {int(y) - 1} and {int(y)}")
        out.append(math.log(b / a))
    return names[0], np.array(out)


# -- configuration -----------------------------------------------------------


@dataclass
class RunConfig:
    panel: Path | None = None
    stressors: list = field(default_factory=list)
    reversed: tuple = DEFAULT_REVERSED
    factors: tuple | None = None
    first_year: int | None = None
    last_year: int | None = None
    include_base_year: bool = True
    innovations: str = "vg"
    fit_method: str = "two-stage"
    riskfree: float = 0.0
    lambda0: float = 0.0
    I0: float = 100.0
    strikes: list = field(default_factory=lambda: [80.0, 90.0, 100.0, 110.0, 120.0])
    maturities: list = field(default_factory=lambda: list(range(1, 11)))
    seed: int | None = None
    n_scenarios: int = 10_000
    n_paths: int = 10_000
    n_stress: int = 10_000
    n_bootstrap: int = 500
    stress_variant: str = "GH"
    risk_levels: list = field(default_factory=lambda: [0.01, 0.05, 0.10])
    budget_levels: list = field(default_factory=lambda: [0.95, 0.99])
    stress_levels: list = field(default_factory=lambda: [0.01, 0.05, 0.10])
    output_dir: Path = Path("swbi-out")
    steps: tuple = STEPS
    workers: int = 1

    def problems(self) -> list[str]:
        """Every validation problem at once (empty when valid)."""
        errs = []
        unknown = [s for s in self.steps if s not in STEPS]
        if unknown:
            errs.append(f"unknown step(s): {', '.join(unknown)}")
        if self.panel is None:
            errs.append("panel file is not set")
        elif not Path(self.panel).exists():
            errs.append(f"panel file {self.panel} does not exist")
        for s in self.stressors:
            if not Path(s).exists():
                errs.append(f"stressor file {s} does not exist")
        if "stress" in self.steps and not self.stressors:
            errs.append("stress step requested but no stressor files configured")
        if self.innovations.lower() not in ("normal", "vg", "nig", "gh"):
            errs.append(f"innovations must be normal, vg, nig or gh, got {self.innovations!r}")
        if self.fit_method not in ("two-stage", "joint"):
            errs.append(f"fit method must be two-stage or joint, got {self.fit_method!r}")
        if self.stress_variant.upper() not in ("GH", "VG", "NIG"):
            errs.append(f"stress variant must be GH, VG or NIG, got {self.stress_variant!r}")
        needs_seed = [s for s in self.steps if s in STOCHASTIC]
        if needs_seed and self.seed is None:
            errs.append(f"seed is required for stochastic step(s): {', '.join(needs_seed)}")
        for name in ("n_scenarios", "n_paths", "n_stress", "workers"):
            if getattr(self, name) < 1:
                errs.append(f"{name} must be >= 1")
        if "stress" in self.steps and self.n_stress < 10_000:
            errs.append("stress n must be >= 10000")
        for name in ("risk_levels", "budget_levels", "stress_levels"):
            vals = getattr(self, name)
            if not vals or any(not 0 < q < 1 for q in vals):
                errs.append(f"{name} must be non-empty and inside (0, 1)")
        if not self.I0 > 0:
            errs.append("I0 must be positive")
        if not self.strikes or any(k < 0 for k in self.strikes):
            errs.append("strikes must be non-negative")
        if not self.maturities or any(t < 0 for t in self.maturities):
            errs.append("maturities must be >= 0")
        return errs

    def validate(self) -> None:
        errs = self.problems()
        if errs:
            raise ValidationError("invalid configuration:\n  - " + "\n  - ".join(errs))

    def canonical(self) -> str:
        """Deterministic text form for hashing; paths by content digest, output dir excluded."""
        lines = []
        for k in sorted(self.__dataclass_fields__):
            if k == "output_dir":
                continue
            v = getattr(self, k)
            if k == "panel" and v is not None and Path(v).exists():
                v = sha256_file(v)
            elif k == "stressors":
                v = [sha256_file(p) if Path(p).exists() else str(p) for p in v]
            lines.append(f"{k}={v!r}")
        return "\n".join(lines)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _floats(text):
    return fio.parse_floats(text)


def _names(text):
    return tuple(t.strip() for t in str(text).replace(";", ",").split(",") if t.strip())


def load_config(path) -> RunConfig:
    """Read an INI file; relative paths resolve against the file's directory."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    base = path.parent
    cfg = RunConfig()
    errs = []

    def get(section, key, conv, attr):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                setattr(cfg, attr, conv(raw))
            except (ValueError, SwbiError) as exc:
                errs.append(f"[{section}] {key} = {raw!r}: {exc}")

    def as_path(v):
        return (base / v.strip()).resolve()

    get("run", "seed", int, "seed")
    get("run", "output_dir", as_path, "output_dir")
    get("run", "steps", _names, "steps")
    get("run", "workers", int, "workers")
    get("panel", "file", as_path, "panel")
    get("panel", "reversed", _names, "reversed")
    get("panel", "factors", _names, "factors")
    get("panel", "first_year", int, "first_year")
    get("panel", "last_year", int, "last_year")
    get("index", "include_base_year", lambda v: cp.BOOLEAN_STATES[v.lower()], "include_base_year")
    get("fit", "innovations", str, "innovations")
    get("fit", "method", str, "fit_method")
    get("fit", "riskfree", float, "riskfree")
    get("fit", "lambda0", float, "lambda0")
    get("simulate", "n", int, "n_scenarios")
    get("risk", "levels", _floats, "risk_levels")
    get("price", "I0", float, "I0")
    get("price", "strikes", _floats, "strikes")
    get("price", "maturities", lambda v: [int(t) for t in _floats(v)], "maturities")
    get("price", "n", int, "n_paths")
    get("budget", "levels", _floats, "budget_levels")
    get("stress", "files", lambda v: [as_path(p) for p in _names(v)], "stressors")
    get("stress", "levels", _floats, "stress_levels")
    get("stress", "n", int, "n_stress")
    get("stress", "bootstrap", int, "n_bootstrap")
    get("stress", "variant", str, "stress_variant")
    if errs:
        raise ValidationError("invalid configuration:\n  - " + "\n  - ".join(errs))
    return cfg


# -- steps -------------------------------------------------------------------


def step_panel(cfg: RunConfig, out: Path) -> Path:
    pc = PanelConfig(cfg.factors, tuple(cfg.reversed), cfg.first_year, cfg.last_year)
    panel = load_panel(cfg.panel, pc)
    return write_returns(out, to_log_returns(panel), Path(cfg.panel).name)


def step_index(cfg: RunConfig, returns: Path, out: Path) -> tuple[Path, Path]:
    ix = build_index(read_returns(returns), include_base_year=cfg.include_base_year)
    return write_index(out, ix, returns.name)


def fit_model_file(
    index_file, innovations: str, out, *, lambda0=0.0, riskfree=0.0, method: str = "two-stage"
) -> tuple[Path, GarchModel, dict]:
    _, r = active_index(index_file)
    extra = {"source": Path(index_file).name, "method": method}
    if method == "joint" and innovations.lower() != "normal":
        model, rep = fit_joint(r, innovations.upper(), lambda0=lambda0, riskfree=riskfree)
    else:
        model = fit_garch(r, lambda0=lambda0, riskfree=riskfree)
        rep = None
        if innovations.lower() != "normal":
            model, ll, rep = fit_innovation_law(model, r, innovations.upper())
            extra["innovation_loglik"] = ll
    if rep is not None:
        extra.update(
            ks_statistic=rep.ks_statistic,
            ks_pvalue=rep.ks_pvalue,
            ad_statistic=rep.ad_statistic,
            ad_pvalue=rep.ad_pvalue,
        )
    return write_model(out, model, extra), model, extra


def risk_rows(summary) -> list:
    return [[k, v] for k, v in summary.rows()]


def price_file(model: GarchModel, I0, strikes, maturities, n, seed, out, workers=1):
    sets = simulate_riskneutral_horizons(model, maturities, n, I0, seed, workers=workers)
    grid = price_options(sets, strikes, riskfree=model.riskfree, I0=I0)
    prov = {"kind": "option grid", "I0": I0, "riskfree": model.riskfree, "n_paths": n, "seed": seed}
    return fio.write_table(out, GRID_COLUMNS, grid.rows(), prov), grid


def budget_file(returns: ReturnPanel, levels, out, include_base_year=True):
    table = risk_budget_table(returns, None, levels, include_base_year=include_base_year)
    prov = {"kind": "risk budget", "weights": "equal", "observations": returns.years.size - (0 if include_base_year else 1)}
    prov.update({f"total_{k}": v for k, v in table.totals().items()})
    return fio.write_table(out, ["factor", *table.columns], table.rows(), prov), table


def stress_reports(index_file, stressor_files, levels, n, seed, *, variant="GH", n_boot=500):
    years, y = active_index(index_file)
    reports = []
    for f in stressor_files:
        name, x = stressor_returns(f, years)
        reports.append(run_stress(y, x, name=name, variant=variant, levels=levels, n=n, seed=seed, n_boot=n_boot))
    return reports


def write_stress(out, reports) -> Path:
    rows = []
    prov = {"kind": "stress report"}
    for rep in reports:
        prov[f"{rep.stressor}.correlation"] = rep.correlation
        prov[f"{rep.stressor}.n_observed"] = rep.n_observed
        prov[f"{rep.stressor}.monotone"] = rep.monotone
        if rep.fit is None:
            prov[f"{rep.stressor}.fit"] = "collinear pair, affine map of a univariate fit"
        else:
            for k, v in rep.fit.params.to_dict().items():
                prov[f"{rep.stressor}.fit.{k}"] = v
        for row in rep.rows():
            rows.append([rep.stressor, *row, rep.n_draws, rep.seed])
    return fio.write_table(out, ["stressor", *REPORT_COLUMNS, "n_draws", "seed"], rows, prov)


ARTIFACTS = {
    "panel": "returns.csv",
    "index": "index.csv",
    "fit": "model.txt",
    "simulate": "scenarios.txt",
    "risk": "risk.csv",
    "price": "options.csv",
    "budget": "budget.csv",
    "stress": "stress.csv",
}


def _plan(cfg: RunConfig) -> list[dict]:
    inputs = {
        "panel": [cfg.panel],
        "index": ["returns.csv"],
        "fit": ["index.csv"],
        "simulate": ["model.txt"],
        "risk": ["scenarios.txt"],
        "price": ["model.txt"],
        "budget": ["returns.csv"],
        "stress": ["index.csv", *cfg.stressors],
    }
    seeds = {s: cfg.seed for s in STOCHASTIC}
    return [
        {"name": s, "inputs": [Path(p).name for p in inputs[s]], "output": ARTIFACTS[s], "seed": seeds.get(s)}
        for s in STEPS
        if s in cfg.steps
    ]


@dataclass
class RunManifest:
    version: str
    config_hash: str
    steps: list  # dicts: name, inputs {name: digest}, outputs {name: digest}, seed
    seed: int | None
    dry_run: bool = False

    def to_kv(self) -> dict:
        d = {"tool_version": self.version, "config_hash": self.config_hash, "seed": self.seed if self.seed is not None else "none",
             "dry_run": self.dry_run, "steps": ",".join(s["name"] for s in self.steps)}
        for s in self.steps:
            for k, v in s.get("inputs", {}).items():
                d[f"{s['name']}.input.{k}"] = v
            for k, v in s.get("outputs", {}).items():
                d[f"{s['name']}.output.{k}"] = v
            if s.get("seed") is not None:
                d[f"{s['name']}.seed"] = s["seed"]
        return d

    def write(self, path) -> Path:
        return fio.write_kv(path, self.to_kv(), {"kind": "run manifest"})

    @property
    def n_artifacts(self) -> int:
        """One primary artifact per executed step."""
        return sum(1 for s in self.steps if s.get("outputs"))

    @property
    def n_files(self) -> int:
        """All written outputs, including sidecars."""
        return sum(len(s.get("outputs", {})) for s in self.steps)


def run_pipeline(cfg: RunConfig, *, dry_run: bool = False) -> RunManifest:
    """Execute panel -> index -> fit -> simulate -> risk -> price -> budget -> stress.

    Writes one artifact per step (the index step adds a metadata sidecar,
    which the manifest records as an extra output) and ``manifest.txt``.
    """
    cfg.validate()
    plan = _plan(cfg)
    if dry_run:
        steps = [{"name": p["name"], "inputs": {i: "planned" for i in p["inputs"]}, "outputs": {p["output"]: "planned"},
                  "seed": p["seed"]} for p in plan]
        return RunManifest(__version__, cfg.hash(), steps, cfg.seed, dry_run=True)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    f = {k: out / v for k, v in ARTIFACTS.items()}
    steps = []
    for p in plan:
        name = p["name"]
        log.info("step %s", name)
        try:
            extra = None
            if name == "panel":
                step_panel(cfg, f["panel"])
            elif name == "index":
                _, extra = step_index(cfg, f["panel"], f["index"])
            elif name == "fit":
                fit_model_file(
                    f["index"], cfg.innovations, f["fit"], lambda0=cfg.lambda0, riskfree=cfg.riskfree, method=cfg.fit_method
                )
            elif name == "simulate":
                s = simulate_stationary(read_model(f["fit"]), cfg.n_scenarios, cfg.seed, workers=cfg.workers)
                write_scenarios(f["simulate"], s)
            elif name == "risk":
                summary = risk_summary(read_scenarios(f["simulate"]), cfg.risk_levels)
                fio.write_table(f["risk"], ["statistic", "value"], risk_rows(summary), {"kind": "risk summary", "n": summary.n})
            elif name == "price":
                price_file(read_model(f["fit"]), cfg.I0, cfg.strikes, cfg.maturities, cfg.n_paths, cfg.seed, f["price"], cfg.workers)
            elif name == "budget":
                budget_file(read_returns(f["panel"]), cfg.budget_levels, f["budget"], cfg.include_base_year)
            elif name == "stress":
                reps = stress_reports(f["index"], cfg.stressors, cfg.stress_levels, cfg.n_stress, cfg.seed,
                                      variant=cfg.stress_variant, n_boot=cfg.n_bootstrap)
                write_stress(f["stress"], reps)
        except SwbiError as exc:
            exc.args = (f"step {name!r} failed: {exc}",) + exc.args[1:]
            raise
        in_paths = [cfg.panel] if name == "panel" else [out / i for i in p["inputs"] if (out / i).exists()]
        if name == "stress":
            in_paths = [f["index"], *cfg.stressors]
        outputs = {p["output"]: sha256_file(out / p["output"])}
        if extra is not None:
            outputs[Path(extra).name] = sha256_file(extra)
        steps.append({"name": name, "inputs": {Path(i).name: sha256_file(i) for i in in_paths}, "outputs": outputs,
                      "seed": p["seed"]})
    manifest = RunManifest(__version__, cfg.hash(), steps, cfg.seed)
    manifest.write(out / "manifest.txt")
    return manifest


FIXTURE_CONFIG = """\
# Pipeline configuration for the bundled synthetic fixture.
[run]
seed = 20240521
output_dir = out

[panel]
file = panel.csv

[fit]
innovations = vg
riskfree = 0.0
lambda0 = 0.0

[simulate]
n = 10000

[risk]
levels = 0.01,0.05,0.10

[price]
I0 = 100
strikes = 80,90,100,110,120
maturities = 1..10
n = 10000

[budget]
levels = 0.95,0.99

[stress]
files = trade.csv, immig.csv
levels = 0.01,0.05,0.10
n = 200000
bootstrap = 200
"""


def write_fixture(directory) -> Path:
    """Copy the bundled synthetic inputs and a matching config into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name in ("panel.csv", "trade.csv", "immig.csv"):
        (d / name).write_bytes((DATA_DIR / name).read_bytes())
    cfg = d / "swbi.ini"
    cfg.write_text(FIXTURE_CONFIG)
    return cfg

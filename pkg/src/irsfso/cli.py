"""Command-line front end: config-driven pipelines writing CSV or JSON tables.

Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from ._backend import BACKEND
from .channel import dbm_to_watt, outage_analytic, outage_lower_bound, watt_to_dbm
from .config import (COMMANDS, FORMATS, ScenarioConfig, build_budget, build_pointing, build_turbulence,
                     load_config)
from .diffraction import (HfOptions, compare_profiles, geometric_optics_profile, huygens_fresnel_profile,
                          match_power)
from .errors import ConfigError, IrsFsoError
from .irs_phase import design_focus
from .montecarlo import McEstimate, simulate_outage_curve
from .pointing import hp, hp_exact

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
MC_MIN_FAILURES = 10


@dataclass
class ResultTable:
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(f"row {i} has {len(row)} cells for {len(self.columns)} columns")

    def column(self, name):
        j = self.columns.index(name)
        return [row[j] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# irsfso {self.metadata.get('version', __version__)} backend={BACKEND}\n")
        for key, val in self.metadata.items():
            if key != "version":
                buf.write(f"# {key}={val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[None if isinstance(v, float) and not math.isfinite(v) else v for v in row] for row in self.rows]
        return json.dumps({"metadata": self.metadata, "columns": self.columns, "rows": rows}, indent=1) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _metadata(cfg: ScenarioConfig, **extra):
    meta = {"version": __version__, "command": cfg.command, "config_sha256": cfg.sha256,
            "seed": cfg.mc.seed if cfg.mc is not None else "none"}
    if cfg.mc is not None:
        meta["trials"] = cfg.mc.n_trials
    meta.update(extra)
    return meta


def run_phase_profile(cfg: ScenarioConfig) -> ResultTable:
    design = design_focus(cfg.geometry, cfg.beam, cfg.focus_w_l)
    y = cfg.sweep_values
    psi = np.atleast_1d(design.profile(y))
    wrapped = np.pi - np.mod(np.pi - psi, 2.0 * np.pi)
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(y, psi, wrapped)]
    return ResultTable(["y_m", "delta_psi_rad", "delta_psi_wrapped_rad"], rows,
                       _metadata(cfg, w_tilde0_m=repr(design.w_tilde0), d_f_m=repr(design.d_f)))


def run_field_profile(cfg: ScenarioConfig) -> ResultTable:
    design = design_focus(cfg.geometry, cfg.beam, cfg.focus_w_l)
    grid = cfg.sweep_values
    opts = HfOptions(obliquity=cfg.obliquity)
    hf = huygens_fresnel_profile(grid, design.geometry, cfg.beam, design.profile, opts, workers=cfg.workers)
    go = geometric_optics_profile(grid, design.geometry, cfg.beam, design.w_tilde0)
    meta = _metadata(cfg, w_tilde0_m=repr(design.w_tilde0), d_f_m=repr(design.d_f), w_rx_m=repr(design.w_rx))
    if np.any(np.abs(grid) <= design.w_rx) and hf.power() > 0:
        meta["rms_rel_dev_within_w_rx"] = repr(compare_profiles(match_power(hf, go), go, design.w_rx))
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(grid, hf.density, go.density)]
    return ResultTable(["y_tilde_m", "density_hf", "density_go"], rows, meta)


def run_pointing_curve(cfg: ScenarioConfig) -> ResultTable:
    base = cfg.pointing
    ratios = cfg.grid.get("w_l_over_al", [base.ratio])
    models = cfg.grid.get("model", [None] * len(ratios))
    u = cfg.sweep_values * base.a_l

    def one(item):
        ratio, model = item
        sc = replace(base, w_l=ratio * base.a_l, model=model or base.model)
        m = sc.resolved_model
        return ratio, m, hp_exact(u, sc), np.atleast_1d(hp(u, sc, m))

    rows = []
    for ratio, m, ex, mod in _map(one, list(zip(ratios, models)), cfg.workers):
        for uu, e, h in zip(cfg.sweep_values, ex, mod):
            rows.append([float(ratio), float(uu), float(e), float(h), m])
    return ResultTable(["w_l_over_al", "u_over_al", "hp_exact", "hp_model", "model"], rows, _metadata(cfg))


def _power_grid(cfg: ScenarioConfig):
    if cfg.sweep_axis == "pt_dbm":
        return dbm_to_watt(cfg.sweep_values)
    if cfg.sweep_axis == "pt_w":
        return np.asarray(cfg.sweep_values, dtype=float)
    return np.array([cfg.budget.p_t])


def _analytic_or_nan(budget, turb, pointing):
    if pointing.resolved_model == "exact":
        return math.nan
    return outage_analytic(budget, turb, pointing)


def _scenario_rows(cfg: ScenarioConfig, budget, turb, pointing, with_mc: bool, sigma_label=None):
    """(pt_dbm, sigma_u_over_al, analytic, mc estimate or None) for every sweep point."""
    out = []
    if sigma_label is None:
        sigma_label = _sigma_label(cfg, pointing)
    if cfg.sweep_axis == "sigma_u_over_al":
        for s in cfg.sweep_values:
            sc = replace(pointing, sigma_u=float(s) * pointing.a_l)
            est = simulate_outage_curve(budget, turb, sc, cfg.mc, [budget.p_t])[0] if with_mc else None
            out.append((float(watt_to_dbm(budget.p_t)), float(s), _analytic_or_nan(budget, turb, sc), est))
        return out
    powers = _power_grid(cfg)
    ests = simulate_outage_curve(budget, turb, pointing, cfg.mc, powers) if with_mc else [None] * len(powers)
    for p, est in zip(powers, ests):
        b = budget.with_power(float(p))
        out.append((float(watt_to_dbm(p)), sigma_label, _analytic_or_nan(b, turb, pointing), est))
    return out


def _sigma_label(cfg: ScenarioConfig, pointing):
    """sigma_u / a_l as written in the config when it was given that way."""
    v = cfg.raw.get("pointing", {}).get("sigma_u_over_al")
    return float(v) if v is not None else pointing.sigma_u / pointing.a_l


def _floor(pointing):
    return outage_lower_bound(pointing) if pointing.resolved_model == "indicator" else math.nan


def run_outage(cfg: ScenarioConfig) -> ResultTable:
    rows = []
    for pt, s, pa, _ in _scenario_rows(cfg, cfg.budget, cfg.turbulence, cfg.pointing, False):
        sc = replace(cfg.pointing, sigma_u=s * cfg.pointing.a_l)
        rows.append([pt, s, pa, _floor(sc)])
    return ResultTable(["pt_dbm", "sigma_u_over_al", "pout_analytic", "pout_floor"], rows,
                       _metadata(cfg, model=cfg.pointing.resolved_model, turbulence=cfg.turbulence.kind))


def _mc_cells(est: McEstimate | None):
    if est is None:
        return [math.nan, math.nan, 0]
    return [est.p_out_hat, est.std_error, int(est.failures >= MC_MIN_FAILURES
                                              and est.n_trials - est.failures >= MC_MIN_FAILURES)]


def run_montecarlo(cfg: ScenarioConfig) -> ResultTable:
    rows = []
    for pt, s, pa, est in _scenario_rows(cfg, cfg.budget, cfg.turbulence, cfg.pointing, True):
        rows.append([pt, s, pa, *_mc_cells(est)])
    return ResultTable(["pt_dbm", "sigma_u_over_al", "pout_analytic", "pout_mc", "mc_stderr", "mc_resolvable"],
                       rows, _metadata(cfg, model=cfg.mc.model or cfg.pointing.resolved_model,
                                       turbulence=cfg.turbulence.kind))


def grid_points(cfg: ScenarioConfig):
    """Cartesian product of the grid factors, in row-major order."""
    raw = cfg.raw
    weathers = cfg.grid.get("weather", [None])
    sigmas = cfg.grid.get("sigma_u_over_al", [None])
    ratios = cfg.grid.get("w_l_over_al", [None])
    models = cfg.grid.get("model", [None] * len(ratios))
    points = []
    for weather, sig, (ratio, model) in itertools.product(weathers, sigmas, list(zip(ratios, models))):
        pointing = build_pointing(raw, sigma_u_over_al=sig, w_l_over_al=ratio, model=model)
        labels = (sig if sig is not None else _sigma_label(cfg, pointing),
                  ratio if ratio is not None else pointing.ratio)
        points.append((weather, labels, pointing, build_turbulence(raw, weather), build_budget(raw, weather)))
    return points


def run_sweep(cfg: ScenarioConfig) -> ResultTable:
    with_mc = cfg.mc is not None
    # grid points run in parallel; the Monte Carlo inside each stays single-threaded
    inner = replace(cfg, mc=replace(cfg.mc, workers=1)) if with_mc and cfg.workers > 1 else cfg

    def one(point):
        weather, labels, pointing, turb, budget = point
        return point, _scenario_rows(inner, budget, turb, pointing, with_mc, float(labels[0]))

    cols = ["weather", "w_l_over_al", "sigma_u_over_al", "model", "pt_dbm", "pout_analytic"]
    if with_mc:
        cols += ["pout_mc", "mc_stderr", "mc_resolvable"]
    rows = []
    for (weather, labels, pointing, turb, _), res in _map(one, grid_points(cfg), cfg.workers):
        label = weather if weather is not None else turb.kind
        for pt, s, pa, est in res:
            row = [label, float(labels[1]), s, pointing.resolved_model, pt, pa]
            if with_mc:
                row += _mc_cells(est)
            rows.append(row)
    return ResultTable(cols, rows, _metadata(cfg))


PIPELINES = {
    "phase-profile": run_phase_profile,
    "field-profile": run_field_profile,
    "pointing-curve": run_pointing_curve,
    "outage": run_outage,
    "montecarlo": run_montecarlo,
    "sweep": run_sweep,
}


def execute(cfg: ScenarioConfig) -> ResultTable:
    return PIPELINES[cfg.command](cfg)


def run_scenario(config_path: str, command: str | None = None, seed: int | None = None,
                 trials: int | None = None, out: str | None = None, fmt: str | None = None):
    """Load, run and write one scenario. Returns ``(table or None, exit_code)``."""
    try:
        cfg = load_config(config_path, command, seed, trials)
    except ConfigError as exc:
        print(f"irsfso: config error: {exc}", file=sys.stderr)
        return None, EXIT_CONFIG
    try:
        table = execute(cfg)
    except ConfigError as exc:
        print(f"irsfso: config error: {exc}", file=sys.stderr)
        return None, EXIT_CONFIG
    except (IrsFsoError, ArithmeticError) as exc:
        print(f"irsfso: numeric failure in {type(exc).__module__}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return None, EXIT_NUMERIC
    text = table.render(fmt or cfg.output_format)
    dest = out or cfg.output_path
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return table, EXIT_OK


def _positive_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="TOML scenario file, or preset:NAME for a bundled preset")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--seed", type=_positive_int, help="Monte Carlo seed (overrides the config)")
    common.add_argument("--trials", type=_positive_int, help="Monte Carlo trial count (overrides the config)")
    common.add_argument("--format", choices=FORMATS, help="output format (default: csv or output.format)")
    parser = argparse.ArgumentParser(prog="irsfso", description="IRS-assisted FSO link simulation")
    parser.add_argument("--version", action="version", version=f"irsfso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "phase-profile": "IRS phase-shift profile across the surface",
        "field-profile": "Huygens-Fresnel vs geometric-optics receiver profile",
        "pointing-curve": "pointing loss h_p versus displacement",
        "outage": "analytic outage probability",
        "montecarlo": "Monte Carlo outage estimate alongside the analytic value",
        "sweep": "grid of weather, jitter and beam-width cases over a power sweep",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _, code = run_scenario(args.config, args.command, args.seed, args.trials, args.out, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Scenario configuration: TOML schema, validation and presets.

A config is a TOML document with the sections below. Only strings,
numbers, booleans and arrays are used. Every problem is reported as a
:class:`ConfigError` naming the offending ``section.key``.

    [run]        command, workers
    [beam]       w0, wavelength
    [geometry]   theta_i, theta_r (rad) or theta_i_deg, theta_r_deg; d_t2r, d_r2l, a_r
    [focus]      w_l (omit for full focus), obliquity
    [pointing]   a_l; w_l or w_l_over_al; sigma_u or sigma_u_over_al; model
    [turbulence] weather, or kind with sigma_r2 or cn2 (and optional d_e2e)
    [budget]     h_l or (sigma_att, z) or weather; pt_dbm or pt_w; r0, n0, eta
    [sweep]      axis; values or (start, stop, num)
    [grid]       weather, sigma_u_over_al, w_l_over_al, model (paired with w_l_over_al)
    [mc]         trials, seed, workers, model, chunk_size
    [output]     path, format
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .beam_optics import BeamParams
from .channel import LinkBudget, TurbulenceModel, dbm_to_watt
from .errors import ConfigError, DomainError
from .irs_phase import IrsGeometry
from .montecarlo import McConfig, default_workers
from .pointing import MODELS, PointingScenario

COMMANDS = ("phase-profile", "field-profile", "pointing-curve", "outage", "montecarlo", "sweep")
FORMATS = ("csv", "json")

# visibility 10 km / 0.5 km; both evaluated at 1550 nm over 1 km
WEATHER = {
    "clear": {"visibility_km": 10.0, "h_l": 0.9, "cn2": 5e-14, "kind": "lognormal"},
    "fog": {"visibility_km": 0.5, "h_l": 0.08, "cn2": 0.5e-14, "kind": "gamma_gamma"},
}

SCHEMA = {
    "run": {"command": str, "workers": int},
    "beam": {"w0": float, "wavelength": float},
    "geometry": {"theta_i": float, "theta_r": float, "theta_i_deg": float, "theta_r_deg": float,
                 "d_t2r": float, "d_r2l": float, "a_r": (float, str)},
    "focus": {"w_l": float, "obliquity": bool},
    "pointing": {"a_l": float, "w_l": float, "w_l_over_al": float, "sigma_u": float,
                 "sigma_u_over_al": float, "model": str},
    "turbulence": {"weather": str, "kind": str, "sigma_r2": float, "cn2": float, "d_e2e": float},
    "budget": {"h_l": float, "sigma_att": float, "z": float, "weather": str, "pt_dbm": float,
               "pt_w": float, "r0": float, "n0": float, "eta": float},
    "sweep": {"axis": str, "values": list, "start": float, "stop": float, "num": int},
    "grid": {"weather": list, "sigma_u_over_al": list, "w_l_over_al": list, "model": list},
    "mc": {"trials": int, "seed": int, "workers": int, "model": str, "chunk_size": int},
    "output": {"path": str, "format": str},
}

GRID_FACTORS = {
    "phase-profile": (),
    "field-profile": (),
    "pointing-curve": ("w_l_over_al", "model"),
    "outage": (),
    "montecarlo": (),
    "sweep": ("weather", "sigma_u_over_al", "w_l_over_al", "model"),
}

AXES = {
    "phase-profile": ("y",),
    "field-profile": ("y_tilde",),
    "pointing-curve": ("u_over_al",),
    "outage": ("pt_dbm", "pt_w", "sigma_u_over_al"),
    "montecarlo": ("pt_dbm", "pt_w", "sigma_u_over_al"),
    "sweep": ("pt_dbm", "pt_w"),
}


@dataclass
class ScenarioConfig:
    raw: dict
    source: str
    command: str | None = None
    workers: int = 1
    beam: BeamParams | None = None
    geometry: IrsGeometry | None = None
    focus_w_l: float | None = None
    obliquity: bool = True
    pointing: PointingScenario | None = None
    turbulence: TurbulenceModel | None = None
    budget: LinkBudget | None = None
    sweep_axis: str | None = None
    sweep_values: np.ndarray | None = None
    grid: dict = field(default_factory=dict)
    mc: McConfig | None = None
    output_path: str | None = None
    output_format: str = "csv"

    @property
    def sha256(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON form of a parsed config."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dump_config(raw: dict) -> str:
    import tomli_w
    return tomli_w.dumps(raw)


def preset_names():
    return sorted(p.name[:-5] for p in resources.files("irsfso.presets").iterdir() if p.name.endswith(".toml"))


def read_config_text(spec: str):
    """Return (text, source) for a file path or ``preset:NAME``."""
    if spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        res = resources.files("irsfso.presets") / f"{name}.toml"
        if not res.is_file():
            raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}", "config")
        return res.read_text(encoding="utf-8"), spec
    path = Path(spec)
    try:
        return path.read_text(encoding="utf-8"), str(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", "config") from None


def _check_schema(raw: dict):
    for sec, body in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", sec)
        if not isinstance(body, dict):
            raise ConfigError("expected a table", sec)
        for key, val in body.items():
            want = SCHEMA[sec].get(key)
            path = f"{sec}.{key}"
            if want is None:
                raise ConfigError("unknown key", path)
            types = want if isinstance(want, tuple) else (want,)
            ok = False
            for t in types:
                if t is float and isinstance(val, (int, float)) and not isinstance(val, bool):
                    ok = True
                elif t is int and isinstance(val, int) and not isinstance(val, bool):
                    ok = True
                elif t in (str, bool, list) and isinstance(val, t):
                    ok = True
            if not ok:
                raise ConfigError(f"expected {' or '.join(t.__name__ for t in types)}, got {type(val).__name__}", path)


def _get(raw, sec, key, default=None):
    return raw.get(sec, {}).get(key, default)


def _need(raw, sec, key):
    v = _get(raw, sec, key)
    if v is None:
        raise ConfigError("required key missing", f"{sec}.{key}")
    return v


def _one_of(raw, sec, keys, required=True):
    present = [k for k in keys if _get(raw, sec, k) is not None]
    if len(present) > 1:
        raise ConfigError(f"give only one of {', '.join(keys)}", f"{sec}.{present[1]}")
    if not present:
        if required:
            raise ConfigError(f"one of {', '.join(keys)} is required", f"{sec}.{keys[0]}")
        return None, None
    return present[0], raw[sec][present[0]]


def _build(path, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None


def weather_params(name: str, path: str):
    try:
        return WEATHER[name]
    except KeyError:
        raise ConfigError(f"unknown weather {name!r}; expected one of {sorted(WEATHER)}", path) from None


def build_beam(raw):
    return _build("beam", BeamParams, float(_need(raw, "beam", "w0")), float(_need(raw, "beam", "wavelength")))


def build_geometry(raw):
    ang = {}
    for name in ("theta_i", "theta_r"):
        key, val = _one_of(raw, "geometry", (name, name + "_deg"))
        ang[name] = math.radians(val) if key.endswith("_deg") else float(val)
    a_r = _get(raw, "geometry", "a_r", math.inf)
    if isinstance(a_r, str):
        if a_r.strip().lower() not in ("inf", "infinity"):
            raise ConfigError("a_r must be a number or \"inf\"", "geometry.a_r")
        a_r = math.inf
    return _build("geometry", IrsGeometry, ang["theta_i"], ang["theta_r"],
                  float(_need(raw, "geometry", "d_t2r")), float(_need(raw, "geometry", "d_r2l")), float(a_r))


def build_pointing(raw, sigma_u_over_al=None, w_l_over_al=None, model=None):
    a_l = float(_need(raw, "pointing", "a_l"))
    if w_l_over_al is None:
        key, val = _one_of(raw, "pointing", ("w_l", "w_l_over_al"))
        w_l = val * a_l if key == "w_l_over_al" else float(val)
    else:
        w_l = w_l_over_al * a_l
    if sigma_u_over_al is None:
        key, val = _one_of(raw, "pointing", ("sigma_u", "sigma_u_over_al"))
        sigma_u = val * a_l if key == "sigma_u_over_al" else float(val)
    else:
        sigma_u = sigma_u_over_al * a_l
    model = model or _get(raw, "pointing", "model", "auto")
    return _build("pointing", PointingScenario, w_l, a_l, sigma_u, model)


def _default_distance(raw):
    if "geometry" in raw and "d_t2r" in raw["geometry"] and "d_r2l" in raw["geometry"]:
        return float(raw["geometry"]["d_t2r"]) + float(raw["geometry"]["d_r2l"])
    return None


def build_turbulence(raw, weather=None):
    wavelength = float(_need(raw, "beam", "wavelength"))
    d = _get(raw, "turbulence", "d_e2e") or _default_distance(raw)
    if weather is None:
        weather = _get(raw, "turbulence", "weather")
    if weather is not None:
        w = weather_params(weather, "turbulence.weather")
        if d is None:
            raise ConfigError("path length needed: give turbulence.d_e2e or geometry distances", "turbulence.d_e2e")
        return _build("turbulence", TurbulenceModel.from_cn2, w["kind"], w["cn2"], wavelength, d)
    kind = _need(raw, "turbulence", "kind")
    key, val = _one_of(raw, "turbulence", ("sigma_r2", "cn2"))
    if key == "sigma_r2":
        return _build("turbulence", TurbulenceModel, kind, float(val))
    if d is None:
        raise ConfigError("path length needed for cn2", "turbulence.d_e2e")
    return _build("turbulence", TurbulenceModel.from_cn2, kind, float(val), wavelength, d)


def build_budget(raw, weather=None, p_t=None):
    sec = "budget"
    if p_t is None:
        key, val = _one_of(raw, sec, ("pt_dbm", "pt_w"), required=False)
        if key is None:
            p_t = 1e-3
        else:
            p_t = float(dbm_to_watt(val)) if key == "pt_dbm" else float(val)
    common = dict(p_t=p_t, r0=float(_get(raw, sec, "r0", 1.0)), n0=float(_get(raw, sec, "n0", 1e-12)),
                  eta=float(_get(raw, sec, "eta", 1.0)))
    if weather is None:
        weather = _get(raw, sec, "weather")
    if weather is not None and _get(raw, sec, "h_l") is None and _get(raw, sec, "sigma_att") is None:
        return _build(sec, LinkBudget, h_l=weather_params(weather, "budget.weather")["h_l"], **common)
    if _get(raw, sec, "h_l") is not None:
        if _get(raw, sec, "sigma_att") is not None or _get(raw, sec, "z") is not None:
            raise ConfigError("give h_l or (sigma_att, z), not both", "budget.h_l")
        return _build(sec, LinkBudget, h_l=float(raw[sec]["h_l"]), **common)
    return _build(sec, LinkBudget, sigma_att=float(_need(raw, sec, "sigma_att")),
                  z=float(_need(raw, sec, "z")), **common)


def _sweep(raw, command):
    if "sweep" not in raw:
        raise ConfigError("a [sweep] section is required", "sweep")
    axis = _need(raw, "sweep", "axis")
    if axis not in AXES[command]:
        raise ConfigError(f"axis {axis!r} not valid for {command}; expected one of {AXES[command]}", "sweep.axis")
    has_values = _get(raw, "sweep", "values") is not None
    has_range = any(_get(raw, "sweep", k) is not None for k in ("start", "stop", "num"))
    if has_values and has_range:
        raise ConfigError("conflicting sweep definitions: values and start/stop/num", "sweep.values")
    if has_values:
        vals = raw["sweep"]["values"]
        if not vals or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ConfigError("values must be a non-empty numeric array", "sweep.values")
        vals = np.array(vals, dtype=float)
    else:
        num = int(_need(raw, "sweep", "num"))
        if num < 1:
            raise ConfigError("num must be >= 1", "sweep.num")
        vals = np.linspace(float(_need(raw, "sweep", "start")), float(_need(raw, "sweep", "stop")), num)
    if not np.all(np.isfinite(vals)):
        raise ConfigError("sweep values must be finite", "sweep.values")
    if axis in raw.get("grid", {}):
        raise ConfigError(f"conflicting sweep definitions: {axis} is both the sweep axis and a grid factor",
                          f"grid.{axis}")
    return axis, vals


def _grid(raw):
    g = dict(raw.get("grid", {}))
    for key, vals in g.items():
        if not vals:
            raise ConfigError("grid factor must be non-empty", f"grid.{key}")
    for w in g.get("weather", []):
        weather_params(w, "grid.weather")
    for key in ("sigma_u_over_al", "w_l_over_al"):
        for v in g.get(key, []):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v >= 0:
                raise ConfigError("entries must be non-negative numbers", f"grid.{key}")
    if "model" in g:
        if "w_l_over_al" not in g or len(g["model"]) != len(g["w_l_over_al"]):
            raise ConfigError("grid.model pairs with grid.w_l_over_al and needs the same length", "grid.model")
        for m in g["model"]:
            if m not in MODELS:
                raise ConfigError(f"unknown pointing model {m!r}", "grid.model")
    return g


def parse_config(text: str, source: str = "<string>", command: str | None = None,
                 seed: int | None = None, trials: int | None = None) -> ScenarioConfig:
    """Validate a config document for ``command`` (default: ``run.command``)."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}", "config") from None
    _check_schema(raw)
    command = command or _get(raw, "run", "command")
    if command is None:
        raise ConfigError("no command given on the command line or in run.command", "run.command")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", "run.command")
    cfg = ScenarioConfig(raw=raw, source=source, command=command)
    cfg.workers = int(_get(raw, "run", "workers", default_workers()))
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1", "run.workers")
    fmt = _get(raw, "output", "format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", "output.format")
    cfg.output_format = fmt
    cfg.output_path = _get(raw, "output", "path")
    cfg.sweep_axis, cfg.sweep_values = _sweep(raw, command)
    cfg.grid = _grid(raw)
    extra = set(cfg.grid) - set(GRID_FACTORS[command])
    if extra:
        raise ConfigError(f"{command} does not use grid factor(s) {sorted(extra)}", f"grid.{sorted(extra)[0]}")

    if command in ("phase-profile", "field-profile"):
        cfg.beam = build_beam(raw)
        cfg.geometry = build_geometry(raw)
        w_l = _get(raw, "focus", "w_l")
        cfg.focus_w_l = None if w_l is None else float(w_l)
        cfg.obliquity = bool(_get(raw, "focus", "obliquity", True))
    elif command == "pointing-curve":
        if "w_l_over_al" in cfg.grid:
            cfg.pointing = build_pointing(raw, sigma_u_over_al=0.0, w_l_over_al=cfg.grid["w_l_over_al"][0])
        else:
            cfg.pointing = build_pointing(raw, sigma_u_over_al=0.0)
    else:
        _need(raw, "beam", "wavelength")
        grid_weather = cfg.grid.get("weather", [None])[0]
        sig = cfg.grid.get("sigma_u_over_al", [None])[0]
        ratio = cfg.grid.get("w_l_over_al", [None])[0]
        model = cfg.grid.get("model", [None])[0]
        if cfg.sweep_axis == "sigma_u_over_al":
            sig = float(cfg.sweep_values[0])
            for v in cfg.sweep_values:
                if v < 0:
                    raise ConfigError("sigma_u_over_al must be non-negative", "sweep.values")
        cfg.pointing = build_pointing(raw, sigma_u_over_al=sig, w_l_over_al=ratio, model=model)
        cfg.turbulence = build_turbulence(raw, grid_weather)
        cfg.budget = build_budget(raw, grid_weather)
        if command in ("montecarlo", "sweep"):
            sec = raw.get("mc", {})
            if command == "montecarlo" or sec or trials is not None:
                n = trials if trials is not None else int(sec.get("trials", 1_000_000))
                s = seed if seed is not None else int(sec.get("seed", 0))
                cfg.mc = _build("mc", McConfig, n_trials=n, seed=s,
                                workers=int(sec.get("workers", cfg.workers)),
                                model=sec.get("model"), chunk_size=int(sec.get("chunk_size", 65536)))
    return cfg


def load_config(spec: str, command: str | None = None, seed: int | None = None,
                trials: int | None = None) -> ScenarioConfig:
    text, source = read_config_text(spec)
    return parse_config(text, source, command, seed, trials)

"""Command-line entry point.

Every subcommand reads its options from flags, from a JSON config file
(``--config``), or both; flags win.  The resolved configuration, with all
defaults filled in, is validated against :data:`SCHEMA`, hashed, and the
hash plus the library version is stamped on every artifact.  Identical
configurations produce bitwise identical artifacts.

Exit codes: 0 success, 1 unexpected library error, 2 configuration error,
3 numerical non-convergence, 4 hypothesis violation, 5 internal
consistency failure.

``SEMISPEC_THREADS`` sets the worker count for batches over hbar; results
are collected in input order and do not depend on it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import potentials as pot
from . import testfunctions as tf
from .errors import ConfigError, ConsistencyError, SemispecError
from .invariants import NormalizationError, StructureError
from .polycas import render, to_json, to_latex

__all__ = ["RunConfig", "SCHEMA", "DEFAULTS", "build_parser", "resolve", "run", "main"]

_THREADS_ENV = "SEMISPEC_THREADS"

# shoulders of width 0.9 keep the hbar = 0.04 trace sum accurate to ~1e-8
_PLATEAU = {"kind": "plateau", "lo": 0.0, "hi": 0.4, "ramp": 0.9}
_QUARTIC = {"preset": "quartic", "L": 2.5, "a": 1.5}
_EXPWEIGHT = {"kind": "exponential_weight", "beta": 2.0, "poly": [1.0, 0.0, 0.2],
              "floor": 1e-14}

DEFAULTS = {
    "symbolic": {"model": "scalar", "dims": 1, "order": 2, "emit": "text",
                 "normalize": False},
    "forward": {"potential": {"preset": "harmonic"}, "hbar": [0.1], "emax": None,
                "basis": 1024, "tol": None},
    "fit": {"potential": _QUARTIC, "hbar": [0.04, 0.02, 0.01],
            "test_function": _PLATEAU, "basis": 1024, "orders": [0, 2, 4]},
    "quad": {"potential": _QUARTIC, "test_function": _PLATEAU,
             "orders": [0, 1], "tol": 1e-10, "method": "auto", "curve": None,
             "lambda_max": None, "points": 64},
    "invert-well": {"input": None, "potential": {"preset": "cubic"},
                    "lambda_max": 0.6, "points": 121, "convention": "half",
                    "method": "interp", "noise_seed": None, "noise_amplitude": 0.0},
    "invert-double": {"input": None, "potential": {"preset": "double_well"},
                      "separation": 1.0, "lambda_max": 0.2, "points": 121,
                      "convention": "half", "method": "interp",
                      "noise_seed": None, "noise_amplitude": 0.0},
    "invert-magnetic": {"input": None, "V_coeffs": [0.0, 0.5, 0.1],
                        "B_coeffs": [1.0, 0.5], "lambda_max": 1.0, "points": 121,
                        "convention": "full", "method": "interp",
                        "noise_seed": None, "noise_amplitude": 0.0},
    "birkhoff": {"potential": {"preset": "quartic"}, "hbar": [0.02, 0.01],
                 "emax": 0.8, "s_points": 64, "basis": 1024,
                 "test_function": {"kind": "plateau", "lo": 0.0, "hi": 0.4,
                                   "ramp": 0.3}},
    "zoll-check": {"potential": {"preset": "zoll"}, "lambda_min": 0.05,
                   "lambda_max": 0.9, "points": 18},
    "isospectral-demo": {"amp": 0.3, "bits": ["1010", "0110"],
                         "test_function": _EXPWEIGHT, "orders": [0, 1, 2],
                         "points": 2401},
}

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_INT = {"type": "integer", "minimum": 0}
_POS_LIST = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
             "minItems": 1}
_OBJ = {"type": "object"}
_CONV = {"enum": ["half", "full"]}
_DERIV = {"enum": ["interp", "gcv"]}
_INPUT = {"type": ["string", "null"]}
_SEED = {"type": ["integer", "null"]}

_PROPS = {
    "symbolic": {"model": {"enum": ["scalar", "magnetic"]}, "dims": {"type": "integer",
                 "minimum": 1, "maximum": 3}, "order": {"type": "integer", "minimum": 0,
                 "maximum": 8}, "emit": {"enum": ["text", "latex", "json"]},
                 "normalize": {"type": "boolean"}},
    "forward": {"potential": _OBJ, "hbar": _POS_LIST, "emax": _NUM_OR_NULL,
                "basis": _INT, "tol": _NUM_OR_NULL},
    "fit": {"potential": _OBJ, "hbar": _POS_LIST, "test_function": _OBJ,
            "basis": _INT, "orders": {"type": "array", "items": _INT}},
    "quad": {"potential": _OBJ, "test_function": _OBJ,
             "orders": {"type": "array", "items": _INT, "minItems": 1},
             "tol": {"type": "number", "exclusiveMinimum": 0},
             "method": {"enum": ["auto", "grid", "shell"]},
             "curve": {"enum": [None, "area", "gradientsq", "period"]},
             "lambda_max": _NUM_OR_NULL, "points": _INT},
    "invert-well": {"input": _INPUT, "potential": _OBJ, "lambda_max": _NUM,
                    "points": _INT, "convention": _CONV, "method": _DERIV,
                    "noise_seed": _SEED, "noise_amplitude": _NUM},
    "invert-double": {"input": _INPUT, "potential": _OBJ, "separation": _NUM,
                      "lambda_max": _NUM, "points": _INT, "convention": _CONV,
                      "method": _DERIV, "noise_seed": _SEED, "noise_amplitude": _NUM},
    "invert-magnetic": {"input": _INPUT, "V_coeffs": {"type": "array", "items": _NUM},
                        "B_coeffs": {"type": "array", "items": _NUM},
                        "lambda_max": _NUM, "points": _INT, "convention": _CONV,
                        "method": _DERIV, "noise_seed": _SEED, "noise_amplitude": _NUM},
    "birkhoff": {"potential": _OBJ, "hbar": _POS_LIST, "emax": _NUM,
                 "s_points": _INT, "basis": _INT, "test_function": _OBJ},
    "zoll-check": {"potential": _OBJ, "lambda_min": _NUM, "lambda_max": _NUM,
                   "points": _INT},
    "isospectral-demo": {"amp": _NUM, "bits": {"type": "array", "minItems": 2,
                         "items": {"type": "string", "pattern": "^[01]+$"}},
                         "test_function": _OBJ, "orders": {"type": "array", "items": _INT},
                         "points": _INT},
}

#: JSON schema of a resolved configuration (one branch per subcommand).
SCHEMA = {
    "type": "object",
    "required": ["subcommand"],
    "oneOf": [
        {"properties": {"subcommand": {"const": cmd},
                        **{k: v for k, v in props.items()},
                        "out": {"type": ["string", "null"]}},
         "required": ["subcommand", *props],
         "additionalProperties": False}
        for cmd, props in _PROPS.items()
    ],
}


@dataclass
class RunConfig:
    """A validated, fully resolved run configuration."""

    subcommand: str
    params: dict
    out: str | None = None
    provenance: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"subcommand": self.subcommand, **self.params}

    @property
    def hash(self) -> str:
        blob = json.dumps({**self.as_dict(), **self.provenance}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- configuration -----------------------------------------------------------

def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _param_pairs(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = _json_value(v)
    return out


def _flags_to_params(cmd: str, ns: argparse.Namespace) -> dict:
    """Collect only the flags that were given on the command line."""
    given = {k: v for k, v in vars(ns).items()
             if v is not None and k not in ("subcommand", "config", "out",
                                            "preset", "param", "tf")}
    given = {k.replace("-", "_"): v for k, v in given.items()}
    if getattr(ns, "preset", None) or getattr(ns, "param", None):
        potential = dict(DEFAULTS[cmd].get("potential", {}))
        if ns.preset:
            potential = {"preset": ns.preset}
        potential.update(_param_pairs(ns.param))
        given["potential"] = potential
    if getattr(ns, "tf", None):
        given["test_function"] = _json_value(ns.tf)
    if cmd in ("forward", "fit", "birkhoff") and "hbar" in given:
        given["hbar"] = [float(h) for h in given["hbar"]]
    if "input" in given and isinstance(given["input"], list):
        given["input"] = ",".join(given["input"])
    return given


def resolve(cmd: str, file_cfg: dict | None = None, flags: dict | None = None,
            out: str | None = None) -> RunConfig:
    """Merge defaults, config-file values and flags, then validate."""
    if cmd not in DEFAULTS:
        raise ConfigError(f"unknown subcommand {cmd!r}")
    file_cfg = dict(file_cfg or {})
    file_cmd = file_cfg.pop("subcommand", cmd)
    if file_cmd != cmd:
        raise ConfigError(f"config is for {file_cmd!r}, not {cmd!r}")
    out = out or file_cfg.pop("out", None)
    file_cfg.pop("out", None)
    params = json.loads(json.dumps(DEFAULTS[cmd]))
    params.update(file_cfg)
    params.update(flags or {})
    try:
        jsonschema.validate({"subcommand": cmd, **params}, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match the schema: {exc.message}") from exc
    cfg = RunConfig(cmd, params, out)
    if params.get("input"):
        cfg.provenance["input_sha256"] = [
            hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in _input_paths(params)]
    return cfg


def _input_paths(params) -> list:
    paths = [p.strip() for p in params["input"].split(",")]
    if len(paths) != 2:
        raise ConfigError("--input expects two comma-separated CSV files")
    for p in paths:
        if not Path(p).is_file():
            raise ConfigError(f"input file {p!r} not found")
    return paths


# -- artifacts ---------------------------------------------------------------

def _stamp(cfg: RunConfig) -> str:
    return f"semispec {__version__} config {cfg.hash}"


def _meta(cfg: RunConfig) -> dict:
    return {"version": __version__, "config_hash": cfg.hash, "config": cfg.as_dict(),
            **({"provenance": cfg.provenance} if cfg.provenance else {})}


def _csv(cfg: RunConfig, header, rows) -> str:
    lines = [f"# {_stamp(cfg)}", ",".join(header)]
    lines += [",".join(v if isinstance(v, str) else repr(float(v)) for v in row)
              for row in rows]
    return "\n".join(lines) + "\n"


def _curve_rows(curve):
    return zip(curve.abscissae, curve.values)


def _clean(obj):
    """JSON-friendly copy: numpy scalars and arrays become Python values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _report(cfg: RunConfig, body: dict) -> str:
    return json.dumps({"meta": _meta(cfg), **_clean(body)}, indent=1, sort_keys=True) + "\n"


@dataclass
class Result:
    """Artifacts of one run; ``primary`` goes to stdout."""

    primary: str
    files: dict = field(default_factory=dict)


def _workers() -> int:
    raw = os.environ.get(_THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{_THREADS_ENV} must be an integer, got {raw!r}") from None


def _pool_map(fn, items):
    items = list(items)
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


# -- subcommands -------------------------------------------------------------

def _cmd_symbolic(cfg: RunConfig) -> Result:
    from .invariants import ModelSymbol, compute_b, ibp_normalize, to_integrand

    p = cfg.params
    try:
        model = ModelSymbol(p["model"], p["dims"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    b = compute_b(model, p["order"])
    if p["normalize"]:
        if p["order"] % 2:
            raise ConfigError("normal forms exist for even orders only")
        g = ibp_normalize(to_integrand(b), model)
        if p["emit"] == "latex":
            body = " + ".join(rf"f^{{({l})}}\left({to_latex(q)}\right)"
                              for l, q in g.by_order.items()) or "0"
            text = f"% {_stamp(cfg)}\n{body}\n"
        elif p["emit"] == "json":
            text = _report(cfg, {"normal_form": g.to_dict(), "dims": g.dims})
        else:
            text = f"# {_stamp(cfg)}\n{g.render()}\n"
    elif p["emit"] == "latex":
        text = f"% {_stamp(cfg)}\n{to_latex(b)}\n"
    elif p["emit"] == "json":
        text = _report(cfg, {"b": json.loads(to_json(b)), "terms": len(b)})
    else:
        text = f"# {_stamp(cfg)}\n{render(b)}\n"
    ext = {"text": "txt", "latex": "tex", "json": "json"}[p["emit"]]
    return Result(text, {f"symbolic.{ext}": text})


def _cmd_forward(cfg: RunConfig) -> Result:
    from .phasequad import area
    from .schrod1d import eigen

    p = cfg.params
    V = pot.from_config(p["potential"])
    emax = V.a if p["emax"] is None else p["emax"]
    spectra = _pool_map(lambda h: eigen(V, h, emax, N=p["basis"], tol=p["tol"]),
                        p["hbar"])
    rows, summary = [], []
    weyl = area(V, emax) if emax < V.a else None
    for s in spectra:
        rows += [(repr(s.hbar), str(i), repr(float(l)), str(int(ok)))
                 for i, (l, ok) in enumerate(zip(s.eigenvalues, s.converged))]
        entry = {"hbar": s.hbar, "count": len(s), "max_boundary_mass":
                 float(np.max(s.boundary_mass, initial=0.0))}
        if weyl is not None:
            entry["weyl_estimate"] = weyl / (2 * np.pi * s.hbar)
        summary.append(entry)
    csv_text = _csv(cfg, ("hbar", "index", "eigenvalue", "converged"), rows)
    report = _report(cfg, {"emax": emax, "spectra": summary,
                           "solver": spectra[0].meta if spectra else {}})
    return Result(csv_text, {"levels.csv": csv_text, "forward.json": report})


def _nu_quadratures(V, f, orders, tol=1e-10, method="auto") -> dict:
    from .invariants import ModelSymbol, compute_b, ibp_normalize, to_integrand
    from .phasequad import nu_quad

    model = ModelSymbol("scalar", 1)
    out = {}
    for k in orders:
        g = ibp_normalize(to_integrand(compute_b(model, 2 * k)), model)
        out[k] = nu_quad(g, V, f, tol=tol, method=method)
    return out


def _cmd_fit(cfg: RunConfig) -> Result:
    from .schrod1d import fit_expansion

    p = cfg.params
    V = pot.from_config(p["potential"])
    f = tf.from_config(p["test_function"])
    fit = fit_expansion(V, f, p["hbar"], N=p["basis"], orders=tuple(p["orders"]),
                        workers=_workers())
    nu = _nu_quadratures(V, f, (0, 1))
    rel = {"nu0": abs(fit.nu0_hat - nu[0]) / abs(nu[0]),
           "nu1": abs(fit.nu1_hat - nu[1]) / abs(nu[1]) if nu[1] else None}
    report = _report(cfg, {"fit": fit.to_dict(), "quadrature": {"nu0": nu[0], "nu1": nu[1]},
                           "relative_error": rel})
    csv_text = _csv(cfg, ("hbar", "trace", "residual"),
                    zip(fit.hbar, fit.traces, fit.residuals))
    return Result(report, {"fit.json": report, "traces.csv": csv_text})


def _cmd_quad(cfg: RunConfig) -> Result:
    from .phasequad import invariant_curves, period_curve

    p = cfg.params
    V = pot.from_config(p["potential"])
    f = tf.from_config(p["test_function"])
    nu = _nu_quadratures(V, f, p["orders"], p["tol"], p["method"])
    report = _report(cfg, {"nu": {f"nu{k}": v for k, v in nu.items()},
                           "test_function": f.label})
    files = {"quad.json": report}
    if p["curve"] is None:
        return Result(report, files)
    top = 0.9 * V.a if p["lambda_max"] is None else p["lambda_max"]
    if p["curve"] == "period":
        curve = period_curve(V, np.linspace(top / p["points"], top, p["points"]))
    else:
        curve = invariant_curves(V, np.linspace(0.0, top, p["points"]), p["curve"])
    text = _csv(cfg, ("lambda", p["curve"]), _curve_rows(curve))
    files[f"{p['curve']}.csv"] = text
    return Result(text, files)


def _noisy(curve, p):
    """Relative Gaussian noise of the configured amplitude and seed."""
    from .phasequad import SampledCurve

    if not p["noise_amplitude"]:
        return curve
    rng = np.random.default_rng(p["noise_seed"])
    eps = rng.standard_normal(len(curve)) * p["noise_amplitude"]
    return SampledCurve(curve.abscissae, curve.values * (1 + eps), curve.meaning,
                        dict(curve.meta))


def _read_pair(p, names):
    from .phasequad import SampledCurve

    paths = _input_paths(p)
    return [SampledCurve.from_csv(Path(path).read_text(), n) for path, n in zip(paths, names)]


def _well_curves(p, V):
    from .abelinv import sqrt_grid
    from .phasequad import invariant_curves

    if p["input"]:
        return _read_pair(p, ("area", "gradientsq"))
    grid = sqrt_grid(p["lambda_max"], p["points"])
    return [invariant_curves(V, grid, w, convention=p["convention"])
            for w in ("area", "gradientsq")]


def _profile_rows(curve):
    return [(repr(float(x)), repr(float(v))) for x, v in _curve_rows(curve)]


def _cmd_invert_well(cfg: RunConfig, double: bool = False) -> Result:
    from .abelinv import recover_double_well, recover_well

    p = cfg.params
    V = None if p["input"] else pot.from_config(p["potential"])
    A, G = (_noisy(c, p) for c in _well_curves(p, V))
    if double:
        pair = recover_double_well(A, G, p["separation"], p["convention"], p["method"])
        prof = pair.potential(p["separation"], gentle="left")
    else:
        pair = recover_well(A, G, p["convention"], p["method"])
        prof = pair.potential()
    body = {"meta_reconstruction": pair.meta, "points": len(pair.s),
            "lambda_range": [float(pair.s[0]), float(pair.s[-1])]}
    if V is not None:
        if double:
            body["sup_error"] = pair.error(V, center=p["separation"], gentle="left")
        else:
            body["sup_error"] = pair.error(V)
    branches = f"# {_stamp(cfg)}\n" + pair.to_csv()
    profile = _csv(cfg, ("x", "V"), _profile_rows(prof))
    report = _report(cfg, body)
    name = "invert-double" if double else "invert-well"
    return Result(profile, {"branches.csv": branches, "potential.csv": profile,
                            f"{name}.json": report})


def _cmd_invert_magnetic(cfg: RunConfig) -> Result:
    from .abelinv import recover_magnetic_radial, sqrt_grid
    from .phasequad import invariant_curves

    p = cfg.params
    truth = None
    if p["input"]:
        I, II = _read_pair(p, ("magnetic_I", "magnetic_II"))
    else:
        Vr, Br = pot.radial_field(tuple(p["V_coeffs"]), tuple(p["B_coeffs"]))
        grid = sqrt_grid(p["lambda_max"], p["points"])
        I = invariant_curves(Vr, grid, "magnetic_I", convention=p["convention"])
        II = invariant_curves(Vr, grid, "magnetic_II", B=Br, convention=p["convention"])
        truth = (Vr, Br)
    I, II = _noisy(I, p), _noisy(II, p)
    prof = recover_magnetic_radial(I, II, p["convention"], p["method"])
    s, B = prof.B.abscissae, prof.B.values
    body = {"B_range": [float(B.min()), float(B.max())],
            "s_range": [float(s[0]), float(s[-1])],
            "V_slope_at_0": float(np.polyfit(s[:4], prof.V.values[:4], 1)[0])}
    if truth is not None:
        ev, eb = prof.errors(*truth)
        body["sup_error"] = {"V": ev, "B": eb}
    text = f"# {_stamp(cfg)}\n" + prof.to_csv()
    report = _report(cfg, body)
    return Result(text, {"profile.csv": text, "invert-magnetic.json": report})


def _cmd_birkhoff(cfg: RunConfig) -> Result:
    from .birkhoff import canonical_form, verify_measure_identity
    from .phasequad import area
    from .schrod1d import eigen

    p = cfg.params
    V = pot.from_config(p["potential"])
    f = tf.from_config(p["test_function"])
    top = area(V, p["emax"]) / (2 * np.pi)
    s_grid = np.linspace(0.0, top, p["s_points"], endpoint=False)
    spectra = _pool_map(lambda h: eigen(V, h, p["emax"], N=p["basis"]), p["hbar"])
    form = canonical_form(V, spectra, s_grid)
    files = {"H0.csv": _csv(cfg, ("s", "H0"), _curve_rows(form.H0))}
    per_hbar = []
    for s in spectra:
        K = form.K[s.hbar]
        files[f"K_hbar{s.hbar:g}.csv"] = _csv(cfg, ("t", "K"), _curve_rows(K))
        a2pi = np.array([area(V, t) for t in K.abscissae]) / (2 * np.pi)
        entry = {"hbar": s.hbar, "levels": len(s),
                 "max_K_minus_area": float(np.max(np.abs(K.values - a2pi), initial=0.0))}
        if f.support[1] <= p["emax"]:
            entry["measure_identity"] = verify_measure_identity(s, f, K).to_dict()
        per_hbar.append(entry)
    errs = [e["max_K_minus_area"] for e in per_hbar]
    body = {"per_hbar": per_hbar, "composition_defect": form.composition_defect(),
            "error_ratios": [a / b for a, b in zip(errs, errs[1:]) if b > 0]}
    report = _report(cfg, body)
    files["birkhoff.json"] = report
    return Result(report, files)


def _cmd_zoll(cfg: RunConfig) -> Result:
    from .phasequad import period

    p = cfg.params
    V = pot.from_config(p["potential"])
    grid = np.linspace(p["lambda_min"], p["lambda_max"], p["points"])
    T = np.array([period(V, l) for l in grid])
    defect = float(np.max(np.abs(T - 2 * np.pi)))
    csv_text = _csv(cfg, ("lambda", "period"), zip(grid, T))
    report = _report(cfg, {"zoll_defect": defect, "potential": V.describe()})
    return Result(report, {"periods.csv": csv_text, "zoll-check.json": report})


def _cmd_isospectral(cfg: RunConfig) -> Result:
    from .abelinv import make_isospectral_family

    p = cfg.params
    f = tf.from_config(p["test_function"])
    base = pot.isospectral_base(amp=p["amp"], cells=len(p["bits"][0]))
    members = [make_isospectral_family(base, b) for b in p["bits"]]
    x = np.linspace(-base.L, base.L, p["points"])
    values = [m(x) for m in members]
    nus = [_nu_quadratures(m, f, p["orders"], method="grid") for m in members]
    ref = nus[0]
    spread = {f"nu{k}": max(abs(n[k] - ref[k]) for n in nus) / max(abs(ref[k]), 1e-300)
              for k in p["orders"]}
    sup = max(float(np.max(np.abs(v - values[0]))) for v in values[1:])
    body = {"members": [{"bits": b, **{f"nu{k}": n[k] for k in p["orders"]}}
                        for b, n in zip(p["bits"], nus)],
            "relative_spread": spread, "sup_difference": sup}
    report = _report(cfg, body)
    header = ("x", *[f"V_{b}" for b in p["bits"]])
    csv_text = _csv(cfg, header, zip(x, *values))
    return Result(report, {"family.csv": csv_text, "isospectral.json": report})


_DISPATCH = {
    "symbolic": _cmd_symbolic,
    "forward": _cmd_forward,
    "fit": _cmd_fit,
    "quad": _cmd_quad,
    "invert-well": _cmd_invert_well,
    "invert-double": lambda c: _cmd_invert_well(c, double=True),
    "invert-magnetic": _cmd_invert_magnetic,
    "birkhoff": _cmd_birkhoff,
    "zoll-check": _cmd_zoll,
    "isospectral-demo": _cmd_isospectral,
}


def run(cfg: RunConfig) -> Result:
    """Execute a resolved configuration and write files under ``cfg.out``."""
    result = _DISPATCH[cfg.subcommand](cfg)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in result.files.items():
            (out / name).write_text(text)
    return result


# -- argument parsing ---------------------------------------------------------

def _potential_flags(sp):
    sp.add_argument("--preset", choices=sorted(pot.PRESETS), help="potential preset")
    sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="preset parameter (JSON value), repeatable")


def _inverse_flags(sp):
    sp.add_argument("--input", help="two CSV curves, comma separated")
    sp.add_argument("--lambda-max", dest="lambda_max", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--convention", choices=["half", "full"])
    sp.add_argument("--method", choices=["interp", "gcv"])
    sp.add_argument("--noise-seed", dest="noise_seed", type=int)
    sp.add_argument("--noise-amplitude", dest="noise_amplitude", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semispec",
                                 description="Semiclassical spectral invariants.")
    ap.add_argument("--version", action="version", version=f"semispec {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="directory for all artifacts")
        return sp

    sp = add("symbolic", "amplitudes b_m and their normal forms")
    sp.add_argument("--model", choices=["scalar", "magnetic"])
    sp.add_argument("--dims", type=int)
    sp.add_argument("--order", type=int)
    sp.add_argument("--emit", choices=["text", "latex", "json"])
    sp.add_argument("--normalize", action="store_true", default=None)

    sp = add("forward", "eigenvalues of the 1-D operator")
    _potential_flags(sp)
    sp.add_argument("--hbar", type=float, nargs="+")
    sp.add_argument("--emax", type=float)
    sp.add_argument("--basis", type=int)
    sp.add_argument("--tol", type=float)

    sp = add("fit", "fit traces over an hbar sweep")
    _potential_flags(sp)
    sp.add_argument("--hbar", type=float, nargs="+")
    sp.add_argument("--tf", help="test function as JSON")
    sp.add_argument("--basis", type=int)
    sp.add_argument("--orders", type=int, nargs="+")

    sp = add("quad", "phase-space quadrature of trace invariants")
    _potential_flags(sp)
    sp.add_argument("--tf", help="test function as JSON")
    sp.add_argument("--orders", type=int, nargs="+")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--method", choices=["auto", "grid", "shell"])
    sp.add_argument("--curve", choices=["area", "gradientsq", "period"])
    sp.add_argument("--lambda-max", dest="lambda_max", type=float)
    sp.add_argument("--points", type=int)

    sp = add("invert-well", "recover a single well")
    _potential_flags(sp)
    _inverse_flags(sp)

    sp = add("invert-double", "recover a symmetric double well")
    _potential_flags(sp)
    _inverse_flags(sp)
    sp.add_argument("--separation", type=float)

    sp = add("invert-magnetic", "recover radial V and |B|")
    _inverse_flags(sp)
    sp.add_argument("--V-coeffs", dest="V_coeffs", type=float, nargs="+")
    sp.add_argument("--B-coeffs", dest="B_coeffs", type=float, nargs="+")

    sp = add("birkhoff", "canonical form and measure identity")
    _potential_flags(sp)
    sp.add_argument("--hbar", type=float, nargs="+")
    sp.add_argument("--emax", type=float)
    sp.add_argument("--s-points", dest="s_points", type=int)
    sp.add_argument("--basis", type=int)
    sp.add_argument("--tf", help="test function as JSON")

    sp = add("zoll-check", "period defect against 2 pi")
    _potential_flags(sp)
    sp.add_argument("--lambda-min", dest="lambda_min", type=float)
    sp.add_argument("--lambda-max", dest="lambda_max", type=float)
    sp.add_argument("--points", type=int)

    sp = add("isospectral-demo", "trace invariants of an isospectral family")
    sp.add_argument("--amp", type=float)
    sp.add_argument("--bits", nargs="+")
    sp.add_argument("--tf", help="test function as JSON")
    sp.add_argument("--orders", type=int, nargs="+")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        file_cfg = None
        if ns.config:
            try:
                file_cfg = json.loads(Path(ns.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {ns.config!r}: {exc}") from exc
        cfg = resolve(ns.subcommand, file_cfg, _flags_to_params(ns.subcommand, ns), ns.out)
        result = run(cfg)
    except SemispecError as exc:
        print(f"semispec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (StructureError, NormalizationError) as exc:
        # the symbolic engine contradicted its own structure theorems
        print(f"semispec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return ConsistencyError.exit_code
    sys.stdout.write(result.primary)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    python -m thermal_wigner observables --config run.json --out table.csv
    python -m thermal_wigner wigner      --config run.json --out grid.json
    python -m thermal_wigner poincare    --config run.json --out section.csv
    python -m thermal_wigner spectrum    --config run.json --out levels.csv

The config is a JSON object; every key is optional and unknown keys are
rejected.  The fully resolved config (defaults filled in) is written into
the header of every output file, so a file can be regenerated from itself.
Outputs contain no timestamps or host data; with ``timing`` off the same
config, seed and thread count give byte-identical files.
"""

import argparse
import copy
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import engine, models, quadrature, reference, symbols
from .stepper import ODETolerances

MODEL_PARAMS = {
    "harmonic": {"omega": 1.0, "dof": 1},
    "kerr": {"omega0": 1.0, "chi": 0.1},
    "morse": {"chi": 0.05},
    "nelson": {"mu": 2.0},
}

DEFAULTS = {
    "model": "harmonic",
    "params": {},
    "hbar": 1.0,
    "theta": [0.5, 1.0, 2.0, 5.0],
    "method": "all",
    "seed": 0,
    "threads": 1,
    "timing": False,
    "grid": {"kind": "default", "resolution": None, "samples": 100000, "burn_in": 0.1, "thin": 1, "chains": 64},
    "ode": {"rtol": 1e-8, "atol": 1e-10, "method": "dopri5", "divergence_bound": 1e8, "max_steps": 200000},
    "quantum": {
        "n_max": None,
        "fd": {"nx": 160, "ny": 160, "x_range": [-4.5, 4.5], "y_range": [-4.0, 5.0], "k_count": 120},
    },
    "wigner": {"theta": 2.0, "p_range": None, "q_range": None, "n_p": 41, "n_q": 41, "rule": "legendre"},
    "poincare": {"mu": 2.0, "energy": 4.8, "n_trajectories": 12, "t_max": 2000.0, "rtol": 1e-10, "atol": 1e-12},
}

METHODS = ("semiclassical", "quantum", "classical", "all")
TAIL_CUTOFF = 1e-8


class ConfigError(ValueError):
    pass


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict) and defaults[key]:
            out[key] = _merge(defaults[key], val, where)
        else:
            out[key] = val
    return out


def _thetas(spec):
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "num", "spacing"}
        if extra:
            raise ConfigError(f"unknown theta range keys {sorted(extra)}")
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"theta range needs {exc.args[0]!r}") from None
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            vals = np.linspace(start, stop, num)
        elif spacing == "log":
            if start <= 0:
                raise ConfigError("log-spaced theta needs start > 0")
            vals = np.geomspace(start, stop, num)
        else:
            raise ConfigError("theta spacing must be 'linear' or 'log'")
        return [float(v) for v in vals]
    if isinstance(spec, (int, float)):
        spec = [spec]
    if not isinstance(spec, list):
        raise ConfigError("theta must be a number, a list or a {start, stop, num} object")
    return [float(v) for v in spec]


def resolve_config(raw):
    """Validate `raw` and return the resolved config with every default filled."""
    cfg = _merge(DEFAULTS, raw, "")
    name = cfg["model"]
    if name not in MODEL_PARAMS:
        raise ConfigError(f"model must be one of {sorted(MODEL_PARAMS)}")
    cfg["params"] = _merge(MODEL_PARAMS[name], cfg["params"], "params")
    if not (isinstance(cfg["hbar"], (int, float)) and cfg["hbar"] > 0):
        raise ConfigError("hbar must be a positive number")
    thetas = _thetas(cfg["theta"])
    if not thetas:
        raise ConfigError("theta list is empty")
    if any(not math.isfinite(t) or t <= 0 for t in thetas):
        raise ConfigError("every theta must be positive and finite")
    cfg["theta"] = thetas
    if cfg["method"] not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    if cfg["grid"]["kind"] not in ("default", "mc"):
        raise ConfigError("grid.kind must be 'default' or 'mc'")
    if not (isinstance(cfg["seed"], int) and 0 <= cfg["seed"] < 2**64):
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not (isinstance(cfg["threads"], int) and cfg["threads"] >= 1):
        raise ConfigError("threads must be a positive integer")
    try:
        ODETolerances(**cfg["ode"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"ode: {exc}") from None
    if cfg["wigner"]["rule"] not in ("legendre", "trapezoid"):
        raise ConfigError("wigner.rule must be 'legendre' or 'trapezoid'")
    return cfg


def build_model(cfg):
    p, hbar = cfg["params"], float(cfg["hbar"])
    try:
        if cfg["model"] == "harmonic":
            return models.harmonic_oscillator(float(p["omega"]), hbar, int(p["dof"]))
        if cfg["model"] == "kerr":
            return models.kerr(float(p["omega0"]), float(p["chi"]), hbar)
        if cfg["model"] == "morse":
            return models.morse(float(p["chi"]), hbar)
        return models.nelson(float(p["mu"]), hbar)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None


# ---------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _csv_text(meta, header, rows):
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {_dumps(meta[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in r])
    return buf.getvalue()


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _meta(cfg, command, **extra):
    m = {"command": command, "version": __version__, "config": cfg, "seed": cfg["seed"],
         "threads": cfg["threads"]}
    m.update(extra)
    return m


# ---------------------------------------------------------------------------
# quantum / classical / semiclassical columns


def quantum_spectrum(model, cfg, theta_min):
    """Spectrum used for the quantum column, or ``(None, reason)``."""
    name, hbar = cfg["model"], model.hbar
    n_max = cfg["quantum"]["n_max"]
    if name == "morse":
        return reference.morse_spectrum(model.chi, hbar), ""
    if name == "nelson":
        fd = cfg["quantum"]["fd"]
        spec = reference.fd_eigensolver_2d(
            model.potential, tuple(fd["x_range"]), tuple(fd["y_range"]), int(fd["nx"]), int(fd["ny"]), hbar,
            int(fd["k_count"]))
        return spec, ""
    if name == "harmonic" and model.dof != 1:
        return None, "quantum reference only for dof=1"
    if n_max is None:
        # enough levels that the first omitted one has relative weight < 1e-16
        omega = model.omega if name == "harmonic" else model.omega0
        n_max = int(min(200000, math.ceil(37.0 / (theta_min * omega)) + 10))
    return symbols.normal_form_spectrum(model.spectrum_function(), int(n_max), hbar), ""


def _grid_for(model, cfg):
    g = cfg["grid"]
    if g["kind"] == "mc":
        return lambda t: quadrature.mc_grid(model, t, int(g["samples"]), int(cfg["seed"]),
                                            burn_in=float(g["burn_in"]), thin=int(g["thin"]),
                                            n_chains=int(g["chains"]))
    return None


def run_observables(cfg):
    model = build_model(cfg)
    thetas = cfg["theta"]
    method = cfg["method"]
    tol = ODETolerances(**cfg["ode"])
    res = cfg["grid"]["resolution"]
    grid = _grid_for(model, cfg)
    timing = bool(cfg["timing"])

    sc = {}
    if method in ("semiclassical", "all"):
        for t in thetas:
            t0 = time.perf_counter()
            reason, n_nodes = "", 0
            try:
                (sample,) = engine.thermal_samples(model, [t], grid, tol, cfg["threads"], res)
                n_nodes = len(sample.grid)
                r = engine.observables_from_sample(sample, model)
                if r.negative_heat:
                    reason = "negative semiclassical specific heat"
                sc[t] = (r.mean_energy, r.specific_heat, r.discarded_fraction, n_nodes, reason,
                         time.perf_counter() - t0)
            except engine.EngineError as exc:
                sc[t] = (math.nan, math.nan, 1.0, n_nodes, str(exc), time.perf_counter() - t0)

    qm, qm_note, cutoff = {}, "", None
    if method in ("quantum", "all"):
        spec, qm_note = quantum_spectrum(model, cfg, min(thetas))
        if spec is not None:
            gap = spec.energies[-1] - spec.energies[0]
            if spec.truncated and cfg["model"] == "nelson":
                cutoff = model.hbar * math.log(1.0 / TAIL_CUTOFF) / gap
            for t in thetas:
                qm[t] = reference.spectrum_thermal_averages(spec, t, model.hbar)

    cl = {}
    if method in ("classical", "all"):
        for t in thetas:
            cl[t] = reference.classical_averages(model, t)

    header = ["theta", "E_sc", "E_qm", "E_cl", "c_sc", "c_qm", "c_cl", "discarded_fraction", "n_nodes",
              "wall_time", "reason"]
    rows = []
    nan = math.nan
    for t in thetas:
        e_sc, c_sc, disc, nodes, why, wall = sc.get(t, (nan, nan, nan, 0, "", nan))
        e_qm, c_qm = qm.get(t, (nan, nan))
        e_cl, c_cl = cl.get(t, (nan, nan))
        notes = [why] if why else []
        if qm_note and method in ("quantum", "all"):
            notes.append(qm_note)
        if cutoff is not None and t < cutoff:
            notes.append(f"quantum value truncated below theta={cutoff:.4g}")
        rows.append([t, e_sc, e_qm, e_cl, c_sc, c_qm, c_cl, disc, nodes, wall if timing else None, "; ".join(notes)])
    meta = _meta(cfg, "observables", model=model.params(), quantum_trust_cutoff=cutoff,
                 fd_boundary="dirichlet" if cfg["model"] == "nelson" else None)
    return _csv_text(meta, header, rows)


def _auto_ranges(model, theta):
    g = quadrature.default_grid(model, theta, scaling="classical")
    w = g.weights * np.exp(-theta / model.hbar * model.classical(g.nodes))
    w /= w.sum()
    mean = w @ g.nodes
    sd = np.sqrt(w @ (g.nodes - mean) ** 2)
    lo, hi = mean - 6 * sd, mean + 6 * sd
    return [float(lo[0]), float(hi[0])], [float(lo[1]), float(hi[1])]


def run_wigner(cfg, out):
    model = build_model(cfg)
    if model.dof != 1:
        raise ConfigError("wigner grids are implemented for one degree of freedom")
    wc = cfg["wigner"]
    theta = float(wc["theta"])
    if theta <= 0:
        raise ConfigError("wigner.theta must be positive")
    pr, qr = wc["p_range"], wc["q_range"]
    if pr is None or qr is None:
        ap, aq = _auto_ranges(model, theta)
        pr = pr if pr is not None else ap
        qr = qr if qr is not None else aq
    cfg = copy.deepcopy(cfg)
    cfg["wigner"].update(p_range=list(pr), q_range=list(qr))
    g = engine.wigner_grid(model, theta, tuple(pr), tuple(qr), int(wc["n_p"]), int(wc["n_q"]), wc["rule"],
                           ODETolerances(**cfg["ode"]))
    mp = g.marginal("p")
    mq = g.marginal("q")
    meta = _meta(cfg, "wigner", model=model.params(), n_points=int(g.values.size),
                 unreachable_fraction=float(1 - g.reachable.mean()))
    doc = {
        "meta": meta, "theta": theta, "p": g.p, "q": g.q, "p_weights": g.wp, "q_weights": g.wq,
        "values": g.values, "reachable": g.reachable,
        "marginal_p": {"p": mp[0], "density": mp[1]}, "marginal_q": {"q": mq[0], "density": mq[1]},
    }
    _emit(_dumps(doc) + "\n", out)
    if out is not None:
        stem = Path(out).with_suffix("")
        for axis, (c, d), w in (("p", mp, g.wp), ("q", mq, g.wq)):
            text = _csv_text(meta, [axis, "density", "weight"], zip(c, d, w))
            Path(f"{stem}_marginal_{axis}.csv").write_text(text)


def run_poincare(cfg):
    pc = cfg["poincare"]
    sec = reference.poincare_section(float(pc["mu"]), float(pc["energy"]), int(pc["n_trajectories"]),
                                     float(pc["t_max"]), int(cfg["seed"]), float(pc["rtol"]), float(pc["atol"]))
    labels, stats = reference.classify_orbits(sec)
    meta = _meta(cfg, "poincare", n_crossings=sum(len(c) for c in sec.crossings),
                 max_energy_error=sec.max_energy_error, max_abs_y=sec.max_abs_y,
                 orbit_labels=labels, orbit_stats=[list(s) for s in stats])
    return _csv_text(meta, ["traj_id", "x", "p_x"], sec.rows())


def run_spectrum(cfg):
    model = build_model(cfg)
    spec, note = quantum_spectrum(model, cfg, min(cfg["theta"]))
    if spec is None:
        raise ConfigError(note)
    meta = _meta(cfg, "spectrum", model=model.params(), truncated=spec.truncated, solver=spec.meta)
    return _csv_text(meta, ["n", "energy"], enumerate(spec.energies))


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="thermal-wigner", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("observables", "thermal energy and specific heat table"),
                        ("wigner", "Wigner function grid and marginals"),
                        ("poincare", "Poincare section of the Nelson system"),
                        ("spectrum", "reference energy levels")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="JSON config file (default: built-in defaults)")
        p.add_argument("--threads", type=int, help="worker threads (overrides config)")
        p.add_argument("--seed", type=int, help="random seed (overrides config)")
        p.add_argument("--out", type=Path, help="output path (default: stdout)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = json.loads(args.config.read_text()) if args.config else {}
        if args.threads is not None:
            raw["threads"] = args.threads
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = resolve_config(raw)
        if args.command == "wigner":
            run_wigner(cfg, args.out)
            return 0
        text = {"observables": run_observables, "poincare": run_poincare, "spectrum": run_spectrum}[args.command](cfg)
        _emit(text, args.out)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""``tickwork`` command-line front end.

Configuration is resolved in three layers: a named preset, then a JSON
config file, then individual command-line flags. Every emitted file starts
with a header line carrying the SHA-256 of the resolved configuration and
the seed, so outputs can be matched to the inputs that produced them.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import WINDOW_COLUMNS, window_table
from .exceptions import ConfigError, NumericalError, TickworkError
from .ldt import count_moments, steady_state, summarize, theta_curve
from .models import _KINDS, model_from_dict
from .stats import count_stats, per_step_moments, within_se
from .trajectory import SimulationPlan, run_ensemble
from .validation import run_suites

__all__ = ["main", "build_parser", "resolve_config", "ExperimentConfig", "PRESETS",
           "format_number", "write_csv", "read_csv", "config_hash"]

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
SEED_ENV = "TICKWORK_SEED"

_GAMMA_M_SWEEP = {"name": "gamma_m", "lo": 0.1, "hi": 10.0, "n": 17, "log": True}
_THETA_SWEEP = {"name": "theta", "lo": 0.0, "hi": math.pi, "n": 9, "log": False}
_HYBRID = {"kind": "hybrid", "omega_m": 1.0, "omega_c": 0.1, "theta": math.pi / 2, "phi": 0.0,
           "gamma_m": 3.0, "gamma_c": 4.0, "gamma_w": 3.0, "gamma_h": 4.0,
           "beta_h_omega_m": 3.0, "beta_c_omega_c": 100.0}

PRESETS = {
    "fig2": {
        "model": {"kind": "two_level", "omega": 1.0, "gamma_m": 1.5, "gamma_w": 6.0},
        "plan": {"dt": 1e-3, "n_steps": 1000, "n_traj": 5000, "initial_state": "steady"},
        "sweep": _GAMMA_M_SWEEP,
        "mode": "windows",
    },
    "fig3": {
        "model": {"kind": "three_level", "omega_m": 1.0, "omega_c": 0.1, "theta": math.pi / 2,
                  "phi": 0.0, "gamma_m": 3.0, "gamma_c": 4.0, "gamma_w": 3.0},
        "plan": {"dt": 1e-2, "n_steps": 1000, "n_traj": 5000, "initial_state": "steady"},
        "sweep": _GAMMA_M_SWEEP,
        "mode": "windows",
    },
    "fig4": {
        "model": dict(_HYBRID),
        "plan": {"dt": 1e-2, "n_steps": 1000, "n_traj": 5000, "initial_state": "ground"},
        "sweep": _GAMMA_M_SWEEP,
        "mode": "windows",
    },
    "fig6": {
        "model": {"kind": "three_level", "omega_m": 1.0, "omega_c": 0.1, "theta": math.pi / 2,
                  "phi": 0.0, "gamma_m": 3.0, "gamma_c": 4.0, "gamma_w": 3.0},
        "plan": {"dt": 1e-3, "n_steps": 10000, "n_traj": 1000, "initial_state": "steady"},
        "sweep": _THETA_SWEEP,
        "mode": "per_step",
    },
    "fig7": {
        "model": dict(_HYBRID, theta=math.pi),
        "plan": {"dt": 1e-3, "n_steps": 10000, "n_traj": 1000, "initial_state": "steady"},
        "sweep": _THETA_SWEEP,
        "mode": "per_step",
    },
}

_BASE = {
    "model": {"kind": "three_level"},
    "plan": {"dt": 1e-3, "n_steps": 1000, "n_traj": 1000, "initial_state": "steady"},
    "sweep": None,
    "windows": None,
    "mode": "windows",
    "s_grid": {"lo": -2.0, "hi": 2.0, "n": 81},
    "svg": False,
}

_MODEL_FIELDS = sorted({f.name for cls in _KINDS.values() for f in fields(cls)})
_PLAN_FIELDS = ("dt", "n_steps", "n_traj", "initial_state")
_TOP_KEYS = set(_BASE) | {"preset", "seed"}


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    model: dict
    plan: dict
    seed: int
    sweep: dict | None = None
    windows: list | None = None
    mode: str = "windows"
    s_grid: dict = field(default_factory=lambda: dict(_BASE["s_grid"]))
    svg: bool = False
    preset: str | None = None

    def as_dict(self) -> dict:
        return {"preset": self.preset, "model": self.model, "plan": self.plan, "seed": self.seed,
                "sweep": self.sweep, "windows": self.windows, "mode": self.mode,
                "s_grid": self.s_grid, "svg": self.svg}

    def sweep_values(self):
        if not self.sweep:
            return None
        return sweep_grid(self.sweep)

    def models(self):
        """``[(sweep value or None, model)]`` in sweep order."""
        values = self.sweep_values()
        if values is None:
            return [(None, model_from_dict(self.model))]
        return [(v, model_from_dict(dict(self.model, **{self.sweep["name"]: float(v)})))
                for v in values]

    def simulation_plan(self) -> SimulationPlan:
        p = self.plan
        return SimulationPlan(dt=float(p["dt"]), n_steps=int(p["n_steps"]),
                              n_traj=int(p["n_traj"]), seed=self.seed,
                              initial_state=p.get("initial_state", "steady"))

    def window_times(self):
        plan = self.simulation_plan()
        return [plan.horizon] if not self.windows else [float(w) for w in self.windows]


# --- config resolution -----------------------------------------------------------------

def sweep_grid(sweep: dict) -> np.ndarray:
    if "values" in sweep:
        return np.asarray(sweep["values"], dtype=float)
    lo, hi, n = float(sweep["lo"]), float(sweep["hi"]), int(sweep["n"])
    if n < 1:
        raise ConfigError("sweep needs at least one point")
    if sweep.get("log"):
        if lo <= 0 or hi <= 0:
            raise ConfigError("log sweep bounds must be positive")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def parse_sweep(text: str) -> dict | None:
    """Parse ``name=lo:hi:n`` or ``name=lo:hi:n:log``; ``none`` disables sweeping."""
    if text.strip().lower() == "none":
        return None
    try:
        name, spec = text.split("=", 1)
        parts = spec.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
            raise ValueError
        return {"name": name.strip(), "lo": float(parts[0]), "hi": float(parts[1]),
                "n": int(parts[2]), "log": len(parts) == 4 and parts[3] == "log"}
    except ValueError:
        raise ConfigError(f"bad sweep {text!r}; expected name=lo:hi:n(:log)") from None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "sweep":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def _parse_seed(value, source) -> int:
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed from {source} is not an integer: {value!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed from {source} must be an unsigned 64-bit integer")
    return seed


def resolve_config(args, command: str = "simulate", env=None) -> ExperimentConfig:
    """Merge preset, config file and flags into an :class:`ExperimentConfig`."""
    env = os.environ if env is None else env
    file_data = _load_config_file(args.config) if getattr(args, "config", None) else {}
    preset = args.preset or file_data.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    data = _merge(_BASE, PRESETS[preset]) if preset else copy.deepcopy(_BASE)
    if preset and command == "steady":
        # figure sweeps are for reproduction runs; steady reports the base point
        data["sweep"] = None
    data = _merge(data, {k: v for k, v in file_data.items() if k not in ("preset", "seed")})

    if args.kind is not None and args.kind != data["model"].get("kind"):
        data["model"] = {"kind": args.kind}
    for name in _MODEL_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            data["model"][name] = value
    for name in _PLAN_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            data["plan"][name] = value
    if args.sweep is not None:
        data["sweep"] = parse_sweep(args.sweep)
    if args.windows is not None:
        try:
            data["windows"] = [float(w) for w in args.windows.split(",") if w.strip()]
        except ValueError:
            raise ConfigError(f"bad windows {args.windows!r}") from None
    if args.svg:
        data["svg"] = True

    if args.seed is not None:
        seed = _parse_seed(args.seed, "--seed")
    elif "seed" in file_data:
        seed = _parse_seed(file_data["seed"], "config")
    elif env.get(SEED_ENV) not in (None, ""):
        seed = _parse_seed(env[SEED_ENV], SEED_ENV)
    else:
        seed = 0

    cfg = ExperimentConfig(model=data["model"], plan=data["plan"], seed=seed,
                           sweep=data["sweep"], windows=data["windows"], mode=data["mode"],
                           s_grid=data["s_grid"], svg=bool(data["svg"]), preset=preset)
    _check_config(cfg)
    return cfg


def _check_config(cfg: ExperimentConfig) -> None:
    kind = cfg.model.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    model_from_dict(cfg.model)
    if cfg.sweep is not None:
        if not isinstance(cfg.sweep, dict) or "name" not in cfg.sweep:
            raise ConfigError("sweep must be an object with a 'name'")
        allowed = {f.name for f in fields(_KINDS[kind])}
        if cfg.sweep["name"] not in allowed:
            raise ConfigError(f"sweep parameter {cfg.sweep['name']!r} is not a {kind} field")
        try:
            sweep_grid(cfg.sweep)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad sweep: {exc}") from exc
    if cfg.mode not in ("windows", "per_step"):
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    unknown = set(cfg.plan) - set(_PLAN_FIELDS)
    if unknown:
        raise ConfigError(f"unknown plan keys: {sorted(unknown)}")
    plan = cfg.simulation_plan()
    if cfg.windows is not None:
        w = np.asarray(cfg.windows, dtype=float)
        if w.size == 0 or np.any(w <= 0) or np.any(w > plan.horizon * (1 + 1e-12)):
            raise ConfigError(f"windows must lie in (0, {plan.horizon}]")


def config_hash(cfg: ExperimentConfig) -> str:
    text = json.dumps(_jsonable(cfg.as_dict()), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# --- file emission ---------------------------------------------------------------------

def format_number(x) -> str:
    """Shortest text that round-trips ``x`` rounded to 12 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(f"{x:.12g}")) if x != 0 else "0"


def _header(command: str, cfg_hash: str, seed: int) -> str:
    return f"# tickwork {__version__} {command} config_sha256={cfg_hash} seed={seed}"


def write_csv(path, header: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def read_csv(path):
    """Return ``(header_line, columns, data)`` of a file written by :func:`write_csv`."""
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n")
        reader = csv.reader(fh)
        columns = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, columns, data.reshape(-1, len(columns))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, payload) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    Path(path).write_bytes(text.encode("utf-8"))


def _labels(model):
    return ("e", "g") if model.dim == 2 else ("m", "c", "g")


def _steady_report(model) -> dict:
    s = summarize(model)
    out = s.as_dict()
    out["populations"] = dict(zip(_labels(model), s.populations))
    return out


def _sweep_prefix(cfg):
    return [cfg.sweep["name"]] if cfg.sweep else []


# --- commands --------------------------------------------------------------------------

def cmd_steady(cfg: ExperimentConfig, out_dir=None, stream=None) -> int:
    points = []
    for value, model in cfg.models():
        rep = _steady_report(model)
        if value is not None:
            rep = {cfg.sweep["name"]: float(value), **rep}
        points.append(rep)
    payload = {"command": "steady", "config": cfg.as_dict(), "config_sha256": config_hash(cfg),
               "seed": cfg.seed, "results": points if cfg.sweep else points[0]}
    if out_dir is not None:
        write_json(Path(out_dir) / "steady.json", payload)
    (stream or sys.stdout).write(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_ldt(cfg: ExperimentConfig, out_dir, stream=None) -> int:
    s_values = np.linspace(float(cfg.s_grid["lo"]), float(cfg.s_grid["hi"]), int(cfg.s_grid["n"]))
    h = config_hash(cfg)
    prefix = _sweep_prefix(cfg)
    curve_rows, moment_rows, points = [], [], []
    for value, model in cfg.models():
        lead = [value] if value is not None else []
        curve = theta_curve(model, s_values)
        curve_rows += [lead + [s, th] for s, th in zip(curve.s_values, curve.theta_values)]
        rep = _steady_report(model)
        moment_rows.append(lead + [rep["gamma_tick"], rep["mean_rate"], rep["variance_rate"],
                                   rep["mandel_q"]])
        points.append({**({cfg.sweep["name"]: float(value)} if value is not None else {}), **rep})
    out = Path(out_dir)
    write_csv(out / "ldt.csv", _header("ldt", h, cfg.seed), prefix + ["s", "theta"], curve_rows)
    write_csv(out / "ldt_moments.csv", _header("ldt", h, cfg.seed),
              prefix + ["gamma_tick", "mean_rate", "variance_rate", "mandel_q"], moment_rows)
    payload = {"command": "ldt", "config": cfg.as_dict(), "config_sha256": h, "seed": cfg.seed,
               "results": points}
    write_json(out / "ldt.json", payload)
    (stream or sys.stdout).write(json.dumps(_jsonable({"config_sha256": h, "results": points}),
                                            sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, out_dir, workers: int = 1, stream=None) -> int:
    plan = cfg.simulation_plan()
    windows = cfg.window_times()
    h = config_hash(cfg)
    prefix = _sweep_prefix(cfg)
    rows, step_rows, points = [], [], []
    per_step = cfg.mode == "per_step"
    for value, model in cfg.models():
        lead = [value] if value is not None else []
        ens = run_ensemble(model, plan, workers=workers)
        table = window_table(count_stats(ens, windows))
        point = {"window_pass": True}
        if value is not None:
            point[cfg.sweep["name"]] = float(value)
        for row in table:
            t, mean, var, se_m, se_v = row[:5]
            ldt_mean, ldt_var = count_moments(model, t)
            ok = within_se(mean, ldt_mean, se_m) and within_se(var, ldt_var, se_v)
            point["window_pass"] = point["window_pass"] and ok
            rows.append(lead + list(row) + [ldt_mean, ldt_var, 1.0 if ok else 0.0])
        point["state_checks"] = {"max_hermiticity_defect": ens.max_hermiticity_defect,
                                 "max_trace_defect": ens.max_trace_defect,
                                 "min_eigenvalue": ens.min_eigenvalue}
        if per_step:
            p_tick = float(np.real(steady_state(model))[0, 0])
            eps_w = model.gamma_w * plan.dt
            rep = per_step_moments(ens, p_tick, eps_w)
            step_rows.append(lead + [rep.mean, rep.variance, rep.se_mean, rep.se_variance,
                                     rep.expected, 1.0 if rep.passed else 0.0])
            point["per_step_pass"] = rep.passed
        points.append(point)
    out = Path(out_dir)
    extra = ["ldt_mean", "ldt_var", "ldt_pass"]
    write_csv(out / "simulate.csv", _header("simulate", h, cfg.seed),
              prefix + list(WINDOW_COLUMNS) + extra, rows)
    if per_step:
        write_csv(out / "per_step.csv", _header("simulate", h, cfg.seed),
                  prefix + ["mean_dN", "var_dN", "se_mean", "se_var", "expected", "pass"],
                  step_rows)
    payload = {"command": "simulate", "config": cfg.as_dict(), "config_sha256": h,
               "seed": cfg.seed, "results": points}
    write_json(out / "simulate.json", payload)
    if cfg.svg:
        _plot_simulation(out / "simulate.svg", cfg, rows)
    summary = {"config_sha256": h, "seed": cfg.seed,
               "window_pass": all(p["window_pass"] for p in points)}
    if per_step:
        summary["per_step_pass"] = all(p["per_step_pass"] for p in points)
    (stream or sys.stdout).write(json.dumps(_jsonable(summary), sort_keys=True) + "\n")
    return EXIT_OK


def _plot_simulation(path, cfg, rows) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "tickwork"
    data = np.array(rows, dtype=float)
    off = 1 if cfg.sweep else 0
    last = data[:, off] == data[:, off].max()
    d = data[last]
    x = d[:, 0] if cfg.sweep else np.arange(d.shape[0])
    xlabel = cfg.sweep["name"] if cfg.sweep else "point"
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.errorbar(x, d[:, off + 1], yerr=d[:, off + 3], fmt="o", label="mean")
    ax1.errorbar(x, d[:, off + 2], yerr=d[:, off + 4], fmt="s", label="variance")
    ax1.plot(x, d[:, off + 7], "k--", lw=1)
    ax1.plot(x, d[:, off + 8], "k--", lw=1)
    ax1.set_xlabel(xlabel)
    ax1.legend(frameon=False)
    ax2.errorbar(x, d[:, off + 5], yerr=d[:, off + 6], fmt="o")
    ax2.plot(x, d[:, off + 8] / d[:, off + 7] - 1.0, "k--", lw=1)
    ax2.set_xlabel(xlabel)
    ax2.set_ylabel("Q")
    if cfg.sweep and cfg.sweep.get("log"):
        ax1.set_xscale("log")
        ax2.set_xscale("log")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_validate(tol=None, inject_epsilon=None, out_dir=None, stream=None) -> int:
    results = run_suites(gaussian_tol=tol,
                         inject_epsilons=(inject_epsilon,) if inject_epsilon is not None else ())
    failures = [f"{r.name}: {msg}" for r in results for msg in (r.failures or ["failed"])
                if not r.passed]
    payload = {"command": "validate", "passed": not failures,
               "suites": [r.as_dict() for r in results], "failures": failures}
    if out_dir is not None:
        write_json(Path(out_dir) / "validate.json", payload)
    (stream or sys.stdout).write(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
    return EXIT_OK if not failures else EXIT_VALIDATION


# --- entry point -----------------------------------------------------------------------

def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--config", metavar="FILE", help="JSON config merged over the preset")
    common.add_argument("--seed", help=f"unsigned 64-bit seed (fallback: ${SEED_ENV})")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--sweep", metavar="SPEC", help="name=lo:hi:n(:log), or 'none'")
    common.add_argument("--windows", metavar="T1,T2,...", help="window end times")
    common.add_argument("--kind", choices=sorted(_KINDS))
    for name in _MODEL_FIELDS:
        common.add_argument(_flag(name), dest=name, type=float, metavar="X")
    common.add_argument("--dt", type=float)
    common.add_argument("--n-steps", dest="n_steps", type=int)
    common.add_argument("--n-traj", dest="n_traj", type=int)
    common.add_argument("--init", dest="initial_state", choices=("steady", "ground"))
    common.add_argument("--workers", type=int, default=1, help="threads per ensemble")
    common.add_argument("--svg", action="store_true", help="also write an SVG plot")

    parser = argparse.ArgumentParser(prog="tickwork",
                                     description="Tick statistics of measurement-fueled clocks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="steady state and figures of merit")
    sub.add_parser("ldt", parents=[common], help="scaled cumulant generating function")
    sub.add_parser("simulate", parents=[common], help="Monte-Carlo tick ensembles")
    val = sub.add_parser("validate", help="run the self-check suites")
    val.add_argument("--tol", type=float, help="tolerance for the Gaussian quadrature check")
    val.add_argument("--out", metavar="DIR")
    val.add_argument("--inject-kraus-epsilon", type=float, help=argparse.SUPPRESS)
    return parser


def main(argv=None, env=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        out_dir = getattr(args, "out", None)
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
        if args.command == "validate":
            return cmd_validate(args.tol, args.inject_kraus_epsilon, out_dir)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = resolve_config(args, args.command, env)
        if args.command == "steady":
            return cmd_steady(cfg, out_dir)
        out_dir = out_dir or "."
        if args.command == "ldt":
            return cmd_ldt(cfg, out_dir)
        return cmd_simulate(cfg, out_dir, workers=args.workers)
    except NumericalError as exc:
        print(f"tickwork: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, TickworkError, OSError) as exc:
        print(f"tickwork: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line interface: certify / solve / ivp / verify with file artifacts.

Configs are JSON; complex matrices are nested arrays of [re, im] pairs.
Every run echoes the fully resolved config (all defaults made explicit) to
``config_echo.json`` in the output directory.  Report files are ``key=value``
lines in a fixed key order so that repeated runs diff clean.

Exit codes: 0 success, 1 analytic failure (certification, singular frequency,
residual/gap/decay out of bounds), 2 usage or config error.
"""
from __future__ import annotations

import argparse
import importlib
import json
import os
import sys

import numpy as np

from .analysis import auto_tail_window, default_margin, fit_decay_rate, verify_stability
from .certify import SamplingConfig, certify
from .errors import (CertificationError, ConfigError, EdgeMassError,
                     GridMismatchError, KernelAdmissibilityError,
                     SingularFrequencyError)
from .material import DaeLaw, DelayLaw, IntegroLaw, Kernel, KernelMode
from .signals import (Signal, TimeGrid, gaussian_pulse, signal_from_csv,
                      signal_to_csv, step_exp, support_lower_bound)
from .solver import EvolutionaryProblem, IvpProblem, ivp_solve, solve, solve_integro
from .spatial import SpatialOperator, build_mixed_type_system, indicators_from_intervals

RESIDUAL_LIMIT = 1e-8

_FORCING_DEFAULTS = {
    "pulse": {"center": 0.5, "width": 0.1, "amplitude": 1.0},
    "step_exp": {"start": 0.0, "rate": 1.0},
    "csv": {},
    "zero": {},
}

_TOP_KEYS = {"family", "grid", "rho", "nu", "m0", "m1", "a", "h", "c",
             "kernel", "mixed", "custom", "forcing", "u0", "phi_scale",
             "sampling", "check_certified"}


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_kv(path: str, pairs) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for key, value in pairs:
            fh.write(f"{key}={_fmt(value)}\n")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _as_complex_matrix(node, name: str) -> np.ndarray:
    """Parse a nested list of [re, im] pairs into a complex matrix."""
    try:
        arr = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected nested [re, im] arrays") from exc
    if arr.ndim == 2:  # vector of [re, im] pairs
        _require(arr.shape[1] == 2, f"{name}: entries must be [re, im] pairs")
        return arr[:, 0] + 1j * arr[:, 1]
    _require(arr.ndim == 3 and arr.shape[2] == 2,
             f"{name}: entries must be [re, im] pairs")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def _matrix_to_json(mat: np.ndarray):
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def _vector_to_json(vec: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec, dtype=complex)]


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "top-level config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    return resolve_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def resolve_config(raw: dict, base_dir: str = ".") -> dict:
    """Validate a raw config dict and fill in every default explicitly."""
    cfg: dict = {}
    family = raw.get("family")
    _require(family in ("dae", "delay", "integro", "mixed1d", "custom"),
             f"family must be one of dae|delay|integro|mixed1d|custom, got {family!r}")
    cfg["family"] = family

    grid = raw.get("grid")
    _require(isinstance(grid, dict), "grid: expected an object with t0, dt, n_steps")
    for key in ("t0", "dt", "n_steps"):
        _require(key in grid, f"grid.{key} is required")
    _require(set(grid) <= {"t0", "dt", "n_steps"}, "grid: unknown keys")
    cfg["grid"] = {"t0": float(grid["t0"]), "dt": float(grid["dt"]),
                   "n_steps": int(grid["n_steps"])}

    rho = raw.get("rho")
    _require(isinstance(rho, (int, float)) and rho > 0, "rho must be a positive number")
    cfg["rho"] = float(rho)

    nu = raw.get("nu")
    _require(nu is None or isinstance(nu, (int, float)), "nu must be a number or null")
    cfg["nu"] = None if nu is None else float(nu)

    for key in ("m0", "m1", "a"):
        cfg[key] = raw.get(key)
    cfg["h"] = None if raw.get("h") is None else float(raw["h"])
    cfg["c"] = None if raw.get("c") is None else float(raw["c"])
    cfg["kernel"] = raw.get("kernel")
    cfg["mixed"] = raw.get("mixed")
    cfg["custom"] = raw.get("custom")

    forcing = raw.get("forcing", {"kind": "zero"})
    _require(isinstance(forcing, dict) and "kind" in forcing, "forcing: expected {kind: ...}")
    kind = forcing["kind"]
    _require(kind in _FORCING_DEFAULTS, f"forcing.kind must be pulse|step_exp|csv|zero, got {kind!r}")
    resolved = {"kind": kind}
    resolved.update(_FORCING_DEFAULTS[kind])
    for key, value in forcing.items():
        if key == "kind":
            continue
        _require(key in _FORCING_DEFAULTS[kind] or (kind == "csv" and key == "path"),
                 f"forcing: unknown key {key!r} for kind {kind!r}")
        resolved[key] = value
    if kind == "csv":
        _require("path" in resolved, "forcing: csv forcing needs a path")
        if not os.path.isabs(resolved["path"]):
            resolved["path"] = os.path.join(base_dir, resolved["path"])
        _require(os.path.exists(resolved["path"]),
                 f"forcing: csv file {resolved['path']} does not exist")
    cfg["forcing"] = resolved

    cfg["u0"] = raw.get("u0")
    cfg["phi_scale"] = float(raw.get("phi_scale", 1.0))

    sampling = raw.get("sampling", {})
    _require(isinstance(sampling, dict), "sampling: expected an object")
    defaults = {"sigma_max": 10.0, "tau_max": 100.0, "n_sigma": 200, "n_tau": 401}
    _require(set(sampling) <= set(defaults), "sampling: unknown keys")
    defaults.update(sampling)
    cfg["sampling"] = defaults

    cfg["check_certified"] = bool(raw.get("check_certified", True))
    return cfg


class _BuiltProblem:
    """Everything the commands need, derived once from the config."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.grid = TimeGrid(cfg["grid"]["t0"], cfg["grid"]["dt"], cfg["grid"]["n_steps"])
        self.family = cfg["family"]
        self.kernel = None
        self.c = None
        self.A = None
        self.mixed_system = None

        family = self.family
        if family in ("dae", "delay"):
            _require(cfg["m0"] is not None and cfg["m1"] is not None,
                     f"{family}: m0 and m1 are required")
            m0 = _as_complex_matrix(cfg["m0"], "m0")
            m1 = _as_complex_matrix(cfg["m1"], "m1")
            if family == "dae":
                self.law = DaeLaw(m0, m1)
            else:
                _require(cfg["h"] is not None and cfg["h"] < 0, "delay: h must be negative")
                self.law = DelayLaw(m0, m1, cfg["h"])
        elif family == "integro":
            _require(cfg["kernel"] is not None, "integro: kernel is required")
            _require(cfg["c"] is not None and cfg["c"] > 0, "integro: c must be positive")
            self.kernel = _parse_kernel(cfg["kernel"])
            self.c = cfg["c"]
            self.law = IntegroLaw(self.kernel, self.c)
        elif family == "mixed1d":
            _require(cfg["mixed"] is not None, "mixed1d: mixed parameters are required")
            self.mixed_system = _parse_mixed(cfg["mixed"])
            self.law = self.mixed_system.law()
            self.A = self.mixed_system.A
        else:  # custom
            _require(cfg["custom"] is not None and "import" in cfg["custom"],
                     "custom: an import path module:callable is required")
            self.law, self.A = _load_custom(cfg["custom"]["import"])

        if cfg["a"] is not None:
            _require(family in ("dae", "delay", "integro"),
                     f"{family}: explicit a matrix not supported")
            self.A = SpatialOperator(_as_complex_matrix(cfg["a"], "a"))
        self.dim = self.law.dim

    def forcing(self) -> Signal:
        spec = self.cfg["forcing"]
        kind = spec["kind"]
        if kind == "pulse":
            f = gaussian_pulse(self.grid, spec["center"], spec["width"], dim=self.dim)
            if spec["amplitude"] != 1.0:
                f = spec["amplitude"] * f
            return f
        if kind == "step_exp":
            return step_exp(self.grid, start=spec["start"], rate=spec["rate"], dim=self.dim)
        if kind == "csv":
            f = signal_from_csv(spec["path"])
            if f.grid != self.grid:
                raise ConfigError("forcing: csv grid does not match the config grid")
            _require(f.dim == self.dim, "forcing: csv dimension does not match the problem")
            return f
        return Signal.zeros(self.grid, self.dim)

    def run_solve(self, f: Signal, threads: int) -> Signal:
        if self.family == "integro":
            return solve_integro(self.kernel, self.c, self.A, f, self.cfg["rho"],
                                 threads=threads)
        problem = EvolutionaryProblem(self.law, self.A, self.cfg["rho"], f)
        return solve(problem, check_certified=self.cfg["check_certified"], threads=threads)


def _parse_kernel(node: dict) -> Kernel:
    _require(isinstance(node, dict) and "modes" in node and "nu0" in node,
             "kernel: expected {modes: [...], nu0: ...}")
    _require(set(node) <= {"modes", "nu0"}, "kernel: unknown keys")
    modes = []
    for k, mode in enumerate(node["modes"]):
        _require(isinstance(mode, dict) and "gamma" in mode and "beta" in mode,
                 f"kernel.modes[{k}]: expected {{gamma, beta}}")
        modes.append(KernelMode(_as_complex_matrix(mode["gamma"], f"kernel.modes[{k}].gamma"),
                                float(mode["beta"])))
    return Kernel(tuple(modes), float(node["nu0"]), modes[0].gamma.shape[0])


def _parse_mixed(node: dict):
    _require(isinstance(node, dict), "mixed: expected an object")
    _require(set(node) <= {"p", "c", "omega0", "omega1"}, "mixed: unknown keys")
    for key in ("p", "c", "omega0", "omega1"):
        _require(key in node, f"mixed.{key} is required")
    p = int(node["p"])
    ind0, ind1 = indicators_from_intervals(p, tuple(node["omega0"]), tuple(node["omega1"]))
    return build_mixed_type_system(p, 1.0 / (p + 1), ind0, ind1, float(node["c"]))


def _load_custom(spec: str):
    _require(":" in spec, "custom.import must look like package.module:callable")
    mod_name, attr = spec.split(":", 1)
    try:
        factory = getattr(importlib.import_module(mod_name), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"custom: cannot load {spec!r}: {exc}") from exc
    law, a_matrix = factory()
    return law, (None if a_matrix is None else SpatialOperator(a_matrix))


def _echo_config(cfg: dict, out_dir: str) -> None:
    with open(os.path.join(out_dir, "config_echo.json"), "w", encoding="ascii") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _certification(built: _BuiltProblem, nu: float):
    sampling = SamplingConfig(**built.cfg["sampling"])
    return certify(built.law, nu, sampling=sampling)


def _write_certification(report, out_dir: str) -> None:
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="ascii") as fh:
        fh.write(report.to_text())
    _write_kv(os.path.join(out_dir, "report.kv"), report.kv_pairs())


def _solution_metadata(built: _BuiltProblem, u: Signal, extra=()) -> list:
    meta = u.meta
    pairs = [
        ("family", built.family),
        ("t0", built.grid.t0),
        ("dt", built.grid.dt),
        ("n_steps", built.grid.n_steps),
        ("rho", built.cfg["rho"]),
        ("residual", meta["residual"]),
        ("edge_mass_rhs", meta["edge_mass_rhs"]),
        ("edge_mass_solution", meta["edge_mass_solution"]),
    ]
    pairs.extend(extra)
    pairs.append(("warnings", ";".join(meta["warnings"]) if meta.get("warnings") else "none"))
    return pairs


def cmd_certify(cfg: dict, out_dir: str, threads: int) -> int:
    built = _BuiltProblem(cfg)
    nu = cfg["nu"] if cfg["nu"] is not None else 0.0
    report = _certification(built, nu)
    _write_certification(report, out_dir)
    _echo_config(cfg, out_dir)
    return 0 if report.passed else 1


def cmd_solve(cfg: dict, out_dir: str, threads: int) -> int:
    built = _BuiltProblem(cfg)
    u = built.run_solve(built.forcing(), threads)
    signal_to_csv(u, os.path.join(out_dir, "solution.csv"))
    _write_kv(os.path.join(out_dir, "metadata.kv"), _solution_metadata(built, u))
    _echo_config(cfg, out_dir)
    return 0 if u.meta["residual"] <= RESIDUAL_LIMIT else 1


def cmd_ivp(cfg: dict, out_dir: str, threads: int) -> int:
    built = _BuiltProblem(cfg)
    _require(built.family in ("dae", "mixed1d"),
             "ivp: only dae/mixed1d families carry (M0, M1) initial data")
    _require(cfg["u0"] is not None, "ivp: u0 is required")
    u0 = _as_complex_matrix(cfg["u0"], "u0")
    _require(u0.ndim == 1 and u0.shape[0] == built.dim,
             f"ivp: u0 must have {built.dim} entries")
    f = built.forcing()
    lower = support_lower_bound(f, 1e-8)
    _require(lower is None or lower >= 0.0, "ivp: forcing must be supported in [0, inf)")
    problem = IvpProblem(built.law.M0, built.law.M1, built.A, u0, f,
                         rho=cfg["rho"], phi_scale=cfg["phi_scale"])
    u, gap = ivp_solve(problem, threads=threads)
    signal_to_csv(u, os.path.join(out_dir, "solution.csv"))
    m0u0 = float(np.linalg.norm(np.asarray(built.law.M0) @ u0))
    limit = 10.0 * built.grid.dt * m0u0 + 1e-12
    _write_kv(os.path.join(out_dir, "metadata.kv"),
              _solution_metadata(built, u, extra=[("initial_gap", gap),
                                                  ("gap_limit", limit)]))
    _echo_config(cfg, out_dir)
    return 0 if gap <= limit else 1


def cmd_verify(cfg: dict, out_dir: str, threads: int) -> int:
    built = _BuiltProblem(cfg)
    if cfg["nu"] is not None:
        nu_certified = cfg["nu"]
        report = _certification(built, nu_certified)
    else:
        report = _certification(built, 0.0)
        _require(report.closed_form_rate is not None,
                 "verify: nu is required for families without a closed-form rate")
        nu_certified = min(report.closed_form_rate, 1e6)
    _write_certification(report, out_dir)
    code = 0 if report.passed else 1

    u = built.run_solve(built.forcing(), threads)
    signal_to_csv(u, os.path.join(out_dir, "solution.csv"))
    _write_kv(os.path.join(out_dir, "metadata.kv"), _solution_metadata(built, u))

    margin = default_margin(nu_certified)
    window = auto_tail_window(u)
    fit = fit_decay_rate(u, window)
    passed, _ = verify_stability(u, nu_certified, margin)
    _write_kv(os.path.join(out_dir, "decay.kv"), [
        ("nu_certified", nu_certified),
        ("margin", margin),
        ("fitted_rate", fit.rate),
        ("window_lo", window[0]),
        ("window_hi", window[1]),
        ("rms_residual", fit.rms_residual),
        ("samples_used", fit.samples_used),
        ("passed", passed),
    ])
    _echo_config(cfg, out_dir)
    if not passed:
        code = 1
    return code


_COMMANDS = {
    "certify": cmd_certify,
    "solve": cmd_solve,
    "ivp": cmd_ivp,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="evostab",
        description="Frequency-domain solver and exponential-stability certifier "
                    "for evolutionary equations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a JSON run config")
        cmd.add_argument("--out", required=True, help="output directory (created if missing)")
        cmd.add_argument("--threads", type=int, default=1, help="solver thread count")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return _COMMANDS[args.command](cfg, args.out, args.threads)
    except (ConfigError, GridMismatchError, KernelAdmissibilityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SingularFrequencyError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1
    except (CertificationError, EdgeMassError) as exc:
        print(f"analytic failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

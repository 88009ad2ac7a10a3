"""Command-line entry point.

    qenergy <command> --config run.json [--set key=value ...] [--out DIR]
                      [--seed N] [--tolerance-profile {strict,default}]

Commands: density, evolve, verify, transport, figures, explore, limit.
Exit status: 0 when every invoked check passes, 1 when a check fails, 2 for
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import explorer, fieldio, observables as obs, transport, verify
from .catalog import PacketSpec, landau_energy, oscillator_energy, realize
from .grid import Axis, Grid, GridError, PhysConstants, ScalarField, integrate
from .potential import PotentialSpec
from .propagate import ResolutionWarning, evolve, expectation_H, time_derivative

COMMANDS = ("density", "evolve", "verify", "transport", "figures", "explore", "limit")
PARAMS = {
    "density": set(),
    "evolve": {"export_every"},
    "verify": {"n_boxes", "c_values"},
    "transport": {"t_min", "t_max", "n_times", "n_points"},
    "figures": {"t", "n_points"},
    "explore": {"N", "budget", "x_range", "t_range", "resolution", "restart_budget"},
    "limit": {"c_values"},
}
TOP_KEYS = {"command", "state", "grid", "potential", "constants", "time", "evolution",
            "tolerance_profile", "output", "seed", "params"}
EVOLUTION_KEYS = {"dt", "n_steps", "snapshot_stride"}


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class Evolution:
    dt: float = 1e-3
    n_steps: int = 100
    snapshot_stride: int = 1


@dataclass(frozen=True)
class RunConfig:
    command: str
    state: PacketSpec | explorer.SuperpositionSpec | None = None
    grid: Grid | None = None
    potential: dict = field(default_factory=dict)
    constants: PhysConstants = PhysConstants()
    time: float = 0.0
    evolution: Evolution = Evolution()
    tolerance_profile: str = "default"
    output: str = "out"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def potential_spec(self) -> PotentialSpec:
        return PotentialSpec.from_dict(self.potential, self.grid)

    def to_dict(self) -> dict:
        state = None
        if isinstance(self.state, PacketSpec):
            state = self.state.to_dict()
        elif isinstance(self.state, explorer.SuperpositionSpec):
            state = {"superposition": self.state.to_dict()}
        c = self.constants
        return {
            "command": self.command,
            "state": state,
            "grid": self.grid.to_dict() if self.grid is not None else None,
            "potential": dict(self.potential),
            "constants": {"hbar": c.hbar, "mass": c.mass, "c": c.c,
                          "charge_magnitude": c.charge_magnitude},
            "time": self.time,
            "evolution": {"dt": self.evolution.dt, "n_steps": self.evolution.n_steps,
                          "snapshot_stride": self.evolution.snapshot_stride},
            "tolerance_profile": self.tolerance_profile,
            "output": self.output,
            "seed": self.seed,
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        command = d.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
        params = dict(d.get("params") or {})
        bad = set(params) - PARAMS[command]
        if bad:
            raise ConfigError(f"unknown params for {command}: {sorted(bad)}")
        evo = dict(d.get("evolution") or {})
        if set(evo) - EVOLUTION_KEYS:
            raise ConfigError(f"unknown evolution keys: {sorted(set(evo) - EVOLUTION_KEYS)}")
        profile = d.get("tolerance_profile", "default")
        if profile not in verify.TOLERANCES:
            raise ConfigError(f"unknown tolerance profile {profile!r}")
        try:
            state = _parse_state(d.get("state"))
            consts = PhysConstants(**(d.get("constants") or {}))
            grid = _parse_grid(d.get("grid"))
            evolution = Evolution(float(evo.get("dt", 1e-3)), int(evo.get("n_steps", 100)),
                                  int(evo.get("snapshot_stride", 1)))
            cfg = cls(command, state, grid, dict(d.get("potential") or {}), consts,
                      float(d.get("time", 0.0)), evolution, profile, str(d.get("output", "out")),
                      int(d.get("seed", 0)), params)
            cfg.potential_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg


def _parse_state(d):
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError("state must be an object")
    if "superposition" in d:
        if set(d) != {"superposition"}:
            raise ConfigError("a superposition state takes no other keys")
        return explorer.SuperpositionSpec.from_dict(d["superposition"])
    return PacketSpec.from_dict(d)


def _parse_grid(d):
    if d is None:
        return None
    if "axes" in d:
        if set(d) != {"axes"}:
            raise ConfigError("grid takes either 'axes' or the uniform shorthand")
        return Grid.from_dict(d)
    allowed = {"n_points", "x_min", "x_max", "periodic", "dim"}
    if set(d) - allowed:
        raise ConfigError(f"unknown grid keys: {sorted(set(d) - allowed)}")
    return Grid.uniform(int(d["n_points"]), float(d["x_min"]), float(d["x_max"]),
                        bool(d.get("periodic", True)), int(d.get("dim", 1)))


def apply_overrides(d: dict, overrides) -> dict:
    """--set a.b=value; value parsed as JSON when possible."""
    d = json.loads(json.dumps(d))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            if node.get(p) is None:
                node[p] = {}
            node = node[p]
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key}: {p} is not an object")
        node[parts[-1]] = val
    return d


def default_grid(spec, constants: PhysConstants) -> Grid:
    """A resolved grid for the catalog states when the config gives none."""
    hbar, m = constants.hbar, constants.mass
    v = getattr(spec, "variant", None)
    if v == "gaussian":
        half = 40 * spec.a * hbar * max(1.0, abs(spec.b))
        return Grid.uniform(1024, -half, half)
    if v == "ho_eigen":
        half = math.sqrt(hbar / (m * spec.omega)) * (10 + 1.5 * math.sqrt(spec.n + 1))
        return Grid.uniform(256, -half, half)
    if v == "landau":
        w = constants.cyclotron_frequency(spec.B)
        ell = math.sqrt(hbar / (m * w))
        kx = spec.k_x if spec.k_x else 1.0
        xlen = 2 * math.pi / abs(kx)
        y0 = hbar * spec.k_x / (m * w)
        half = ell * (12 + 2 * math.sqrt(spec.n + 1))
        axes = [Axis(16, 0.0, xlen), Axis(128, y0 - half, y0 + half)]
        if spec.k_z:
            axes.append(Axis(16, 0.0, 2 * math.pi / abs(spec.k_z)))
        return Grid(tuple(axes))
    if v == "scattering":
        k = float(spec.k)
        c0 = np.array([3.0, 2.0, 2.5]) / k
        h = 0.02 / k
        half = h * 15.5
        return Grid(tuple(Axis(32, c - half, c + half, periodic=False) for c in c0))
    if v == "plane_wave":
        kv = np.atleast_1d(np.asarray(spec.k, dtype=float))
        axes = []
        for kc in kv:
            length = 2 * math.pi / abs(kc) * 4 if kc else 2 * math.pi
            axes.append(Axis(64, 0.0, length))
        return Grid(tuple(axes))
    if v == "airy":
        return transport.airy_window(spec.beta, 0.0, 2001, constants)
    if isinstance(spec, explorer.SuperpositionSpec):
        lo = min(c - 12 * s for c, s in zip(spec.centers, spec.widths))
        hi = max(c + 12 * s for c, s in zip(spec.centers, spec.widths))
        return Grid.uniform(1024, lo, hi)
    raise ConfigError("no grid given and no default for this state")


# -- helpers -------------------------------------------------------------------


def _stamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    secs = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y%m%dT%H%M%SZ", time.gmtime(secs))


def _state_tag(cfg: RunConfig) -> str:
    if isinstance(cfg.state, PacketSpec):
        tag = cfg.state.label
    elif isinstance(cfg.state, explorer.SuperpositionSpec):
        tag = f"superposition{cfg.state.N}"
    elif cfg.command == "explore":
        tag = f"search_N{cfg.params.get('N', 1)}"
    else:
        tag = "none"
    return re.sub(r"[^A-Za-z0-9_.-]+", "", tag.replace("=", ""))


class Outputs:
    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.output)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.base = f"{cfg.command}_{_state_tag(cfg)}_{_stamp()}"
        self.written: list[Path] = []

    def path(self, suffix: str = "", ext: str = "json") -> Path:
        p = self.dir / f"{self.base}{suffix}.{ext}"
        self.written.append(p)
        return p

    def json(self, payload, suffix: str = "") -> Path:
        p = self.path(suffix, "json")
        p.write_text(verify.dump_report(payload) + "\n")
        return p


def _grid_for(cfg: RunConfig) -> Grid:
    return cfg.grid if cfg.grid is not None else default_grid(cfg.state, cfg.constants)


def _realize(cfg: RunConfig, grid: Grid, t: float | None = None):
    t = cfg.time if t is None else t
    if isinstance(cfg.state, explorer.SuperpositionSpec):
        return cfg.state.normalize(cfg.constants.hbar).realize(grid, t, cfg.constants)
    if cfg.state is None:
        raise ConfigError(f"{cfg.command} needs a state")
    return realize(cfg.state, grid, t, cfg.constants)


def _potential(cfg: RunConfig, grid: Grid) -> PotentialSpec:
    spec = cfg.state
    pot = dict(cfg.potential)
    if not pot and isinstance(spec, PacketSpec):
        if spec.variant == "ho_eigen":
            pot = {"variant": "harmonic", "omega": spec.omega}
        elif spec.variant == "landau":
            pot = {"variant": "uniform_magnetic", "B": spec.B}
    return PotentialSpec.from_dict(pot, grid)


def _eigen_energy(cfg: RunConfig):
    s = cfg.state
    if isinstance(s, PacketSpec):
        if s.variant == "ho_eigen":
            return oscillator_energy(s.n, s.omega, cfg.constants)
        if s.variant == "landau":
            return landau_energy(s.n, s.k_z, s.s, s.B, cfg.constants)
    return None


def _normalizable(cfg: RunConfig) -> bool:
    s = cfg.state
    return isinstance(s, explorer.SuperpositionSpec) or (isinstance(s, PacketSpec)
                                                          and s.normalizable)


# -- commands ------------------------------------------------------------------


def cmd_density(cfg: RunConfig, out: Outputs) -> bool:
    grid = _grid_for(cfg)
    phi = _realize(cfg, grid)
    U = _potential(cfg, grid)
    fields = {"rho": obs.rho(phi, U).values, "rho_alt": obs.rho_alt(phi, U).values}
    J = obs.current_J(phi, time_derivative(phi, U)).values
    for i, n in enumerate(grid.names):
        fields[f"J_{n}"] = J[i]
    fields["rho_s"] = obs.rho_s(phi, U if U.magnetic else None).values
    if not U.magnetic:
        JD = obs.current_JD(phi, U).values
        for i, n in enumerate(grid.names):
            fields[f"J_D_{n}"] = JD[i]
        mad = obs.madelung(phi, U)
        w = np.where(mad.mask, mad.density, 0.0)
        for part in ("kinetic", "potential", "quantum_potential"):
            fields[f"madelung_{part}"] = np.sum(np.where(mad.mask, w * getattr(mad, part), 0.0),
                                                axis=0)
    coords = [c.ravel() for c in grid.mesh()]
    transport.write_table(out.path("", "csv"), list(grid.names) + list(fields),
                          np.column_stack(coords + [v.ravel() for v in fields.values()]))
    scope = "total" if _normalizable(cfg) else "window"
    summary = {"integrals": {k: float(integrate(v, grid)) for k, v in fields.items()
                             if k.startswith("rho")},
               "scope": scope, "norm": phi.norm()}
    if scope == "total":
        summary["mean_energy"] = expectation_H(phi, U)
    out.json(verify.report_dict("density", _state_tag(cfg), grid, None, {}, summary, None, True))
    return True


def cmd_evolve(cfg: RunConfig, out: Outputs) -> bool:
    grid = _grid_for(cfg)
    phi = _realize(cfg, grid)
    U = _potential(cfg, grid)
    ev = cfg.evolution
    traj = evolve(phi, U, ev.dt, ev.n_steps, ev.snapshot_stride)
    tdir = out.dir / f"{out.base}_trajectory"
    fieldio.write_trajectory(traj, tdir, every=int(cfg.params.get("export_every", 1)))
    reports = []
    for cur in ("J", "J_D"):
        rep = verify.check_energy_conservation(traj, U, cur, profile=cfg.tolerance_profile)
        reports.append(rep.to_json(_state_tag(cfg), grid))
    if grid.dim >= 2:
        rep = verify.check_rho_s_conservation(traj, cfg.tolerance_profile)
        reports.append(rep.to_json(_state_tag(cfg), grid))
    passed = all(r["pass"] for r in reports)
    out.json({"reports": reports, "pass": passed, "trajectory": tdir.name})
    return passed


def _boxes(grid: Grid, n: int, seed: int):
    return verify.random_boxes(grid, n, seed)


def cmd_verify(cfg: RunConfig, out: Outputs) -> bool:
    grid = _grid_for(cfg)
    phi = _realize(cfg, grid)
    U = _potential(cfg, grid)
    tol = verify.tolerances(cfg.tolerance_profile)
    tag = _state_tag(cfg)
    reports = []
    E = _eigen_energy(cfg)
    if E is not None:
        st = verify.check_stationary(phi, U, E, cfg.tolerance_profile)
        reports.append(verify.report_dict("stationary", tag, grid, None, {"gap": st["tolerance"]},
                                          st, None, st["pass"]))
    rho = obs.rho(phi, U).values
    tmh = obs.rho_tmh(phi, U).values
    gap = float(np.max(np.abs(rho - tmh)) / max(np.max(np.abs(rho)), 1e-300))
    reports.append(verify.report_dict("tmh_equivalence", tag, grid, None, {"relative": 1e-12},
                                      {"relative_gap": gap}, None, gap < 1e-12))
    if _normalizable(cfg):
        mean = expectation_H(phi, U)
        d = abs(float(integrate(rho, grid)) - mean)
        reports.append(verify.report_dict("mean_energy", tag, grid, None,
                                          {"abs": tol["global_content"]},
                                          {"integral_rho": float(integrate(rho, grid)),
                                           "expectation_H": mean, "gap": d}, None,
                                          d < tol["global_content"]))
    if not U.magnetic:
        if U.variant == "none":
            ra = obs.rho_alt(phi, U).values
            reports.append(verify.report_dict("rho_alt_nonnegative", tag, grid, None, {}, {
                "min": float(ra.min())}, None, bool(ra.min() >= 0)))
        rot = verify.check_rotor(phi, U, cfg.tolerance_profile)
        reports.append(verify.report_dict("rotor", tag, grid, None, {"div": rot["tolerance"]},
                                          rot, None, rot["pass"]))
        sym = verify.check_symmetries(phi, None, cfg.tolerance_profile)
        reports.append(sym.to_json(tag, grid))
        split = obs.rest_split(phi)
        res = split.identity_residual(phi)
        reports.append(verify.report_dict("rest_split", tag, grid, None, {"relative": 1e-10},
                                          {"identity_residual": res,
                                           "n0_min": float(split.n0.values.min())}, None,
                                          res < 1e-10 and split.n0.values.min() >= 0))
    if grid.dim >= 2 and _normalizable(cfg) or isinstance(cfg.state, PacketSpec) and \
            cfg.state.variant == "landau":
        hol = verify.check_holography(phi, _boxes(grid, int(cfg.params.get("n_boxes", 5)),
                                                  cfg.seed),
                                      U if U.magnetic else None, cfg.tolerance_profile)
        reports.append(hol.to_json(tag, grid))
    if U.variant != "none" and not U.magnetic:
        lim = verify.check_limit_scaling(phi, cfg.params.get("c_values", [10.0, 100.0, 1000.0]),
                                         U, cfg.tolerance_profile)
        reports.append(lim.to_json(tag, grid))
    if grid.is_periodic() and not U.magnetic and _normalizable(cfg):
        ev = cfg.evolution
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            traj = evolve(phi, U, ev.dt, min(ev.n_steps, 20), 1)
        rep = verify.check_energy_conservation(traj, U, profile=cfg.tolerance_profile)
        reports.append(rep.to_json(tag, grid))
    passed = all(r["pass"] for r in reports)
    out.json({"reports": reports, "pass": passed})
    return passed


def cmd_transport(cfg: RunConfig, out: Outputs) -> bool:
    p = cfg.params
    spec = cfg.state
    if not isinstance(spec, PacketSpec) or spec.variant not in ("gaussian", "airy"):
        raise ConfigError("transport needs a gaussian or airy state")
    c = cfg.constants
    if spec.variant == "gaussian":
        grid = _grid_for(cfg)
        times = np.linspace(float(p.get("t_min", 0.0)), float(p.get("t_max", 3.0)),
                            int(p.get("n_times", 31)))
        data = transport.gaussian_velocity_table(spec.a, spec.b, times, grid, c)
        transport.write_table(out.path("", "csv"), ["t", "v_cor", "v_en", "v_mp"], data)
        phi = realize(spec, grid, 0.0, c)
        rep = transport.TransportReport(float(data[0, 1]), float(data[0, 2]),
                                        transport.momentum_moments(phi), None,
                                        transport.current_velocities(phi))
        closed = transport.gaussian_velocities(spec.a, spec.b, c)
        ok = rep.v_en >= rep.v_cor - 1e-12
        out.json(verify.report_dict("transport", _state_tag(cfg), grid, None, {},
                                    {**rep.to_json(), "closed_form": closed}, None, ok))
        return ok
    times = np.linspace(float(p.get("t_min", 0.5)), float(p.get("t_max", 10.0)),
                        int(p.get("n_times", 39)))
    data = transport.airy_gap_series(spec.beta, times, int(p.get("n_points", 2001)), c)
    transport.write_table(out.path("", "csv"), ["t", "v_r"], data)
    closed = [transport.airy_v_en(spec.beta, t, c) - float(transport.airy_v_cor(spec.beta, t, c))
              for t in times]
    ok = bool(np.all(data[:, 1] >= 0))
    out.json(verify.report_dict("transport", _state_tag(cfg), None, None, {},
                                {"v_r_numeric": data[:, 1].tolist(), "v_r_closed": closed,
                                 "t": times.tolist()}, None, ok))
    return ok


def cmd_figures(cfg: RunConfig, out: Outputs) -> bool:
    spec = cfg.state
    if not isinstance(spec, PacketSpec) or spec.variant != "airy":
        raise ConfigError("figures needs an airy state")
    t = float(cfg.params.get("t", math.sqrt(6.0)))
    n = int(cfg.params.get("n_points", 2001))
    data = transport.airy_density_profile(spec.beta, t, n, cfg.constants)
    transport.write_table(out.path("", "csv"), ["xi", "rho"], data)
    peak = transport.find_peak(data[:, 1], data[:, 0], "rightmost")
    from .catalog import airy_energy_peak

    exact = airy_energy_peak(spec.beta, t, cfg.constants)
    cell = float(data[1, 0] - data[0, 0])
    ok = abs(peak - exact) <= cell
    out.json(verify.report_dict("airy_energy_peak", _state_tag(cfg), None, None, {"cell": cell},
                                {"peak_numeric": peak, "peak_closed_form": exact,
                                 "gap": abs(peak - exact)}, None, ok))
    return ok


def cmd_explore(cfg: RunConfig, out: Outputs) -> bool:
    p = cfg.params
    kw = {}
    for key in ("x_range", "t_range", "resolution"):
        if key in p:
            kw[key] = tuple(p[key])
    if "restart_budget" in p:
        kw["restart_budget"] = int(p["restart_budget"])
    ledger = out.path("_ledger", "jsonl")
    if ledger.exists():
        ledger.unlink()
    rec = explorer.conjecture_search(int(p.get("N", 1)), int(p.get("budget", 1000)), cfg.seed,
                                     constants=cfg.constants, ledger=ledger, **kw)
    out.json(verify.report_dict("conjecture_search", _state_tag(cfg), None, None, {},
                                rec.to_dict(), None, True))
    return True


def cmd_limit(cfg: RunConfig, out: Outputs) -> bool:
    grid = _grid_for(cfg)
    phi = _realize(cfg, grid)
    U = _potential(cfg, grid)
    rep = verify.check_limit_scaling(phi, cfg.params.get("c_values", [10.0, 100.0, 1000.0]), U,
                                     cfg.tolerance_profile)
    out.json(rep.to_json(_state_tag(cfg), grid))
    return rep.passed


HANDLERS = {"density": cmd_density, "evolve": cmd_evolve, "verify": cmd_verify,
            "transport": cmd_transport, "figures": cmd_figures, "explore": cmd_explore,
            "limit": cmd_limit}


def run(command: str, cfg: RunConfig) -> tuple[int, list[Path]]:
    out = Outputs(cfg)
    ok = HANDLERS[command](cfg, out)
    return (0 if ok else 1), out.written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qenergy", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry (dotted keys, JSON values)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tolerance-profile", choices=sorted(verify.TOLERANCES))
    return ap


def load_config(args) -> RunConfig:
    d: dict = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    if d.get("command", args.command) != args.command:
        raise ConfigError(f"config is for {d['command']!r}, not {args.command!r}")
    d["command"] = args.command
    d = apply_overrides(d, args.set)
    if args.out is not None:
        d["output"] = args.out
    if args.seed is not None:
        d["seed"] = args.seed
    if args.tolerance_profile is not None:
        d["tolerance_profile"] = args.tolerance_profile
    return RunConfig.from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        code, written = run(args.command, cfg)
    except (ConfigError, GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for p in written:
        print(p)
    print("PASS" if code == 0 else "FAIL")
    return code


if __name__ == "__main__":
    sys.exit(main())

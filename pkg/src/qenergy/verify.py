"""Quantified checks of the local conservation laws, the holographic identity,
the non-relativistic limit and the discrete symmetries of rho_s.

Every check returns an immutable report with a machine-readable pass flag
decided against the TOLERANCES table below (never against inline numbers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import observables as obs
from .grid import GridError, SpinorField, VectorField, divergence, integrate, surface_integral
from .potential import PotentialSpec, as_potential
from .propagate import Trajectory, evolve, time_derivative

TOLERANCES = {
    "default": {
        "energy_conservation": 1e-6,
        "relative_residual": 1e-3,
        "rho_s_conservation": 1e-6,
        "work_term": 1e-5,
        "stationary": 1e-10,
        "global_content": 1e-8,
        "holography": 1e-6,
        "limit_slope": 0.1,
        "symmetry": 1e-10,
        "rotor": 1e-6,
        "order_band": 0.2,
    },
    "strict": {
        "energy_conservation": 1e-8,
        "relative_residual": 1e-5,
        "rho_s_conservation": 1e-8,
        "work_term": 1e-7,
        "stationary": 1e-12,
        "global_content": 1e-10,
        "holography": 1e-8,
        "limit_slope": 0.05,
        "symmetry": 1e-12,
        "rotor": 1e-8,
        "order_band": 0.1,
    },
}


def tolerances(profile: str = "default") -> dict:
    if profile not in TOLERANCES:
        raise ValueError(f"unknown tolerance profile {profile!r}")
    return dict(TOLERANCES[profile])


def _l2(values: np.ndarray, grid) -> float:
    return float(np.sqrt(max(integrate(values ** 2, grid), 0.0)))


def time_stencil(n_snapshots: int) -> tuple[np.ndarray, int]:
    """Centered first-derivative weights: 4th order with >= 5 snapshots, else 2nd."""
    if n_snapshots >= 5:
        return np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 2
    if n_snapshots >= 3:
        return np.array([-0.5, 0.0, 0.5]), 1
    raise ValueError("conservation checks need at least 3 snapshots")


def _centered_rate(series: Sequence[np.ndarray], i: int, weights, half, dt) -> np.ndarray:
    return sum(w * series[i + j - half] for j, w in enumerate(weights) if w != 0.0) / dt


@dataclass(frozen=True)
class ConservationReport:
    check: str
    residual_L2: float
    residual_Linf: float
    relative_L2: float
    tolerance: float
    passed: bool
    per_snapshot: tuple = ()
    convergence_order: float | None = None
    dt: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self, state: str = "", grid=None, tol: dict | None = None) -> dict:
        return report_dict(self.check, state, grid, self.dt, tol or {"residual": self.tolerance},
                           {"L2": self.residual_L2, "Linf": self.residual_Linf,
                            "relative_L2": self.relative_L2, **self.extra,
                            "per_snapshot": list(self.per_snapshot)},
                           self.convergence_order, self.passed)


def report_dict(check: str, state: str, grid, dt, tol: dict, residuals: dict, order,
                passed: bool) -> dict:
    """The JSON report schema {check, state, grid, dt, tolerances, residuals, order, pass}."""
    return {
        "check": check,
        "state": state,
        "grid": grid.to_dict() if grid is not None else None,
        "dt": dt,
        "tolerances": tol,
        "residuals": residuals,
        "order": order,
        "pass": bool(passed),
    }


def dump_report(report: dict) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.bool_):
            return bool(o)
        raise TypeError(type(o).__name__)

    return json.dumps(report, indent=1, sort_keys=True, default=default)


def _summarize(check, residuals, rates, times, grid, abs_tol, rel_tol, dt, extra=None):
    per = []
    worst_l2 = worst_inf = worst_rel = 0.0
    for t, r, rate in zip(times, residuals, rates):
        l2, linf = _l2(r, grid), float(np.max(np.abs(r)))
        scale = _l2(rate, grid)
        rel = l2 / scale if scale > 0 else (0.0 if l2 == 0 else np.inf)
        per.append({"t": float(t), "L2": l2, "Linf": linf, "relative_L2": rel})
        worst_l2, worst_inf, worst_rel = max(worst_l2, l2), max(worst_inf, linf), max(worst_rel, rel)
    passed = worst_l2 < abs_tol or worst_rel < rel_tol
    return ConservationReport(check, worst_l2, worst_inf, worst_rel, abs_tol, passed, tuple(per),
                              None, dt, extra or {})


def check_energy_conservation(traj: Trajectory, U: PotentialSpec | None = None,
                              current: str = "J", include_work: bool = True,
                              profile: str = "default") -> ConservationReport:
    """Residual of rho_dot + div J - U_dot |phi|^2 at interior snapshots.

    rho_dot comes from centered differences over snapshots; J uses the exact
    phi_dot = -(i/hbar) H phi; the work term uses the analytic U_dot.
    """
    U = as_potential(U if U is not None else traj.potential)
    tol = tolerances(profile)
    weights, half = time_stencil(len(traj))
    snaps = traj.snapshots
    grid = snaps[0].grid
    c = snaps[0].constants
    rhos = [obs.rho(s, U).values for s in snaps]
    residuals, rates, times = [], [], []
    for i in range(half, len(snaps) - half):
        phi = snaps[i]
        rate = _centered_rate(rhos, i, weights, half, traj.interval)
        if current == "J":
            J = obs.current_J(phi, time_derivative(phi, U))
        elif current == "J_D":
            J = obs.current_JD(phi, U)
        else:
            raise ValueError(f"unknown current {current!r}")
        r = rate + divergence(J.values, grid)
        if include_work:
            r = r - U.rate(grid, phi.time, c) * phi.density()
        residuals.append(r)
        rates.append(rate)
        times.append(phi.time)
    abs_tol = tol["work_term"] if U.time_dependent else tol["energy_conservation"]
    name = "energy_conservation" if include_work else "energy_conservation_no_work"
    return _summarize(name, residuals, rates, times, grid, abs_tol, tol["relative_residual"],
                      traj.interval, {"current": current})


def check_rho_s_conservation(traj: Trajectory, profile: str = "default") -> ConservationReport:
    """Residual of rho_s_dot + div J_s with J_s = -Upsilon_dot.

    rho_s is taken in its cross-gradient form and both time derivatives come
    from centered differences of snapshots.  Also reports the global content.
    """
    tol = tolerances(profile)
    weights, half = time_stencil(len(traj))
    snaps = traj.snapshots
    grid = snaps[0].grid
    if traj.potential.magnetic:
        raise ValueError("rho_s conservation is checked for A = 0 only")
    rs = [obs.rho_s_cross(s).values for s in snaps]
    ups = [obs.upsilon(s).values[: grid.dim] for s in snaps]
    content = [float(integrate(r, grid)) for r in rs]
    residuals, rates, times = [], [], []
    for i in range(half, len(snaps) - half):
        rate = _centered_rate(rs, i, weights, half, traj.interval)
        ups_rate = _centered_rate(ups, i, weights, half, traj.interval)
        residuals.append(rate - divergence(ups_rate, grid))
        rates.append(rate)
        times.append(snaps[i].time)
    rep = _summarize("rho_s_conservation", residuals, rates, times, grid,
                     tol["rho_s_conservation"], tol["relative_residual"], traj.interval,
                     {"global_content_max": max(abs(x) for x in content)})
    ok = rep.passed and max(abs(x) for x in content) < tol["global_content"]
    return ConservationReport(rep.check, rep.residual_L2, rep.residual_Linf, rep.relative_L2,
                              rep.tolerance, ok, rep.per_snapshot, None, rep.dt, rep.extra)


def convergence_study(phi0: SpinorField, U: PotentialSpec | None, dt: float, n_steps: int,
                      check: Callable = check_energy_conservation, levels: int = 3,
                      profile: str = "default") -> ConservationReport:
    """Run the check on trajectories with dt, dt/2, dt/4 over the same time
    span and fit the residual decay order; reports the finest run."""
    reps = []
    for lev in range(levels):
        f = 2 ** lev
        traj = evolve(phi0, U, dt / f, n_steps * f, snapshot_stride=f)
        reps.append(check(traj, U) if check is check_energy_conservation else check(traj))
    res = np.array([r.residual_L2 for r in reps])
    steps = dt / 2.0 ** np.arange(levels)
    order = None
    if np.all(res > 0):
        order = float(np.polyfit(np.log(steps), np.log(res), 1)[0])
    best = reps[-1]
    extra = dict(best.extra, residual_by_level=res.tolist(), dt_levels=steps.tolist())
    return ConservationReport(best.check, best.residual_L2, best.residual_Linf, best.relative_L2,
                              best.tolerance, best.passed, best.per_snapshot, order, best.dt, extra)


# -- holography --------------------------------------------------------------


@dataclass(frozen=True)
class HolographyReport:
    boxes: tuple
    whole_grid: float
    tolerance: float
    passed: bool

    def to_json(self, state: str = "", grid=None) -> dict:
        return report_dict("holography", state, grid, None,
                           {"gap": self.tolerance}, {"boxes": list(self.boxes),
                                                     "whole_grid": self.whole_grid},
                           None, self.passed)


def check_holography(phi: SpinorField, boxes: Sequence, A=None,
                     profile: str = "default") -> HolographyReport:
    """Per box: volume integral of rho_s against the flux of Upsilon through
    the box surface."""
    tol = tolerances(profile)
    grid = phi.grid
    ups = obs.upsilon(phi, A)
    rs = divergence(ups.values, grid)
    flux_field = VectorField(grid, ups.values[: grid.dim])
    out = []
    for box in boxes:
        vol = float(integrate(rs, grid, region=box))
        surf = surface_integral(flux_field, box)
        out.append({"box": [list(map(float, b)) for b in box], "volume_integral": vol,
                    "surface_integral": surf, "gap": abs(vol - surf)})
    whole = float(integrate(rs, grid))
    passed = all(b["gap"] < tol["holography"] for b in out) and abs(whole) < tol["global_content"]
    return HolographyReport(tuple(out), whole, tol["holography"], passed)


def random_boxes(grid, n: int, seed: int = 0, margin: int = 3) -> list:
    """Random boxes strictly inside the grid, at least ``margin`` cells from the edges."""
    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(n):
        box = []
        for a in grid.axes:
            lo_lim = a.x_min + margin * a.spacing
            hi_lim = a.upper - margin * a.spacing
            lo, hi = np.sort(rng.uniform(lo_lim, hi_lim, 2))
            if hi - lo < 2 * a.spacing:
                hi = min(lo + 2 * a.spacing, hi_lim)
            box.append((float(lo), float(hi)))
        boxes.append(box)
    return boxes


def sphere_quadrature(n_theta: int = 96, n_phi: int = 192):
    """Gauss-Legendre in cos(theta) times the periodic rule in phi; returns
    unit vectors (3, N) and solid-angle weights (N)."""
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - ct ** 2)
    dirs = np.array([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)),
                     np.outer(ct, np.ones(n_phi))]).reshape(3, -1)
    w = np.outer(wt, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    return dirs, w


def sphere_content(density: Callable, R: float, n_theta: int = 96, n_phi: int = 192,
                   part: str = "full") -> float:
    """R^2 times the solid-angle integral of density over the sphere of radius R.

    part="positive" integrates max(density, 0), i.e. the content of the part of
    the sphere where the density is positive.
    """
    dirs, w = sphere_quadrature(n_theta, n_phi)
    vals = density(R * dirs)
    if part == "positive":
        vals = np.maximum(vals, 0.0)
    elif part != "full":
        raise ValueError(f"unknown part {part!r}")
    return float(R ** 2 * np.sum(w * vals))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# -- non-relativistic limit ----------------------------------------------------


@dataclass(frozen=True)
class LimitReport:
    c_values: tuple
    residuals: tuple
    slope: float
    passed: bool
    tolerance: float

    def to_json(self, state: str = "", grid=None) -> dict:
        return report_dict("limit_scaling", state, grid, None,
                           {"slope_band": self.tolerance},
                           {"c": list(self.c_values), "residual_Linf": list(self.residuals),
                            "slope": self.slope}, self.slope, self.passed)


def limit_residual(phi: SpinorField, c: float, U: PotentialSpec | None = None) -> np.ndarray:
    """dirac_rho - m c^2 (phi^dag phi + chi^dag chi) - rho on the grid."""
    split = obs.rest_split(phi, c)
    psi = obs.assemble_bispinor(phi, c)
    psidot = obs.dirac_time_derivative(psi, U)
    return obs.dirac_rho(psi, psidot, U).values - split.rest_energy(phi) - obs.rho(phi, U).values


def check_limit_scaling(phi: SpinorField, c_values: Sequence[float], U: PotentialSpec | None = None,
                        profile: str = "default") -> LimitReport:
    """Fit the log-log slope of max |dirac_rho - rest - rho| against c (expected -2)."""
    c_values = [float(c) for c in c_values]
    if len(c_values) < 3:
        raise ValueError("limit scaling needs at least 3 values of c")
    if max(c_values) / min(c_values) < 100:
        raise ValueError("c values must span at least two decades")
    tol = tolerances(profile)["limit_slope"]
    res = [float(np.max(np.abs(limit_residual(phi, c, U)))) for c in c_values]
    slope = loglog_slope(c_values, res) if all(r > 0 for r in res) else float("nan")
    return LimitReport(tuple(c_values), tuple(res), slope, bool(abs(slope + 2) < tol), tol)


# -- symmetries ----------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryReport:
    time_reversal_gap: float
    space_inversion_gap: float | None
    tolerance: float
    passed: bool

    def to_json(self, state: str = "", grid=None) -> dict:
        return report_dict("symmetries", state, grid, None, {"gap": self.tolerance},
                           {"time_reversal": self.time_reversal_gap,
                            "space_inversion": self.space_inversion_gap}, None, self.passed)


def check_symmetries(phi: SpinorField, A=None, profile: str = "default") -> SymmetryReport:
    """rho_s(pi phi^*) = rho_s(phi) and rho_s[phi(-r)](r) = rho_s[phi](-r)."""
    tol = tolerances(profile)["symmetry"]
    base = obs.rho_s(phi, A).values
    tr = float(np.max(np.abs(obs.rho_s(obs.time_reversed(phi), A).values - base)))
    try:
        inv = obs.rho_s(obs.space_inverted(phi), A).values
        si = float(np.max(np.abs(inv - phi.grid.reflect(base))))
    except GridError:
        si = None
    passed = tr < tol and (si is None or si < tol)
    return SymmetryReport(tr, si, tol, passed)


def check_stationary(phi: SpinorField, U: PotentialSpec | None, energy: float,
                     profile: str = "default") -> dict:
    """rho = E |phi|^2 and div J = 0 for an eigenstate.

    J itself need not vanish: it is E times the probability current, which is
    nonzero for e.g. a Landau level with k_x != 0.
    """
    tol = tolerances(profile)["stationary"]
    r = obs.rho(phi, U).values
    scale = float(np.max(np.abs(r)))
    gap = float(np.max(np.abs(r - energy * phi.density())) / scale)
    J = obs.current_J(phi, time_derivative(phi, U)).values
    div = float(np.max(np.abs(divergence(J, phi.grid)))) / scale
    return {"rho_gap": gap, "div_J": div, "tolerance": tol, "pass": gap < tol and div < tol}


def check_rotor(phi: SpinorField, U: PotentialSpec | None = None, profile: str = "default") -> dict:
    """div (J - J_D) = 0: the two currents differ by a rotor."""
    tol = tolerances(profile)["rotor"]
    J = obs.current_J(phi, time_derivative(phi, U)).values
    JD = obs.current_JD(phi, U).values
    gap = float(np.max(np.abs(divergence(J - JD, phi.grid))))
    return {"div_gap": gap, "tolerance": tol, "pass": gap < tol}

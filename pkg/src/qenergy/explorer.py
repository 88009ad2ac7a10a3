"""Where is the free-particle energy density negative?

States are finite superpositions of Gaussian packets evolving freely in 1D,
so rho(x, t) is evaluated in closed form on an (x, t) lattice.  The lattice
minimum is the proxy for "all x and t": a non-negative verdict only holds on
the recorded lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .grid import Axis, Grid, GridError, PhysConstants, ScalarField, SpinorField
from .kernels import rho_lattice

STATE_CLASS = "finite superpositions of freely evolving 1D Gaussian packets"
_LOG_FLOOR = 750.0  # log|rho| below -750 is scored as zero


@dataclass(frozen=True)
class SuperpositionSpec:
    """psi = sum_j c_j g_j with g_j a unit-norm Gaussian of width sigma_j
    (|g_j|^2 has standard deviation sigma_j at its waist, t = 0), centered at
    x0_j with mean momentum p0_j."""

    coefficients: tuple
    centers: tuple
    momenta: tuple
    widths: tuple
    normalized: bool = False

    def __post_init__(self):
        for name in ("coefficients", "centers", "momenta", "widths"):
            object.__setattr__(self, name, tuple(np.atleast_1d(getattr(self, name)).tolist()))
        n = len(self.coefficients)
        if n < 1:
            raise ValueError("need at least one component")
        if not (len(self.centers) == len(self.momenta) == len(self.widths) == n):
            raise ValueError("component lists differ in length")
        if any(not s > 0 for s in self.widths):
            raise ValueError("widths must be positive")
        if not any(abs(c) > 0 for c in self.coefficients):
            raise ValueError("all coefficients vanish")

    @property
    def N(self) -> int:
        return len(self.coefficients)

    def arrays(self):
        return (np.array(self.coefficients, dtype=complex), np.array(self.centers, float),
                np.array(self.momenta, float), np.array(self.widths, float))

    def overlap_matrix(self, hbar: float = 1.0) -> np.ndarray:
        """S_ij = <g_i|g_j> (time independent for free evolution)."""
        _, x0, p0, s = self.arrays()
        al = 1 / (4 * s ** 2)
        be = p0 / hbar
        ai, aj = al[:, None], al[None, :]
        xi, xj = x0[:, None], x0[None, :]
        P = ai + aj
        Q = 2 * ai * xi + 2 * aj * xj - 1j * be[:, None] + 1j * be[None, :]
        R = -ai * xi ** 2 - aj * xj ** 2 + 1j * be[:, None] * xi - 1j * be[None, :] * xj
        N = (2 * np.pi * s ** 2) ** -0.25
        return N[:, None] * N[None, :] * np.sqrt(np.pi / P) * np.exp(Q ** 2 / (4 * P) + R)

    def norm(self, hbar: float = 1.0) -> float:
        c = self.arrays()[0]
        return float(np.real(c.conj() @ self.overlap_matrix(hbar) @ c))

    def normalize(self, hbar: float = 1.0) -> "SuperpositionSpec":
        c = np.array(self.coefficients, dtype=complex) / math.sqrt(self.norm(hbar))
        return SuperpositionSpec(tuple(c), self.centers, self.momenta, self.widths, True)

    def wavefunction(self, x, t: float, constants: PhysConstants = PhysConstants()) -> np.ndarray:
        """psi(x, t) by direct summation (independent of the lattice kernel)."""
        hbar, m = constants.hbar, constants.mass
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for c, x0, p0, s in zip(*self.arrays()):
            A = s ** 2 + 1j * hbar * t / (2 * m)
            u = x - x0 - p0 * t / m
            out += (c * (2 * np.pi) ** -0.25 * np.sqrt(s) / np.sqrt(A)
                    * np.exp(-u ** 2 / (4 * A) + 1j * p0 * (x - x0) / hbar
                             - 1j * p0 ** 2 * t / (2 * m * hbar)))
        return out

    def realize(self, grid: Grid, t: float = 0.0,
                constants: PhysConstants = PhysConstants()) -> SpinorField:
        if grid.dim != 1:
            raise GridError("superpositions live on 1D grids")
        psi = self.wavefunction(grid.coords[0], t, constants)
        return SpinorField(grid, np.stack([psi, np.zeros_like(psi)]), t, constants,
                           self.normalized)

    def to_dict(self) -> dict:
        return {"coefficients": [[c.real, c.imag] for c in map(complex, self.coefficients)],
                "centers": list(self.centers), "momenta": list(self.momenta),
                "widths": list(self.widths), "normalized": self.normalized}

    @classmethod
    def from_dict(cls, d: dict) -> "SuperpositionSpec":
        unknown = set(d) - {"coefficients", "centers", "momenta", "widths", "normalized"}
        if unknown:
            raise ValueError(f"unknown superposition keys: {sorted(unknown)}")
        coef = [complex(*c) if isinstance(c, (list, tuple)) else complex(c)
                for c in d["coefficients"]]
        return cls(tuple(coef), tuple(d["centers"]), tuple(d["momenta"]), tuple(d["widths"]),
                   bool(d.get("normalized", False)))


@dataclass(frozen=True)
class Lattice:
    x_range: tuple
    t_range: tuple
    resolution: tuple  # (n_x, n_t)

    def __post_init__(self):
        nx, nt = self.resolution
        if nx < 3 or nt < 1:
            raise ValueError("lattice needs n_x >= 3 and n_t >= 1")
        if not self.x_range[1] > self.x_range[0] or self.t_range[1] < self.t_range[0]:
            raise ValueError("empty lattice range")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.resolution[0])

    @property
    def t(self) -> np.ndarray:
        return np.linspace(*self.t_range, self.resolution[1])

    @property
    def hx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / (self.resolution[0] - 1)

    def to_dict(self) -> dict:
        return {"x_range": list(self.x_range), "t_range": list(self.t_range),
                "resolution": list(self.resolution)}


@dataclass(frozen=True)
class NegativityRecord:
    spec: SuperpositionSpec
    min_rho: float
    log_abs_min_rho: float
    negative: bool
    argmin: tuple
    lattice: Lattice
    budget_spent: int = 0
    refined: dict = field(default_factory=dict)
    state_class: str = STATE_CLASS

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "min_rho": self.min_rho,
                "log_abs_min_rho": self.log_abs_min_rho, "negative": self.negative,
                "argmin": list(self.argmin), "lattice": self.lattice.to_dict(),
                "budget_spent": self.budget_spent, "refined": self.refined,
                "state_class": self.state_class}


def _check_resolved(spec: SuperpositionSpec, lattice: Lattice) -> None:
    if min(spec.widths) < 2 * lattice.hx:
        raise GridError("a component is narrower than two lattice cells")


def lattice_rho(spec: SuperpositionSpec, lattice: Lattice,
                constants: PhysConstants = PhysConstants()):
    """(rho_scaled, log_scale) on the lattice for the normalized state."""
    spec = spec if spec.normalized else spec.normalize(constants.hbar)
    return rho_lattice(lattice.x, lattice.t, *spec.arrays(), constants.hbar, constants.mass)


def _minimum(rs: np.ndarray, L: np.ndarray):
    """Lattice minimum of rho = rs exp(2L) compared in (sign, log) form."""
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(rs)) + 2 * L
    neg = rs < 0
    if np.any(neg):
        key = np.where(neg, logmag, -np.inf)
        idx = np.unravel_index(int(np.argmax(key)), rs.shape)
    else:
        key = np.where(rs > 0, logmag, -np.inf)
        zero = rs == 0
        idx = (np.unravel_index(int(np.argmax(zero)), rs.shape) if np.any(zero)
               else np.unravel_index(int(np.argmin(key)), rs.shape))
    return idx, bool(np.any(neg)), float(logmag[idx])


def _score(sign: float, logmag: float) -> float:
    """Monotone in rho; |rho| < exp(-750) scores as 0."""
    return sign * max(0.0, _LOG_FLOOR + logmag)


def evaluate(spec: SuperpositionSpec, lattice: Lattice,
             constants: PhysConstants = PhysConstants(), budget_spent: int = 0) -> NegativityRecord:
    _check_resolved(spec, lattice)
    spec = spec if spec.normalized else spec.normalize(constants.hbar)
    rs, L = lattice_rho(spec, lattice, constants)
    idx, negative, logmag = _minimum(rs, L)
    it, ix = idx
    val = float(rs[idx] * math.exp(2 * L[idx])) if np.isfinite(logmag) else 0.0
    return NegativityRecord(spec, val, logmag, negative,
                            (float(lattice.x[ix]), float(lattice.t[it])), lattice, budget_spent)


def negativity_map(spec: SuperpositionSpec, x_range, t_range, resolution,
                   constants: PhysConstants = PhysConstants()):
    """rho(x, t) on the lattice as a ScalarField over (x, t) plus its record.

    Field axes are (x, t) in that order; values underflow to zero far in the
    tails, the record keeps the sign from the scaled values.
    """
    lat = Lattice(tuple(x_range), tuple(t_range), tuple(resolution))
    if lat.resolution[1] < 8 or lat.resolution[0] < 8:
        raise GridError("a mapped lattice needs at least 8 points per axis")
    rec = evaluate(spec, lat, constants)
    rs, L = lattice_rho(rec.spec, lat, constants)
    rho = (rs * np.exp(2 * L)).T
    grid = Grid((Axis(lat.resolution[0], *lat.x_range, periodic=False),
                 Axis(lat.resolution[1], *lat.t_range, periodic=False)))
    return ScalarField(grid, rho, 0.0, "rho"), rec


def has_negative(spec: SuperpositionSpec, x, t: float,
                 constants: PhysConstants = PhysConstants()) -> bool:
    spec = spec if spec.normalized else spec.normalize(constants.hbar)
    rs, _ = rho_lattice(np.asarray(x, float), np.array([t]), *spec.arrays(),
                        constants.hbar, constants.mass)
    return bool(np.any(rs < 0))


def negativity_boundary(spec: SuperpositionSpec, x, t_lo: float, t_hi: float,
                        tol: float = 1e-4, constants: PhysConstants = PhysConstants()) -> float:
    """Bisect for the time where negativity on the x samples disappears.

    Needs a negative sample row at t_lo and none at t_hi.
    """
    if not has_negative(spec, x, t_lo, constants) or has_negative(spec, x, t_hi, constants):
        raise ValueError("bracket must go from negative to non-negative")
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if has_negative(spec, x, mid, constants):
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def refine(rec: NegativityRecord, constants: PhysConstants = PhysConstants()) -> dict:
    """3-point parabolic step in x and in t around the lattice argmin; keeps
    the refined point only when it lowers rho."""
    lat = rec.lattice
    x, t = lat.x, lat.t
    ix = int(np.argmin(np.abs(x - rec.argmin[0])))
    it = int(np.argmin(np.abs(t - rec.argmin[1])))

    def rho_at(xs, ts):
        rs, L = rho_lattice(np.atleast_1d(xs), np.atleast_1d(ts), *rec.spec.arrays(),
                            constants.hbar, constants.mass)
        return rs * np.exp(2 * L)

    def vertex(c, vals, h):
        den = vals[0] - 2 * vals[1] + vals[2]
        if den <= 0:
            return c
        return c + h * 0.5 * (vals[0] - vals[2]) / den

    xr, tr = rec.argmin
    if 0 < ix < len(x) - 1:
        xr = float(vertex(x[ix], rho_at(x[ix - 1:ix + 2], t[it])[0], x[1] - x[0]))
    if 0 < it < len(t) - 1:
        tr = float(vertex(t[it], rho_at(x[ix], t[it - 1:it + 2])[:, 0], t[1] - t[0]))
    val = float(rho_at(xr, tr)[0, 0])
    if val < rec.min_rho:
        return {"x": xr, "t": tr, "rho": val}
    return {"x": rec.argmin[0], "t": rec.argmin[1], "rho": rec.min_rho}


# -- search ------------------------------------------------------------------


class _Space:
    """Unconstrained vector <-> SuperpositionSpec, with bounds keeping each
    component resolved and its t = 0 negativity window inside the x range."""

    B_MAX = 3.0

    def __init__(self, N: int, lattice: Lattice, hbar: float):
        self.N, self.lat, self.hbar = N, lattice, hbar
        L = lattice.x_range[1] - lattice.x_range[0]
        self.mid = 0.5 * (lattice.x_range[0] + lattice.x_range[1])
        self.s_lo = 2 * lattice.hx
        self.s_hi = max(L / 28, 1.5 * self.s_lo)
        reach = 1.5 * math.sqrt(2) * self.s_hi * math.sqrt(1 + self.B_MAX ** 2)
        self.x_half = max(L / 2 - reach, 0.0)
        self.dim = 3 * N + 2 * (N - 1)

    @staticmethod
    def _box(u, lo, hi):
        return lo + (hi - lo) * 0.5 * (1 + np.tanh(u))

    def to_spec(self, v) -> SuperpositionSpec:
        N = self.N
        x0 = self.mid + self._box(v[0:N], -self.x_half, self.x_half)
        s = self._box(v[N:2 * N], self.s_lo, self.s_hi)
        b = self._box(v[2 * N:3 * N], -self.B_MAX, self.B_MAX)
        p0 = b * self.hbar / (math.sqrt(2) * s)
        coef = np.ones(N, dtype=complex)
        if N > 1:
            amp = self._box(v[3 * N:4 * N - 1], 0.05, 1.0)
            phase = v[4 * N - 1:5 * N - 2]
            coef[1:] = amp * np.exp(1j * phase)
        return SuperpositionSpec(tuple(coef), tuple(x0), tuple(p0), tuple(s)).normalize(self.hbar)


def conjecture_search(N: int, budget: int, seed: int = 0, x_range=(-20.0, 20.0),
                      t_range=(-4.0, 4.0), resolution=(401, 81),
                      constants: PhysConstants = PhysConstants(), ledger: str | Path | None = None,
                      restart_budget: int | None = None) -> NegativityRecord:
    """Maximize the lattice minimum of rho over N-component superpositions
    with restarted Nelder-Mead; returns the best record (refined)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if budget < 100:
        raise ValueError("budget must be at least 100 evaluations")
    lat = Lattice(tuple(x_range), tuple(t_range), tuple(resolution))
    space = _Space(N, lat, constants.hbar)
    rng = np.random.default_rng(seed)
    chunk = restart_budget or max(100, budget // 10)
    state = {"spent": 0, "best": None, "best_score": -np.inf}
    ledger_path = Path(ledger) if ledger is not None else None
    if ledger_path is not None:
        ledger_path.parent.mkdir(parents=True, exist_ok=True)

    def objective(v):
        if state["spent"] >= budget:
            raise _BudgetExhausted
        state["spent"] += 1
        rec = evaluate(space.to_spec(v), lat, constants, state["spent"])
        sc = _score(-1.0 if rec.negative else 1.0, rec.log_abs_min_rho)
        if sc > state["best_score"]:
            state["best_score"], state["best"] = sc, rec
            if ledger_path is not None:
                with open(ledger_path, "a") as fh:
                    fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
        return -sc

    while state["spent"] < budget:
        v0 = rng.normal(0.0, 1.0, space.dim)
        remaining = budget - state["spent"]
        try:
            minimize(objective, v0, method="Nelder-Mead",
                     options={"maxfev": min(chunk, remaining), "xatol": 1e-10, "fatol": 1e-14})
        except _BudgetExhausted:
            break
    best = state["best"]
    out = NegativityRecord(best.spec, best.min_rho, best.log_abs_min_rho, best.negative,
                           best.argmin, best.lattice, state["spent"], refine(best, constants))
    if ledger_path is not None:
        with open(ledger_path, "a") as fh:
            fh.write(json.dumps(dict(out.to_dict(), final=True), sort_keys=True) + "\n")
    return out


class _BudgetExhausted(Exception):
    pass

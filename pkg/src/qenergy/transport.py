"""Transfer velocities of probability and energy in one dimension.

v_cor is the mean probability current (<P>/m), v_en the ratio of the
integrated energy current to the integrated energy density (<P^3>/(m <P^2>)
for free motion), and v_mp the velocity of a tracked density peak.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from . import observables as obs
from .catalog import PacketSpec, airy_energy_peak, realize
from .grid import Axis, Grid, PhysConstants, ScalarField, SpinorField, diff, integrate
from .potential import PotentialSpec
from .propagate import time_derivative

AIRY_WINDOW = (-40.0, 10.0)


class PeakError(ValueError):
    pass


# -- moments and mean velocities ---------------------------------------------


def momentum_moments(phi: SpinorField, axis: int = 0) -> dict:
    """<P^n> for n = 1, 2, 3 along ``axis`` (spectral on periodic axes)."""
    grid, hbar = phi.grid, phi.constants.hbar
    a = grid.axes[axis]
    amps = phi.amplitudes
    if a.periodic:
        ax = axis + 1
        weight = np.sum(np.abs(np.fft.fft(amps, axis=ax)) ** 2,
                        axis=tuple(i for i in range(amps.ndim) if i != ax))
        p = hbar * a.wavenumbers
        total = weight.sum()
        return {f"m{n}": float(np.sum(weight * p ** n) / total) for n in (1, 2, 3)}
    norm = integrate(phi.density(), grid)
    out = {}
    d = amps
    for n in (1, 2, 3):
        d = -1j * hbar * diff(d, grid, axis)
        out[f"m{n}"] = float(np.real(integrate(np.sum(amps.conj() * d, axis=0), grid)) / norm)
    return out


def v_cor(phi: SpinorField) -> float:
    return momentum_moments(phi)["m1"] / phi.constants.mass


def v_en(phi: SpinorField) -> float:
    m = momentum_moments(phi)
    return m["m3"] / (phi.constants.mass * m["m2"])


def current_velocities(phi: SpinorField, U: PotentialSpec | None = None) -> dict:
    """The same two velocities from the local fields: integral of j, and
    integral of J over integral of rho."""
    grid, c = phi.grid, phi.constants
    amps = phi.amplitudes
    j = c.hbar / c.mass * np.sum(np.imag(amps.conj() * diff(amps, grid, 0)), axis=0)
    norm = integrate(phi.density(), grid)
    J = obs.current_J(phi, time_derivative(phi, U)).values[0]
    return {"v_cor": float(integrate(j, grid) / norm),
            "v_en": float(integrate(J, grid) / integrate(obs.rho(phi, U).values, grid))}


def gaussian_velocities(a: float, b: float, constants: PhysConstants = PhysConstants()) -> dict:
    """v_cor and v_en of the free Gaussian from its momentum mean b/a and variance 1/(2a^2)."""
    m = constants.mass
    p1 = b / a
    var = 1 / (2 * a ** 2)
    p2 = var + p1 ** 2
    p3 = 3 * p1 * p2 - 2 * p1 ** 3
    return {"v_cor": p1 / m, "v_en": p3 / (m * p2), "gap": 2 * p1 * var / (m * p2)}


# -- peaks -------------------------------------------------------------------


def _parabolic(values: np.ndarray, x: np.ndarray, i: int) -> float:
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    den = y0 - 2 * y1 + y2
    shift = 0.0 if den == 0 else 0.5 * (y0 - y2) / den
    return float(x[i] + shift * (x[i + 1] - x[i]))


def find_peak(values: np.ndarray, x: np.ndarray, mode: str = "global",
              floor: float = 1e-6) -> float:
    """Peak coordinate refined by a 3-point parabola.

    mode="global": largest sample (ties go to the smaller coordinate).
    mode="rightmost": first strict local maximum scanning from the right whose
    value exceeds floor * max|values|.
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(values)
    if mode == "global":
        i = int(np.argmax(values))
        if i == 0 or i == n - 1:
            raise PeakError("peak lies on the grid edge")
        return _parabolic(values, x, i)
    if mode != "rightmost":
        raise ValueError(f"unknown peak mode {mode!r}")
    level = floor * np.max(np.abs(values))
    inner = values[1:-1]
    is_max = (inner >= values[:-2]) & (inner > values[2:]) & (inner > level)
    idx = np.nonzero(is_max)[0]
    if idx.size == 0:
        raise PeakError("no interior local maximum found")
    return _parabolic(values, x, int(idx[-1]) + 1)


@dataclass(frozen=True)
class PeakSeries:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray


def v_mp(fields: Sequence[ScalarField], kind: str = "density", mode: str = "global") -> PeakSeries:
    """Track a peak through a time series of 1D fields and differentiate its
    path by centered differences (one-sided 2nd order at the ends).

    kind only labels the series; the fields carry the values (|phi|^2 or rho).
    Fields may sit on different (moving) windows; positions are absolute.
    """
    if kind not in ("density", "energy"):
        raise ValueError(f"unknown kind {kind!r}")
    if len(fields) < 3:
        raise ValueError("need at least 3 snapshots")
    times = np.array([f.time for f in fields])
    pos = np.array([find_peak(f.values, f.grid.axes[0].nodes, mode) for f in fields])
    vel = np.gradient(pos, times, edge_order=2)
    return PeakSeries(times, pos, vel)


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class TransportReport:
    v_cor: float
    v_en: float
    moments: dict
    v_mp: PeakSeries | None = None
    from_currents: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"v_cor": self.v_cor, "v_en": self.v_en, "moments": self.moments,
               "from_currents": self.from_currents}
        if self.v_mp is not None:
            out["v_mp"] = {"t": self.v_mp.times.tolist(), "value": self.v_mp.velocities.tolist()}
        return out


def transport_report(snapshots: Sequence[SpinorField], U: PotentialSpec | None = None,
                     kind: str = "energy") -> TransportReport:
    """Velocities for a 1D trajectory (or closed-form snapshots) of one state."""
    phi = snapshots[0]
    mom = momentum_moments(phi)
    m = phi.constants.mass
    series = None
    if len(snapshots) >= 3:
        if kind == "energy":
            fields = [obs.rho(s, U) for s in snapshots]
        else:
            fields = [ScalarField(s.grid, s.density(), s.time) for s in snapshots]
        series = v_mp(fields, kind)
    return TransportReport(mom["m1"] / m, mom["m3"] / (m * mom["m2"]), mom, series,
                           current_velocities(phi, U))


def gaussian_velocity_table(a: float, b: float, times: Sequence[float], grid: Grid,
                         constants: PhysConstants = PhysConstants()) -> np.ndarray:
    """Columns (t, v_cor, v_en, v_mp) for the free Gaussian; v_mp tracks the
    energy-density maximum on grid realizations."""
    spec = PacketSpec("gaussian", a=a, b=b)
    snaps = [realize(spec, grid, float(t), constants) for t in times]
    rep = transport_report(snaps, None, "energy")
    n = len(snaps)
    return np.column_stack([rep.v_mp.times, np.full(n, rep.v_cor), np.full(n, rep.v_en),
                            rep.v_mp.velocities])


# -- Airy packet ---------------------------------------------------------------


def airy_window(beta: float, t: float, n_points: int = 2001,
                constants: PhysConstants = PhysConstants(), window=AIRY_WINDOW) -> Grid:
    """Non-periodic grid covering xi_t in [window] at time t."""
    shift = beta ** 3 * t ** 2 / (4 * constants.mass ** 2)
    return Grid((Axis(n_points, shift + window[0], shift + window[1], periodic=False),))


def airy_v_cor(beta: float, t, constants: PhysConstants = PhysConstants()):
    return beta ** 3 * np.asarray(t, dtype=float) / (2 * constants.mass ** 2)


def airy_v_en(beta: float, t: float, constants: PhysConstants = PhysConstants()) -> float:
    """Velocity of the first-from-right energy maximum, by implicit
    differentiation of its stationarity condition."""
    m, hbar = constants.mass, constants.hbar
    k = beta / hbar ** (2 / 3)
    C = beta ** 3 * t ** 2 / (4 * m ** 2)
    xi = airy_energy_peak(beta, t, constants)
    ai, aip, _, _ = special.airy(k * xi)
    # F = 2k(C - xi) Ai'(k xi) - Ai(k xi); Ai'' (z) = z Ai(z)
    F_C = 2 * k * aip
    F_xi = -3 * k * aip + 2 * k ** 3 * (C - xi) * xi * ai
    dC_dt = beta ** 3 * t / (2 * m ** 2)
    return float(airy_v_cor(beta, t, constants) - F_C / F_xi * dC_dt)


def airy_energy_fields(beta: float, times: Sequence[float], n_points: int = 2001,
                       constants: PhysConstants = PhysConstants()) -> list[ScalarField]:
    """rho from the field pipeline on moving windows."""
    spec = PacketSpec("airy", beta=beta)
    out = []
    for t in times:
        g = airy_window(beta, float(t), n_points, constants)
        out.append(obs.rho(realize(spec, g, float(t), constants)))
    return out


def airy_peak_series(beta: float, times: Sequence[float], n_points: int = 2001,
                     constants: PhysConstants = PhysConstants()) -> PeakSeries:
    return v_mp(airy_energy_fields(beta, times, n_points, constants), "energy", "rightmost")


def airy_density_profile(beta: float = 1.0, t: float = float(np.sqrt(6.0)), n_points: int = 2001,
                      constants: PhysConstants = PhysConstants()) -> np.ndarray:
    """Columns (xi, rho) with xi = xi_t, rho from the field pipeline."""
    f = airy_energy_fields(beta, [t], n_points, constants)[0]
    shift = beta ** 3 * t ** 2 / (4 * constants.mass ** 2)
    return np.column_stack([f.grid.axes[0].nodes - shift, f.values])


def airy_gap_series(beta: float, times: Sequence[float], n_points: int = 2001,
                      constants: PhysConstants = PhysConstants()) -> np.ndarray:
    """Columns (t, v_r) with v_r = v_en - v_cor, v_en from tracked peaks."""
    series = airy_peak_series(beta, times, n_points, constants)
    return np.column_stack([series.times,
                            series.velocities - airy_v_cor(beta, series.times, constants)])


def write_table(path, header: Sequence[str], data: np.ndarray) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in np.atleast_2d(data):
            w.writerow([f"{v:.17g}" for v in row])
    return path

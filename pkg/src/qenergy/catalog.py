"""Analytic states and the closed-form observables that serve as oracles
for the gridded pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np
from scipy import special

from .grid import Grid, GridError, PhysConstants, SpinorField

VARIANTS = ("plane_wave", "gaussian", "airy", "scattering", "landau", "ho_eigen")
_REQUIRED = {
    "plane_wave": ("k",),
    "gaussian": ("a", "b"),
    "airy": ("beta",),
    "scattering": ("k", "f"),
    "landau": ("n", "k_x", "k_z", "s", "B"),
    "ho_eigen": ("n", "omega"),
}
_DIMS = {"gaussian": (1,), "airy": (1,), "ho_eigen": (1,), "scattering": (3,),
         "landau": (2, 3), "plane_wave": (1, 2, 3)}

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def spin_expectation(spin_ket) -> np.ndarray:
    """mu = <s|sigma|s> for a normalized 2-component ket."""
    s = np.asarray(spin_ket, dtype=complex)
    return np.real(np.einsum("i,kij,j->k", s.conj(), PAULI, s))


@dataclass(frozen=True)
class PacketSpec:
    variant: str
    a: float | None = None
    b: float | None = None
    beta: float | None = None
    k: float | tuple[float, ...] | None = None
    f: float | None = None
    n: int | None = None
    k_x: float | None = None
    k_z: float | None = None
    s: float | None = None
    B: float | None = None
    omega: float | None = None
    spin_ket: tuple[complex, complex] = (1.0, 0.0)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown packet variant {self.variant!r}")
        missing = [p for p in _REQUIRED[self.variant] if getattr(self, p) is None]
        if missing:
            raise ValueError(f"{self.variant} needs {', '.join(missing)}")
        ket = tuple(complex(c) for c in self.spin_ket)
        if len(ket) != 2 or abs(sum(abs(c) ** 2 for c in ket) - 1) > 1e-12:
            raise ValueError("spin_ket must be a normalized 2-component vector")
        object.__setattr__(self, "spin_ket", ket)
        if isinstance(self.k, (list, tuple)):
            object.__setattr__(self, "k", tuple(float(q) for q in self.k))
        v = self.variant
        if v == "gaussian" and not self.a > 0:
            raise ValueError("gaussian needs a > 0")
        if v == "airy" and not self.beta > 0:
            raise ValueError("airy needs beta > 0")
        if v == "scattering" and not float(self.k) > 0:
            raise ValueError("scattering needs k > 0")
        if v in ("landau", "ho_eigen") and (int(self.n) != self.n or self.n < 0):
            raise ValueError("n must be a non-negative integer")
        if v == "landau":
            if self.s not in (0.5, -0.5):
                raise ValueError("landau spin projection s must be +1/2 or -1/2")
            if not self.B > 0:
                raise ValueError("landau needs B > 0")
        if v == "ho_eigen" and not self.omega > 0:
            raise ValueError("ho_eigen needs omega > 0")

    @property
    def normalizable(self) -> bool:
        return self.variant in ("gaussian", "ho_eigen")

    @property
    def label(self) -> str:
        parts = [self.variant] + [f"{p}={getattr(self, p)}" for p in _REQUIRED[self.variant]]
        return "_".join(str(x) for x in parts).replace(" ", "")

    def to_dict(self) -> dict:
        out = {"variant": self.variant}
        for p in _REQUIRED[self.variant]:
            val = getattr(self, p)
            out[p] = list(val) if isinstance(val, tuple) else val
        if self.spin_ket != (1.0, 0.0):
            out["spin_ket"] = [[c.real, c.imag] for c in self.spin_ket]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PacketSpec":
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown PacketSpec keys: {sorted(unknown)}")
        d = dict(d)
        if "spin_ket" in d:
            d["spin_ket"] = tuple(complex(*c) if isinstance(c, (list, tuple)) else complex(c)
                                  for c in d["spin_ket"])
        if "n" in d and d["n"] is not None:
            d["n"] = int(d["n"])
        return cls(**d)


# -- special functions -------------------------------------------------------


def hermite_functions(nmax: int, xi: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_nmax at xi, shape (nmax+1, *xi.shape).

    Upward recurrence on the polynomial part with a running log scale, the
    Gaussian weight applied once at the end, so large n and |xi| neither
    overflow nor lose the tail.
    """
    xi = np.asarray(xi, dtype=float)
    logmag = np.empty((nmax + 1,) + xi.shape)
    sign = np.empty((nmax + 1,) + xi.shape)
    logscale = np.zeros(xi.shape)
    prev = np.zeros(xi.shape)
    cur = np.full(xi.shape, np.pi ** -0.25)
    logmag[0] = np.log(cur)
    sign[0] = 1.0
    with np.errstate(divide="ignore"):
        for n in range(nmax):
            nxt = np.sqrt(2.0 / (n + 1)) * xi * cur - np.sqrt(n / (n + 1.0)) * prev
            prev, cur = cur, nxt
            big = np.abs(cur) > 1e150
            if np.any(big):
                cur = np.where(big, cur * 1e-150, cur)
                prev = np.where(big, prev * 1e-150, prev)
                logscale = logscale + np.where(big, 150 * np.log(10.0), 0.0)
            logmag[n + 1] = np.log(np.abs(cur)) + logscale
            sign[n + 1] = np.sign(cur)
    return sign * np.exp(logmag - 0.5 * xi ** 2)


def hermite_function(n: int, xi: np.ndarray) -> np.ndarray:
    return hermite_functions(n, xi)[n]


def hermite_function_derivative(n: int, xi: np.ndarray) -> np.ndarray:
    """d psi_n / d xi via the ladder relation."""
    h = hermite_functions(n + 1, xi)
    lower = np.sqrt(n / 2.0) * h[n - 1] if n > 0 else 0.0
    return lower - np.sqrt((n + 1) / 2.0) * h[n + 1]


def oscillator_eigenfunction(n: int, omega: float, x: np.ndarray,
                             constants: PhysConstants = PhysConstants()) -> np.ndarray:
    scale = math.sqrt(constants.mass * omega / constants.hbar)
    return math.sqrt(scale) * hermite_function(n, scale * np.asarray(x))


def oscillator_energy(n: int, omega: float, constants: PhysConstants = PhysConstants()) -> float:
    return constants.hbar * omega * (n + 0.5)


def airy_ai(x) -> np.ndarray:
    return special.airy(x)[0]


# -- realization on grids ----------------------------------------------------


def _spinor(grid: Grid, spatial: np.ndarray, ket, t: float, constants: PhysConstants,
            normalized: bool) -> SpinorField:
    ket = np.asarray(ket, dtype=complex).reshape((2,) + (1,) * grid.dim)
    return SpinorField(grid, ket * spatial[None], t, constants, normalized)


def gaussian_wavefunction(a: float, b: float, x, t: float,
                          constants: PhysConstants = PhysConstants()) -> np.ndarray:
    hbar, m = constants.hbar, constants.mass
    xi = np.asarray(x) / (a * hbar)
    tau = t / (m * a ** 2 * hbar)
    z = 1 + 1j * tau
    return (np.pi ** -0.25 / np.sqrt(a * hbar * z)
            * np.exp(-b ** 2 / 2 - (xi - 1j * b) ** 2 / (2 * z)))


def airy_wavefunction(beta: float, x, t: float,
                      constants: PhysConstants = PhysConstants()) -> np.ndarray:
    hbar, m = constants.hbar, constants.mass
    xi_t = np.asarray(x) - beta ** 3 * t ** 2 / (4 * m ** 2)
    phase = t / hbar * beta ** 3 / (2 * m) * (xi_t + beta ** 3 * t ** 2 / (12 * m ** 2))
    return airy_ai(beta / hbar ** (2 / 3) * xi_t) * np.exp(1j * phase)


def scattering_wavefunction(k: float, f: float, r_vec: Sequence[np.ndarray]) -> np.ndarray:
    x, y, z = r_vec
    r = np.sqrt(x ** 2 + y ** 2 + z ** 2)
    return np.exp(1j * k * z) + f * np.exp(1j * k * r) / r


def excluded_ball(grid: Grid, factor: float = 2.0) -> np.ndarray:
    """Boolean mask of nodes closer than factor*h to the origin."""
    return grid.radius() < factor * max(grid.spacing)


def landau_center(k_x: float, B: float, constants: PhysConstants = PhysConstants()) -> float:
    return constants.hbar * k_x / (constants.mass * constants.cyclotron_frequency(B))


def landau_profile(n: int, k_x: float, B: float, y,
                   constants: PhysConstants = PhysConstants()) -> tuple[np.ndarray, np.ndarray]:
    """phi~_n(y) and its y-derivative for the Landau gauge A = (-By, 0, 0)."""
    w = constants.cyclotron_frequency(B)
    scale = math.sqrt(constants.mass * w / constants.hbar)
    xi = scale * (np.asarray(y) - landau_center(k_x, B, constants))
    val = math.sqrt(scale) * hermite_function(n, xi)
    der = math.sqrt(scale) * scale * hermite_function_derivative(n, xi)
    return val, der


def landau_energy(n: int, k_z: float, s: float, B: float,
                  constants: PhysConstants = PhysConstants()) -> float:
    w = constants.cyclotron_frequency(B)
    return (n + 0.5 + s) * constants.hbar * w + constants.hbar ** 2 * k_z ** 2 / (2 * constants.mass)


def realize(spec: PacketSpec, grid: Grid, t: float = 0.0,
            constants: PhysConstants = PhysConstants()) -> SpinorField:
    """Sample the closed-form wavefunction of ``spec`` on ``grid`` at time t."""
    v = spec.variant
    if grid.dim not in _DIMS[v]:
        raise GridError(f"{v} lives on a {_DIMS[v]}D grid, got {grid.dim}D")
    hbar, m = constants.hbar, constants.mass
    coords = grid.mesh()
    ket = spec.spin_ket
    if v == "plane_wave":
        kv = np.atleast_1d(np.asarray(spec.k, dtype=float))
        if kv.size != grid.dim:
            raise GridError(f"plane-wave k has {kv.size} components for a {grid.dim}D grid")
        energy = hbar * float(kv @ kv) / (2 * m)
        phase = sum(kc * c for kc, c in zip(kv, coords)) - energy * t
        return _spinor(grid, np.exp(1j * phase), ket, t, constants, False)
    if v == "gaussian":
        psi = gaussian_wavefunction(spec.a, spec.b, coords[0], t, constants)
        return _spinor(grid, psi, ket, t, constants, True)
    if v == "airy":
        return _spinor(grid, airy_wavefunction(spec.beta, coords[0], t, constants), ket, t,
                       constants, False)
    if v == "ho_eigen":
        psi = oscillator_eigenfunction(spec.n, spec.omega, coords[0], constants)
        energy = oscillator_energy(spec.n, spec.omega, constants)
        return _spinor(grid, psi * np.exp(-1j * energy * t / hbar), ket, t, constants, True)
    if v == "scattering":
        if np.min(grid.radius()) < 1e-9 * min(grid.spacing):
            raise GridError("scattering grid contains the origin")
        k = float(spec.k)
        psi = scattering_wavefunction(k, spec.f, coords)
        energy = hbar ** 2 * k ** 2 / (2 * m)
        return _spinor(grid, psi * np.exp(-1j * energy * t / hbar), ket, t, constants, False)
    # landau
    if grid.dim == 2 and spec.k_z != 0:
        raise GridError("landau k_z != 0 needs a 3D grid")
    profile, _ = landau_profile(spec.n, spec.k_x, spec.B, coords[1], constants)
    phase = spec.k_x * coords[0]
    if grid.dim == 3:
        phase = phase + spec.k_z * coords[2]
    energy = landau_energy(spec.n, spec.k_z, spec.s, spec.B, constants)
    ket = (1.0, 0.0) if spec.s > 0 else (0.0, 1.0)
    return _spinor(grid, profile * np.exp(1j * (phase - energy * t / hbar)), ket, t, constants,
                   False)


def coherent_packet(grid: Grid, center: Sequence[float], momentum: Sequence[float],
                    width: float, spin_ket=(1.0, 0.0),
                    constants: PhysConstants = PhysConstants()) -> SpinorField:
    """Normalized isotropic Gaussian packet in any dimension (test states)."""
    coords = grid.mesh()
    r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
    phase = sum(p * (c - c0) for p, c, c0 in zip(momentum, coords, center)) / constants.hbar
    psi = (2 * np.pi * width ** 2) ** (-grid.dim / 4) * np.exp(-r2 / (4 * width ** 2) + 1j * phase)
    ket = np.asarray(spin_ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return _spinor(grid, psi, ket, 0.0, constants, True)


# -- closed-form observables -------------------------------------------------


def gaussian_closed_forms(a: float, b: float, xi, tau,
                          constants: PhysConstants = PhysConstants()) -> dict:
    """rho/|phi|^2, local velocity v and J/|phi|^2 of the free Gaussian packet,
    in terms of xi = x/(a hbar) and tau = t/(m a^2 hbar)."""
    if not a > 0:
        raise ValueError("a must be positive")
    m = constants.mass
    xi = np.asarray(xi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    q = 1 + tau ** 2
    rho = ((tau ** 2 - 1) * (xi ** 2 - b ** 2) + 4 * b * tau * xi + q) / (2 * m * a ** 2 * q ** 2)
    v = (b + xi * tau) / (m * a * q)
    poly = (2 * tau * (tau ** 2 - 1) * xi ** 3
            + 2 * b * (5 * tau ** 2 - 1) * xi ** 2
            + 2 * tau * (3 * q + b ** 2 * (5 - tau ** 2)) * xi
            + 2 * b * (2 + (1 - tau ** 2) * (b ** 2 + tau ** 2)))
    J = poly / (4 * m ** 2 * a ** 3 * q ** 3)
    return {"rho_over_density": rho, "v": v, "J_over_density": J}


def gaussian_density(a: float, b: float, xi, tau, constants: PhysConstants = PhysConstants()):
    """|phi|^2 per unit x."""
    xi = np.asarray(xi, dtype=float)
    q = 1 + np.asarray(tau, dtype=float) ** 2
    return np.exp(-(xi - b * tau) ** 2 / q) / (np.sqrt(np.pi * q) * a * constants.hbar)


def airy_energy_density(beta: float, x, t: float,
                        constants: PhysConstants = PhysConstants()) -> np.ndarray:
    m, hbar = constants.mass, constants.hbar
    shift = beta ** 3 * t ** 2 / (4 * m ** 2)
    xi_t = np.asarray(x) - shift
    return beta ** 3 / (2 * m) * (shift - xi_t) * airy_ai(beta / hbar ** (2 / 3) * xi_t) ** 2


def airy_energy_peak(beta: float, t: float, constants: PhysConstants = PhysConstants()) -> float:
    """xi_t of the first-from-right local maximum of the Airy energy density.

    Stationarity of (C - xi) Ai(k xi)^2 gives 2 k (C - xi) Ai'(k xi) = Ai(k xi);
    the rightmost root sits between the first zero of Ai and the first zero
    of Ai'.
    """
    from scipy.optimize import brentq

    m, hbar = constants.mass, constants.hbar
    kk = beta / hbar ** (2 / 3)
    shift = beta ** 3 * t ** 2 / (4 * m ** 2)

    def g(xi):
        ai, aip, _, _ = special.airy(kk * xi)
        return 2 * kk * (shift - xi) * aip - ai

    a1 = special.ai_zeros(1)[0][0] / kk
    a1p = special.ai_zeros(1)[1][0] / kk
    return brentq(g, a1 + 1e-12, a1p, xtol=1e-14, rtol=1e-15)


def scattering_rho_s(k: float, f: float, mu: Sequence[float], point: Sequence[float],
                     constants: PhysConstants = PhysConstants()) -> np.ndarray:
    """Closed-form spin energy density of e^{ikz} + f e^{ikr}/r with spin
    polarization mu.  The overall sign is the one that follows from
    rho_s = div Upsilon."""
    x, y, z = (np.asarray(c, dtype=float) for c in point)
    r = np.sqrt(x ** 2 + y ** 2 + z ** 2)
    if np.any(r == 0):
        raise ValueError("the scattering spin density is singular at the origin")
    hbar, m = constants.hbar, constants.mass
    ph = k * z - k * r
    return (hbar ** 2 * k ** 2 * (mu[1] * x - mu[0] * y) * f / (2 * m * r ** 2)
            * (np.sin(ph) - np.cos(ph) / (k * r)))


def landau_closed_forms(n: int, k_x: float, k_z: float, s: float, B: float, y,
                        constants: PhysConstants = PhysConstants()) -> dict:
    if n < 0 or not B > 0:
        raise ValueError("need n >= 0 and B > 0")
    w = constants.cyclotron_frequency(B)
    y0 = landau_center(k_x, B, constants)
    val, der = landau_profile(n, k_x, B, y, constants)
    pref = s * constants.hbar * w / 2
    y = np.asarray(y, dtype=float)
    return {
        "upsilon_y": pref * val ** 2 * (y0 - y),
        "rho_s": pref * (2 * (y0 - y) * val * der - val ** 2),
        "E_n": landau_energy(n, k_z, s, B, constants),
    }


def plane_wave_energy_density(k, constants: PhysConstants = PhysConstants()) -> float:
    """rho / |phi|^2 for a plane wave (hbar^2 |k|^2 / 2m)."""
    kv = np.atleast_1d(np.asarray(k, dtype=float))
    return constants.hbar ** 2 * float(kv @ kv) / (2 * constants.mass)

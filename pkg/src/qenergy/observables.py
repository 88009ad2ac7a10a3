"""Energy densities and currents evaluated on spinor fields.

All functions are pure: they read the input fields and return new ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import PAULI
from .grid import (BispinorField, GridError, ScalarField, SpinorField, VectorField, diff,
                   divergence)
from .potential import PotentialSpec, as_potential
from .propagate import apply_H, covariant_derivative

MADELUNG_THRESHOLD = 1e-10

# epsilon_{ijk} as (i, j, k, sign)
_LEVI = [(0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1), (0, 2, 1, -1), (2, 1, 0, -1), (1, 0, 2, -1)]

ALPHA = np.zeros((3, 4, 4), dtype=complex)
for _k in range(3):
    ALPHA[_k, :2, 2:] = PAULI[_k]
    ALPHA[_k, 2:, :2] = PAULI[_k]
BETA = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)


def _check_same_grid(*fields) -> None:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridError("fields live on different grids")


def _sigma(j: int, amps: np.ndarray) -> np.ndarray:
    return np.einsum("ab,b...->a...", PAULI[j], amps)


def _inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pointwise u^dagger v over the leading component axis."""
    return np.sum(u.conj() * v, axis=0)


def _scalar_potential(phi: SpinorField, U: PotentialSpec):
    U = as_potential(U)
    return U.values(phi.grid, phi.time, phi.constants)


def rho(phi: SpinorField, U: PotentialSpec | None = None) -> ScalarField:
    """Energy density -hbar^2/4m ([Lap phi^dag] phi + phi^dag Lap phi) + U phi^dag phi,
    summed over spin components.  With a magnetic field the Laplacian is the
    gauge-elongated one and the Zeeman energy is included."""
    U = as_potential(U)
    grid, c = phi.grid, phi.constants
    amps = phi.amplitudes
    A = U.vector_potential(grid)
    if A is None:
        lap = sum(diff(amps, grid, i, 2) for i in range(grid.dim))
    else:
        lap = 0.0
        for k in range(3):
            d1 = covariant_derivative(amps, grid, k, A, c.charge_magnitude, c.hbar)
            lap = lap + covariant_derivative(d1, grid, k, A, c.charge_magnitude, c.hbar)
    kinetic = -c.hbar ** 2 / (2 * c.mass) * np.real(_inner(amps, lap))
    out = kinetic + _scalar_potential(phi, U) * phi.density()
    zee = U.zeeman(c)
    if zee:
        out = out + zee * np.real(_inner(amps, _sigma(2, amps)))
    return ScalarField(grid, out, phi.time, "rho")


def rho_tmh(phi: SpinorField, U: PotentialSpec | None = None) -> ScalarField:
    """Symmetrized form Re[phi^dag (H phi)], with H applied independently."""
    hphi = apply_H(phi, U).amplitudes
    return ScalarField(phi.grid, np.real(_inner(phi.amplitudes, hphi)), phi.time, "rho")


def current_J(phi: SpinorField, phidot: SpinorField) -> VectorField:
    """Energy current hbar^2/2m Re[phi^dag grad phi_dot - grad phi^dag phi_dot]."""
    _check_same_grid(phi, phidot)
    grid, c = phi.grid, phi.constants
    comps = []
    for i in range(grid.dim):
        a = _inner(phi.amplitudes, diff(phidot.amplitudes, grid, i))
        b = _inner(diff(phi.amplitudes, grid, i), phidot.amplitudes)
        comps.append(c.hbar ** 2 / (2 * c.mass) * np.real(a - b))
    return VectorField(grid, np.array(comps), phi.time, "J")


def rho_alt(phi: SpinorField, U: PotentialSpec | None = None) -> ScalarField:
    """Gradient-squared density hbar^2/2m |grad phi|^2 + U |phi|^2."""
    grid, c = phi.grid, phi.constants
    grad2 = sum(np.sum(np.abs(diff(phi.amplitudes, grid, i)) ** 2, axis=0)
                for i in range(grid.dim))
    out = c.hbar ** 2 / (2 * c.mass) * grad2 + _scalar_potential(phi, U) * phi.density()
    return ScalarField(grid, out, phi.time, "rho_alt")


def current_JD(phi: SpinorField, U: PotentialSpec | None = None) -> VectorField:
    """Non-relativistic limit of the Dirac energy current; differs from
    current_J by a divergence-free field."""
    grid, c = phi.grid, phi.constants
    hbar, m = c.hbar, c.mass
    amps = phi.amplitudes
    Uv = _scalar_potential(phi, U)
    d = [diff(amps, grid, i) for i in range(grid.dim)]
    lap = sum(diff(amps, grid, i, 2) for i in range(grid.dim))
    comps = []
    for k in range(grid.dim):
        term_u = 1j * hbar * Uv / (2 * m) * (_inner(d[k], amps) - _inner(amps, d[k]))
        grad_lap = diff(lap, grid, k)
        bracket = _inner(amps, grad_lap) - _inner(grad_lap, amps)
        for i in range(grid.dim):
            dki = diff(d[i], grid, k)
            bracket = bracket - _inner(d[i], dki) + _inner(dki, d[i])
        comps.append(np.real(term_u + 1j * hbar ** 3 / (8 * m ** 2) * bracket))
    return VectorField(grid, np.array(comps), phi.time, "J_D")


@dataclass(frozen=True, eq=False)
class MadelungDecomposition:
    """Per-spin-component hydrodynamic fields.

    ``kinetic``, ``potential`` and ``quantum_potential`` are energies per
    particle (NaN where |phi_s| is below the threshold); weighting them with
    ``density`` and summing over components reproduces rho.
    """

    density: np.ndarray
    velocity: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    quantum_potential: np.ndarray
    mask: np.ndarray
    grid: object = None

    def energy_density(self) -> np.ndarray:
        per_particle = self.kinetic + self.potential + self.quantum_potential
        return np.sum(np.where(self.mask, self.density * per_particle, 0.0), axis=0)


def madelung(phi: SpinorField, U: PotentialSpec | None = None,
             threshold: float = MADELUNG_THRESHOLD) -> MadelungDecomposition:
    grid, c = phi.grid, phi.constants
    hbar, m = c.hbar, c.mass
    amps = phi.amplitudes
    mod = np.abs(amps)
    mask = mod > threshold
    safe = np.where(mask, mod, 1.0)
    dens = mod ** 2
    vel = np.array([hbar * np.imag(amps.conj() * diff(amps, grid, i)) / (m * safe ** 2)
                    for i in range(grid.dim)])
    vel = np.where(mask[None], vel, np.nan)
    kin = 0.5 * m * np.sum(vel ** 2, axis=0)
    lap_mod = sum(diff(mod, grid, i, 2) for i in range(grid.dim))
    quantum = np.where(mask, -hbar ** 2 / (2 * m) * lap_mod / safe, np.nan)
    Uv = np.broadcast_to(_scalar_potential(phi, U), grid.shape)
    pot = np.where(mask, Uv[None], np.nan)
    return MadelungDecomposition(dens, np.moveaxis(vel, 0, 1), kin, pot, quantum, mask, grid)


def _momentum(amps, grid, A, c):
    """Pi_k phi = -i hbar D_k phi for k = x, y, z."""
    return [-1j * c.hbar * covariant_derivative(amps, grid, k, A, c.charge_magnitude, c.hbar)
            for k in range(3)]


def upsilon(phi: SpinorField, A: PotentialSpec | tuple | None = None) -> VectorField:
    """Upsilon = hbar/4m Re[phi^dag sigma x (P + |e| A) phi] (3 components)."""
    grid, c = phi.grid, phi.constants
    if isinstance(A, PotentialSpec):
        A = A.vector_potential(grid)
    amps = phi.amplitudes
    pi = _momentum(amps, grid, A, c)
    comps = np.zeros((3,) + grid.shape)
    for i, j, k, sgn in _LEVI:
        comps[i] += sgn * np.real(_inner(amps, _sigma(j, pi[k])))
    return VectorField(grid, c.hbar / (4 * c.mass) * comps, phi.time, "upsilon")


def rho_s(phi: SpinorField, A: PotentialSpec | tuple | None = None) -> ScalarField:
    """Spin (holographic) energy density as the divergence of Upsilon."""
    ups = upsilon(phi, A)
    out = divergence(ups.values, phi.grid)
    return ScalarField(phi.grid, out, phi.time, "rho_s")


def rho_s_cross(phi: SpinorField) -> ScalarField:
    """Cross-gradient form -i hbar^2/4m grad phi^dag . sigma x grad phi (A = 0)."""
    grid, c = phi.grid, phi.constants
    d = [diff(phi.amplitudes, grid, i) for i in range(grid.dim)]
    out = np.zeros(grid.shape)
    for i, j, k, sgn in _LEVI:
        if i < grid.dim and k < grid.dim:
            out += sgn * np.imag(_inner(d[i], _sigma(j, d[k])))
    return ScalarField(grid, c.hbar ** 2 / (4 * c.mass) * out, phi.time, "rho_s")


@dataclass(frozen=True, eq=False)
class RestSplit:
    chi: SpinorField
    n0: ScalarField
    rho_s: ScalarField
    c: float

    def rest_energy(self, phi: SpinorField) -> np.ndarray:
        """m c^2 (phi^dag phi + chi^dag chi)."""
        return phi.constants.mass * self.c ** 2 * (phi.density() + self.chi.density())

    def identity_residual(self, phi: SpinorField) -> float:
        """max |m c^2 (phi^dag phi + chi^dag chi) - m c^2 n0 - rho_s| relative to the rest energy."""
        lhs = self.rest_energy(phi)
        rhs = phi.constants.mass * self.c ** 2 * self.n0.values + self.rho_s.values
        return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))


def lower_spinor(phi: SpinorField, c: float) -> SpinorField:
    """chi = -i hbar/(2 m c) (sigma . grad) phi."""
    grid, k = phi.grid, phi.constants
    sdphi = sum(_sigma(i, diff(phi.amplitudes, grid, i)) for i in range(grid.dim))
    return phi.with_amplitudes(-1j * k.hbar / (2 * k.mass * c) * sdphi)


def rest_split(phi: SpinorField, c: float | None = None) -> RestSplit:
    k = phi.constants
    c = k.c if c is None else c
    if not c > 0:
        raise ValueError("c must be positive")
    grid = phi.grid
    chi = lower_spinor(phi, c)
    grad2 = sum(np.sum(np.abs(diff(phi.amplitudes, grid, i)) ** 2, axis=0)
                for i in range(grid.dim))
    n0 = phi.density() + k.hbar ** 2 / (4 * k.mass ** 2 * c ** 2) * grad2
    return RestSplit(chi, ScalarField(grid, n0, phi.time, "n0"), rho_s_cross(phi), c)


# -- Dirac bispinor ----------------------------------------------------------


def assemble_bispinor(phi: SpinorField, c: float | None = None) -> BispinorField:
    """psi = [phi, chi] exp(-i m c^2 t / hbar) with chi from the limit relation."""
    k = phi.constants
    c = k.c if c is None else c
    chi = lower_spinor(phi, c)
    phase = np.exp(-1j * k.mass * c ** 2 * phi.time / k.hbar)
    amps = np.concatenate([phi.amplitudes, chi.amplitudes]) * phase
    return BispinorField(phi.grid, amps, phi.time, _with_c(k, c))


def _with_c(constants, c):
    from dataclasses import replace

    return replace(constants, c=c)


def apply_dirac_H(psi: BispinorField, U: PotentialSpec | None = None) -> BispinorField:
    """m c^2 beta psi + U psi - i hbar c alpha . grad psi."""
    grid, k = psi.grid, psi.constants
    amps = psi.amplitudes
    out = k.mass * k.c ** 2 * np.einsum("ab,b...->a...", BETA, amps)
    out = out + _scalar_potential(psi, U) * amps
    for i in range(grid.dim):
        out = out - 1j * k.hbar * k.c * np.einsum("ab,b...->a...", ALPHA[i], diff(amps, grid, i))
    return psi.with_amplitudes(out)


def dirac_time_derivative(psi: BispinorField, U: PotentialSpec | None = None) -> BispinorField:
    return psi.with_amplitudes(-1j / psi.constants.hbar * apply_dirac_H(psi, U).amplitudes)


def dirac_rho(psi: BispinorField, psidot: BispinorField, U: PotentialSpec | None = None) -> ScalarField:
    """i hbar/2 (psi^dag psi_dot - psi_dot^dag psi).  U enters only through psidot."""
    _check_same_grid(psi, psidot)
    a = _inner(psi.amplitudes, psidot.amplitudes)
    return ScalarField(psi.grid, -psi.constants.hbar * np.imag(a), psi.time, "dirac_rho")


def dirac_rho_expanded(psi: BispinorField, U: PotentialSpec | None = None) -> ScalarField:
    """Same density written through spatial derivatives (no psi_dot)."""
    grid, k = psi.grid, psi.constants
    amps = psi.amplitudes
    out = 0.0
    for i in range(grid.dim):
        a_dpsi = np.einsum("ab,b...->a...", ALPHA[i], diff(amps, grid, i))
        # (grad psi^dag alpha) psi - psi^dag (alpha grad psi) = -2i Im[psi^dag alpha grad psi]
        out = out + k.hbar * k.c * np.imag(_inner(amps, a_dpsi))
    out = out + k.mass * k.c ** 2 * np.real(_inner(amps, np.einsum("ab,b...->a...", BETA, amps)))
    out = out + _scalar_potential(psi, U) * psi.density()
    return ScalarField(grid, out, psi.time, "dirac_rho")


def dirac_J(psi: BispinorField, psidot: BispinorField, U: PotentialSpec | None = None) -> VectorField:
    """i hbar c/2 (psi^dag alpha psi_dot - psi_dot^dag alpha psi)."""
    _check_same_grid(psi, psidot)
    k = psi.constants
    comps = [-k.hbar * k.c * np.imag(_inner(psi.amplitudes,
                                            np.einsum("ab,b...->a...", ALPHA[i], psidot.amplitudes)))
             for i in range(psi.grid.dim)]
    return VectorField(psi.grid, np.array(comps), psi.time, "dirac_J")


def time_reversed(phi: SpinorField) -> SpinorField:
    """pi phi^* with pi = [[0, -1], [1, 0]]."""
    a = phi.amplitudes.conj()
    return phi.with_amplitudes(np.stack([-a[1], a[0]]))


def space_inverted(phi: SpinorField) -> SpinorField:
    return phi.with_amplitudes(phi.grid.reflect(phi.amplitudes))

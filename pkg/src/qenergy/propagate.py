"""Schroedinger time evolution: the Hamiltonian applied to spinor fields and a
Strang split-step integrator for periodic grids."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .catalog import PAULI
from .grid import Grid, GridError, SpinorField, diff
from .potential import PotentialSpec, as_potential

SCHEME = "strang-split-step"


class ResolutionWarning(UserWarning):
    pass


def _k_squared(grid: Grid) -> np.ndarray:
    out = 0.0
    for i, a in enumerate(grid.axes):
        shape = [1] * grid.dim
        shape[i] = a.n_points
        out = out + a.wavenumbers.reshape(shape) ** 2
    return out


def _spatial_axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(1, grid.dim + 1))


def laplacian(amps: np.ndarray, grid: Grid) -> np.ndarray:
    """Laplacian of component arrays; one n-D FFT when every axis is periodic."""
    if grid.is_periodic():
        axes = _spatial_axes(grid)
        return np.fft.ifftn(-_k_squared(grid) * np.fft.fftn(amps, axes=axes), axes=axes)
    return sum(diff(amps, grid, i, 2) for i in range(grid.dim))


def covariant_derivative(amps: np.ndarray, grid: Grid, axis: int, A, charge: float,
                         hbar: float) -> np.ndarray:
    """(d_k + i |e| A_k / hbar) applied to component arrays; axes beyond the
    grid are uniform directions (d_k = 0)."""
    out = diff(amps, grid, axis) if axis < grid.dim else np.zeros_like(amps)
    if A is not None and np.any(A[axis] != 0):
        out = out + 1j * charge / hbar * A[axis] * amps
    return out


def apply_H(phi: SpinorField, U: PotentialSpec | None = None, t: float | None = None) -> SpinorField:
    """H phi with H = -hbar^2/2m (elongated) Laplacian + U + Zeeman term."""
    U = as_potential(U)
    grid, c = phi.grid, phi.constants
    t = phi.time if t is None else t
    amps = phi.amplitudes
    A = U.vector_potential(grid)
    if A is None:
        kin = laplacian(amps, grid)
    else:
        kin = 0.0
        for k in range(3):
            d1 = covariant_derivative(amps, grid, k, A, c.charge_magnitude, c.hbar)
            kin = kin + covariant_derivative(d1, grid, k, A, c.charge_magnitude, c.hbar)
    out = -c.hbar ** 2 / (2 * c.mass) * kin + U.values(grid, t, c) * amps
    zee = U.zeeman(c)
    if zee:
        out = out + zee * np.einsum("ij,j...->i...", PAULI[2], amps)
    return phi.with_amplitudes(out)


def time_derivative(phi: SpinorField, U: PotentialSpec | None = None,
                    t: float | None = None) -> SpinorField:
    """phi_dot = -(i/hbar) H phi, exact in time."""
    return phi.with_amplitudes(-1j / phi.constants.hbar * apply_H(phi, U, t).amplitudes)


def expectation_H(phi: SpinorField, U: PotentialSpec | None = None) -> float:
    from .grid import integrate

    hphi = apply_H(phi, U).amplitudes
    return float(np.real(integrate(np.sum(phi.amplitudes.conj() * hphi, axis=0), phi.grid)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    snapshots: tuple[SpinorField, ...]
    dt: float
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    scheme: str = SCHEME

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if len(times) != len(self.snapshots):
            raise ValueError("times and snapshots differ in length")
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(steps <= 0):
                raise ValueError("snapshot times must increase strictly")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ValueError("snapshot spacing must be uniform")

    @property
    def interval(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self) -> int:
        return len(self.snapshots)


def evolve(phi0: SpinorField, U: PotentialSpec | None, dt: float, n_steps: int,
           snapshot_stride: int = 1) -> Trajectory:
    """Integrate i hbar phi_dot = H phi with the Strang split-step scheme.

    Half potential kick, exact kinetic drift in Fourier space, half kick; a
    modulated potential is evaluated at the midpoint of each step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if n_steps < 1 or snapshot_stride < 1:
        raise ValueError("n_steps and snapshot_stride must be positive")
    U = as_potential(U)
    grid, c = phi0.grid, phi0.constants
    if not grid.is_periodic():
        raise GridError("split-step evolution needs a fully periodic grid")
    if U.magnetic:
        raise ValueError("split-step evolution does not support magnetic fields")
    kmax2 = sum(np.max(np.abs(a.wavenumbers)) ** 2 for a in grid.axes)
    if c.hbar * kmax2 * dt / (2 * c.mass) > np.pi:
        warnings.warn("kinetic phase per step exceeds pi at the largest grid wavenumber",
                      ResolutionWarning, stacklevel=2)
    axes = _spatial_axes(grid)
    drift = np.exp(-1j * c.hbar * _k_squared(grid) * dt / (2 * c.mass))
    psi = phi0.amplitudes.copy()
    t = phi0.time
    static_kick = None
    if not U.time_dependent:
        static_kick = np.exp(-0.5j * dt / c.hbar * U.values(grid, t, c))
    times = [t]
    snaps = [phi0]
    for step in range(1, n_steps + 1):
        if static_kick is None:
            kick = np.exp(-0.5j * dt / c.hbar * U.values(grid, t + 0.5 * dt, c))
        else:
            kick = static_kick
        psi = kick * psi
        psi = np.fft.ifftn(drift * np.fft.fftn(psi, axes=axes), axes=axes)
        psi = kick * psi
        t = phi0.time + step * dt
        if step % snapshot_stride == 0:
            times.append(t)
            snaps.append(SpinorField(grid, psi.copy(), t, c, phi0.normalized))
    return Trajectory(np.array(times), tuple(snaps), dt, U)

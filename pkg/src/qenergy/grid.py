"""Rectilinear grids, fields sampled on them, and the derivative/quadrature
primitives every observable is built from.

Periodic axes are differentiated spectrally; non-periodic axes use 4th-order
finite differences with one-sided stencils at the ends.  Whole-grid integrals
use the rectangle rule (periodic) or the trapezoid rule (non-periodic).  Box
integrals, face integrals and point interpolation use the interpolant that
matches the derivative on each axis (trigonometric on periodic axes,
piecewise cubic otherwise), so that the discrete divergence theorem closes to
round-off on periodic axes and to O(h^4) on the others.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_POINTS = 1 << 25
AXIS_NAMES = ("x", "y", "z")


class GridError(ValueError):
    """Raised for malformed grids, regions, or grid/field mismatches."""


@dataclass(frozen=True)
class PhysConstants:
    hbar: float = 1.0
    mass: float = 1.0
    c: float = 137.035999084
    charge_magnitude: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "c", "charge_magnitude"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    def cyclotron_frequency(self, B: float) -> float:
        return self.charge_magnitude * B / self.mass


@dataclass(frozen=True)
class Axis:
    n_points: int
    x_min: float
    x_max: float
    periodic: bool = True

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise GridError(f"n_points must be an integer >= 8, got {self.n_points}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or not self.x_max > self.x_min:
            raise GridError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def spacing(self) -> float:
        if self.periodic:
            return self.length / self.n_points
        return self.length / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @property
    def upper(self) -> float:
        """Largest coordinate covered by the axis (one period for periodic axes)."""
        return self.x_max

    def contains(self, lo: float, hi: float, strict: bool = False) -> bool:
        if strict:
            return self.x_min < lo and hi < self.x_max
        return self.x_min <= lo and hi <= self.x_max

    # -- linear functionals on nodal samples --------------------------------

    def interpolation_weights(self, x: float) -> np.ndarray:
        """Weights w with sum_j w_j f_j = interpolant of f evaluated at x."""
        if self.periodic:
            nyq = np.cos(self._nyquist_k() * (x - self.nodes)) if self.n_points % 2 == 0 else 0.0
            return self._trig_functional(lambda k: np.exp(1j * k * x), nyq)
        n, h = self.n_points, self.spacing
        w = np.zeros(n)
        cell = int(np.clip(np.floor((x - self.x_min) / h), 0, n - 2))
        start = int(np.clip(cell - 1, 0, n - 4))
        idx = np.arange(start, start + 4)
        w[idx] = _lagrange_basis(self.nodes[idx], np.array([x]))[:, 0]
        return w

    def integration_weights(self, lo: float | None = None, hi: float | None = None) -> np.ndarray:
        """Quadrature weights over [lo, hi]; whole axis when both are None."""
        n, h = self.n_points, self.spacing
        if lo is None and hi is None:
            w = np.full(n, h)
            if not self.periodic:
                w[0] = w[-1] = h / 2
            return w
        lo = self.x_min if lo is None else float(lo)
        hi = self.upper if hi is None else float(hi)
        if not hi > lo:
            raise GridError(f"empty integration interval [{lo}, {hi}]")
        if self.periodic:
            def coeff(k):
                out = np.empty_like(k, dtype=complex)
                zero = k == 0
                out[zero] = hi - lo
                kk = k[~zero]
                out[~zero] = (np.exp(1j * kk * hi) - np.exp(1j * kk * lo)) / (1j * kk)
                return out

            nyq = 0.0
            if n % 2 == 0:
                kn = self._nyquist_k()
                nyq = (np.sin(kn * (hi - self.nodes)) - np.sin(kn * (lo - self.nodes))) / kn
            return self._trig_functional(coeff, nyq)
        return self._cubic_integration_weights(lo, hi)

    def _nyquist_k(self) -> float:
        return np.pi / self.spacing

    def _trig_functional(self, coeff, nyquist_term) -> np.ndarray:
        # w_j = (1/n) sum_k L[e^{ikx}] e^{-ik x_j}, Nyquist mode in symmetric cos form
        n = self.n_points
        k = self.wavenumbers
        c = coeff(k).astype(complex)
        if n % 2 == 0:
            c[n // 2] = 0.0
        w = np.fft.fft(c * np.exp(-1j * k * self.x_min)).real / n
        return w + np.asarray(nyquist_term) / n

    def _cubic_integration_weights(self, lo: float, hi: float) -> np.ndarray:
        n, h, x = self.n_points, self.spacing, self.nodes
        w = np.zeros(n)
        first = int(np.clip(np.floor((lo - self.x_min) / h), 0, n - 2))
        last = int(np.clip(np.ceil((hi - self.x_min) / h) - 1, 0, n - 2))
        gl = np.array([-1.0, 1.0]) / np.sqrt(3.0)
        for cell in range(first, last + 1):
            a = max(lo, x[cell])
            b = min(hi, x[cell + 1])
            if b <= a:
                continue
            start = int(np.clip(cell - 1, 0, n - 4))
            idx = np.arange(start, start + 4)
            pts = 0.5 * (a + b) + 0.5 * (b - a) * gl
            basis = _lagrange_basis(x[idx], pts)
            w[idx] += 0.5 * (b - a) * basis.sum(axis=1)
        return w

    def to_dict(self) -> dict:
        return {"n_points": int(self.n_points), "x_min": float(self.x_min),
                "x_max": float(self.x_max), "periodic": bool(self.periodic)}


def _lagrange_basis(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """L[i, p] = i-th Lagrange basis polynomial on ``nodes`` evaluated at pts[p]."""
    out = np.ones((len(nodes), len(pts)))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                out[i] *= (pts - xj) / (xi - xj)
    return out


@dataclass(frozen=True)
class Grid:
    axes: tuple[Axis, ...]
    max_points: int = field(default=MAX_POINTS, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 3:
            raise GridError(f"grid dimension must be 1, 2 or 3, got {len(self.axes)}")
        if self.size > self.max_points:
            raise GridError(f"{self.size} points exceeds the memory budget of {self.max_points}")

    @classmethod
    def uniform(cls, n_points: int, x_min: float, x_max: float, periodic: bool = True,
                dim: int = 1) -> "Grid":
        return cls(tuple(Axis(n_points, x_min, x_max, periodic) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n_points for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(a.spacing for a in self.axes)

    @property
    def names(self) -> tuple[str, ...]:
        return AXIS_NAMES[: self.dim]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @functools.cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for i, a in enumerate(self.axes):
            shape = [1] * self.dim
            shape[i] = a.n_points
            out.append(a.nodes.reshape(shape))
        return tuple(out)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.broadcast_to(c, self.shape) for c in self.coords)

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c ** 2 for c in self.mesh()))

    def is_periodic(self) -> bool:
        return all(a.periodic for a in self.axes)

    def check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.dim:
            raise GridError(f"axis {axis} out of range for a {self.dim}D grid")

    def reflect(self, values: np.ndarray) -> np.ndarray:
        """Return values sampled at -r, i.e. out(r) = values(-r).

        Requires every axis to be symmetric about the origin.
        """
        out = np.asarray(values)
        lead = out.ndim - self.dim
        for i, a in enumerate(self.axes):
            ax = lead + i
            if a.periodic:
                if not math.isclose(a.x_min, -a.x_max, rel_tol=1e-12, abs_tol=1e-12):
                    raise GridError("space inversion needs x_min = -x_max on periodic axes")
                out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
            else:
                if not math.isclose(a.x_min, -a.x_max, rel_tol=1e-12, abs_tol=1e-12):
                    raise GridError("space inversion needs a symmetric axis")
                out = np.flip(out, axis=ax)
        return out

    def to_dict(self) -> dict:
        return {"axes": [a.to_dict() for a in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(tuple(Axis(**a) for a in d["axes"]))


# -- fields ------------------------------------------------------------------


def _check_shape(grid: Grid, values: np.ndarray, lead: int | None, what: str) -> None:
    if values.shape[values.ndim - grid.dim:] != grid.shape or (
            lead is not None and values.ndim != grid.dim + lead):
        raise GridError(f"{what} shape {values.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        _check_shape(self.grid, self.values, 0, "ScalarField")


@dataclass(frozen=True, eq=False)
class VectorField:
    """Real vector field; carries 3 components on 1D/2D grids when the
    quantity is a physical 3-vector (absent axes are uniform directions)."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        _check_shape(self.grid, self.values, 1, "VectorField")
        if self.values.shape[0] not in (self.grid.dim, 3):
            raise GridError(f"VectorField needs {self.grid.dim} or 3 components")

    @property
    def n_components(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Two-component (Pauli) wavefunction on a grid.

    ``amplitudes`` has shape (2, *grid.shape); numpy's complex128 layout keeps
    (re, im) pairs contiguous per component.
    """

    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0
    constants: PhysConstants = PhysConstants()
    normalized: bool = False
    n_components = 2

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amp)
        _check_shape(self.grid, amp, 1, type(self).__name__)
        if amp.shape[0] != self.n_components:
            raise GridError(f"{type(self).__name__} needs {self.n_components} components")

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    def norm(self) -> float:
        return float(integrate(self.density(), self.grid))

    def with_amplitudes(self, amplitudes: np.ndarray, time: float | None = None, **kw):
        return type(self)(self.grid, amplitudes, self.time if time is None else time,
                          self.constants, kw.get("normalized", False))

    def normalize(self):
        return self.with_amplitudes(self.amplitudes / np.sqrt(self.norm()), normalized=True)


class BispinorField(SpinorField):
    """Four-component Dirac bispinor (upper block first)."""

    n_components = 4

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)


# -- differentiation ---------------------------------------------------------


@functools.lru_cache(maxsize=None)
def fd_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative on integer offsets."""
    offs = np.asarray(offsets, dtype=float)
    A = np.vander(offs, len(offs), increasing=True).T
    b = np.zeros(len(offs))
    b[order] = math.factorial(order)
    return np.linalg.solve(A, b)


def _spectral_diff(values: np.ndarray, ax: int, axis: Axis, order: int) -> np.ndarray:
    n = axis.n_points
    mult = (1j * axis.wavenumbers) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[ax] = n
    out = np.fft.ifft(np.fft.fft(values, axis=ax) * mult.reshape(shape), axis=ax)
    return out.real if not np.iscomplexobj(values) else out


def _fd_diff(values: np.ndarray, ax: int, axis: Axis, order: int) -> np.ndarray:
    n, h = axis.n_points, axis.spacing
    half = 2 if order < 3 else 3
    v = np.moveaxis(values, ax, 0)
    out = np.zeros_like(v)
    central = fd_weights(tuple(range(-half, half + 1)), order)
    for w, off in zip(central, range(-half, half + 1)):
        if w != 0.0:
            out[half:n - half] += w * v[half + off:n - half + off]
    width = order + 4
    for i in range(half):
        wl = fd_weights(tuple(range(-i, width - i)), order)
        out[i] = sum(w * v[i + off] for w, off in zip(wl, range(-i, width - i)))
        j = n - 1 - i
        wr = fd_weights(tuple(range(-(width - 1 - i), i + 1)), order)
        out[j] = sum(w * v[j + off] for w, off in zip(wr, range(-(width - 1 - i), i + 1)))
    return np.moveaxis(out, 0, ax) / h ** order


def diff(values: np.ndarray, grid: Grid, axis: int, order: int = 1) -> np.ndarray:
    """Derivative of nodal samples along a grid axis.

    ``values`` may carry leading component axes; the trailing axes must match
    ``grid.shape``.
    """
    grid.check_axis(axis)
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    values = np.asarray(values)
    if values.shape[values.ndim - grid.dim:] != grid.shape:
        raise GridError(f"array shape {values.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot differentiate non-finite values")
    ax = values.ndim - grid.dim + axis
    a = grid.axes[axis]
    if a.periodic:
        return _spectral_diff(values, ax, a, order)
    return _fd_diff(values, ax, a, order)


def derivative(f, axis: int, order: int = 1):
    """Derivative of a field along ``axis``; returns a field of the same kind."""
    if isinstance(f, ScalarField):
        return ScalarField(f.grid, diff(f.values, f.grid, axis, order), f.time, f.name)
    if isinstance(f, SpinorField):
        return f.with_amplitudes(diff(f.amplitudes, f.grid, axis, order))
    raise TypeError(f"cannot differentiate {type(f).__name__}")


def gradient(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    return [diff(values, grid, i) for i in range(grid.dim)]


def divergence(v, grid: Grid | None = None) -> np.ndarray | ScalarField:
    """Divergence over the grid axes; extra (uniform) components are ignored."""
    if isinstance(v, VectorField):
        return ScalarField(v.grid, divergence(v.values, v.grid), v.time)
    return sum(diff(v[i], grid, i) for i in range(grid.dim))


# -- quadrature --------------------------------------------------------------

Box = Sequence[tuple[float, float]]


def _contract(values: np.ndarray, weights: Sequence[np.ndarray]) -> np.ndarray:
    out = values
    for w in reversed(weights):
        out = out @ w
    return out


def _region_weights(grid: Grid, region: Box | None) -> list[np.ndarray]:
    if region is None:
        return [a.integration_weights() for a in grid.axes]
    if len(region) != grid.dim:
        raise GridError(f"region has {len(region)} intervals for a {grid.dim}D grid")
    ws = []
    for a, (lo, hi) in zip(grid.axes, region):
        if not hi > lo:
            raise GridError(f"empty region interval [{lo}, {hi}]")
        if not a.contains(lo, hi):
            raise GridError(f"region [{lo}, {hi}] leaves the grid extent [{a.x_min}, {a.x_max}]")
        ws.append(a.integration_weights(lo, hi))
    return ws


def integrate(f, grid: Grid | None = None, region: Box | None = None):
    """Integral of a scalar field (or nodal array) over the grid or a box.

    Whole grid: rectangle rule on periodic axes, trapezoid on the others.
    Box: exact integral of the per-axis interpolant (see module docstring).
    """
    if isinstance(f, ScalarField):
        grid, values = f.grid, f.values
    else:
        values = np.asarray(f)
    if values.shape[values.ndim - grid.dim:] != grid.shape:
        raise GridError(f"array shape {values.shape} does not match grid {grid.shape}")
    out = _contract(values, _region_weights(grid, region))
    return float(out) if np.ndim(out) == 0 and not np.iscomplexobj(out) else out


def interpolate(values: np.ndarray, grid: Grid, point: Sequence[float]) -> float:
    ws = [a.interpolation_weights(x) for a, x in zip(grid.axes, point)]
    return _contract(np.asarray(values), ws)


def surface_integral(v, box: Box, grid: Grid | None = None) -> float:
    """Outward flux of a vector field through the faces of an interior box."""
    if isinstance(v, VectorField):
        grid, values = v.grid, v.values
    else:
        values = np.asarray(v)
    if len(box) != grid.dim:
        raise GridError(f"box has {len(box)} intervals for a {grid.dim}D grid")
    for a, (lo, hi) in zip(grid.axes, box):
        if not hi > lo:
            raise GridError(f"empty box interval [{lo}, {hi}]")
        if not a.contains(lo, hi, strict=True):
            raise GridError("box must lie strictly inside the grid extent")
    span = [a.integration_weights(lo, hi) for a, (lo, hi) in zip(grid.axes, box)]
    total = 0.0
    for i, a in enumerate(grid.axes):
        lo, hi = box[i]
        for sign, x in ((-1.0, lo), (1.0, hi)):
            ws = list(span)
            ws[i] = a.interpolation_weights(x)
            total += sign * _contract(values[i], ws)
    return float(total)


def box_volume(box: Box) -> float:
    return float(np.prod([hi - lo for lo, hi in box]))

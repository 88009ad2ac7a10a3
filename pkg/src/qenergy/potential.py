"""External potentials: scalar U(r, t) = lambda(t) U0(r) and the uniform
magnetic field in Landau gauge."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridError, PhysConstants, ScalarField

POTENTIAL_VARIANTS = ("none", "harmonic", "table", "uniform_magnetic")


@dataclass(frozen=True)
class Modulation:
    """lambda(t) = 1 + amplitude * sin(frequency * t + phase)."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def factor(self, t: float) -> float:
        return 1.0 + self.amplitude * np.sin(self.frequency * t + self.phase)

    def rate(self, t: float) -> float:
        return self.amplitude * self.frequency * np.cos(self.frequency * t + self.phase)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    variant: str = "none"
    omega: float | None = None
    table: ScalarField | None = None
    B: float | None = None
    landau_gauge: bool = True
    modulation: Modulation | None = None

    def __post_init__(self):
        if self.variant not in POTENTIAL_VARIANTS:
            raise ValueError(f"unknown potential variant {self.variant!r}")
        if self.variant == "harmonic" and not (self.omega and self.omega > 0):
            raise ValueError("harmonic potential needs omega > 0")
        if self.variant == "table" and self.table is None:
            raise ValueError("table potential needs a ScalarField")
        if self.variant == "uniform_magnetic":
            if not (self.B and self.B > 0):
                raise ValueError("uniform_magnetic needs B > 0")
            if not self.landau_gauge:
                raise ValueError("only the Landau gauge A = (-By, 0, 0) is supported")
            if self.modulation is not None:
                raise ValueError("time-dependent magnetic fields are not supported")

    @property
    def time_dependent(self) -> bool:
        return self.modulation is not None and self.variant in ("harmonic", "table")

    @property
    def magnetic(self) -> bool:
        return self.variant == "uniform_magnetic"

    def static_values(self, grid: Grid, constants: PhysConstants) -> np.ndarray | float:
        if self.variant == "harmonic":
            r2 = sum(c ** 2 for c in grid.mesh())
            return 0.5 * constants.mass * self.omega ** 2 * r2
        if self.variant == "table":
            if self.table.grid != grid:
                raise GridError("potential table does not match the field grid")
            return self.table.values
        return 0.0

    def values(self, grid: Grid, t: float, constants: PhysConstants) -> np.ndarray | float:
        """U(r, t) on the grid (a float 0.0 when there is no scalar potential)."""
        u = self.static_values(grid, constants)
        if self.modulation is not None:
            u = u * self.modulation.factor(t)
        return u

    def rate(self, grid: Grid, t: float, constants: PhysConstants) -> np.ndarray | float:
        """dU/dt on the grid."""
        if self.modulation is None:
            return 0.0
        return self.static_values(grid, constants) * self.modulation.rate(t)

    def vector_potential(self, grid: Grid) -> tuple | None:
        """(A_x, A_y, A_z) as broadcastable arrays, or None."""
        if not self.magnetic:
            return None
        if grid.dim < 2:
            raise GridError("a magnetic field in Landau gauge needs a y axis")
        y = grid.coords[1]
        return (-self.B * y, 0.0, 0.0)

    def zeeman(self, constants: PhysConstants) -> float:
        """Coefficient of sigma_z in H (hbar omega_B / 2)."""
        if not self.magnetic:
            return 0.0
        return constants.hbar * constants.cyclotron_frequency(self.B) / 2

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant}
        if self.variant == "harmonic":
            out["omega"] = self.omega
        if self.variant == "uniform_magnetic":
            out["B"] = self.B
        if self.variant == "table":
            out["table"] = self.table.values.tolist()
        if self.modulation is not None:
            out["modulation"] = {"amplitude": self.modulation.amplitude,
                                 "frequency": self.modulation.frequency,
                                 "phase": self.modulation.phase}
        return out

    @classmethod
    def from_dict(cls, d: dict | None, grid: Grid | None = None) -> "PotentialSpec":
        if not d:
            return cls()
        allowed = {"variant", "omega", "B", "table", "modulation", "landau_gauge"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown potential keys: {sorted(unknown)}")
        d = dict(d)
        if d.get("modulation") is not None:
            d["modulation"] = Modulation(**d["modulation"])
        if d.get("table") is not None:
            if grid is None:
                raise ValueError("a table potential needs the grid to parse")
            d["table"] = ScalarField(grid, np.asarray(d["table"], dtype=float), name="U")
        return cls(**d)


NO_POTENTIAL = PotentialSpec()


def as_potential(U) -> PotentialSpec:
    return NO_POTENTIAL if U is None else U

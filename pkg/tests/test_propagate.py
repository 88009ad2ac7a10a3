import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qenergy.catalog import PacketSpec, coherent_packet, realize
from qenergy.grid import Axis, Grid, GridError
from qenergy.potential import Modulation, PotentialSpec
from qenergy.propagate import (ResolutionWarning, Trajectory, apply_H, evolve, expectation_H,
                               time_derivative)

G = Grid.uniform(256, -30.0, 30.0)


def test_free_gaussian_matches_closed_form():
    spec = PacketSpec("gaussian", a=1.0, b=0.8)
    traj = evolve(realize(spec, G), None, 0.01, 100, snapshot_stride=100)
    exact = realize(spec, G, 1.0)
    assert np.max(np.abs(traj.snapshots[-1].amplitudes - exact.amplitudes)) < 1e-12


@pytest.mark.filterwarnings("ignore::qenergy.propagate.ResolutionWarning")
def test_oscillator_returns_after_period():
    phi = realize(PacketSpec("ho_eigen", n=2, omega=1.0), Grid.uniform(128, -10.0, 10.0))
    U = PotentialSpec("harmonic", omega=1.0)
    n = 400
    traj = evolve(phi, U, 2 * math.pi / n, n, snapshot_stride=n)
    overlap = abs(np.vdot(phi.amplitudes, traj.snapshots[-1].amplitudes)) * phi.grid.cell_volume
    assert overlap == pytest.approx(1.0, abs=1e-10)


@pytest.mark.filterwarnings("ignore::qenergy.propagate.ResolutionWarning")
def test_second_order_in_dt():
    g = Grid.uniform(128, -12.0, 12.0)
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), g)
    U = PotentialSpec("harmonic", omega=0.7)
    ref = evolve(phi, U, 1e-3, 1000, 1000).snapshots[-1].amplitudes
    errs = [np.max(np.abs(evolve(phi, U, dt, round(1 / dt), round(1 / dt)).snapshots[-1]
                          .amplitudes - ref)) for dt in (0.04, 0.02)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(-2, 2), st.floats(0.1, 1.5))
def test_norm_conserved(a, b, omega):
    phi = realize(PacketSpec("gaussian", a=a, b=b), G)
    traj = evolve(phi, PotentialSpec("harmonic", omega=omega), 0.01, 50, 50)
    assert traj.snapshots[-1].norm() == pytest.approx(phi.norm(), rel=1e-12)


def test_energy_drift_small_static():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    U = PotentialSpec("harmonic", omega=0.3)
    traj = evolve(phi, U, 1e-3, 500, 500)
    assert abs(expectation_H(traj.snapshots[-1], U) - expectation_H(phi, U)) < 1e-6


def test_hamiltonian_eigenvalue():
    phi = realize(PacketSpec("ho_eigen", n=3, omega=1.0), Grid.uniform(128, -10.0, 10.0))
    Hphi = apply_H(phi, PotentialSpec("harmonic", omega=1.0))
    assert np.max(np.abs(Hphi.amplitudes - 3.5 * phi.amplitudes)) < 1e-10


def test_time_derivative_is_minus_i_H():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    assert np.allclose(time_derivative(phi).amplitudes, -1j * apply_H(phi).amplitudes)


def test_snapshots_and_interval():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    traj = evolve(phi, None, 0.01, 10, 5)
    assert len(traj) == 3 and traj.interval == pytest.approx(0.05)


def test_trajectory_validation():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.1], [phi], 0.1)
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.1, 0.3], [phi] * 3, 0.1)


def test_rejects_nonperiodic_and_magnetic():
    g = Grid((Axis(32, -5.0, 5.0, periodic=False),))
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), g)
    with pytest.raises(GridError):
        evolve(phi, None, 0.01, 10)
    g2 = Grid.uniform(16, -5.0, 5.0, dim=2)
    phi2 = coherent_packet(g2, (0, 0), (0, 0), 1.0)
    with pytest.raises(ValueError):
        evolve(phi2, PotentialSpec("uniform_magnetic", B=1.0), 0.01, 10)
    with pytest.raises(ValueError):
        evolve(phi2, None, -0.01, 10)


def test_resolution_warning():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    with pytest.warns(ResolutionWarning):
        evolve(phi, None, 1.0, 1)


def test_driven_potential_changes_energy():
    phi = realize(PacketSpec("ho_eigen", n=0, omega=0.5), G)
    U = PotentialSpec("harmonic", omega=0.5, modulation=Modulation(0.3, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        traj = evolve(phi, U, 0.01, 100, 100)
    assert abs(traj.snapshots[-1].norm() - 1) < 1e-12
    assert abs(expectation_H(traj.snapshots[-1], U) - expectation_H(phi, U)) > 1e-4

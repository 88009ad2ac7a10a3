import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qenergy.catalog import (PacketSpec, airy_energy_density, airy_energy_peak, coherent_packet,
                             excluded_ball, gaussian_closed_forms, gaussian_density,
                             hermite_functions, landau_closed_forms, landau_energy,
                             oscillator_energy, plane_wave_energy_density, realize,
                             scattering_rho_s, spin_expectation)
from qenergy.grid import Axis, Grid, GridError, PhysConstants, integrate


def test_hermite_orthonormal():
    x = np.linspace(-20, 20, 4001)
    h = hermite_functions(12, x)
    gram = h @ h.T * (x[1] - x[0])
    assert np.max(np.abs(gram - np.eye(13))) < 1e-10


def test_hermite_large_order_finite():
    h = hermite_functions(200, np.linspace(-30, 30, 101))
    assert np.all(np.isfinite(h))


@pytest.mark.parametrize("variant, kw", [
    ("gaussian", dict(a=0.0, b=1.0)),
    ("airy", dict(beta=-1.0)),
    ("landau", dict(n=0, k_x=0.0, k_z=0.0, s=0.3, B=1.0)),
    ("landau", dict(n=0, k_x=0.0, k_z=0.0, s=0.5, B=0.0)),
    ("ho_eigen", dict(n=-1, omega=1.0)),
    ("ho_eigen", dict(n=1)),
    ("bogus", dict()),
])
def test_packet_validation(variant, kw):
    with pytest.raises(ValueError):
        PacketSpec(variant, **kw)


def test_spin_ket_must_be_normalized():
    with pytest.raises(ValueError):
        PacketSpec("gaussian", a=1.0, b=0.0, spin_ket=(1.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5), st.floats(-5, 5), st.floats(0, 2 * math.pi))
def test_packet_dict_round_trip(a, b, angle):
    spec = PacketSpec("gaussian", a=a, b=b, spin_ket=(math.cos(angle), 1j * math.sin(angle)))
    assert PacketSpec.from_dict(spec.to_dict()) == spec


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        PacketSpec.from_dict({"variant": "gaussian", "a": 1.0, "b": 0.0, "c": 3})


def test_dimension_mismatch():
    with pytest.raises(GridError):
        realize(PacketSpec("gaussian", a=1.0, b=0.0), Grid.uniform(16, -1.0, 1.0, dim=2))
    with pytest.raises(GridError):
        realize(PacketSpec("landau", n=0, k_x=0.0, k_z=1.0, s=0.5, B=1.0),
                Grid.uniform(16, -1.0, 1.0, dim=2))


def test_scattering_rejects_origin():
    g = Grid(tuple(Axis(17, -1.0, 1.0, periodic=False) for _ in range(3)))
    with pytest.raises(GridError):
        realize(PacketSpec("scattering", k=1.0, f=0.5), g)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_gaussian_normalized(a, b, tau):
    hbar = 1.0
    xi = np.linspace(-60, 60, 24001) + b * tau
    dens = gaussian_density(a, b, xi, tau)
    assert np.trapezoid(dens, xi * a * hbar) == pytest.approx(1.0, rel=1e-9)


def test_gaussian_closed_forms_reduce_at_b0_tau0():
    xi = np.linspace(-3, 3, 7)
    cf = gaussian_closed_forms(1.0, 0.0, xi, 0.0)
    # rho/|phi|^2 = (1 - xi^2)/2 at the waist: negative for xi^2 > 1
    assert np.allclose(cf["rho_over_density"], (1 - xi ** 2) / 2)
    assert np.allclose(cf["v"], 0.0)


def test_oscillator_and_landau_energies():
    assert oscillator_energy(3, 2.0) == pytest.approx(7.0)
    c = PhysConstants(mass=2.0)
    assert landau_energy(1, 0.5, -0.5, 4.0, c) == pytest.approx(1 * 2.0 + 0.25 / 4)


def test_realized_eigenstates_normalized():
    g = Grid.uniform(256, -12.0, 12.0)
    for n in range(5):
        phi = realize(PacketSpec("ho_eigen", n=n, omega=1.0), g)
        assert phi.norm() == pytest.approx(1.0, rel=1e-12)


def test_coherent_packet_normalized_any_dim():
    for dim in (1, 2, 3):
        g = Grid.uniform(40, -14.0, 14.0, dim=dim)
        phi = coherent_packet(g, [0.0] * dim, [0.5] * dim, 1.5, (1.0, 1j))
        assert phi.norm() == pytest.approx(1.0, rel=1e-10)


def test_spin_expectation():
    assert np.allclose(spin_expectation((1, 0)), [0, 0, 1])
    assert np.allclose(spin_expectation(np.array([1, 1j]) / math.sqrt(2)), [0, 1, 0])


def test_airy_peak_is_stationary_point():
    t = math.sqrt(6.0)
    xp = airy_energy_peak(1.0, t)
    shift = t ** 2 / 4
    xs = xp + shift + np.array([-1e-4, 0.0, 1e-4])
    r = airy_energy_density(1.0, xs, t)
    assert r[1] > r[0] and r[1] > r[2]
    assert -2.3381 < xp < -1.0188


def test_landau_closed_forms_integrate_to_zero():
    y = np.linspace(-15, 17, 6001)
    for n in range(3):
        cf = landau_closed_forms(n, 1.0, 0.0, 0.5, 1.0, y)
        assert abs(np.trapezoid(cf["rho_s"], y)) < 1e-10


def test_scattering_closed_form_odd_under_rotation():
    mu = (0.0, 1.0, 0.0)
    p = (np.array([1.0]), np.array([0.5]), np.array([0.2]))
    q = (-p[0], -p[1], p[2])
    assert scattering_rho_s(1.0, 0.5, mu, p) == pytest.approx(-scattering_rho_s(1.0, 0.5, mu, q))


def test_plane_wave_density_value():
    assert plane_wave_energy_density((1.0, 2.0)) == pytest.approx(2.5)


def test_excluded_ball():
    g = Grid(tuple(Axis(11, -1.0, 1.0, periodic=False) for _ in range(3)))
    mask = excluded_ball(g)
    assert mask.shape == g.shape and mask.sum() >= 1

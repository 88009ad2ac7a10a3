import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qenergy import verify
from qenergy.catalog import PacketSpec, coherent_packet, realize
from qenergy.grid import Axis, Grid
from qenergy.potential import Modulation, PotentialSpec
from qenergy.propagate import evolve

G = Grid.uniform(256, -30.0, 30.0)


def test_profiles():
    d, s = verify.tolerances("default"), verify.tolerances("strict")
    assert set(d) == set(s)
    assert all(s[k] <= d[k] for k in d)
    with pytest.raises(ValueError):
        verify.tolerances("lenient")


def test_time_stencil_orders():
    w4, h4 = verify.time_stencil(5)
    assert h4 == 2 and np.sum(w4) == pytest.approx(0, abs=1e-15) and np.dot(w4, np.arange(-2, 3)) == pytest.approx(1)
    w2, h2 = verify.time_stencil(3)
    assert h2 == 1
    with pytest.raises(ValueError):
        verify.time_stencil(2)


def test_energy_conservation_free():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    traj = evolve(phi, None, 1e-3, 200, 10)
    for cur in ("J", "J_D"):
        rep = verify.check_energy_conservation(traj, None, cur)
        assert rep.passed and rep.residual_L2 < 1e-6
    with pytest.raises(ValueError):
        verify.check_energy_conservation(traj, None, "K")


def test_work_term_needed_when_driven():
    phi = realize(PacketSpec("ho_eigen", n=0, omega=0.5), Grid.uniform(256, -16.0, 16.0))
    U = PotentialSpec("harmonic", omega=0.5, modulation=Modulation(0.2, 1.0))
    traj = evolve(phi, U, 1e-3, 300, 10)
    with_work = verify.check_energy_conservation(traj, U)
    without = verify.check_energy_conservation(traj, U, include_work=False)
    assert with_work.passed and with_work.residual_L2 < 1e-5
    assert not without.passed and without.residual_L2 > 1e3 * with_work.residual_L2


def test_rho_s_conservation_2d():
    g = Grid((Axis(48, -12.0, 12.0), Axis(48, -12.0, 12.0)))
    phi = coherent_packet(g, (0.0, 0.5), (0.6, -0.3), 1.4, np.array([1.0, 1j]) / math.sqrt(2))
    rep = verify.check_rho_s_conservation(evolve(phi, None, 1e-3, 100, 10))
    assert rep.passed
    assert abs(rep.extra["global_content_max"]) < 1e-10


def test_convergence_order_two():
    g = Grid.uniform(128, -15.0, 15.0)
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), g)
    rep = verify.convergence_study(phi, PotentialSpec("harmonic", omega=0.8), 0.02, 20)
    assert abs(rep.convergence_order - 2) < verify.tolerances()["order_band"]


def test_report_schema_and_json():
    phi = realize(PacketSpec("gaussian", a=1.0, b=0.5), G)
    rep = verify.check_energy_conservation(evolve(phi, None, 1e-3, 40, 10))
    d = rep.to_json("gaussian", G)
    assert set(d) == {"check", "state", "grid", "dt", "tolerances", "residuals", "order", "pass"}
    assert json.loads(verify.dump_report(d)) == json.loads(json.dumps(d))


def test_holography_landau():
    g = Grid((Axis(16, 0.0, 2 * math.pi), Axis(128, -11.0, 13.0)))
    phi = realize(PacketSpec("landau", n=1, k_x=1.0, k_z=0.0, s=0.5, B=1.0), g)
    rep = verify.check_holography(phi, verify.random_boxes(g, 4, 3),
                                  PotentialSpec("uniform_magnetic", B=1.0))
    assert rep.passed


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_random_boxes_inside(seed):
    g = Grid((Axis(32, -3.0, 3.0), Axis(40, 0.0, 5.0, periodic=False)))
    for box in verify.random_boxes(g, 3, seed):
        for a, (lo, hi) in zip(g.axes, box):
            assert a.x_min + 3 * a.spacing <= lo < hi <= a.upper - 3 * a.spacing + 1e-12


def test_sphere_content_constant():
    assert verify.sphere_content(lambda p: np.ones(p.shape[1]), 2.0) == pytest.approx(16 * math.pi)
    assert verify.sphere_content(lambda p: p[2], 2.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        verify.sphere_content(lambda p: p[0], 1.0, part="negative")


def test_loglog_slope():
    x = np.array([1.0, 10.0, 100.0])
    assert verify.loglog_slope(x, 3 * x ** -2) == pytest.approx(-2.0)


def test_limit_scaling_validation():
    phi = realize(PacketSpec("gaussian", a=1.0, b=1.0), Grid.uniform(128, -13.0, 13.0))
    U = PotentialSpec("harmonic", omega=0.5)
    with pytest.raises(ValueError):
        verify.check_limit_scaling(phi, [10.0, 100.0], U)
    with pytest.raises(ValueError):
        verify.check_limit_scaling(phi, [10.0, 20.0, 40.0], U)
    assert verify.check_limit_scaling(phi, [10.0, 100.0, 1000.0], U).passed


def test_stationary_and_rotor_and_symmetry():
    g = Grid.uniform(256, -14.0, 14.0)
    U = PotentialSpec("harmonic", omega=1.0)
    phi = realize(PacketSpec("ho_eigen", n=2, omega=1.0), g)
    assert verify.check_stationary(phi, U, 2.5)["pass"]
    assert not verify.check_stationary(phi, U, 2.4)["pass"]
    assert verify.check_rotor(phi, U)["pass"]
    assert verify.check_symmetries(phi).passed

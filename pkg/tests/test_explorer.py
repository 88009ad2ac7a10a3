import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qenergy import explorer, observables as obs
from qenergy.grid import Grid, GridError
from qenergy.kernels import rho_lattice


def _single(sigma=1 / math.sqrt(2), p0=0.0):
    return explorer.SuperpositionSpec((1.0,), (0.0,), (p0,), (sigma,))


def _pair():
    return explorer.SuperpositionSpec((1.0, 0.6j), (-1.0, 1.5), (0.4, -0.3), (0.9, 1.2))


def test_spec_validation():
    with pytest.raises(ValueError):
        explorer.SuperpositionSpec((), (), (), ())
    with pytest.raises(ValueError):
        explorer.SuperpositionSpec((1.0,), (0.0, 1.0), (0.0,), (1.0,))
    with pytest.raises(ValueError):
        explorer.SuperpositionSpec((1.0,), (0.0,), (0.0,), (0.0,))


def test_normalize_matches_grid_norm():
    spec = _pair().normalize()
    phi = spec.realize(Grid.uniform(1024, -30.0, 30.0))
    assert phi.norm() == pytest.approx(1.0, rel=1e-12)


def test_spec_dict_round_trip():
    spec = _pair()
    assert explorer.SuperpositionSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
    with pytest.raises(ValueError):
        explorer.SuperpositionSpec.from_dict(dict(spec.to_dict(), extra=1))


@pytest.mark.parametrize("t", [0.0, 0.7, -1.3])
def test_lattice_rho_matches_observables(t):
    spec = _pair().normalize()
    g = Grid.uniform(1024, -30.0, 30.0)
    ref = obs.rho(spec.realize(g, t)).values
    rs, L = rho_lattice(g.coords[0], np.array([t]), *spec.arrays())
    assert np.max(np.abs(rs[0] * np.exp(2 * L[0]) - ref)) < 1e-8


def test_waist_negativity_where_xi_squared_exceeds_one():
    a = 1.0
    x = np.linspace(-6, 6, 1201)
    rs, L = explorer.lattice_rho(_single(), explorer.Lattice((-6.0, 6.0), (0.0, 0.0), (1201, 1)))
    neg = rs[0] < 0
    xi = x / a
    far = np.abs(np.abs(xi) - 1) > 1e-6
    assert np.array_equal(neg[far], (xi ** 2 > 1)[far])


def test_negativity_window_boundary():
    x = np.linspace(-100, 100, 20001)
    tb = explorer.negativity_boundary(_single(), x, 0.5, 1.5, tol=1e-5)
    assert abs(tb - 1.0) < 1e-3
    with pytest.raises(ValueError):
        explorer.negativity_boundary(_single(), x, 1.2, 1.5)


def test_negativity_map_field():
    field, rec = explorer.negativity_map(_single(), (-8, 8), (-2, 2), (161, 41))
    assert field.values.shape == (161, 41)
    assert rec.negative and rec.min_rho < 0
    assert abs(rec.argmin[1]) < 1


def test_plane_wave_like_limit_nonnegative():
    spec = _single(sigma=200.0, p0=1.0)
    rec = explorer.evaluate(spec, explorer.Lattice((-20.0, 20.0), (-1.0, 1.0), (201, 11)))
    assert rec.min_rho >= 0 and not rec.negative


def test_unresolved_spec_rejected():
    with pytest.raises(GridError):
        explorer.evaluate(_single(sigma=0.01), explorer.Lattice((-5.0, 5.0), (0.0, 1.0), (101, 5)))


@settings(max_examples=15, deadline=None)
@given(st.floats(2.0, 10.0), st.floats(0.5, 3.0))
def test_widening_never_raises_minimum(half, t_half):
    spec = _pair()
    small = explorer.Lattice((-half, half), (-t_half, t_half), (161, 9))
    big = explorer.Lattice((-2 * half, 2 * half), (-2 * t_half, 2 * t_half), (321, 17))
    # the big lattice contains every node of the small one (up to rounding)
    assert np.all(np.min(np.abs(small.x[:, None] - big.x[None, :]), axis=1) < 1e-12)
    lo, hi = explorer.evaluate(spec, big).min_rho, explorer.evaluate(spec, small).min_rho
    assert lo <= hi + 1e-12 * abs(hi)


def test_record_reproducible():
    spec = _pair()
    lat = explorer.Lattice((-10.0, 10.0), (-2.0, 2.0), (201, 21))
    a, b = explorer.evaluate(spec, lat), explorer.evaluate(spec, lat)
    assert a.min_rho == b.min_rho
    assert abs(explorer.evaluate(a.spec, lat).min_rho - a.min_rho) < 1e-9


def test_search_small_budget_deterministic(tmp_path):
    kw = dict(resolution=(201, 21))
    r1 = explorer.conjecture_search(2, 300, seed=3, ledger=tmp_path / "a.jsonl", **kw)
    r2 = explorer.conjecture_search(2, 300, seed=3, ledger=tmp_path / "b.jsonl", **kw)
    assert json.dumps(r1.to_dict(), sort_keys=True) == json.dumps(r2.to_dict(), sort_keys=True)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    lines = (tmp_path / "a.jsonl").read_text().splitlines()
    assert json.loads(lines[-1])["final"] is True
    assert r1.budget_spent == 300
    assert r1.state_class == explorer.STATE_CLASS


def test_search_validation():
    with pytest.raises(ValueError):
        explorer.conjecture_search(1, 50)
    with pytest.raises(ValueError):
        explorer.conjecture_search(0, 100)


@pytest.mark.slow
def test_search_two_components_budget_1e4_reproducible():
    r1 = explorer.conjecture_search(2, 10_000, seed=11)
    r2 = explorer.conjecture_search(2, 10_000, seed=11)
    assert json.dumps(r1.to_dict(), sort_keys=True) == json.dumps(r2.to_dict(), sort_keys=True)

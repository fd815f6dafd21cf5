"""Pole filtering, deduplication, collocation, and the radial fits."""

import numpy as np
import pytest

from scatamp.amplification import WavenumberGrid
from scatamp.errors import EmptyPoleSetError, InvalidParameterError
from scatamp.hybrid import (
    CollocationSet,
    HybridSurrogate,
    collocation_points,
    dedupe_and_nudge,
    eval_hybrid,
    filter_poles_close,
    fit_max,
    fit_sum,
    load_hybrid,
    save_hybrid,
)
from scatamp.rational import PoleSet

RANGE = (1.0, 3.0)


def pole_set(*vals):
    return PoleSet(poles=np.array(vals, dtype=complex), source="vector_surrogate")


def test_filter_keeps_nearest_winners():
    grid = WavenumberGrid.uniform(1.0, 3.0, 101)
    ps = pole_set(2 - 0.01j, 10 - 0.01j)
    kept = filter_poles_close(ps, grid)
    assert list(kept.poles) == [2 - 0.01j]
    # brute-force nearest-pole scan agrees
    dist = np.abs(grid.points[:, None] - ps.poles[None, :])
    winners = set(np.argmin(dist, axis=1))
    assert winners == {0}


def test_filter_single_pole_is_identity():
    grid = WavenumberGrid.uniform(1.0, 3.0, 11)
    ps = pole_set(5 - 2j)
    assert list(filter_poles_close(ps, grid).poles) == [5 - 2j]


def test_dedupe_conjugates_duplicates_and_real():
    out = dedupe_and_nudge(pole_set(2 - 0.1j, 2 + 0.1j), epsilon=1e-6)
    assert list(out.poles) == [2 - 0.1j]
    out = dedupe_and_nudge(pole_set(2 - 0.1j, 2 - 0.1j), epsilon=1e-6)
    assert list(out.poles) == [2 - 0.1j]
    out = dedupe_and_nudge(pole_set(2.0 + 0.0j), epsilon=1e-6)
    assert list(out.poles) == [2.0 - 1e-6j]
    assert all(p.imag < 0 for p in out.poles)
    with pytest.raises(EmptyPoleSetError):
        dedupe_and_nudge(PoleSet(poles=np.array([]), source="vector_surrogate"), 1e-6)


def test_collocation_points_basic():
    ps = pole_set(2 - 0.1j)
    c = collocation_points(ps, RANGE, 0)
    assert np.allclose(c.points, [2.0])
    c = collocation_points(ps, RANGE, 3)
    assert np.allclose(c.points, [2.0, 1.0, 2.0 + 2e-6, 3.0])
    # equal real parts get nudged apart
    c = collocation_points(pole_set(2 - 0.1j, 2 - 0.2j), RANGE, 0)
    assert c.points[0] == pytest.approx(2.0)
    assert c.points[1] == pytest.approx(2.0 + 2e-6)
    assert len(np.unique(c.points)) == 2


def test_fit_sum_single_pole_interpolates():
    lam = 2 - 0.1j
    ps = pole_set(lam)
    colloc = CollocationSet(points=np.array([2.0]), values=np.array([7.0]))
    model = fit_sum(colloc, ps, 0, RANGE)
    assert model.psi[0] == pytest.approx(0.1 * 7.0)
    assert model.evaluate(2.0) == pytest.approx(7.0)
    assert eval_hybrid(model, 2.0) == pytest.approx(7.0)


def test_fit_max_single_pole_matches_value():
    lam = 2 - 0.1j
    ps = pole_set(lam)
    colloc = CollocationSet(points=np.array([2.0]), values=np.array([7.0]))
    model = fit_max(colloc, ps, 0, RANGE)
    assert model.psi[0] == pytest.approx(0.7)
    assert model.evaluate(2.0) == pytest.approx(7.0)
    # psi / |Im lambda| at the abscissa
    assert model.evaluate(2.0) == pytest.approx(model.psi[0] / 0.1)


def test_fit_sum_square_system_interpolates_all_points():
    rng = np.random.default_rng(0)
    ps = pole_set(1.3 - 0.05j, 1.9 - 0.02j, 2.6 - 0.2j)
    colloc_pts = collocation_points(ps, RANGE, 3)
    phi = lambda k: 1.0 / abs(k - (1.3 - 0.05j)) + 2.0 / abs(k - (2.6 - 0.2j)) + 0.3
    vals = np.array([phi(k) for k in colloc_pts.points])
    colloc = CollocationSet(points=colloc_pts.points, values=vals)
    model = fit_sum(colloc, ps, 3, RANGE)
    for k, v in zip(colloc.points, vals):
        assert model.evaluate(float(k)) == pytest.approx(v, rel=1e-8)


def test_fit_validation_errors():
    ps = pole_set(2 - 0.1j)
    colloc = CollocationSet(points=np.array([2.0]), values=np.array([7.0]))
    with pytest.raises(InvalidParameterError):
        fit_sum(colloc, ps, 1, RANGE)  # n_b > n_o
    with pytest.raises(InvalidParameterError):
        fit_sum(CollocationSet(points=np.array([2.0])), ps, 0, RANGE)


def test_eval_clamped_below():
    model = HybridSurrogate(
        poles=np.array([2 - 0.1j]),
        psi=np.array([-5.0]),
        basis_nodes=np.empty(0),
        alpha=np.empty(0),
        flavor="sum",
        k_range=RANGE,
    )
    assert model.evaluate(2.0) == pytest.approx(1e-12)


def test_max_flavor_continuous_across_switch():
    model = HybridSurrogate(
        poles=np.array([1.5 - 0.1j, 2.5 - 0.1j]),
        psi=np.array([1.0, 1.0]),
        basis_nodes=np.empty(0),
        alpha=np.empty(0),
        flavor="max",
        k_range=RANGE,
    )
    ks = np.linspace(1.9, 2.1, 2001)
    vals = model.evaluate(ks)
    assert np.abs(np.diff(vals)).max() < 2e-3  # no jump at the switching locus


def test_hybrid_serialization_roundtrip(tmp_path):
    model = HybridSurrogate(
        poles=np.array([1.5 - 0.1j, 2.5 - 0.2j]),
        psi=np.array([1.0, 2.0]),
        basis_nodes=np.linspace(1.0, 3.0, 4),
        alpha=np.array([0.1, -0.2, 0.3, 0.0]),
        flavor="max",
        k_range=RANGE,
    )
    path = tmp_path / "h.json"
    save_hybrid(model, path)
    back = load_hybrid(path)
    assert np.allclose(back.poles, model.poles)
    assert np.allclose(back.psi, model.psi)
    assert np.allclose(back.alpha, model.alpha)
    assert back.flavor == "max"
    ks = np.linspace(1.0, 3.0, 17)
    assert np.allclose(back.evaluate(ks), model.evaluate(ks))

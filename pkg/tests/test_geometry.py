import numpy as np
import pytest

from czlab.geometry import (MAX_CANTOR_STAGE, PiecewiseLinearGraph, Scenario, cantor_measure,
                            cantor_squares, growth_renormalize, halfplane_scenario,
                            lipschitz_scenario, nearby_measure, random_slopes, section5_measures)
from czlab.measures import (DiscreteMeasure, MeasureError, ad_regularity_constants, diameter,
                            growth_constant, total_variation)


def test_cantor_stage0():
    m = cantor_measure(0)
    np.testing.assert_allclose(m.atoms, [[0.5, 0.5]])
    np.testing.assert_allclose(m.weights, [1.0])


def test_cantor_stage1_corners():
    m = cantor_measure(1)
    assert len(m) == 4
    np.testing.assert_allclose(m.weights, 0.25)
    corners, side = cantor_squares(1)
    assert side == 0.25
    want = {(0, 0), (0.75, 0), (0, 0.75), (0.75, 0.75)}
    assert {tuple(c) for c in corners} == want


def test_cantor_stage2():
    m = cantor_measure(2)
    assert len(m) == 16
    np.testing.assert_allclose(m.weights, 1 / 16)
    assert cantor_squares(2)[1] == 1 / 16


@pytest.mark.parametrize("stage,reps", [(0, 1), (1, 4), (3, 1), (3, 3), (4, 9), (5, 2)])
def test_cantor_total_mass(stage, reps):
    m = cantor_measure(stage, reps)
    assert len(m) == 4 ** stage * reps
    assert total_variation(m) == pytest.approx(1.0, abs=1e-13)


def test_cantor_reps_inside_squares():
    corners, side = cantor_squares(3)
    m = cantor_measure(3, 5).atoms.reshape(len(corners), 5, 2)
    lo = corners[:, None, :]
    assert np.all((m > lo) & (m < lo + side))


@pytest.mark.parametrize("k", range(0, 5))
def test_cantor_ancestor_squares_mass(k):
    n = 5
    m = cantor_measure(n)
    corners, side = cantor_squares(k)
    for c in corners:
        inside = np.all((m.atoms >= c) & (m.atoms <= c + side), axis=1)
        assert m.weights[inside].real.sum() == pytest.approx(4.0 ** -k, rel=1e-12)


def test_cantor_guard():
    with pytest.raises(MeasureError):
        cantor_measure(MAX_CANTOR_STAGE + 1)
    with pytest.raises(MeasureError):
        cantor_measure(9, 8)


def test_section5_N1():
    c = section5_measures(1)
    np.testing.assert_array_equal(c.mu.weights, c.nu.weights)
    assert c.lam[0] == 1.0


def test_section5_N2_mass():
    c = section5_measures(2)
    assert total_variation(c.mu) == pytest.approx(1 + 2 ** -0.5, rel=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_section5_invariants(N):
    c = section5_measures(N, spacing=50)
    np.testing.assert_array_equal(c.lam, np.arange(1, N + 1) ** -0.5)
    assert total_variation(c.nu) == pytest.approx(N)
    assert total_variation(c.mu) == pytest.approx(sum(n ** -0.5 for n in range(1, N + 1)))
    for s in c.sigma:
        assert total_variation(s) == pytest.approx(1.0)
    for a in range(N):
        for b in range(a + 1, N):
            d = np.linalg.norm(c.sigma[a].atoms[:, None] - c.sigma[b].atoms[None], axis=2)
            assert d.min() >= 50 - diameter(c.sigma[a]) - 1e-12


def test_section5_N3_gap():
    c = section5_measures(3)
    d = np.linalg.norm(c.sigma[1].atoms[:, None] - c.sigma[2].atoms[None], axis=2)
    assert d.min() >= c.spacing - diameter(c.sigma[1]) > 0


def test_section5_spacing_guard():
    with pytest.raises(MeasureError):
        section5_measures(2, spacing=5)


def test_growth_renormalize_reaches_target(rng):
    pts = rng.uniform(size=(200, 2)) * 0.1
    m = growth_renormalize(DiscreteMeasure(pts, np.ones(200)))
    assert growth_constant(m, 1) <= 2.0
    assert m.is_positive and np.all(m.weights.real > 0)


def test_growth_renormalize_leaves_good_measures(segment1000):
    out = growth_renormalize(segment1000)
    np.testing.assert_array_equal(out.weights, segment1000.weights)


def test_halfplane_scenario(halfplane1):
    sc = halfplane1
    assert np.all(sc.nu.atoms[:, 1] < 0)
    assert np.all(sc.mu.atoms[:, 1] >= 0)
    np.testing.assert_allclose(sc.boundary_measure.weights, 1 / 64)
    assert ad_regularity_constants(sc.boundary_measure, 1).c_lower > 0
    assert growth_constant(sc.nu, 1) <= 2
    assert growth_constant(sc.mu, 1) <= 2
    assert sc.domain == "half-plane"


def test_halfplane_nu_near_gamma(halfplane1):
    g = halfplane1.boundary_measure.atoms
    d = np.linalg.norm(halfplane1.nu.atoms[:, None] - g[None], axis=2).min(axis=1)
    assert np.all(d <= diameter(halfplane1.boundary_measure))


def test_scenarios_are_reproducible():
    a = halfplane_scenario(32, 20, 20, seed=7)
    b = halfplane_scenario(32, 20, 20, seed=7)
    np.testing.assert_array_equal(a.mu.atoms, b.mu.atoms)
    np.testing.assert_array_equal(a.nu.weights, b.nu.weights)
    c = halfplane_scenario(32, 20, 20, seed=8)
    assert not np.array_equal(a.nu.atoms, c.nu.atoms)


def test_scenario_separation(lipschitz3):
    sc = lipschitz3
    off = sc.mu.atoms[sc.in_U(sc.mu.atoms)]
    d = np.linalg.norm(sc.nu.atoms[:, None] - off[None], axis=2)
    assert d.min() > 0
    assert not sc.in_U(sc.nu.atoms).any()


def test_lipschitz_flat_is_halfplane():
    a = lipschitz_scenario([0.0], (64, 48, 32), seed=4)
    b = halfplane_scenario(64, 48, 32, seed=4)
    np.testing.assert_array_equal(a.boundary_measure.atoms, b.boundary_measure.atoms)
    np.testing.assert_array_equal(a.mu.atoms, b.mu.atoms)
    np.testing.assert_array_equal(a.nu.weights, b.nu.weights)


def test_lipschitz_arclength_weights():
    sc = lipschitz_scenario([1.0, -0.5], (40, 10, 10), seed=0)
    w = sc.boundary_measure.weights.real
    x = sc.boundary_measure.atoms[:, 0]
    np.testing.assert_allclose(w[x < 0.5], np.sqrt(2) * 0.5 / 20)
    np.testing.assert_allclose(w[x > 0.5], np.sqrt(1.25) * 0.5 / 20)


@pytest.mark.parametrize("seed", range(5))
def test_lipschitz_ad_ratio(seed):
    sc = lipschitz_scenario(random_slopes(5, seed), (80, 20, 20), seed)
    ad = ad_regularity_constants(sc.boundary_measure, 1)
    assert ad.c_lower > 0 and ad.c_upper / ad.c_lower <= 8


def test_lipschitz_slope_guard():
    with pytest.raises(MeasureError):
        lipschitz_scenario([1.5])


def test_scenario_validation():
    sc = halfplane_scenario(16, 8, 8, seed=0)
    bad = DiscreteMeasure([[0.5, 0.2]], [0.1])
    with pytest.raises(MeasureError):
        Scenario(sc.boundary_measure, sc.mu, bad, sc.domain, sc.graph, 0)


def test_graph_evaluation():
    g = PiecewiseLinearGraph((1.0, -1.0))
    np.testing.assert_allclose(g(np.array([0, 0.25, 0.5, 1.0])), [0, 0.25, 0.5, 0.0])


def test_nearby_measure(cantor3):
    nu = nearby_measure(cantor3, 50, seed=2)
    assert len(nu) == 50 and growth_constant(nu, 1) <= 2

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from czlab.decomposition import DecompositionParams, decompose, level_at_percentile
from czlab.kernels import KernelSpec, pairwise_kernel
from czlab.measures import (Ball, DiscreteMeasure, FunctionOnMeasure, ball_mass, growth_constant,
                            restrict)

SETTINGS = settings(max_examples=40, deadline=None)

coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def measures(draw, n_min=2, n_max=25):
    # atoms on a fine lattice keep the dyadic radius grid a sensible size
    n = draw(st.integers(n_min, n_max))
    cells = draw(st.lists(st.tuples(st.integers(-640, 640), st.integers(-640, 640)),
                          min_size=n, max_size=n, unique=True))
    pts = np.array(cells, dtype=float) / 64
    w = draw(arrays(float, n, elements=st.floats(0.01, 5.0)))
    return DiscreteMeasure(pts, w)


@SETTINGS
@given(measures(), st.tuples(coords, coords), st.floats(0, 2 * np.pi))
def test_growth_invariant_under_rigid_motions(m, shift, angle):
    c, s = np.cos(angle), np.sin(angle)
    moved = m.transformed(np.array([[c, -s], [s, c]]), shift)
    assert np.isclose(growth_constant(moved, 1), growth_constant(m, 1), rtol=1e-6)


@SETTINGS
@given(measures(), st.floats(0.01, 5), st.floats(0.01, 5))
def test_ball_mass_monotone(m, r1, r2):
    x = m.atoms[0]
    lo, hi = sorted((r1, r2))
    assert ball_mass(m, Ball(x, lo)).real <= ball_mass(m, Ball(x, hi)).real + 1e-12


@SETTINGS
@given(measures(), st.floats(-10, 10))
def test_restrict_partitions_mass(m, cut):
    left = m.atoms[:, 0] < cut
    a, b = restrict(m, left), restrict(m, ~left)
    assert np.isclose(a.mass + b.mass, m.mass, rtol=1e-12)


@SETTINGS
@given(measures(), st.floats(0.1, 10))
def test_growth_homogeneity(m, t):
    # scaling positions by t and weights by t preserves 1-growth
    scaled = DiscreteMeasure(m.atoms * t, m.weights * t)
    assert np.isclose(growth_constant(scaled, 1), growth_constant(m, 1), rtol=1e-6)


kernels = st.sampled_from([KernelSpec("cauchy"), KernelSpec("riesz"), KernelSpec("cmpt", m=1),
                           KernelSpec("cmpt", m=2)])


@SETTINGS
@given(kernels, arrays(float, (6, 2), elements=coords), arrays(float, (5, 2), elements=coords),
       st.floats(1e-3, 1e3))
def test_kernel_antisymmetry_and_homogeneity(k, X, Y, t):
    K = pairwise_kernel(k, X, Y)
    np.testing.assert_allclose(pairwise_kernel(k, Y, X).T, -K, atol=1e-12 * (1 + np.abs(K).max()))
    np.testing.assert_allclose(pairwise_kernel(k, t * X, t * Y) * t, K, rtol=1e-9,
                               atol=1e-12 * (1 + np.abs(K).max()))


def _toy(seed):
    rng = np.random.default_rng(seed)
    x = (np.arange(24) + 0.5) / 24
    gamma = DiscreteMeasure(np.c_[x, np.zeros(24)], np.full(24, 1 / 24))
    mu = DiscreteMeasure(np.c_[rng.uniform(size=12), rng.uniform(0, 0.4, 12)],
                         rng.uniform(0.02, 0.08, 12))
    nu = DiscreteMeasure(np.c_[rng.uniform(size=10), -rng.uniform(0.05, 0.4, 10)],
                         rng.uniform(0.02, 0.08, 10))
    return gamma, mu, nu, FunctionOnMeasure(nu, rng.normal(size=10))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.125, 0.5, 2.0, 8.0]), st.integers(20, 95))
def test_decomposition_scale_covariance(seed, s, pc):
    gamma, mu, nu, f = _toy(seed)
    lam = level_at_percentile(f, nu, mu, pc)
    a = decompose(f, nu, mu, gamma, DecompositionParams(lam))

    def sc(m):
        return DiscreteMeasure(m.atoms * s, m.weights * s)

    b = decompose(FunctionOnMeasure(sc(nu), f.values), sc(nu), sc(mu), sc(gamma),
                  DecompositionParams(lam))
    np.testing.assert_array_equal(a.center_indices, b.center_indices)
    np.testing.assert_allclose([x.radius * s for x in a.balls_B], [x.radius for x in b.balls_B],
                               rtol=1e-12)

"""Generators for Cantor measures and separated-measure configurations.

All randomness goes through ``numpy.random.default_rng(seed)`` (PCG64), so a
(generator, parameters, seed) triple reproduces a configuration bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .measures import (DiscreteMeasure, MeasureError, _tree, ad_regularity_constants,
                       diameter, dyadic_radii, growth_constant)

MAX_CANTOR_STAGE = 10
MAX_CANTOR_ATOMS = 4 ** 10

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# corner-quarters Cantor set
# ---------------------------------------------------------------------------

def cantor_squares(stage: int) -> tuple[np.ndarray, float]:
    """Lower-left corners of the 4**stage stage-n squares, and their side."""
    corners = np.zeros((1, 2))
    side = 1.0
    for _ in range(stage):
        step = 0.75 * side
        offs = np.array([[0.0, 0.0], [step, 0.0], [0.0, step], [step, step]])
        corners = (corners[:, None, :] + offs[None, :, :]).reshape(-1, 2)
        side /= 4.0
    return corners, side


def _unit_samples(reps: int) -> np.ndarray:
    k = int(round(np.sqrt(reps)))
    if k * k == reps:
        g = (np.arange(k) + 0.5) / k
        return np.array([[a, b] for b in g for a in g])
    i = np.arange(reps) + 0.5
    return np.c_[i / reps, np.mod(i * GOLDEN, 1.0)]


def cantor_measure(stage: int, reps_per_square: int = 1) -> DiscreteMeasure:
    """Natural probability measure on the stage-n corner-quarters squares.

    Every square of side 4**-stage carries mass 4**-stage, split evenly
    over ``reps_per_square`` quasi-uniform points inside it (the center for
    a single point, a k x k grid for perfect squares, a golden-ratio
    lattice otherwise).
    """
    if stage < 0 or reps_per_square < 1:
        raise MeasureError("stage must be >= 0 and reps >= 1")
    if stage > MAX_CANTOR_STAGE or 4 ** stage * reps_per_square > MAX_CANTOR_ATOMS:
        raise MeasureError(
            f"Cantor measure with stage {stage} and {reps_per_square} points per square "
            f"exceeds the {MAX_CANTOR_ATOMS}-atom guard")
    corners, side = cantor_squares(stage)
    unit = _unit_samples(reps_per_square)
    pts = (corners[:, None, :] + side * unit[None, :, :]).reshape(-1, 2)
    w = np.full(pts.shape[0], 4.0 ** (-stage) / reps_per_square)
    return DiscreteMeasure(pts, w)


@dataclass(frozen=True, eq=False)
class Section5Construction:
    """Far-apart translated Cantor blocks: ``mu = sum lam_n sigma_n``, ``nu = sum sigma_n``."""

    N: int
    spacing: float
    reps: int
    sigma: list[DiscreteMeasure]
    lam: np.ndarray
    z: np.ndarray
    mu: DiscreteMeasure
    nu: DiscreteMeasure


def section5_measures(N: int, spacing: float = 100.0, reps: int = 1) -> Section5Construction:
    """Blocks ``sigma_n = cantor_measure(n) + (n * spacing, 0)``, n = 1..N, with lam_n = n^-1/2."""
    if N < 1:
        raise MeasureError("N must be >= 1")
    if spacing < 10:
        raise MeasureError("spacing must be >= 10 so the unit blocks stay far apart")
    sigmas, zs = [], []
    for n in range(1, N + 1):
        z = np.array([n * spacing, 0.0])
        sigmas.append(cantor_measure(n, reps).translated(z))
        zs.append(z)
    lam = np.arange(1, N + 1, dtype=float) ** -0.5
    pts = np.concatenate([s.atoms for s in sigmas])
    mu = DiscreteMeasure(pts, np.concatenate([l * s.weights for l, s in zip(lam, sigmas)]))
    nu = DiscreteMeasure(pts, np.concatenate([s.weights for s in sigmas]))
    return Section5Construction(N, float(spacing), reps, sigmas, lam, np.array(zs), mu, nu)


# ---------------------------------------------------------------------------
# growth renormalisation
# ---------------------------------------------------------------------------

def growth_renormalize(m: DiscreteMeasure, n: float = 1.0, target: float = 2.0,
                       max_rounds: int = 8) -> DiscreteMeasure:
    """Scale down atoms lying in balls that violate ``m(B) <= target r^n``.

    Each round gives every atom the smallest factor ``target / ratio`` over
    the violating candidate balls containing it, which repairs all of them
    at once; untouched balls only lose mass.  A final global rescale is the
    fallback should rounding leave a violation behind.
    """
    if len(m) == 0:
        return m
    w = m.real_weights
    radii = dyadic_radii(m)
    tree = _tree(m)
    members = [tree.query_ball_point(m.atoms, r) for r in radii]
    safety = 1.0 - 1e-12
    for _ in range(max_rounds):
        factor = np.ones(len(m))
        worst = 0.0
        for k, r in enumerate(radii):
            for idx in members[k]:
                ratio = w[idx].sum() / r ** n
                if ratio > target:
                    worst = max(worst, ratio)
                    np.minimum.at(factor, idx, target / ratio * safety)
        if worst == 0.0:
            break
        w = w * factor
    out = m.with_weights(w)
    g = growth_constant(out, n)
    if g > target:
        out = out.scaled(target / g * safety)
    return out


# ---------------------------------------------------------------------------
# separated configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseLinearGraph:
    """Graph of a continuous piecewise-linear g on [0, 1] with g(0) = 0."""

    slopes: tuple[float, ...]

    @property
    def breaks(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.slopes) + 1)

    @property
    def knot_values(self) -> np.ndarray:
        h = 1.0 / len(self.slopes)
        return np.r_[0.0, np.cumsum(np.asarray(self.slopes) * h)]

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.breaks, self.knot_values)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Measures separated by a boundary curve Gamma.

    ``U`` is the open region above Gamma; ``mu`` lives in its closure and
    ``nu`` strictly below.
    """

    boundary_measure: DiscreteMeasure
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    domain: str
    graph: PiecewiseLinearGraph
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        tol = 1e-12
        if len(self.mu):
            gx = self.graph(self.mu.atoms[:, 0])
            if np.any(self.mu.atoms[:, 1] < gx - tol):
                raise MeasureError("mu has atoms outside the closure of U")
        if len(self.nu):
            gx = self.graph(self.nu.atoms[:, 0])
            if np.any(self.nu.atoms[:, 1] > gx + tol):
                raise MeasureError("nu has atoms inside U")
        ad = ad_regularity_constants(self.boundary_measure, 1)
        if not ad.is_regular:
            raise MeasureError("boundary measure is not AD-regular")

    def in_U(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return pts[:, 1] > self.graph(pts[:, 0])

    @property
    def gamma_diameter(self) -> float:
        return diameter(self.boundary_measure)

    def describe(self) -> dict:
        return {"domain": self.domain, "slopes": list(self.graph.slopes), "seed": self.seed,
                **self.params}


def _gamma_measure(graph: PiecewiseLinearGraph, n_gamma: int) -> DiscreteMeasure:
    L = len(graph.slopes)
    counts = np.full(L, n_gamma // L)
    counts[: n_gamma % L] += 1
    if np.any(counts < 1):
        raise MeasureError("need at least one boundary atom per segment")
    xs, ws = [], []
    h = 1.0 / L
    for j, (s, c) in enumerate(zip(graph.slopes, counts)):
        x = j * h + (np.arange(c) + 0.5) * h / c
        xs.append(x)
        ws.append(np.full(c, np.sqrt(1.0 + s * s) * h / c))
    x = np.concatenate(xs)
    return DiscreteMeasure(np.c_[x, graph(x)], np.concatenate(ws))


def _jittered(n: int, rng) -> np.ndarray:
    """One uniform point in each of n equal cells of [0, 1], jitter kept off the cell edges."""
    return (np.arange(n) + rng.uniform(0.2, 0.8, n)) / max(n, 1)


def _jittered_box(n: int, rng) -> np.ndarray:
    """n stratified points in [0, 1] x (0, 1]: a near-square grid of cells, first n cells used."""
    if n == 0:
        return np.zeros((0, 2))
    cols = int(np.ceil(np.sqrt(2 * n)))
    rows = int(np.ceil(n / cols))
    cells = rng.permutation(rows * cols)[:n]
    i, j = cells % cols, cells // cols
    x = (i + rng.uniform(0.2, 0.8, n)) / cols
    y = (j + rng.uniform(0.2, 0.8, n)) / rows
    return np.c_[x, y]


def _graph_scenario(slopes: Sequence[float], n_gamma: int, n_mu: int, n_nu: int, seed: int,
                    domain: str, mu_height: float = 0.5, nu_depth: float = 0.75,
                    on_gamma_fraction: float = 0.25,
                    weight_spread: float = 0.1) -> Scenario:
    if min(n_gamma, n_mu, n_nu) < 2:
        raise MeasureError("atom counts must be >= 2")
    graph = PiecewiseLinearGraph(tuple(float(s) for s in slopes))
    gamma = _gamma_measure(graph, n_gamma)
    rng = np.random.default_rng(seed)

    # mu: some atoms on Gamma itself, the rest above it
    n_on = int(round(on_gamma_fraction * n_mu))
    x_on = _jittered(n_on, rng)
    lifted = _jittered_box(n_mu - n_on, rng)
    xm = np.r_[x_on, lifted[:, 0]]
    lift = np.r_[np.zeros(n_on), mu_height * lifted[:, 1]]
    mu_pts = np.c_[xm, graph(xm) + lift]
    mu_w = rng.uniform(1 - weight_spread, 1 + weight_spread, n_mu) / n_mu
    mu = growth_renormalize(DiscreteMeasure(mu_pts, mu_w))

    # nu: strictly below, at least a few boundary cells deep so every
    # stopping ball's R = 10 B reaches boundary atoms
    min_depth = 3.0 / n_gamma
    below = _jittered_box(n_nu, rng)
    xn = below[:, 0]
    depth = min_depth + (nu_depth - min_depth) * below[:, 1]
    nu_pts = np.c_[xn, graph(xn) - depth]
    nu_w = rng.uniform(1 - weight_spread, 1 + weight_spread, n_nu) / n_nu
    nu = growth_renormalize(DiscreteMeasure(nu_pts, nu_w))

    params = {"n_gamma": n_gamma, "n_mu": n_mu, "n_nu": n_nu, "min_depth": min_depth,
              "mu_height": mu_height, "nu_depth": nu_depth,
              "on_gamma_fraction": on_gamma_fraction, "weight_spread": weight_spread,
              "generator": "numpy.default_rng/PCG64"}
    return Scenario(gamma, mu, nu, domain, graph, seed, params)


def halfplane_scenario(n_gamma: int, n_mu: int, n_nu: int, seed: int = 0) -> Scenario:
    """Gamma = [0,1] x {0} with equispaced atoms; mu on/above, nu below."""
    return _graph_scenario([0.0], n_gamma, n_mu, n_nu, seed, "half-plane")


def lipschitz_scenario(slopes: Sequence[float], counts: tuple[int, int, int] = (64, 48, 32),
                       seed: int = 0) -> Scenario:
    """Gamma = graph of a piecewise-linear function with the given slopes."""
    slopes = list(slopes)
    if not slopes or any(abs(s) > 1 for s in slopes):
        raise MeasureError("slopes must be nonempty with |slope| <= 1")
    return _graph_scenario(slopes, *counts, seed, "subgraph-of-piecewise-linear-function")


def random_slopes(n_segments: int, seed: int, max_abs: float = 1.0) -> list[float]:
    rng = np.random.default_rng([seed, 7919])
    return [float(s) for s in rng.uniform(-max_abs, max_abs, n_segments)]


def nearby_measure(support: DiscreteMeasure, n_atoms: int, seed: int,
                   margin: float = 0.25) -> DiscreteMeasure:
    """Seeded 1-growth atoms in the margin-enlarged bounding box of ``support``."""
    rng = np.random.default_rng(seed)
    lo = support.atoms.min(axis=0) - margin
    hi = support.atoms.max(axis=0) + margin
    pts = rng.uniform(lo, hi, size=(n_atoms, support.dim))
    w = rng.uniform(0.5, 1.5, n_atoms) / n_atoms
    return growth_renormalize(DiscreteMeasure(pts, w))

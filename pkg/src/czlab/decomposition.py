"""Calderon-Zygmund decompositions of ``f nu`` relative to a boundary measure.

Pipeline for a level ``lam`` and exponent ``p`` (``tau = |f|^p nu``,
``c = lam^p / 2^(d+1)``):

1. stopping balls: for every atom x of nu, the maximal ball B_x centered at
   x with ``tau(B_x) > c mu(2 B_x)`` while ``tau(D) <= c mu(2D)`` for every
   concentric D with radius > 2 r(B_x);
2. greedy Besicovitch selection of an almost disjoint subfamily covering
   every center;
3. corrections ``phi_i = alpha_i 1_{A_i}`` on the boundary atoms of
   ``R_i = 10 B_i``, built in nondecreasing radius so that
   ``int phi_i dGamma = int_{B_i} w_i f dnu``;
4. the split ``f nu = kappa + sum beta_i`` with ``kappa = (h + sum phi_i) Gamma``
   and ``beta_i = w_i f nu|B_i - phi_i Gamma``.

Uncovered atoms of nu cannot be differentiated against Gamma atomically;
they are moved to their nearest boundary atom (lowest index on ties) and
accumulated into the good density h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measures import (Ball, DiscreteMeasure, FunctionOnMeasure, MeasureError,
                       ad_regularity_constants, combine, diameter)

R_FACTOR = 10.0


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class DecompositionParams:
    lam: float
    p: float = 1.0
    d: int = 2
    radius_grid: np.ndarray | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise DecompositionError("lambda must be positive")
        if self.p < 1:
            raise DecompositionError("p must be >= 1")
        if self.radius_grid is not None:
            g = np.sort(np.asarray(self.radius_grid, dtype=float))
            if g.size == 0 or g[0] <= 0:
                raise DecompositionError("radius grid must hold positive radii")
            object.__setattr__(self, "radius_grid", g)

    @property
    def stop_constant(self) -> float:
        return self.lam ** self.p / 2 ** (self.d + 1)


def admissibility_floor(f: FunctionOnMeasure, mu: DiscreteMeasure, p: float, d: int = 2) -> float:
    """Levels must exceed ``(2^(d+1) ||f||_p^p / ||mu||)^(1/p)``."""
    mass = float(mu.weights.real.sum())
    if mass <= 0:
        raise DecompositionError("mu has no mass")
    return (2 ** (d + 1) * f.lp_norm(p) ** p / mass) ** (1.0 / p)


def check_admissible(f: FunctionOnMeasure, mu: DiscreteMeasure, params: DecompositionParams):
    floor = admissibility_floor(f, mu, params.p, params.d)
    if not params.lam > floor:
        raise DecompositionError(
            f"lambda = {params.lam:.6g} is not admissible (must exceed {floor:.6g})")


@dataclass(frozen=True)
class PhiFunction:
    """``alpha * 1_A`` on the boundary atoms ``support_indices``."""

    alpha: complex
    support_indices: np.ndarray
    ball_index: int
    threshold: float = 0.0

    def values(self, n_gamma: int) -> np.ndarray:
        v = np.zeros(n_gamma, dtype=complex)
        v[self.support_indices] = self.alpha
        return v


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    variant: str
    params: DecompositionParams
    f: FunctionOnMeasure
    nu: DiscreteMeasure
    mu: DiscreteMeasure
    gamma: DiscreteMeasure
    center_indices: np.ndarray
    balls_B: list[Ball]
    balls_R: list[Ball]
    weights_w: np.ndarray          # (n_balls, n_nu)
    phis: list[PhiFunction]
    good_density: FunctionOnMeasure
    good_indices: np.ndarray       # atoms of nu with no stopping ball
    kappa: DiscreteMeasure
    betas: list[DiscreteMeasure]
    candidate_count: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def n_balls(self) -> int:
        return len(self.balls_B)

    def phi_sum_abs(self) -> np.ndarray:
        s = np.zeros(len(self.gamma))
        for phi in self.phis:
            s[phi.support_indices] += abs(phi.alpha)
        return s

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "lambda": self.params.lam,
            "p": self.params.p,
            "balls": [{"center": b.center.tolist(), "radius": b.radius,
                       "center_atom": int(i)} for b, i in zip(self.balls_B, self.center_indices)],
            "alphas": [phi.alpha for phi in self.phis],
            "thresholds": [phi.threshold for phi in self.phis],
            "support_indices": [phi.support_indices.tolist() for phi in self.phis],
            "good_atoms": self.good_indices.tolist(),
        }


# ---------------------------------------------------------------------------
# step 1: stopping balls
# ---------------------------------------------------------------------------

def _dists(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.sqrt(((points - x) ** 2).sum(axis=1))


def _step_masses(dist: np.ndarray, w: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Closed-ball masses at each radius given distances and weights."""
    order = np.argsort(dist, kind="stable")
    cum = np.r_[0.0, np.cumsum(w[order])]
    return cum[np.searchsorted(dist[order], radii, side="right")]


def stopping_radius(x: np.ndarray, tau_pts, tau_w, mu_pts, mu_w, c: float,
                    grid: np.ndarray | None = None) -> float | None:
    """Radius of the maximal stopping ball at x, or None when x is good.

    Without a grid the test ``tau(B(x,r)) > c mu(B(x,2r))`` is piecewise
    constant in r between breakpoints (tau-atom distances and half the
    mu-atom distances).  With r* the end of the last interval where it
    holds, the midpoint of that interval satisfies the test while every
    radius beyond r* (hence beyond twice the midpoint) fails it.
    """
    dt = _dists(tau_pts, x)
    dm = _dists(mu_pts, x)
    if grid is not None:
        ok = _step_masses(dt, tau_w, grid) > c * _step_masses(dm, mu_w, 2 * grid)
        hits = np.nonzero(ok)[0]
        return float(grid[hits[-1]]) if hits.size else None
    bps = np.unique(np.r_[0.0, dt, dm / 2])
    ok = _step_masses(dt, tau_w, bps) > c * _step_masses(dm, mu_w, 2 * bps)
    hits = np.nonzero(ok)[0]
    if hits.size == 0:
        return None
    k = hits[-1]
    if k + 1 >= bps.size:
        raise DecompositionError("stopping condition holds at every radius; lambda too small")
    return float(0.5 * (bps[k] + bps[k + 1]))


def find_stopping_balls(f: FunctionOnMeasure, nu: DiscreteMeasure, mu: DiscreteMeasure,
                        params: DecompositionParams) -> list[tuple[int, Ball]]:
    """Maximal stopping ball for every atom of nu that has one."""
    check_admissible(f, mu, params)
    tau_w = np.abs(f.values) ** params.p * np.abs(nu.weights)
    mu_w = mu.real_weights
    c = params.stop_constant
    out = []
    for i, x in enumerate(nu.atoms):
        r = stopping_radius(x, nu.atoms, tau_w, mu.atoms, mu_w, c, params.radius_grid)
        if r is not None:
            out.append((i, Ball(x, r)))
    return out


# ---------------------------------------------------------------------------
# step 2: Besicovitch-type selection
# ---------------------------------------------------------------------------

def besicovitch_select(candidates) -> list:
    """Greedy selection by decreasing radius, skipping covered centers.

    ``candidates`` holds Balls or (index, Ball) pairs; ties in radius are
    broken by position.  Every candidate center ends up inside a kept ball.
    Items are returned in the selection order.
    """
    items = list(candidates)
    balls = [it[1] if isinstance(it, tuple) else it for it in items]
    order = sorted(range(len(items)), key=lambda j: (-balls[j].radius, j))
    kept: list[int] = []
    kc = np.zeros((0, balls[0].center.size)) if balls else np.zeros((0, 2))
    kr = np.zeros(0)
    for j in order:
        b = balls[j]
        if kr.size and np.any(np.sqrt(((kc - b.center) ** 2).sum(axis=1)) <= kr):
            continue
        kept.append(j)
        kc = np.vstack([kc, b.center])
        kr = np.r_[kr, b.radius]
    return [items[j] for j in kept]


def overlap_counts(balls: list[Ball], points: np.ndarray) -> np.ndarray:
    """Pointwise ``sum_i 1_{B_i}`` at each point."""
    counts = np.zeros(points.shape[0], dtype=int)
    for b in balls:
        counts += _dists(points, b.center) <= b.radius
    return counts


# ---------------------------------------------------------------------------
# step 3: corrections on the boundary
# ---------------------------------------------------------------------------

def _membership(balls: list[Ball], points: np.ndarray) -> np.ndarray:
    if not balls:
        return np.zeros((0, points.shape[0]), dtype=bool)
    return np.array([_dists(points, b.center) <= b.radius for b in balls])


def partition_weights(balls_B: list[Ball], nu: DiscreteMeasure) -> np.ndarray:
    """``w_i = 1_{B_i} / sum_k 1_{B_k}`` at the atoms of nu."""
    M = _membership(balls_B, nu.atoms).astype(float)
    count = M.sum(axis=0)
    return np.divide(M, count, out=np.zeros_like(M), where=count > 0)


def build_phi(selected: list[Ball], gamma: DiscreteMeasure, f: FunctionOnMeasure,
              nu: DiscreteMeasure, params: DecompositionParams,
              weights_w: np.ndarray | None = None) -> list[PhiFunction]:
    """Corrections ``alpha_k 1_{A_k}`` for balls given in nondecreasing radius.

    ``A_k`` keeps the boundary atoms of ``R_k`` where the running sum of
    earlier ``|phi_j|`` is at most the smallest ``2^m lam`` (m >= 1) that
    leaves at least half of the boundary mass of ``R_k``.
    """
    radii = [b.radius for b in selected]
    if any(b > a for a, b in zip(radii[1:], radii[:-1])):
        raise DecompositionError("balls must come in nondecreasing radius")
    if weights_w is None:
        weights_w = partition_weights(selected, nu)
    gw = gamma.real_weights
    fnu = f.values * nu.weights
    running = np.zeros(len(gamma))
    phis = []
    for k, b in enumerate(selected):
        inR = _dists(gamma.atoms, b.center) <= R_FACTOR * b.radius
        massR = gw[inR].sum()
        if not massR > 0:
            raise DecompositionError(
                f"R_{k} = 10 B_{k} (center {b.center.tolist()}, radius {b.radius:.6g}) "
                "contains no boundary atom")
        target = complex(np.sum(weights_w[k] * fnu))
        m = 1
        while True:
            thr = 2.0 ** m * params.lam
            A = inR & (running <= thr)
            if gw[A].sum() >= 0.5 * massR:
                break
            m += 1
        alpha = target / gw[A].sum()
        running[A] += abs(alpha)
        phis.append(PhiFunction(alpha, np.nonzero(A)[0], k, thr))
    return phis


# ---------------------------------------------------------------------------
# step 4: assembly
# ---------------------------------------------------------------------------

def nearest_atom(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Index of the nearest target for each point (lowest index on ties)."""
    out = np.empty(points.shape[0], dtype=int)
    for i, x in enumerate(points):
        out[i] = int(np.argmin(_dists(targets, x)))
    return out


def _assemble(variant, f, nu, mu, gamma, params) -> CZDecomposition:
    cand = find_stopping_balls(f, nu, mu, params)
    picked = besicovitch_select(cand)
    picked.sort(key=lambda it: (it[1].radius, it[0]))
    centers = np.array([i for i, _ in picked], dtype=int)
    balls_B = [b for _, b in picked]
    balls_R = [b.dilate(R_FACTOR) for b in balls_B]
    W = partition_weights(balls_B, nu)
    phis = build_phi(balls_B, gamma, f, nu, params, W)

    fnu = f.values * nu.weights
    covered = W.sum(axis=0) > 0 if balls_B else np.zeros(len(nu), dtype=bool)
    with_ball = np.zeros(len(nu), dtype=bool)
    with_ball[[i for i, _ in cand]] = True
    good = np.nonzero(~with_ball)[0]
    loose = np.nonzero(~covered)[0]
    if np.any(with_ball[loose]):
        raise DecompositionError("selection left a stopping-ball center uncovered")

    gw = gamma.real_weights
    h_mass = np.zeros(len(gamma), dtype=complex)
    if loose.size:
        np.add.at(h_mass, nearest_atom(nu.atoms[loose], gamma.atoms), fnu[loose])
    h = FunctionOnMeasure(gamma, h_mass / gw)

    phi_total = np.zeros(len(gamma), dtype=complex)
    for phi in phis:
        phi_total[phi.support_indices] += phi.alpha
    kappa = gamma.with_weights((h.values + phi_total) * gw)

    betas = []
    for i, phi in enumerate(phis):
        inB = W[i] > 0
        bad = DiscreteMeasure(nu.atoms[inB], W[i, inB] * fnu[inB])
        corr = DiscreteMeasure(gamma.atoms[phi.support_indices],
                               -phi.alpha * gw[phi.support_indices])
        betas.append(combine([bad, corr]))
    return CZDecomposition(variant, params, f, nu, mu, gamma, centers, balls_B, balls_R, W,
                           phis, h, good, kappa, betas, len(cand))


def _check_near(nu: DiscreteMeasure, support: DiscreteMeasure, what: str):
    diam = diameter(support)
    for x in nu.atoms:
        if np.min(_dists(support.atoms, x)) > diam:
            raise DecompositionError(
                f"nu atom {x.tolist()} lies outside N({what}, diam {what})")


def decompose(f: FunctionOnMeasure, nu: DiscreteMeasure, mu: DiscreteMeasure,
              gamma: DiscreteMeasure, params: DecompositionParams) -> CZDecomposition:
    """CZ decomposition of ``f nu`` at level ``params.lam`` against boundary ``gamma``."""
    if not (nu.is_positive and mu.is_positive and gamma.is_positive):
        raise MeasureError("nu, mu and the boundary measure must be positive")
    _check_near(nu, gamma, "Gamma")
    check_admissible(f, mu, params)
    return _assemble("boundary", f, nu, mu, gamma, params)


def unit_phase(w: np.ndarray) -> np.ndarray:
    """``w / |w|`` (0 where w = 0); a positive weight gets phase exactly 1."""
    mod = np.abs(w)
    safe = np.where(mod > 0, mod, 1.0)
    return np.where(mod > 0, w.real / safe + 1j * (w.imag / safe), 0j)


def decompose_measure(nu_complex: DiscreteMeasure, mu: DiscreteMeasure,
                      gamma: DiscreteMeasure, lam: float, d: int = 2) -> CZDecomposition:
    """Decomposition of a complex measure: ``f = phase`` on ``|nu|`` with p = 1."""
    phase = unit_phase(nu_complex.weights)
    absnu = nu_complex.abs
    f = FunctionOnMeasure(absnu, phase)
    dec = decompose(f, absnu, mu, gamma, DecompositionParams(lam, 1.0, d))
    return _replace_variant(dec, "measure")


def decompose_adregular(f: FunctionOnMeasure, nu: DiscreteMeasure, mu_adreg: DiscreteMeasure,
                        params: DecompositionParams) -> CZDecomposition:
    """Decomposition with an AD-regular mu playing the role of the boundary."""
    ad = ad_regularity_constants(mu_adreg, params.d - 1)
    if not ad.is_regular:
        raise DecompositionError(
            f"mu is not AD-regular: mu(B(x,r))/r^n = {ad.c_lower:.3g} at "
            f"x={ad.worst_point.tolist()}, r={ad.worst_radius:.6g}")
    if not nu.is_positive:
        raise MeasureError("nu must be positive")
    _check_near(nu, mu_adreg, "spt mu")
    check_admissible(f, mu_adreg, params)
    dec = _assemble("adregular", f, nu, mu_adreg, mu_adreg, params)
    return _replace_variant(dec, "adregular", ad_constants=(ad.c_lower, ad.c_upper))


def _replace_variant(dec: CZDecomposition, variant: str, **extras) -> CZDecomposition:
    from dataclasses import replace
    return replace(dec, variant=variant, extras={**dec.extras, **extras})


# ---------------------------------------------------------------------------
# choosing levels
# ---------------------------------------------------------------------------

def local_ratios(f: FunctionOnMeasure, nu: DiscreteMeasure, mu: DiscreteMeasure,
                 p: float = 1.0, d: int = 2) -> np.ndarray:
    """Per-atom level ``sup_r (2^(d+1) tau(B(x,r)) / mu(B(x,2r)))^(1/p)``.

    The sup runs over radii where ``mu(B(x, 2r)) > 0``; above that level an
    atom's stopping ball no longer reaches mu.
    """
    tau_w = np.abs(f.values) ** p * np.abs(nu.weights)
    mu_w = mu.real_weights
    out = np.zeros(len(nu))
    for i, x in enumerate(nu.atoms):
        dt = _dists(nu.atoms, x)
        dm = _dists(mu.atoms, x)
        bps = np.unique(np.r_[dt, dm / 2])
        mm = _step_masses(dm, mu_w, 2 * bps)
        tt = _step_masses(dt, tau_w, bps)
        pos = mm > 0
        out[i] = (2 ** (d + 1) * np.max(tt[pos] / mm[pos])) ** (1.0 / p) if pos.any() else 0.0
    return out


def level_at_percentile(f: FunctionOnMeasure, nu: DiscreteMeasure, mu: DiscreteMeasure,
                        percentile: float, p: float = 1.0, d: int = 2,
                        margin: float = 1.05) -> float:
    """Percentile of :func:`local_ratios`, raised to the admissibility floor if needed.

    Levels that coincide with an atom's ratio are nudged up by 1e-8 relative.
    """
    ratios = local_ratios(f, nu, mu, p, d)
    lam = max(float(np.percentile(ratios, percentile)), margin * admissibility_floor(f, mu, p, d))
    # a level equal to some atom's ratio puts cc1 on a rounding knife edge
    if ratios.size and np.min(np.abs(ratios / lam - 1.0)) < 1e-9:
        lam *= 1.0 + 1e-8
    return lam

"""Atomic measures and the geometric queries built on them.

A :class:`DiscreteMeasure` is a finite weighted point cloud in R^d. Weights
are stored as complex numbers so the same type can hold positive measures
and complex measures alike; positivity is a property that is checked, not a
separate type.

Balls are closed: an atom at distance exactly ``r`` from the center belongs
to ``B(x, r)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

# Dyadic radii are placed a hair below the lattice r0 * 2**k.  Lattice-aligned
# closed balls around equispaced atoms pick up the two boundary atoms whose
# cells lie only half inside the ball, which inflates ratios by a full cell.
GRID_SHRINK = 1.0 - 1e-9

# Above this many atoms the exact diameter falls back to the bounding box.
DIAMETER_EXACT_LIMIT = 100_000


class MeasureError(ValueError):
    """Raised for malformed measures or invalid measure queries."""


def _as_points(atoms, dim: int | None = None) -> np.ndarray:
    pts = np.asarray(atoms, dtype=float)
    if pts.ndim == 1:
        if pts.size == 0:
            pts = pts.reshape(0, dim or 2)
        else:
            pts = pts.reshape(1, -1)
    if pts.ndim != 2:
        raise MeasureError("atoms must be an (N, d) array")
    return pts


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise MeasureError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points, self.center.size)
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms ``sum_j w_j delta_{x_j}``.

    Arrays are copied and frozen on construction; atoms must be pairwise
    distinct and every coordinate and weight finite.
    """

    atoms: np.ndarray
    weights: np.ndarray
    dim: int = field(default=2)

    def __post_init__(self):
        pts = _as_points(self.atoms, self.dim).copy()
        w = np.asarray(self.weights, dtype=complex).reshape(-1).copy()
        if pts.shape[0] != w.shape[0]:
            raise MeasureError(
                f"{pts.shape[0]} atoms but {w.shape[0]} weights")
        object.__setattr__(self, "dim", int(pts.shape[1]))
        if self.dim < 2:
            raise MeasureError(f"ambient dimension must be >= 2, got {self.dim}")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("atom coordinates must be finite")
        if not np.all(np.isfinite(w)):
            raise MeasureError("weights must be finite")
        if pts.shape[0] > 1:
            uniq = np.unique(pts, axis=0)
            if uniq.shape[0] != pts.shape[0]:
                raise MeasureError("atoms must be pairwise distinct")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "atoms", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.atoms.shape[0]

    def __repr__(self) -> str:
        return (f"DiscreteMeasure(n_atoms={len(self)}, dim={self.dim}, "
                f"total_variation={total_variation(self):.6g})")

    @classmethod
    def empty(cls, dim: int = 2) -> "DiscreteMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0, dtype=complex), dim)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.weights.imag == 0) and np.all(self.weights.real >= 0))

    @property
    def real_weights(self) -> np.ndarray:
        """Weights as a real array; only valid for positive measures."""
        if not self.is_positive:
            raise MeasureError("measure is not positive")
        return self.weights.real.copy()

    @property
    def mass(self) -> complex:
        return complex(self.weights.sum())

    @property
    def abs(self) -> "DiscreteMeasure":
        """The variation measure |m|."""
        return DiscreteMeasure(self.atoms, np.abs(self.weights), self.dim)

    def with_weights(self, weights) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms, weights, self.dim)

    def scaled(self, factor: complex) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms, self.weights * factor, self.dim)

    def translated(self, vector) -> "DiscreteMeasure":
        v = np.asarray(vector, dtype=float).reshape(1, -1)
        return DiscreteMeasure(self.atoms + v, self.weights, self.dim)

    def transformed(self, matrix, vector=None) -> "DiscreteMeasure":
        """Apply ``x -> A x + v`` to every atom."""
        A = np.asarray(matrix, dtype=float)
        pts = self.atoms @ A.T
        if vector is not None:
            pts = pts + np.asarray(vector, dtype=float).reshape(1, -1)
        return DiscreteMeasure(pts, self.weights, self.dim)

    def tree(self) -> cKDTree:
        return _tree(self)


_TREES: dict[int, tuple[DiscreteMeasure, cKDTree]] = {}


def _tree(m: DiscreteMeasure) -> cKDTree:
    # Small identity-keyed cache; measures are immutable so a tree stays valid.
    hit = _TREES.get(id(m))
    if hit is not None and hit[0] is m:
        return hit[1]
    t = cKDTree(m.atoms)
    if len(_TREES) > 64:
        _TREES.clear()
    _TREES[id(m)] = (m, t)
    return t


@dataclass(frozen=True, eq=False)
class FunctionOnMeasure:
    """Values aligned index by index with the atoms of ``measure``."""

    measure: DiscreteMeasure
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1).copy()
        if v.shape[0] != len(self.measure):
            raise MeasureError(
                f"function has {v.shape[0]} values, measure has {len(self.measure)} atoms")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, measure: DiscreteMeasure, value: complex = 1.0) -> "FunctionOnMeasure":
        return cls(measure, np.full(len(measure), value, dtype=complex))

    def times_measure(self) -> DiscreteMeasure:
        """The measure ``f m``."""
        return self.measure.with_weights(self.values * self.measure.weights)

    def lp_norm(self, p: float) -> float:
        """``||f||_{L^p(|m|)}``."""
        w = np.abs(self.measure.weights)
        return float(np.sum(np.abs(self.values) ** p * w) ** (1.0 / p))


# ---------------------------------------------------------------------------
# basic functionals
# ---------------------------------------------------------------------------

def total_variation(m: DiscreteMeasure) -> float:
    return float(np.sum(np.abs(m.weights)))


def ball_mass(m: DiscreteMeasure, b: Ball) -> complex:
    if len(m) == 0:
        return 0j
    idx = _tree(m).query_ball_point(b.center, b.radius)
    return complex(m.weights[idx].sum()) if idx else 0j


def ball_masses(m: DiscreteMeasure, centers, radii) -> np.ndarray:
    """Vectorised ``ball_mass`` for many (center, radius) pairs.

    ``radii`` is either a scalar or one radius per center.
    """
    centers = _as_points(centers, m.dim)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (centers.shape[0],))
    out = np.zeros(centers.shape[0], dtype=complex)
    if len(m) == 0 or centers.shape[0] == 0:
        return out
    lists = _tree(m).query_ball_point(centers, radii)
    w = m.weights
    for i, idx in enumerate(lists):
        if idx:
            out[i] = w[idx].sum()
    return out


def restrict(m: DiscreteMeasure, pred: Callable[[np.ndarray], bool] | np.ndarray) -> DiscreteMeasure:
    """Keep the atoms satisfying ``pred``.

    ``pred`` may be a boolean mask over the atoms or a callable taking one
    point (or, if it accepts an array, all points at once).
    """
    if callable(pred):
        mask = np.array([bool(pred(x)) for x in m.atoms], dtype=bool)
    else:
        mask = np.asarray(pred, dtype=bool)
        if mask.shape != (len(m),):
            raise MeasureError("mask length must match the atom count")
    return DiscreteMeasure(m.atoms[mask], m.weights[mask], m.dim)


def neighborhood_contains(A, eps: float, x) -> bool:
    """Whether ``x`` lies in the closed neighborhood N(A, eps)."""
    pts = _as_points(A)
    if pts.shape[0] == 0:
        raise MeasureError("neighborhood of an empty set")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return bool(np.min(np.linalg.norm(pts - x, axis=1)) <= eps)


def diameter(m: DiscreteMeasure) -> float:
    """Max pairwise atom distance.

    Exact up to ``DIAMETER_EXACT_LIMIT`` atoms (via the convex hull when it
    exists, otherwise blockwise pairwise distances); the bounding-box
    diagonal, an upper bound, beyond that.
    """
    pts = m.atoms
    n = pts.shape[0]
    if n < 2:
        return 0.0
    if n > DIAMETER_EXACT_LIMIT:
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    cand = pts
    if n > 64:
        try:
            cand = pts[ConvexHull(pts).vertices]
        except (QhullError, ValueError):
            cand = pts
    best = 0.0
    block = 2048
    for s in range(0, cand.shape[0], block):
        d = np.linalg.norm(cand[s:s + block, None, :] - cand[None, :, :], axis=2)
        best = max(best, float(d.max()))
    return best


def nearest_neighbor_spacing(m: DiscreteMeasure) -> float:
    """Smallest distance between two distinct atoms (1.0 for a single atom)."""
    if len(m) < 2:
        return 1.0
    d, _ = _tree(m).query(m.atoms, k=2)
    return float(d[:, 1].min())


def dyadic_radii(m: DiscreteMeasure, upper: float | None = None) -> np.ndarray:
    """Radii ``s * 2**k`` (shrunk by GRID_SHRINK) from the NN spacing ``s``.

    The grid runs up to ``upper`` (default ``2 * diam``) and always holds at
    least one radius.
    """
    s = nearest_neighbor_spacing(m)
    if upper is None:
        upper = 2.0 * diameter(m)
    k_max = max(0, int(np.ceil(np.log2(max(upper, s) / s))))
    return s * GRID_SHRINK * 2.0 ** np.arange(k_max + 1)


def _ratio_table(m: DiscreteMeasure, n: float, radii: np.ndarray) -> np.ndarray:
    """``mu(B(x_i, r_k)) / r_k**n`` for every atom i and radius k."""
    w = m.real_weights
    tree = _tree(m)
    table = np.empty((len(m), radii.size))
    for k, r in enumerate(radii):
        lists = tree.query_ball_point(m.atoms, r)
        table[:, k] = [w[idx].sum() for idx in lists]
        table[:, k] /= r ** n
    return table


def _require_positive(m: DiscreteMeasure):
    if not m.is_positive:
        raise MeasureError("measure must be positive")


def growth_constant(m: DiscreteMeasure, n: float) -> float:
    """Sup of ``m(B(x, r)) / r**n`` over atoms x and the dyadic radius grid."""
    _require_positive(m)
    if len(m) == 0:
        raise MeasureError("empty support")
    radii = dyadic_radii(m)
    return float(_ratio_table(m, n, radii).max())


def growth_violation(m: DiscreteMeasure, n: float) -> tuple[float, int, float]:
    """The worst (ratio, atom index, radius) over the growth candidate set."""
    _require_positive(m)
    if len(m) == 0:
        raise MeasureError("empty support")
    radii = dyadic_radii(m)
    table = _ratio_table(m, n, radii)
    i, k = np.unravel_index(np.argmax(table), table.shape)
    return float(table[i, k]), int(i), float(radii[k])


class ADRegularity(NamedTuple):
    c_lower: float
    c_upper: float
    worst_point: np.ndarray
    worst_radius: float

    @property
    def is_regular(self) -> bool:
        return self.c_lower > 0


def ad_regularity_constants(m: DiscreteMeasure, n: float) -> ADRegularity:
    """Numerical lower/upper AD-regularity constants of a positive measure.

    The upper constant is :func:`growth_constant`; the lower one is the inf
    of the same ratio over grid radii not exceeding ``diam(spt m)``.  The
    point and radius realising the lower constant are returned as well.
    """
    _require_positive(m)
    if len(m) < 2:
        raise MeasureError("AD-regularity needs at least two atoms")
    diam = diameter(m)
    radii = dyadic_radii(m)
    table = _ratio_table(m, n, radii)
    lower_cols = radii <= diam
    if not lower_cols.any():
        lower_cols[0] = True
    sub = table[:, lower_cols]
    i, k = np.unravel_index(np.argmin(sub), sub.shape)
    return ADRegularity(float(sub[i, k]), float(table.max()),
                        m.atoms[i].copy(), float(radii[lower_cols][k]))


# ---------------------------------------------------------------------------
# combination
# ---------------------------------------------------------------------------

def combine(measures: Sequence[DiscreteMeasure], coefficients: Sequence[complex] | None = None,
            dim: int | None = None) -> DiscreteMeasure:
    """Linear combination of atomic measures, merging coincident atoms."""
    if coefficients is None:
        coefficients = [1.0] * len(measures)
    if dim is None:
        dim = measures[0].dim if measures else 2
    pts = [m.atoms for m in measures if len(m)]
    if not pts:
        return DiscreteMeasure.empty(dim)
    allp = np.concatenate(pts)
    allw = np.concatenate([m.weights * c for m, c in zip(measures, coefficients) if len(m)])
    uniq, inv = np.unique(allp, axis=0, return_inverse=True)
    w = np.zeros(uniq.shape[0], dtype=complex)
    np.add.at(w, inv.reshape(-1), allw)
    return DiscreteMeasure(uniq, w, dim)


def difference_variation(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """Total variation of ``a - b`` as atomic measures."""
    return total_variation(combine([a, b], [1.0, -1.0]))

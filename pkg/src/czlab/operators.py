"""Truncated singular integrals, weighted operator matrices and their norms.

The L^2(sigma) -> L^2(tau) norm of ``T_eps`` between two atomic measures is
exactly the largest singular value of

    A[i, j] = sqrt(tau_i) * k(x_i, y_j) * [|x_i - y_j| > eps] * sqrt(sigma_j),

rows indexed by target atoms x_i and columns by source atoms y_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _fastops
from .kernels import KernelSpec, pairwise_kernel
from .measures import DiscreteMeasure, FunctionOnMeasure, MeasureError

# Matrices with more entries than this are applied matrix-free.
MAX_DENSE_ENTRIES = 1 << 24

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000


class OperatorError(ValueError):
    pass


class NormConvergenceError(RuntimeError):
    def __init__(self, value: float, residual: float, iterations: int):
        super().__init__(
            f"power iteration did not converge in {iterations} iterations "
            f"(best estimate {value:.12g}, residual {residual:.3g})")
        self.value = value
        self.residual = residual
        self.iterations = iterations


class GrowthPreconditionError(ValueError):
    def __init__(self, x, r: float, ratio: float, c0: float):
        super().__init__(
            f"growth precondition fails at x={np.asarray(x).tolist()}, r={r:.6g}: "
            f"mu(B(x,r))/r^n = {ratio:.6g} > c0 = {c0:.6g}")
        self.x = np.asarray(x)
        self.r = r


def _check_planar(*points):
    for p in points:
        if p.shape[0] and p.shape[1] != 2:
            raise OperatorError("kernels are planar: points must lie in R^2")


def truncated_apply(k: KernelSpec, nu: DiscreteMeasure, X, eps: float) -> np.ndarray:
    """``T_eps nu(X_i) = sum_{|X_i - y_j| > eps} k(X_i, y_j) w_j``."""
    if not eps > 0:
        raise OperatorError("eps must be positive")
    return _apply(k, nu.atoms, nu.weights, np.asarray(X, dtype=float).reshape(-1, 2), eps)


def _apply(k: KernelSpec, src: np.ndarray, coef: np.ndarray, X: np.ndarray, eps: float) -> np.ndarray:
    _check_planar(src, X)
    out = np.zeros(X.shape[0], dtype=complex)
    if X.shape[0] == 0 or src.shape[0] == 0:
        return out
    tx, ty = _fastops.split_xy(X)
    sx, sy = _fastops.split_xy(src)
    _fastops.apply_rows(tx, ty, sx, sy, np.ascontiguousarray(coef, dtype=complex),
                        k.code, k.m, float(eps) ** 2, out)
    return out


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """The weighted matrix of ``T_eps: L^2(source) -> L^2(target)``.

    Small matrices are stored densely; large ones are applied on the fly
    with the compiled kernels, never materialised unless ``entries`` is
    requested explicitly.
    """

    kernel: KernelSpec
    source: DiscreteMeasure
    target: DiscreteMeasure
    eps: float
    dense: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.target), len(self.source)

    @property
    def is_dense(self) -> bool:
        return self.dense is not None

    @property
    def entries(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        return _dense_entries(self.kernel, self.source, self.target, self.eps)

    @property
    def _sqrt_src(self) -> np.ndarray:
        return np.sqrt(self.source.weights.real)

    @property
    def _sqrt_tgt(self) -> np.ndarray:
        return np.sqrt(self.target.weights.real)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ v
        out = np.zeros(self.shape[0], dtype=complex)
        if 0 in self.shape:
            return out
        tx, ty = _fastops.split_xy(self.target.atoms)
        sx, sy = _fastops.split_xy(self.source.atoms)
        coef = np.ascontiguousarray(self._sqrt_src * v, dtype=complex)
        _fastops.apply_rows(tx, ty, sx, sy, coef, self.kernel.code, self.kernel.m,
                            float(self.eps) ** 2, out)
        return self._sqrt_tgt * out

    def rmatvec(self, u: np.ndarray) -> np.ndarray:
        """Apply the conjugate transpose."""
        if self.dense is not None:
            return self.dense.conj().T @ u
        out = np.zeros(self.shape[1], dtype=complex)
        if 0 in self.shape:
            return out
        tx, ty = _fastops.split_xy(self.target.atoms)
        sx, sy = _fastops.split_xy(self.source.atoms)
        coef = np.ascontiguousarray(self._sqrt_tgt * u, dtype=complex)
        _fastops.apply_adjoint(tx, ty, sx, sy, coef,
                               _fastops.CONJUGATE_CODE[self.kernel.code], self.kernel.m,
                               float(self.eps) ** 2, out)
        return self._sqrt_src * out


def _dense_entries(k, source, target, eps) -> np.ndarray:
    _check_planar(source.atoms, target.atoms)
    X, Y = target.atoms, source.atoms
    K = pairwise_kernel(k, X, Y)
    diff = X[:, None, :] - Y[None, :, :]
    r2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
    K[r2 <= float(eps) ** 2] = 0
    return np.sqrt(target.weights.real)[:, None] * K * np.sqrt(source.weights.real)[None, :]


def assemble_matrix(k: KernelSpec, source: DiscreteMeasure, target: DiscreteMeasure,
                    eps: float, dense: bool | None = None) -> OperatorMatrix:
    """Weighted matrix of ``T_eps`` from L^2(source) to L^2(target).

    ``eps = 0`` excludes exact self-pairs only.  ``dense=None`` stores the
    entries when there are at most ``MAX_DENSE_ENTRIES`` of them.
    """
    for name, m in (("source", source), ("target", target)):
        if not m.is_positive or np.any(m.weights.real <= 0):
            raise MeasureError(f"{name} measure must have strictly positive weights")
    if eps < 0:
        raise OperatorError("eps must be nonnegative")
    if dense is None:
        dense = len(source) * len(target) <= MAX_DENSE_ENTRIES
    entries = _dense_entries(k, source, target, eps) if dense else None
    return OperatorMatrix(k, source, target, float(eps), entries)


class _ArrayOperator:
    def __init__(self, a):
        self.a = np.asarray(a, dtype=complex)
        self.shape = self.a.shape

    def matvec(self, v):
        return self.a @ v

    def rmatvec(self, u):
        return self.a.conj().T @ u


@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    residual: float
    seed: int = 0
    method: str = "power"


def _start_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _power(op, tol, max_iter, seed):
    v = _start_vector(op.shape[1], seed)
    theta, res = 0.0, np.inf
    for it in range(1, max_iter + 1):
        w = op.rmatvec(op.matvec(v))
        theta = float(np.vdot(v, w).real)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return NormEstimate(0.0, it, 0.0, seed)
        res = float(np.linalg.norm(w - theta * v) / theta)
        if res <= tol:
            return NormEstimate(float(np.sqrt(theta)), it, res, seed)
        v = w / wn
    return NormEstimate(float(np.sqrt(max(theta, 0.0))), max_iter, res, seed)


def _lanczos(op, tol, max_iter, seed):
    """Implicitly restarted Lanczos (ARPACK) on the Gram operator, same residual test."""
    from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

    n = op.shape[1]
    count = [0]

    def gram(v):
        count[0] += 1
        return op.rmatvec(op.matvec(np.asarray(v, dtype=complex).ravel()))

    G = LinearOperator((n, n), matvec=gram, dtype=complex)
    try:
        _, vecs = eigsh(G, k=1, which="LA", v0=_start_vector(n, seed), tol=tol * 1e-3,
                        maxiter=max_iter, ncv=min(n, 20))
    except ArpackNoConvergence as exc:
        if exc.eigenvectors.size == 0:
            return None
        vecs = exc.eigenvectors
    v = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
    w = gram(v)
    theta = float(np.vdot(v, w).real)
    if not theta > 0:
        return None
    res = float(np.linalg.norm(w - theta * v) / theta)
    return NormEstimate(float(np.sqrt(theta)), count[0], res, seed, "lanczos")


def operator_norm(B, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  seed: int = 0) -> NormEstimate:
    """Largest singular value by power iteration on the Gram operator ``B^H B``.

    Stops once ``||G v - theta v|| <= tol * theta`` for the Rayleigh
    quotient ``theta``; the returned value is ``sqrt(theta)``.  Power
    iteration stalls when the top two singular values nearly coincide; it
    then falls back to seeded Lanczos, certified by the same residual.
    """
    if not tol > 0:
        raise OperatorError("tol must be positive")
    op = B if hasattr(B, "matvec") else _ArrayOperator(B)
    nrows, ncols = op.shape
    if nrows == 0 or ncols == 0:
        return NormEstimate(0.0, 0, 0.0, seed)
    est = _power(op, tol, max_iter, seed)
    if est.residual <= tol:
        return est
    alt = _lanczos(op, tol, max_iter, seed) if ncols > 1 else None
    if alt is not None and alt.residual <= tol:
        return NormEstimate(alt.value, est.iterations + alt.iterations, alt.residual, seed,
                            "lanczos")
    raise NormConvergenceError(est.value, est.residual, max_iter)


def norm_record(B: OperatorMatrix, est: NormEstimate) -> dict:
    return {
        "kernel": B.kernel.label,
        "eps": B.eps,
        "n_source": B.shape[1],
        "n_target": B.shape[0],
        "value": est.value,
        "iterations": est.iterations,
        "residual": est.residual,
        "seed": est.seed,
        "method": est.method,
    }


# ---------------------------------------------------------------------------
# maximal operators
# ---------------------------------------------------------------------------

def _check_dim(d: int):
    if d < 2:
        raise OperatorError("ambient dimension d must be >= 2")


def radial_maximal_many(mu: DiscreteMeasure, f: FunctionOnMeasure, X, d: int,
                        q: float = 1.0) -> np.ndarray:
    """``sup_r (r^{1-d} int_{B(x,r)} |f|^q dmu)^{1/q}`` at every row of X.

    r -> int_{B(x,r)} is a right-continuous step function, so the sup is
    attained at the atom distances.  An atom with |f| > 0 sitting at x makes
    the value infinite.
    """
    _check_dim(d)
    X = np.asarray(X, dtype=float).reshape(-1, mu.dim)
    out = np.zeros(X.shape[0])
    if len(mu) == 0:
        return out
    if f.measure is not mu and len(f.values) != len(mu):
        raise MeasureError("f must be defined on mu")
    dens = np.abs(f.values) ** q * mu.real_weights
    for i, x in enumerate(X):
        dist = np.linalg.norm(mu.atoms - x, axis=1)
        order = np.argsort(dist, kind="stable")
        ds = dist[order]
        cums = np.cumsum(dens[order])
        # mass at radius ds[j] includes every atom tied with j
        last = np.r_[ds[1:] != ds[:-1], True]
        ds, cums = ds[last], cums[last]
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(ds > 0, cums * ds ** (1.0 - d), np.where(cums > 0, np.inf, 0.0))
        out[i] = float(vals.max()) ** (1.0 / q)
    return out


def radial_maximal(mu: DiscreteMeasure, f: FunctionOnMeasure, x, d: int = 2) -> float:
    if len(mu) == 0:
        return 0.0
    return float(radial_maximal_many(mu, f, np.asarray(x, dtype=float).reshape(1, -1), d)[0])


def q_radial_maximal(mu: DiscreteMeasure, f: FunctionOnMeasure, x, d: int = 2,
                     q: float = 2.0) -> float:
    if not q > 1:
        raise OperatorError("q must exceed 1")
    if len(mu) == 0:
        return 0.0
    return float(radial_maximal_many(mu, f, np.asarray(x, dtype=float).reshape(1, -1), d, q)[0])


# ---------------------------------------------------------------------------
# tail estimate for growth measures
# ---------------------------------------------------------------------------

class TailBound(NamedTuple):
    lhs: float
    bound: float
    ok: bool


def tail_constant(n: float, eta: float) -> float:
    """``c(n, eta) = 2^n / (1 - 2^-eta)`` from summing dyadic shells."""
    return 2.0 ** n / (1.0 - 2.0 ** (-eta))


def tail_growth_constant(mu: DiscreteMeasure, x, rho: float, n: float) -> tuple[float, float]:
    """Smallest c0 with ``mu(B(x,r)) <= c0 r^n`` for every r >= rho.

    Returns (c0, radius attaining it).  On [rho, inf) the ratio only jumps
    up at atom distances, so those and rho itself are the candidates.
    """
    w = mu.real_weights
    dist = np.linalg.norm(mu.atoms - np.asarray(x, dtype=float).reshape(1, -1), axis=1)
    cand = np.unique(np.r_[rho, dist[dist >= rho]])
    order = np.argsort(dist)
    ds, cums = dist[order], np.cumsum(w[order])
    idx = np.searchsorted(ds, cand, side="right")
    mass = np.where(idx > 0, cums[np.maximum(idx - 1, 0)], 0.0)
    ratios = mass / cand ** n
    j = int(np.argmax(ratios))
    return float(ratios[j]), float(cand[j])


def tail_bound_check(mu: DiscreteMeasure, x, rho: float, n: float, eta: float,
                     c0: float) -> TailBound:
    """Check ``int_{|y-x|>=rho} |y-x|^-(n+eta) dmu <= c(n,eta) c0 / rho^eta``."""
    if not rho > 0:
        raise OperatorError("rho must be positive")
    if not 0 < eta <= 1:
        raise OperatorError("eta must lie in (0, 1]")
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(mu) == 0:
        return TailBound(0.0, tail_constant(n, eta) * c0 / rho ** eta, True)
    ratio, r = tail_growth_constant(mu, x, rho, n)
    if ratio > c0:
        raise GrowthPreconditionError(x, r, ratio, c0)
    w = mu.real_weights
    dist = np.linalg.norm(mu.atoms - x, axis=1)
    far = dist >= rho
    lhs = float(np.sum(w[far] * dist[far] ** (-(n + eta))))
    bound = tail_constant(n, eta) * c0 / rho ** eta
    return TailBound(lhs, bound, lhs <= bound)

"""Compiled dense kernel sums.

Each output entry is accumulated by exactly one thread in a fixed order, so
results are bit-identical for any thread count.  A pair contributes iff
``|x - y|^2 > eps^2``; with ``eps = 0`` that drops exact self-pairs only.
"""

import numba
import numpy as np

numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


# conj(1/z) = z/|z|^2 and vice versa; cmpt is real.
CONJUGATE_CODE = {0: 1, 1: 0, 2: 2}


@numba.njit(inline="always")
def _kval(code, m, dx, dy):
    inv = 1.0 / (dx * dx + dy * dy)
    if code == 0:
        return complex(dx * inv, -dy * inv)
    if code == 1:
        return complex(dx * inv, dy * inv)
    return complex(dx ** (2 * m - 1) * inv ** m, 0.0)


@numba.njit(parallel=True, cache=True, fastmath=False)
def apply_rows(tx, ty, sx, sy, coef, code, m, eps2, out):
    """out[i] = sum_j k(t_i, s_j) coef[j] over pairs farther apart than eps."""
    nt = tx.shape[0]
    ns = sx.shape[0]
    for i in numba.prange(nt):
        acc = 0j
        xi = tx[i]
        yi = ty[i]
        for j in range(ns):
            dx = xi - sx[j]
            dy = yi - sy[j]
            if dx * dx + dy * dy > eps2:
                acc += _kval(code, m, dx, dy) * coef[j]
        out[i] = acc


@numba.njit(parallel=True, cache=True, fastmath=False)
def apply_adjoint(tx, ty, sx, sy, coef, code, m, eps2, out):
    """out[j] = sum_i conj(k(t_i, s_j)) coef[i] over pairs farther apart than eps.

    ``code`` must already be the conjugate kernel's code (see CONJUGATE_CODE).
    """
    nt = tx.shape[0]
    ns = sx.shape[0]
    for j in numba.prange(ns):
        acc = 0j
        xj = sx[j]
        yj = sy[j]
        for i in range(nt):
            dx = tx[i] - xj
            dy = ty[i] - yj
            if dx * dx + dy * dy > eps2:
                acc += _kval(code, m, dx, dy) * coef[i]
        out[j] = acc


def set_threads(n: int | None) -> int:
    """Set the worker thread count (None restores the maximum)."""
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if n is None else max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n


def split_xy(points: np.ndarray):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    return np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])

"""Planar Calderon-Zygmund convolution kernels.

Every kernel is complex-scalar valued and evaluated at ``z = x - y`` read as
a complex number.  The d = 2 Riesz kernel ``z/|z|^2`` is packed into one
complex value (the map R^2 -> C is an isometry), so the norm machinery stays
scalar.  Vector-valued Riesz kernels in d > 2 are not provided; a new kind
needs an entry in ``_KIND_CODES`` and a branch in ``kernel_from_diff`` and in
the compiled evaluator in :mod:`czlab._fastops`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

_KIND_CODES = {"cauchy": 0, "riesz": 1, "cmpt": 2}


class KernelError(ValueError):
    pass


def _default_constants(kind: str, m: int) -> tuple[float, float]:
    if kind in ("cauchy", "riesz"):
        # |1/a - 1/b| = |a-b|/(|a||b|) <= 2|x-x'|/|x-y|^2, once per term.
        return 4.0, 1.0
    # |grad K| <= sqrt(1 + (2m-1)^2)/|z|^2 and |xi| >= |x-y|/2 on the segment.
    return 8.0 * float(np.sqrt(1.0 + (2 * m - 1) ** 2)), 1.0


@dataclass(frozen=True)
class KernelSpec:
    """A 1-dimensional CZ kernel on the plane with declared constants."""

    kind: str = "cauchy"
    m: int = 1
    n: int = 1
    size_constant: float | None = None
    hoelder_exponent: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "cmpt" and self.m < 1:
            raise KernelError("cmpt kernel needs m >= 1")
        if self.n != 1:
            raise KernelError("only 1-dimensional kernels on the plane are supported")
        c, eta = _default_constants(self.kind, self.m)
        if self.size_constant is None:
            object.__setattr__(self, "size_constant", c)
        if self.hoelder_exponent is None:
            object.__setattr__(self, "hoelder_exponent", eta)
        if not 0 < self.hoelder_exponent <= 1:
            raise KernelError("Hoelder exponent must lie in (0, 1]")

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``cauchy``, ``riesz`` or ``cmpt:m``."""
        name, _, arg = text.strip().partition(":")
        if name == "cmpt":
            return cls("cmpt", m=int(arg or 1))
        if arg:
            raise KernelError(f"kernel {name!r} takes no parameter")
        return cls(name)

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def label(self) -> str:
        return f"cmpt:{self.m}" if self.kind == "cmpt" else self.kind

    def eval(self, x, y) -> complex:
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if x.size != 2 or y.size != 2:
            raise KernelError("planar kernels take points in R^2")
        if np.array_equal(x, y):
            raise KernelError("diagonal evaluation")
        return complex(kernel_from_diff(self, np.array([complex(*(x - y))]))[0])


def kernel_from_diff(k: KernelSpec, z: np.ndarray) -> np.ndarray:
    """Kernel values at complex differences ``z = x - y`` (vectorised).

    Entries with ``z == 0`` come back as 0; callers mask them anyway.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    # dividing by |z| twice avoids underflow of |z|^(2m) at tiny separations
    safe = np.where(r > 0, r, 1.0)
    u = z / safe
    if k.kind == "cauchy":
        out = np.conj(u) / safe
    elif k.kind == "riesz":
        out = u / safe
    else:
        out = (u.real ** (2 * k.m - 1) / safe).astype(complex)
    return np.where(r > 0, out, 0j)


def kernel_eval(k: KernelSpec, x, y) -> complex:
    return k.eval(x, y)


def pairwise_kernel(k: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Matrix ``K[i, j] = k(X_i, Y_j)`` (zero where the points coincide)."""
    zx = X[:, 0] + 1j * X[:, 1]
    zy = Y[:, 0] + 1j * Y[:, 1]
    return kernel_from_diff(k, zx[:, None] - zy[None, :])


class CZObservation(NamedTuple):
    c_size_observed: float
    c_hoelder_observed: float
    samples: int
    seed: int


def cz_constants(k: KernelSpec, samples: int, seed: int = 0) -> CZObservation:
    """Sampled lower bounds for the kernel's size and regularity constants.

    Draws triples (x, x', y) with ``|x - x'| <= |x - y| / 2`` and returns the
    largest observed ``|k(x,y)| |x-y|^n`` and
    ``(|k(x,y)-k(x',y)| + |k(y,x)-k(y,x')|) |x-y|^(n+eta) / |x-x'|^eta``.
    This can falsify a declared constant but never prove one.
    """
    if samples < 1:
        raise KernelError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n, eta = k.n, k.hoelder_exponent
    x = rng.uniform(-1, 1, size=(samples, 2))
    # log-uniform separations exercise every scale
    dist = 10.0 ** rng.uniform(-3, 1, size=samples)
    ang = rng.uniform(0, 2 * np.pi, size=samples)
    y = x - dist[:, None] * np.c_[np.cos(ang), np.sin(ang)]
    frac = rng.uniform(0, 1, size=samples) ** 0.5 * 0.5
    frac = np.where(frac > 0, frac, 0.5)
    ang2 = rng.uniform(0, 2 * np.pi, size=samples)
    xp = x + (frac * dist)[:, None] * np.c_[np.cos(ang2), np.sin(ang2)]

    def c(a):
        return a[:, 0] + 1j * a[:, 1]

    zx, zy, zxp = c(x), c(y), c(xp)
    kxy = kernel_from_diff(k, zx - zy)
    kxpy = kernel_from_diff(k, zxp - zy)
    kyx = kernel_from_diff(k, zy - zx)
    kyxp = kernel_from_diff(k, zy - zxp)
    r = np.abs(zx - zy)
    h = np.abs(zx - zxp)
    size = np.abs(kxy) * r ** n
    hold = (np.abs(kxy - kxpy) + np.abs(kyx - kyxp)) * r ** (n + eta) / h ** eta
    return CZObservation(float(size.max()), float(hold.max()), samples, seed)

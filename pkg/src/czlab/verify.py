"""Independent invariant checker for CZ decompositions.

Everything here is recomputed from the raw atoms with brute-force numpy
(explicit distance matrices, dictionary bookkeeping); nothing is borrowed
from the builder in :mod:`czlab.decomposition` except the result type.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CC2_ETAS = (2.5, 3.0, 4.0, 8.0)
OVERLAP_LIMIT = 20
CC4_TOL = 1e-12
REASSEMBLY_TOL = 1e-10


@dataclass
class Clause:
    passed: bool
    value: float = float("nan")
    detail: str = ""


@dataclass
class InvariantReport:
    variant: str
    lam: float
    p: float
    n_balls: int
    clauses: dict[str, Clause] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses.values())

    def failures(self) -> list[str]:
        return [f"{k}: {c.detail}" for k, c in self.clauses.items() if not c.passed]

    def constant(self, name: str) -> float:
        return self.clauses[name].value

    def add(self, name, passed, value=float("nan"), detail=""):
        self.clauses[name] = Clause(bool(passed), float(value), detail)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "lambda": self.lam, "p": self.p,
                "n_balls": self.n_balls, "passed": self.passed,
                "clauses": {k: {"passed": c.passed, "value": c.value, "detail": c.detail}
                            for k, c in self.clauses.items()}}

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {k} = {c.value:.6g} {c.detail}".rstrip()
                for k, c in self.clauses.items()]


def _dist_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def _closed_mass(dist_row: np.ndarray, w: np.ndarray, r: float) -> float:
    return float(w[dist_row <= r].sum())


def _key(pt) -> tuple:
    return tuple(float(c) for c in pt)


def _accumulate(store: dict, points, weights):
    for pt, w in zip(points, weights):
        k = _key(pt)
        store[k] = store.get(k, 0j) + complex(w)


def verify_decomposition(dec, f=None, nu=None, mu=None, gamma=None, params=None,
                         overlap_limit: int = OVERLAP_LIMIT) -> InvariantReport:
    """Re-derive every invariant of ``dec`` from its inputs.

    Inputs default to the ones stored on ``dec``; pass them explicitly to
    check a decomposition against data it was not built from.
    """
    f = dec.f if f is None else f
    nu = dec.nu if nu is None else nu
    mu = dec.mu if mu is None else mu
    gamma = dec.gamma if gamma is None else gamma
    params = dec.params if params is None else params
    lam, p, d = float(params.lam), float(params.p), int(params.d)
    rep = InvariantReport(dec.variant, lam, p, len(dec.balls_B))

    X = np.asarray(nu.atoms, dtype=float)
    Y = np.asarray(mu.atoms, dtype=float)
    G = np.asarray(gamma.atoms, dtype=float)
    fv = np.asarray(f.values, dtype=complex)
    nuw = np.asarray(nu.weights, dtype=complex)
    tau = np.abs(fv) ** p * np.abs(nuw)
    fnu = fv * nuw
    absf = np.abs(fv) * np.abs(nuw)
    muw = np.asarray(mu.weights).real
    gw = np.asarray(gamma.weights).real
    c = lam ** p / 2.0 ** (d + 1)
    n_gamma = G.shape[0]

    # admissibility
    floor = (2.0 ** (d + 1) * float(np.sum(tau)) / float(muw.sum())) ** (1 / p)
    rep.add("admissible", lam > floor, lam / floor if floor > 0 else np.inf,
            f"lambda / floor, floor = {floor:.6g}")

    D_xx = _dist_matrix(X, X)
    D_xy = _dist_matrix(X, Y) if Y.size else np.zeros((X.shape[0], 0))
    D_xg = _dist_matrix(X, G)
    D_gg = _dist_matrix(G, G)

    centers = [np.asarray(b.center, dtype=float) for b in dec.balls_B]
    radii = np.array([b.radius for b in dec.balls_B], dtype=float)
    cidx = np.asarray(dec.center_indices, dtype=int)

    # centers are atoms of nu
    ok = all(np.array_equal(X[i], ctr) for i, ctr in zip(cidx, centers)) and len(cidx) == len(centers)
    rep.add("centers_are_atoms", ok, len(centers))

    # cc1 / cc2
    worst1, worst2, bad1, bad2 = np.inf, 0.0, [], []
    grid = params.radius_grid
    for k, i in enumerate(cidx):
        r = radii[k]
        lhs = _closed_mass(D_xx[i], tau, r)
        rhs = c * _closed_mass(D_xy[i], muw, 2 * r)
        worst1 = min(worst1, lhs / rhs if rhs > 0 else np.inf)
        if not lhs > rhs:
            bad1.append(k)
        tests = [eta * r for eta in CC2_ETAS] if grid is None else [g for g in grid if g > 2 * r]
        for rr in tests:
            lhs2 = _closed_mass(D_xx[i], tau, rr)
            rhs2 = c * _closed_mass(D_xy[i], muw, 2 * rr)
            if rhs2 > 0:
                worst2 = max(worst2, lhs2 / rhs2)
            if lhs2 > rhs2:
                bad2.append((k, rr))
    rep.add("cc1", not bad1, worst1 if len(cidx) else np.inf,
            f"min tau(B)/(c mu(2B)); failing balls {bad1[:5]}" if bad1 else "min tau(B)/(c mu(2B))")
    rep.add("cc2", not bad2, worst2,
            f"max tau(eta B)/(c mu(2 eta B)); failing {bad2[:5]}" if bad2 else
            "max tau(eta B)/(c mu(2 eta B))")

    diam_g = float(D_gg.max()) if n_gamma > 1 else 0.0
    rmax = float(radii.max()) if radii.size else 0.0
    rep.add("radius_bound", rmax <= 3 * diam_g + 1e-12, rmax / diam_g if diam_g else 0.0,
            "max r(B) / diam(Gamma), must be <= 3")

    # classification: atoms without any ball in the cover must be truly good
    inB = np.zeros((len(centers), X.shape[0]), dtype=bool)
    for k, i in enumerate(cidx):
        inB[k] = D_xx[i] <= radii[k]
    count = inB.sum(axis=0)
    uncovered = np.nonzero(count == 0)[0]
    wrong = []
    for i in uncovered:
        cand = np.r_[0.0, D_xx[i], D_xy[i] / 2] if grid is None else np.asarray(grid)
        for r in cand:
            if _closed_mass(D_xx[i], tau, r) > c * _closed_mass(D_xy[i], muw, 2 * r):
                wrong.append(int(i))
                break
    rep.add("uncovered_are_good", not wrong, len(uncovered),
            f"atoms with a stopping ball left uncovered: {wrong[:5]}" if wrong else
            "number of uncovered atoms")

    # overlap at every atom of nu and Gamma and at every center
    probe = np.concatenate([X, G] + ([np.array(centers)] if centers else []))
    ov = 0
    if centers:
        Dpc = _dist_matrix(probe, np.array(centers))
        ov = int((Dpc <= radii[None, :]).sum(axis=1).max())
    rep.add("overlap", ov <= overlap_limit, ov, f"max sum of indicators, limit {overlap_limit}")

    # partition of unity
    W = np.asarray(dec.weights_w, dtype=float).reshape(len(centers), X.shape[0])
    Wref = np.where(count > 0, inB / np.maximum(count, 1), 0.0)
    werr = float(np.abs(W - Wref).max()) if W.size else 0.0
    colsum = W.sum(axis=0) if W.size else np.zeros(X.shape[0])
    serr = float(np.abs(colsum[count > 0] - 1).max()) if np.any(count > 0) else 0.0
    rep.add("partition", max(werr, serr) <= 1e-14, max(werr, serr), "max |w - w_ref|, |sum w - 1|")

    # phi: support, mass fraction, cc4
    run = np.zeros(n_gamma)
    cc4_err, supp_bad, half_bad, phase_bad = 0.0, [], [], []
    cc6 = 0.0
    for k, phi in enumerate(dec.phis):
        ctr, r = centers[k], radii[k]
        inR = np.sqrt(((G - ctr) ** 2).sum(axis=1)) <= 10 * r
        sup = np.asarray(phi.support_indices, dtype=int)
        if sup.size == 0 or not inR[sup].all():
            supp_bad.append(k)
        if gw[sup].sum() < 0.5 * gw[inR].sum():
            half_bad.append(k)
        vals = np.full(sup.size, complex(phi.alpha))
        if vals.size and np.ptp(np.angle(vals)) > 0:
            phase_bad.append(k)
        lhs = complex(np.sum(vals * gw[sup]))
        rhs = complex(np.sum(Wref[k] * fnu)) if Wref.size else 0j
        scale = max(float(np.sum(Wref[k] * absf)), 1e-300)
        cc4_err = max(cc4_err, abs(lhs - rhs) / scale)
        run[sup] += abs(phi.alpha)
        mass_b = float(np.sum(absf[inB[k]]))
        if dec.variant == "adregular":
            size = float(muw[np.sqrt(((Y - ctr) ** 2).sum(axis=1)) <= 10 * r].sum())
        else:
            size = (10 * r) ** (d - 1)
        if mass_b > 0:
            cc6 = max(cc6, abs(phi.alpha) * size / mass_b)
    rep.add("phi_count", len(dec.phis) == len(centers), len(dec.phis))
    rep.add("phi_support", not supp_bad, len(supp_bad), "support in R_i and nonempty")
    rep.add("phi_half_mass", not half_bad, len(half_bad), "Gamma(A_i) >= Gamma(R_i)/2")
    rep.add("phi_constant_phase", not phase_bad, len(phase_bad))
    rep.add("cc4", cc4_err <= CC4_TOL, cc4_err, f"relative error, tolerance {CC4_TOL:g}")
    c1 = float(run.max()) / lam if n_gamma else 0.0
    rep.add("cc5", np.isfinite(c1), c1, "c1 = max sum |phi_i| / lambda")
    rep.add("cc6", np.isfinite(cc6), cc6,
            "max |alpha_i| mu(R_i) / int_B |f| dnu" if dec.variant == "adregular"
            else "max |alpha_i| r(R_i)^(d-1) / int_B |f| dnu")

    # h: nearest boundary atom of each uncovered atom
    Dug = D_xg[uncovered]
    h_ref = np.zeros(n_gamma, dtype=complex)
    for row, i in zip(Dug, uncovered):
        j = int(np.flatnonzero(row == row.min())[0])
        h_ref[j] += fnu[i]
    h_ref = h_ref / gw
    h = np.asarray(dec.good_density.values, dtype=complex)
    herr = float(np.abs(h - h_ref).max()) if n_gamma else 0.0
    hscale = max(float(np.abs(h_ref).max()) if n_gamma else 0.0, 1e-300)
    rep.add("h_projection", herr <= 1e-12 * hscale + 1e-300, herr, "max |h - h_ref|")
    rep.add("cc3", np.isfinite(h).all(), float(np.abs(h).max()) / lam if n_gamma else 0.0,
            "||h||_inf / lambda")

    # betas: zero integral, support in R_i
    b_int, b_out = 0.0, []
    for k, beta in enumerate(dec.betas):
        wts = np.asarray(beta.weights, dtype=complex)
        pts = np.asarray(beta.atoms, dtype=float)
        scale = max(float(np.sum(Wref[k] * absf)), 1e-300)
        b_int = max(b_int, abs(complex(wts.sum())) / scale)
        if pts.size and np.any(np.sqrt(((pts - centers[k]) ** 2).sum(axis=1)) > 10 * radii[k]):
            b_out.append(k)
    rep.add("beta_zero_integral", b_int <= CC4_TOL, b_int, "max |int beta_i| / int_B |f| dnu")
    rep.add("beta_support", not b_out and len(dec.betas) == len(centers), len(b_out),
            "betas supported in R_i")

    # reassembly: kappa + sum beta = f nu on the balls plus projected remainder
    lhs: dict = {}
    _accumulate(lhs, dec.kappa.atoms, dec.kappa.weights)
    for beta in dec.betas:
        _accumulate(lhs, beta.atoms, beta.weights)
    rhs: dict = {}
    cov = count > 0
    _accumulate(rhs, X[cov], fnu[cov])
    _accumulate(rhs, G, h_ref * gw)
    keys = set(lhs) | set(rhs)
    resid = sum(abs(lhs.get(k_, 0j) - rhs.get(k_, 0j)) for k_ in keys)
    total = float(np.abs(fnu).sum())
    rel = resid / total if total > 0 else resid
    rep.add("reassembly", rel <= REASSEMBLY_TOL, rel, "TV residual / ||f nu||")
    tot_err = abs(sum(lhs.values()) - complex(fnu.sum()))
    rep.add("total_mass", tot_err <= REASSEMBLY_TOL * max(total, 1e-300), tot_err)
    return rep

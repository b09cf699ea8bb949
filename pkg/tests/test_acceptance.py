"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line with the measured
numbers, visible even under output capture.
"""

import numpy as np
import pytest

from czlab.experiments import (cross_norm_failure, decomposition_suite, maximal_refinement,
                               norm_growth, scaling_identities, tail_lemma_suite, weak_type_suite)
from czlab.geometry import cantor_measure
from czlab.kernels import KernelSpec
from czlab.operators import assemble_matrix, operator_norm


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
    return emit


def test_criterion_1_scaling_identities(report):
    rec = scaling_identities(cantor_measure(3), [0.5, 2.0, 4.0, 10.0], threshold=1e-9)
    dev = rec.results["max_relative_deviation"]
    ok = dev <= 1e-9
    report(1, "scaling identities", ok, f"max relative deviation {dev:.3g} (limit 1e-9)")
    assert ok


@pytest.mark.slow
def test_criterion_2_norm_growth(report):
    rec = norm_growth(range(2, 8), reps=1)
    fit = rec.fits
    norms = ", ".join(f"{r['norm']:.4f}" for r in rec.rows)
    ok = 0.35 <= fit["slope"] <= 0.65
    report(2, "Cantor norm growth", ok,
           f"slope {fit['slope']:.4f} in [0.35, 0.65], rms residual {fit['residual_rms']:.3g}, "
           f"norms {norms}")
    assert ok


def test_criterion_3_cross_norm(report):
    rec = cross_norm_failure([1, 2, 3, 4, 5])
    margins = [r["cross_norm"] - r["lower_bound"] for r in rec.rows]
    cross = [r["cross_norm"] for r in rec.rows]
    ok = all(m >= -1e-6 for m in margins) and all(b >= a for a, b in zip(cross, cross[1:]))
    report(3, "cross-norm lower bound", ok,
           f"cross norms {', '.join(f'{c:.6f}' for c in cross)}; "
           f"min margin over N^(-1/4)||C_sN|| {min(margins):.3g}")
    assert ok


def test_criterion_4_svd_agreement(report):
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng([seed, 2718])
        m, n = rng.integers(1, 257, size=2)
        A = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        got = operator_norm(A, seed=seed).value
        want = np.linalg.svd(A, compute_uv=False)[0]
        worst = max(worst, abs(got / want - 1))
    s = cantor_measure(2)
    B = assemble_matrix(KernelSpec(), s, s, 0.0)
    want = np.linalg.svd(B.entries, compute_uv=False)[0]
    cantor_err = abs(operator_norm(B).value / want - 1)
    worst = max(worst, cantor_err)
    ok = worst <= 1e-6
    report(4, "SVD oracle agreement", ok,
           f"worst relative error {worst:.3g} over 50 random matrices and stage-2 Cantor "
           f"({cantor_err:.3g}); limit 1e-6")
    assert ok


def test_criterion_5_decomposition_suite(report):
    rec = decomposition_suite(range(1, 101))
    r = rec.results
    w = r["worst"]
    ok = (r["n_failed"] == 0 and w["cc4"] <= 1e-12 and w["reassembly"] <= 1e-10
          and w["overlap"] <= 20 and r["c1_spread_max"] <= 2.0)
    report(5, "CZ decomposition invariants", ok,
           f"{r['n_runs']} runs, {r['n_failed']} failed; worst cc4 {w['cc4']:.2g}, "
           f"reassembly {w['reassembly']:.2g}, overlap {w['overlap']:.0f}; "
           f"max c1 spread {r['c1_spread_max']:.3f} (limit 2)")
    assert ok


def test_criterion_6_weak_type(report):
    rec = weak_type_suite(range(1, 101), p_values=(1.0, 2.0))
    v = rec.results["max_variation"]
    diag = "; ".join(f"{k}: max {d['max_variation']:.2f}"
                     for k, d in rec.results["diagnostics"].items())
    ok = v <= 2.0
    report(6, "weak-type uniformity in eps", ok,
           f"max variation {v:.3f} over {len(rec.rows)} scans (limit 2); "
           f"ungated diagnostics {diag}")
    assert ok


def test_criterion_7_tail_lemma(report):
    rec = tail_lemma_suite(1000)
    r = rec.results
    ok = r["failures"] == 0
    report(7, "tail estimate", ok,
           f"{r['failures']} failures in 1000 triples, max lhs/bound {r['max_lhs_over_bound']:.3f}")
    assert ok


@pytest.mark.parametrize("q", [None, 1.5], ids=["M_R", "M_R_q1.5"])
def test_criterion_8_maximal(report, q):
    rec = maximal_refinement(range(1, 21), p=2.0, q=q)
    r = rec.results
    ok = r["all_finite"] and r["max_variation"] <= 2.0
    report(8, f"maximal bound under refinement (q = {q})", ok,
           f"finite {r['all_finite']}, max variation {r['max_variation']:.3f} (limit 2)")
    assert ok

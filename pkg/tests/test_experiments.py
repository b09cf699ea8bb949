import json

import numpy as np
import pytest

from czlab.experiments import (ExperimentError, ExperimentRecord, cantor_norm, cross_norm_failure,
                               decomposition_suite, default_eps_grid, loglog_fit,
                               maximal_bound_check, maximal_refinement, norm_growth,
                               scaling_identities, separation, smooth_function, tail_lemma_suite,
                               tail_triple, weak_type_scan, weak_type_suite)
from czlab.geometry import cantor_measure, section5_measures
from czlab.kernels import KernelSpec
from czlab.measures import FunctionOnMeasure, growth_constant
from czlab.operators import assemble_matrix, operator_norm


def test_loglog_fit_exact_power():
    x = np.arange(2, 8)
    fit = loglog_fit(x, 3 * x ** 0.5)
    assert fit["slope"] == pytest.approx(0.5, abs=1e-12)
    assert fit["residual_rms"] < 1e-12
    with pytest.raises(ExperimentError):
        loglog_fit([1], [1])


def test_cantor_norm_stage1_positive():
    assert cantor_norm(1)["norm"] > 0


def test_cantor_norm_stage2_matches_svd():
    row = cantor_norm(2, tol=1e-12)
    s = cantor_measure(2)
    A = assemble_matrix(KernelSpec(), s, s, row["eps"]).entries
    assert row["norm"] == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-6)


def test_cantor_norm_budget():
    with pytest.raises(ExperimentError):
        cantor_norm(8)


def test_norm_growth_small_stages():
    rec = norm_growth(range(1, 5))
    norms = [r["norm"] for r in rec.rows]
    assert all(b > a for a, b in zip(norms, norms[1:]))
    assert "slope" in rec.fits


def test_norm_growth_reps_stable():
    one = norm_growth(range(2, 5), reps=1)
    two = norm_growth(range(2, 5), reps=2)
    for a, b in zip(one.rows, two.rows):
        assert abs(b["norm"] / a["norm"] - 1) <= 0.25


def test_scaling_identity_at_one(cantor2):
    rec = scaling_identities(cantor2, [1.0], tol=1e-12)
    assert rec.results["max_relative_deviation"] <= 1e-12


def test_scaling_identity_stage2(cantor2):
    rec = scaling_identities(cantor2, [4.0], tol=1e-12, translation=(2.5, -1.0))
    assert rec.passed
    assert rec.results["translation_deviation"] <= 1e-9


def test_cross_norm_N1_equals_sigma1():
    rec = cross_norm_failure([1])
    c = section5_measures(1)
    own = operator_norm(assemble_matrix(KernelSpec(), c.sigma[0], c.sigma[0], 0)).value
    assert rec.rows[0]["cross_norm"] == pytest.approx(own, rel=1e-7)


def test_cross_norm_small():
    rec = cross_norm_failure([1, 2, 3])
    assert rec.passed
    for row in rec.rows:
        assert row["cross_norm"] >= row["lower_bound"] - 1e-6
        assert row["block_norm"] == pytest.approx(row["lower_bound"], rel=1e-6)


def test_separation_and_grid(halfplane1):
    d = separation(halfplane1.mu, halfplane1.nu)
    grid = default_eps_grid(halfplane1.mu, halfplane1.nu)
    assert d > 0
    np.testing.assert_allclose(grid, d * 2.0 ** -np.arange(5))


def test_weak_type_zero(halfplane1):
    f = FunctionOnMeasure.constant(halfplane1.nu, 0.0)
    rec = weak_type_scan(halfplane1.mu, halfplane1.nu, f, 1.0)
    assert rec.results["W_sup"] == 0
    assert all(r["W"] == 0 for r in rec.rows)


def test_weak_type_oracle(halfplane1):
    # W at a single eps and lambda straight from the definition
    sc = halfplane1
    f = FunctionOnMeasure(sc.nu, np.cos(np.arange(len(sc.nu))))
    eps, lam = 0.05, 0.3
    rec = weak_type_scan(sc.mu, sc.nu, f, 2.0, [eps], lambda_grid=[lam])
    z = sc.mu.atoms[:, 0] + 1j * sc.mu.atoms[:, 1]
    w = sc.nu.atoms[:, 0] + 1j * sc.nu.atoms[:, 1]
    diff = z[:, None] - w[None]
    K = np.where(np.abs(diff) > eps, np.conj(diff) / np.abs(diff) ** 2, 0)
    T = K @ (f.values * sc.nu.weights)
    want = lam ** 2 * sc.mu.weights.real[np.abs(T) > lam].sum() / f.lp_norm(2) ** 2
    assert rec.rows[0]["W"] == pytest.approx(want, rel=1e-12)


def test_weak_type_suite_small():
    rec = weak_type_suite(range(1, 4), diagnostic_anchors=())
    assert rec.passed
    assert len(rec.rows) == 2 * 3 * 2


def test_maximal_zero(halfplane1):
    sc = halfplane1
    rec = maximal_bound_check(sc.mu, sc.nu, FunctionOnMeasure.constant(sc.mu, 0.0), 2.0)
    assert rec.results["lhs"] == 0 and rec.results["rhs"] == 0


def test_maximal_q1_reduction(halfplane1):
    sc = halfplane1
    f = smooth_function(sc.mu, 1)
    a = maximal_bound_check(sc.mu, sc.nu, f, 2.0)
    b = maximal_bound_check(sc.mu, sc.nu, f, 2.0, q=1.0)
    assert a.results["ratio"] == pytest.approx(b.results["ratio"], rel=1e-14)


def test_maximal_guards(halfplane1):
    sc = halfplane1
    f = smooth_function(sc.mu, 1)
    with pytest.raises(ExperimentError):
        maximal_bound_check(sc.mu, sc.nu, f, 1.0)
    with pytest.raises(ExperimentError):
        maximal_bound_check(sc.mu, sc.nu, f, 2.0, q=2.0)


def test_maximal_refinement_small():
    rec = maximal_refinement(range(1, 4), p=2.0, q=1.5)
    assert rec.passed and rec.results["all_finite"]


def test_tail_triples_have_growth():
    for s in range(12):
        mu, x, rho, eta = tail_triple(s)
        assert growth_constant(mu, 1) <= 2.0 + 1e-12
        assert rho > 0 and 0 < eta <= 1


def test_tail_suite_small():
    rec = tail_lemma_suite(60)
    assert rec.passed and rec.results["max_lhs_over_bound"] <= 1


def test_decomposition_suite_small():
    rec = decomposition_suite(range(1, 3))
    assert rec.results["n_failed"] == 0
    assert rec.results["worst"]["cc4"] <= 1e-12


def test_replay_determinism(tmp_path):
    a = tail_lemma_suite(20)
    b = tail_lemma_suite(20)
    assert a.to_json() == b.to_json()
    csv_path, json_path = a.write(tmp_path)
    loaded = json.loads(json_path.read_text())
    assert loaded["results"] == json.loads(b.to_json())["results"]
    assert csv_path.read_text().count("\n") == 21


def test_record_handles_complex(tmp_path):
    rec = ExperimentRecord("demo", {"z": 1 + 2j}, {"v": np.float64(1.5)},
                           [{"a": 1j, "b": [1, 2]}], passed=True)
    csv_path, json_path = rec.write(tmp_path)
    assert json.loads(json_path.read_text())["passed"] is True
    assert "1 2" in csv_path.read_text()

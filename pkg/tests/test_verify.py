from dataclasses import replace

import numpy as np
import pytest

from czlab.decomposition import DecompositionParams, decompose, level_at_percentile
from czlab.measures import Ball, DiscreteMeasure, FunctionOnMeasure
from czlab.verify import InvariantReport, verify_decomposition


@pytest.fixture
def dec(halfplane1):
    sc = halfplane1
    f = FunctionOnMeasure(sc.nu, np.linspace(0.5, 2.0, len(sc.nu)))
    lam = level_at_percentile(f, sc.nu, sc.mu, 85, 2.0)
    return decompose(f, sc.nu, sc.mu, sc.boundary_measure, DecompositionParams(lam, 2.0))


def _failed(rep):
    return [c.split(":")[0] for c in rep.failures()]


def test_clean_run_passes(dec):
    rep = verify_decomposition(dec)
    assert rep.passed, rep.failures()
    for name in ("cc1", "cc2", "cc3", "cc4", "cc5", "cc6", "overlap", "reassembly"):
        assert name in rep.clauses


def test_doubled_alpha_flags_cc4(dec):
    phis = list(dec.phis)
    phis[-1] = replace(phis[-1], alpha=2 * phis[-1].alpha)
    assert "cc4" in _failed(verify_decomposition(replace(dec, phis=phis)))


def test_shrunken_ball_flags_maximality(dec):
    balls = list(dec.balls_B)
    balls[-1] = Ball(balls[-1].center, balls[-1].radius * 1e-3)
    rep = verify_decomposition(replace(dec, balls_B=balls))
    assert not rep.passed


def test_wrong_level_flags_cc1(dec):
    params = DecompositionParams(dec.params.lam * 50, dec.params.p)
    assert "cc1" in _failed(verify_decomposition(dec, params=params))


def test_dropped_beta_flags_reassembly(dec):
    rep = verify_decomposition(replace(dec, betas=dec.betas[:-1]))
    assert "reassembly" in _failed(rep)


def test_empty_decomposition_vacuous():
    x = (np.arange(8) + 0.5) / 8
    gamma = DiscreteMeasure(np.c_[x, np.zeros(8)], np.full(8, 1 / 8))
    pts = np.array([[0.3, -0.2], [0.6, -0.4]])
    nu = DiscreteMeasure(pts, [0.1, 0.1])
    mu = DiscreteMeasure(pts, [1.0, 1.0])
    f = FunctionOnMeasure.constant(nu)
    dec = decompose(f, nu, mu, gamma, DecompositionParams(1e4))
    assert dec.n_balls == 0
    rep = verify_decomposition(dec)
    assert rep.passed
    assert rep.constant("reassembly") == 0.0


def test_report_serialisation(dec):
    rep = verify_decomposition(dec)
    d = rep.to_dict()
    assert d["passed"] is True and "cc5" in d["clauses"]
    lines = rep.lines()
    assert any(line.startswith("PASS cc4") for line in lines)
    assert isinstance(rep, InvariantReport)

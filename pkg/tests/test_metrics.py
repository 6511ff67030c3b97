import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldm.banded import truncate
from ldm.bregman import SolverConfig, solve
from ldm.dense_reference import fermi_dirac_density_matrix, projector_density_matrix
from ldm.errors import DegenerateProblemError, ParameterError
from ldm.metrics import (
    BoundCheck,
    check_thm1,
    check_thm2,
    compare,
    fit_loglog_slope,
    scaling_study,
)

from conftest import gapped_hamiltonian, random_sym


def test_compare_self_is_zero(rng):
    H = gapped_hamiltonian(rng, 12, 4)
    P = projector_density_matrix(H, 4)
    rec = compare(P, P, H, math.inf, 10.0, 3)
    assert rec.rel_trace_energy_err == 0
    assert rec.rel_total_energy_err == 0
    assert rec.rel_frob_dist == 0
    assert rec.rel_band_dist == pytest.approx(rec.rel_trunc_dist)
    assert rec.flags == []
    assert rec.n == 12 and rec.N == pytest.approx(4)


def test_compare_hand_example():
    H = np.diag([1.0, 2.0, 3.0])
    P = np.diag([1.0, 0.0, 0.0])
    Pw = np.array([[0.9, 0.1, 0.0], [0.1, 0.1, 0.0], [0.0, 0.0, 0.0]])
    rec = compare(P, Pw, H, math.inf, 10.0, 1)
    # tr(HP) = 1, tr(HPw) = 0.9 + 0.2; E adds |||.|||_1 / 10 (1 and 1.2)
    assert rec.rel_trace_energy_err == pytest.approx(0.1, abs=1e-14)
    assert rec.rel_total_energy_err == pytest.approx(0.12 / 1.1, abs=1e-14)
    # every entry of a 3x3 matrix is within cyclic distance 1
    assert rec.rel_trunc_dist == 0
    assert rec.rel_frob_dist == pytest.approx(0.2, abs=1e-14)


def test_compare_truncation_ratio():
    n = 6
    P = np.eye(n)
    P[0, 3] = P[3, 0] = 1.0
    rec = compare(P, truncate(P, 2), np.eye(n), math.inf, 1.0, 2)
    assert rec.rel_trunc_dist == pytest.approx(math.sqrt(2 / 8))
    assert rec.rel_band_dist == 0
    assert rec.rel_frob_dist == pytest.approx(rec.rel_trunc_dist)


def test_compare_zero_denominator_is_flagged():
    n = 4
    rec = compare(np.zeros((n, n)), np.eye(n), np.eye(n), math.inf, 1.0, 1)
    for name in ("rel_trace_energy_err", "rel_total_energy_err", "rel_trunc_dist", "rel_frob_dist"):
        assert math.isnan(getattr(rec, name))
        assert name in rec.flags


def test_compare_shape_mismatch(rng):
    with pytest.raises(ParameterError):
        compare(np.eye(4), np.eye(5), np.eye(4), math.inf, 1.0, 1)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 12), seed=st.integers(0, 2**31 - 1))
def test_compare_fields_nonnegative_and_frob_numerator_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    A, B, H = random_sym(rng, n), random_sym(rng, n), random_sym(rng, n)
    ab = compare(A, B, H, 1.0, 10.0, n // 2 - (n > 3))
    ba = compare(B, A, H, 1.0, 10.0, n // 2 - (n > 3))
    for rec in (ab, ba):
        for name in ("rel_trace_energy_err", "rel_total_energy_err", "rel_trunc_dist", "rel_frob_dist"):
            assert getattr(rec, name) >= 0
    num_ab = ab.rel_frob_dist * np.linalg.norm(A)
    num_ba = ba.rel_frob_dist * np.linalg.norm(B)
    assert num_ab == pytest.approx(num_ba, rel=1e-12)


def test_bound_check_slack():
    b = BoundCheck("x", 1.0, 2.0)
    assert b.slack == 1.0 and b.holds
    assert not BoundCheck("x", 2.0, 1.0).holds
    assert BoundCheck("x", 1.0 + 1e-12, 1.0, atol=1e-10).holds
    assert b.to_dict()["slack"] == 1.0


def test_thm1_checks_hold_for_weak_regularization(rng):
    H = gapped_hamiltonian(rng, 10, 3)
    cfg = SolverConfig(eta=1e8, N=3)
    rep = solve("alg1", H, cfg)
    # the iterate is feasible only to the stopping tolerance
    atol = np.linalg.norm(H) * cfg.tolerance(False) * max(1.0, np.linalg.norm(rep.P))
    checks = check_thm1(H, 3, 1e8, rep.P, atol=atol)
    assert [c.name for c in checks] == ["thm1_energy_lower", "thm1_energy_upper", "thm1_frobenius"]
    assert all(c.holds for c in checks)
    assert abs(checks[1].lhs) < atol


def test_thm1_checks_hold_at_moderate_eta(rng):
    H = gapped_hamiltonian(rng, 14, 5)
    rep = solve("alg1", H, SolverConfig(eta=5.0, N=5))
    assert rep.converged
    assert all(c.holds for c in check_thm1(H, 5, 5.0, rep.P))


def test_thm1_exact_projector_has_zero_lhs(rng):
    H = gapped_hamiltonian(rng, 10, 4)
    P = projector_density_matrix(H, 4)
    lower, upper, frob = check_thm1(H, 4, 10.0, P)
    assert lower.rhs == pytest.approx(0, abs=1e-12)
    assert frob.lhs == pytest.approx(0, abs=1e-20)
    assert upper.rhs > 0


def test_thm1_degenerate_gap_is_an_error():
    with pytest.raises(DegenerateProblemError):
        check_thm1(np.diag([1.0, 2.0, 2.0, 3.0]), 2, 10.0, np.diag([1.0, 0.5, 0.5, 0.0]))


def test_thm2_checks_hold(rng):
    H = gapped_hamiltonian(rng, 10, 3)
    for eta in (1e8, 10.0):
        cfg = SolverConfig(eta=eta, beta=1.0, N=3)
        rep = solve("alg2", H, cfg)
        assert rep.converged
        atol = np.linalg.norm(H) * cfg.tolerance(False) * max(1.0, np.linalg.norm(rep.P))
        checks = check_thm2(H, 3, 1.0, eta, rep.P, atol=atol)
        assert [c.name for c in checks] == ["thm2_energy_lower", "thm2_energy_upper", "thm2_weighted", "thm2_frobenius"]
        assert all(c.holds for c in checks), [c.to_dict() for c in checks]


def test_thm2_reference_has_zero_distance(rng):
    H = gapped_hamiltonian(rng, 8, 3)
    P, _ = fermi_dirac_density_matrix(H, 2.0, 3)
    checks = check_thm2(H, 3, 2.0, 10.0, P)
    assert checks[0].rhs == pytest.approx(0, abs=1e-12)
    assert checks[2].lhs == pytest.approx(0, abs=1e-20)


def test_fit_loglog_slope():
    n = np.array([100, 200, 400, 800])
    assert fit_loglog_slope(n, 3e-9 * n**3) == pytest.approx(3.0)
    assert fit_loglog_slope(n, 5e-4 * n) == pytest.approx(1.0)


def test_scaling_study_rejects_unsorted_sizes():
    with pytest.raises(ParameterError):
        scaling_study("alg4", [200, 100])


def test_scaling_study_unknown_kind():
    with pytest.raises(ParameterError):
        scaling_study("alg9", [100])


def test_scaling_study_reports_one_row_per_size():
    res = scaling_study("et_cheby", [100, 200], SolverConfig(w=3, m_et=10), warmup=1, repeats=2)
    assert res.sizes == [100, 200]
    assert len(res.rows()) == 2
    assert all(t > 0 for t in res.t_median)
    assert math.isfinite(res.slope)


def test_operation_count_doubles_with_n():
    res = scaling_study("alg4", [200, 400], SolverConfig(w=5, m_et=10), warmup=1, repeats=1)
    assert res.ops[1] >= 2 * res.ops[0]

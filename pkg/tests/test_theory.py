import math

import numpy as np
import pytest

from ratiosparse.core import RatioParams
from ratiosparse.theory import (TheoryInput, gnrc, uniform_gnrc_bound,
                                local_optimality_nsp_bound, zero_point,
                                ric_threshold_new, ric_threshold_zhu,
                                error_bound_new, error_bound_zhu,
                                riprop_constants, riponly_constants,
                                bound_report, worst_case_beta, exact_ric,
                                nullspace_ratio_estimate,
                                check_uniform_recovery_condition,
                                uniform_recovery_threshold,
                                theta_from_ric, GuaranteeNotApplicable)

P12 = RatioParams(1.0, 2.0)

SWEEP_GRID = [(p, q, k, beta_mode)
              for p in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
              for q in (1.2, 1.6, 2.0, 2.5, 3.0)
              for k in (1, 4, 16)
              for beta_mode in ("one", "worst")]


def sweep_input(p, q, k, beta_mode, **kw):
    params = RatioParams(p, q)
    beta = 1.0 if beta_mode == "one" else worst_case_beta(params, k)
    return TheoryInput(params=params, k=k, beta_ratio=beta, **kw)


def test_gnrc_examples():
    assert gnrc(np.array([1.0, 0.0, 0.0]), P12) == pytest.approx(1.0)
    assert gnrc(np.array([1.0, 1.0]), P12) == pytest.approx(1.0)
    assert gnrc(np.array([2.0, 1.0]), P12) == pytest.approx(1.2, rel=1e-14)
    with pytest.raises(ValueError):
        gnrc(np.zeros(3), P12)


def test_gnrc_scale_invariance():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(8)
    params = RatioParams(0.6, 2.5)
    base = gnrc(x, params)
    for c in (1e-6, 3.0, -1e5):
        assert gnrc(c * x, params) == pytest.approx(base, rel=1e-12)


def test_uniform_gnrc_bound_closed_forms():
    assert uniform_gnrc_bound(2.0, 1) == 1.0
    assert uniform_gnrc_bound(3.5, 1) == 1.0
    # s=2, q=2: x* = sqrt(2)-1, K = (1+sqrt(2))/2
    assert uniform_gnrc_bound(2.0, 2) == pytest.approx((1 + math.sqrt(2)) / 2,
                                                       abs=1e-12)
    # s=3, q=2: x* = (sqrt(3)-1)/2, K = (1+sqrt(3))/2
    assert uniform_gnrc_bound(2.0, 3) == pytest.approx((1 + math.sqrt(3)) / 2,
                                                       abs=1e-12)


def test_uniform_gnrc_bound_is_attained_and_not_exceeded():
    rng = np.random.default_rng(1)
    for s in (2, 3, 5):
        for q in (1.5, 2.0, 3.0):
            K = uniform_gnrc_bound(q, s)
            params = RatioParams(1.0, q)
            # the optimal pattern (1, x*, ..., x*) attains K
            h = (q - 1.0) * (s - 1.0)
            lo, hi = 0.0, 1.0
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if h * mid ** q + q * mid ** (q - 1) - 1 < 0:
                    lo = mid
                else:
                    hi = mid
            x_star = 0.5 * (lo + hi)
            pattern = np.concatenate([[1.0], np.full(s - 1, x_star)])
            assert gnrc(pattern, params) == pytest.approx(K, abs=1e-10)
            # random s-sparse vectors never exceed K
            mags = rng.uniform(0, 1, size=(2000, s))
            mags[:, 0] = 1.0
            kappa = (mags.sum(axis=1)) / ((mags ** q).sum(axis=1))
            assert kappa.max() <= K + 1e-9


def test_local_optimality_bound_examples():
    assert local_optimality_nsp_bound(np.array([1.0, 0.0]), P12) == pytest.approx(0.5)
    x = np.zeros(6)
    x[:2] = [2.0, 1.0]
    assert local_optimality_nsp_bound(x, P12) == pytest.approx(1 / 2.2, rel=1e-12)
    assert local_optimality_nsp_bound(x, RatioParams(0.5, 2.0)) == 1.0


def test_zero_point_analytic_case():
    res = zero_point(TheoryInput(params=P12, k=1, beta_ratio=1.0))
    # z^2 - z - 2 = (z-2)(z+1): root 2, brackets 2^(-1/2) and 4
    assert res.z0 == pytest.approx(2.0, abs=1e-12)
    assert res.bracket_low == pytest.approx(2.0 ** -0.5, rel=1e-12)
    assert res.bracket_high == pytest.approx(4.0, rel=1e-12)
    assert res.residual <= 1e-12


def test_zero_point_worst_case_normalization():
    # beta = k^(1/p - 1/q) reduces the equation to z^q - z^p - 2 = 0
    for p, q, k in ((1.0, 2.0, 5), (0.5, 1.5, 4), (0.3, 2.5, 16)):
        params = RatioParams(p, q)
        inp = TheoryInput(params=params, k=k, beta_ratio=worst_case_beta(params, k))
        z = zero_point(inp).z0
        assert z ** q - z ** p - 2.0 == pytest.approx(0.0, abs=1e-10)
    z = zero_point(TheoryInput(params=P12, k=5,
                               beta_ratio=worst_case_beta(P12, 5))).z0
    assert z == pytest.approx(2.0, abs=1e-12)


def test_zero_point_certified_on_sweep():
    for p, q, k, mode in SWEEP_GRID:
        res = zero_point(sweep_input(p, q, k, mode))
        assert res.bracket_low < res.z0 < res.bracket_high
        assert res.residual <= 1e-12


def test_ric_threshold_hand_chain():
    inp = TheoryInput(params=P12, k=1, beta_ratio=1.0)
    psi, t2, delta_new = ric_threshold_new(inp)
    assert psi == pytest.approx(4.0, abs=1e-12)
    assert t2 == pytest.approx(16.0, abs=1e-11)
    assert delta_new == pytest.approx(1 / math.sqrt(17), rel=1e-12)
    t1, delta_zhu = ric_threshold_zhu(inp)
    assert t1 == pytest.approx(16.0, abs=1e-11)
    assert delta_zhu == pytest.approx(delta_new, rel=1e-14)


def test_threshold_ordering_on_sweep():
    for p, q, k, mode in SWEEP_GRID:
        inp = sweep_input(p, q, k, mode)
        _, t2, delta_new = ric_threshold_new(inp)
        t1, delta_zhu = ric_threshold_zhu(inp)
        assert t2 <= t1 + 1e-10, (p, q, k, mode)
        assert delta_new >= delta_zhu - 1e-12
        if p == 1.0:
            assert abs(t1 - t2) <= 1e-10
        if p < 1.0:
            assert t2 < t1  # strict improvement below p = 1


def test_limiting_cases():
    for k in (1, 5, 10):
        params = RatioParams(1.0, 100.0)
        inp = TheoryInput(params=params, k=k,
                          beta_ratio=worst_case_beta(params, k))
        _, _, delta_new = ric_threshold_new(inp)
        assert delta_new == pytest.approx(1 / math.sqrt(1 + 9 * k), rel=0.02)
    params = RatioParams(0.01, 1.01)
    inp = TheoryInput(params=params, k=1, beta_ratio=worst_case_beta(params, 1))
    _, _, delta_new = ric_threshold_new(inp)
    _, delta_zhu = ric_threshold_zhu(inp)
    assert delta_new == pytest.approx(1 / math.sqrt(10), rel=0.02)
    assert delta_zhu == pytest.approx(1 / math.sqrt(10), rel=0.02)


def test_error_bound_hand_value():
    inp = TheoryInput(params=P12, k=1, beta_ratio=1.0, delta_2k=0.1, epsilon=1.0)
    expected = 2 * math.sqrt(1.1) * 3 / (1 - 0.1 * math.sqrt(17))
    assert error_bound_new(inp) == pytest.approx(expected, rel=1e-12)
    # identical formulas at p = 1
    assert error_bound_zhu(inp) == pytest.approx(error_bound_new(inp), rel=1e-10)


def test_error_bound_scaling_and_zero_noise():
    base = TheoryInput(params=RatioParams(0.5, 2.0), k=4,
                       beta_ratio=worst_case_beta(RatioParams(0.5, 2.0), 4),
                       delta_2k=0.05, epsilon=1.0)
    zero = TheoryInput(params=base.params, k=4, beta_ratio=base.beta_ratio,
                       delta_2k=0.05, epsilon=0.0)
    double = TheoryInput(params=base.params, k=4, beta_ratio=base.beta_ratio,
                         delta_2k=0.05, epsilon=2.0)
    assert error_bound_new(zero) == 0.0
    assert error_bound_zhu(zero) == 0.0
    assert error_bound_new(double) == pytest.approx(2 * error_bound_new(base),
                                                    rel=1e-14)
    assert error_bound_zhu(base) >= error_bound_new(base)


def test_error_bound_rejects_large_ric():
    inp = TheoryInput(params=P12, k=1, beta_ratio=1.0, delta_2k=0.5, epsilon=1.0)
    # 0.5 > 1/sqrt(17): outside the admissible region
    with pytest.raises(GuaranteeNotApplicable):
        error_bound_new(inp)


def test_error_bound_ordering_on_sweep():
    for p, q, k, mode in SWEEP_GRID:
        probe = sweep_input(p, q, k, mode)
        _, _, delta_new = ric_threshold_new(probe)
        _, delta_zhu = ric_threshold_zhu(probe)
        d2k = 0.9 * min(delta_new, delta_zhu)
        inp = sweep_input(p, q, k, mode, delta_2k=d2k, epsilon=1.0)
        assert error_bound_new(inp) <= error_bound_zhu(inp) + 1e-9, (p, q, k, mode)


def test_riprop_constants_examples():
    # p=1 makes a_p = 1; q >= 2 makes theta_q = 0
    inp = TheoryInput(params=P12, k=4, t=4, beta_ratio=2.0,
                      delta_k=0.1, theta_kt=0.1)
    rec = riprop_constants(inp)
    assert rec.a_p == 1.0
    assert rec.theta_q == 0.0
    assert rec.eta == pytest.approx(1.0, abs=1e-12)
    assert not rec.applicable  # eta < 1 fails at equality
    assert rec.c1 is None and rec.c2 is None
    # a smaller beta makes it applicable
    inp2 = TheoryInput(params=P12, k=4, t=4, beta_ratio=1.0,
                       delta_k=0.1, theta_kt=0.1)
    rec2 = riprop_constants(inp2)
    assert rec2.applicable
    assert rec2.c1 > 0 and rec2.c2 > 0


def test_riponly_constants_examples():
    inp = TheoryInput(params=P12, k=4, t=4, beta_ratio=1.0,
                      delta_k=0.1, delta_kt=0.15)
    rec = riponly_constants(inp)
    assert rec.rho == pytest.approx(1.25, abs=1e-14)  # k = t, p = 1
    assert rec.applicable
    # c2 multiplies epsilon downstream, so it is epsilon-invariant itself
    inp_eps = TheoryInput(params=P12, k=4, t=4, beta_ratio=1.0,
                          delta_k=0.1, delta_kt=0.15, epsilon=9.0)
    assert riponly_constants(inp_eps).c2 == rec.c2


def test_rop_vs_rip_psi_ordering():
    # with theta_{k,t} <= delta_{k+t} the ROP-based psi is the smaller one
    for p, q, k, t in ((1.0, 2.0, 4, 4), (0.5, 1.5, 8, 4), (0.8, 3.0, 6, 2)):
        params = RatioParams(p, q)
        delta_k, delta_kt = 0.05, 0.2
        theta = theta_from_ric(delta_kt) * 0.7
        a = riprop_constants(TheoryInput(params=params, k=k, t=t, beta_ratio=1.0,
                                         delta_k=delta_k, theta_kt=theta))
        b = riponly_constants(TheoryInput(params=params, k=k, t=t, beta_ratio=1.0,
                                          delta_k=delta_k, delta_kt=delta_kt))
        if a.eta_ok and b.eta_ok:
            assert a.tau == pytest.approx(b.tau, rel=1e-14)
            assert a.psi <= b.psi + 1e-14


def test_bound_report_assembles_everything():
    inp = TheoryInput(params=RatioParams(0.5, 2.0), k=4, t=2, beta_ratio=1.0,
                      delta_2k=0.05, delta_k=0.05, delta_kt=0.1,
                      theta_kt=0.08, epsilon=1.0)
    rep = bound_report(inp)
    assert rep.delta_new >= rep.delta_zhu
    assert rep.b_o is not None and rep.b_z is not None and rep.b_o <= rep.b_z
    assert rep.rop_rip is not None and rep.rip_only is not None


def test_exact_ric_examples():
    assert exact_ric(np.eye(4), 2) == pytest.approx(0.0, abs=1e-12)
    assert exact_ric(np.array([[2.0]]), 1) == pytest.approx(3.0, abs=1e-12)
    A = np.array([[1.0, 1.0]]) / math.sqrt(2)
    assert exact_ric(A, 2) == pytest.approx(1.0, abs=1e-12)


def test_exact_ric_orthonormal_columns():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((10, 4))
    Q, _ = np.linalg.qr(M)
    for s in (1, 2, 4):
        assert exact_ric(Q, s) == pytest.approx(0.0, abs=1e-12)


def test_exact_ric_monotone_in_s():
    rng = np.random.default_rng(6)
    for _ in range(5):
        A = rng.standard_normal((6, 12)) / math.sqrt(6)
        deltas = [exact_ric(A, s) for s in range(1, 6)]
        assert all(d1 <= d2 + 1e-12 for d1, d2 in zip(deltas, deltas[1:]))


def test_exact_ric_enumeration_guard():
    with pytest.raises(ValueError):
        exact_ric(np.ones((2, 60)), 30)


def kernel_matrix(v):
    """Matrix with ker = span{v}: rows form an orthonormal basis of v-perp."""
    v = np.asarray(v, dtype=float)
    _, _, vt = np.linalg.svd(v[None, :], full_matrices=True)
    return vt[1:]


def test_nullspace_ratio_certified_cases():
    est, certified = nullspace_ratio_estimate(kernel_matrix([1.0, 1.0, 0.0, 0.0]), P12)
    assert certified
    assert est == pytest.approx(math.sqrt(2), rel=1e-10)
    est, certified = nullspace_ratio_estimate(kernel_matrix([1.0, 0.0, 0.0]), P12)
    assert certified
    assert est == pytest.approx(1.0, rel=1e-10)


def test_nullspace_ratio_uncertified_lower_bound():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((4, 8))
    est, certified = nullspace_ratio_estimate(A, P12, restarts=16)
    assert not certified
    assert est >= 1.0 - 1e-9
    # estimate upper-bounds the infimum: any explicit kernel vector
    # evaluates at or above the reported minimum
    with pytest.raises(ValueError):
        nullspace_ratio_estimate(np.eye(3), P12)  # trivial kernel


def test_check_uniform_recovery_condition_cases():
    # kernel (1,1): ratio sqrt(2) < threshold 3 -> violated
    A = kernel_matrix([1.0, 1.0])
    assert check_uniform_recovery_condition(A, P12, 1) == "violated"
    # all-ones kernel in n=16: ratio 4 > 3 -> satisfied (certified)
    A16 = kernel_matrix(np.ones(16))
    assert uniform_recovery_threshold(P12, 1) == pytest.approx(3.0)
    assert check_uniform_recovery_condition(A16, P12, 1) == "satisfied_certified"
    # multi-dimensional kernel above threshold -> inconclusive
    rng = np.random.default_rng(8)
    B = rng.standard_normal((14, 16))
    est, cert = nullspace_ratio_estimate(B, P12, restarts=8)
    verdict = check_uniform_recovery_condition(B, P12, 1, restarts=8)
    assert not cert
    assert verdict in ("violated", "inconclusive")
    assert verdict == ("violated" if est < 3.0 else "inconclusive")


def test_theory_input_validation():
    with pytest.raises(ValueError):
        TheoryInput(params=P12, k=0)
    with pytest.raises(ValueError):
        TheoryInput(params=P12, k=1, beta_ratio=0.0)
    with pytest.raises(ValueError):
        TheoryInput(params=P12, k=1, delta_2k=1.0)

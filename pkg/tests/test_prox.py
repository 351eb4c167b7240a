import numpy as np
import pytest

from ratiosparse.prox import (GstParams, gst_threshold, gst_apply,
                              soft_threshold, prox_lp_power)


def scalar_objective(y, t, p, rho):
    return np.abs(y) ** p + 0.5 * rho * (y - t) ** 2


def grid_minimum(t, p, rho, lo, hi, step=1e-4):
    y = np.arange(lo, hi + step, step)
    return scalar_objective(y, t, p, rho).min()


def test_gst_threshold_hand_values():
    # beta_p = 0.5^(2/3), tau = beta_p + 0.25 * beta_p^(-1/2)
    beta_p = 0.5 ** (2.0 / 3.0)
    assert gst_threshold(GstParams(p=0.5, rho=2.0)) == pytest.approx(
        beta_p + 0.25 * beta_p ** -0.5, rel=1e-12)
    assert gst_threshold(GstParams(p=0.5, rho=2.0)) == pytest.approx(0.944940, abs=1e-6)
    beta_p = 2.0 ** (2.0 / 3.0)
    assert gst_threshold(GstParams(p=0.5, rho=0.5)) == pytest.approx(
        beta_p + 1.0 * beta_p ** -0.5, rel=1e-12)
    assert gst_threshold(GstParams(p=0.5, rho=0.5)) == pytest.approx(2.381101, abs=1e-6)


def test_gst_threshold_soft_limit():
    # p -> 1 approaches the soft threshold 1/rho
    tau = gst_threshold(GstParams(p=0.999, rho=1.0))
    assert abs(tau - 1.0) < 0.01


def test_gst_threshold_rejects_p_one():
    with pytest.raises(ValueError):
        gst_threshold(GstParams(p=1.0, rho=1.0))


def test_soft_threshold_examples():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-4.0, 1.5) == -2.5
    with pytest.raises(ValueError):
        soft_threshold(1.0, 0.0)


def test_gst_apply_examples():
    assert gst_apply(0.0, GstParams(p=0.3, rho=1.7)) == 0.0
    # p = 1 dispatches to soft thresholding with lambda = 1/rho
    assert gst_apply(3.0, GstParams(p=1.0, rho=1.0)) == 2.0
    params = GstParams(p=0.5, rho=2.0)
    v = gst_apply(2.0, params)
    assert scalar_objective(v, 2.0, 0.5, 2.0) <= grid_minimum(2.0, 0.5, 2.0, -3, 3) + 1e-3
    assert abs(v - 1.8144) < 1e-3


def test_gst_oracle_equivalence():
    # The prox value never loses to a fine grid search of the objective.
    rng = np.random.default_rng(10)
    for _ in range(200):
        p = rng.uniform(0.1, 0.9)
        rho = 10.0 ** rng.uniform(-1, 2)
        t = rng.uniform(-5, 5)
        params = GstParams(p=p, rho=rho)
        v = gst_apply(t, params)
        best = grid_minimum(t, p, rho, -abs(t) - 1, abs(t) + 1)
        assert scalar_objective(v, t, p, rho) <= best + 1e-8, (p, rho, t)


def test_gst_monotone_in_t():
    for p, rho in ((0.2, 0.7), (0.5, 2.0), (0.8, 10.0)):
        params = GstParams(p=p, rho=rho)
        ts = np.linspace(-6, 6, 2001)
        vals = prox_lp_power(ts, params)
        assert np.all(np.diff(vals) >= -1e-12), (p, rho)


def test_gst_threshold_boundary_behavior():
    for p, rho in ((0.3, 0.5), (0.5, 2.0), (0.9, 5.0)):
        params = GstParams(p=p, rho=rho)
        tau = gst_threshold(params)
        assert gst_apply(tau, params) == 0.0  # exact tie takes the zero branch
        assert gst_apply(tau - 1e-9, params) == 0.0
        assert gst_apply(-(tau - 1e-9), params) == 0.0
        assert gst_apply(tau + 1e-9, params) != 0.0
        assert gst_apply(-(tau + 1e-9), params) != 0.0


def test_gst_sign_and_shrinkage():
    rng = np.random.default_rng(11)
    for _ in range(300):
        p = rng.uniform(0.05, 1.0)
        rho = 10.0 ** rng.uniform(-2, 3)
        t = rng.uniform(-20, 20)
        v = gst_apply(t, GstParams(p=p, rho=rho))
        assert abs(v) <= abs(t) + 1e-15
        assert v == 0.0 or np.sign(v) == np.sign(t)


def test_gst_rejects_nonfinite():
    with pytest.raises(ValueError):
        gst_apply(np.nan, GstParams(p=0.5, rho=1.0))


def test_prox_vector_matches_scalar():
    params = GstParams(p=0.4, rho=3.0)
    ts = np.linspace(-4, 4, 101)
    vec = prox_lp_power(ts, params)
    scalars = np.array([gst_apply(t, params) for t in ts])
    assert np.array_equal(vec, scalars)


def test_gst_params_validation():
    with pytest.raises(ValueError):
        GstParams(p=0.0, rho=1.0)
    with pytest.raises(ValueError):
        GstParams(p=0.5, rho=0.0)
    with pytest.raises(ValueError):
        GstParams(p=0.5, rho=1.0, newton_max_iter=0)

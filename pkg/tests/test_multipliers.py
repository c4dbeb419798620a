import numpy as np
import pytest

from channel_damp import multipliers as mult
from channel_damp.errors import ZeroModeForM3

P = mult.DEFAULT_PARAMS


def test_critical_times_examples():
    assert mult.critical_times(0, 50.0).t_star == pytest.approx(100.0)
    ct = mult.critical_times(5, 100.0)
    assert ct.t_star == pytest.approx(20.0 - 100.0 / 60.0)
    assert ct.interval is not None
    ct11 = mult.critical_times(11, 100.0)
    assert ct11.interval is None
    # opposite signs: no interval
    assert mult.critical_times(-3, 100.0).interval is None
    assert mult.critical_times(3, -100.0).interval is None
    assert mult.critical_times(-3, -100.0).interval is not None


def test_w_trivial_regimes():
    assert mult.w_value(201.0, 1, 100.0, P) == 1.0
    assert mult.w_value(5.0, 1, 0.5, P) == 1.0
    # frozen below the last junction
    tE = mult._t_junction(10, 100.0)
    assert mult.w_value(0.5 * tE, 3, 100.0, P) == mult.w_value(tE, 3, 100.0, P)


def test_b_and_a_coefficients():
    assert mult._b_coef(2, 100.0) == pytest.approx(0.96)
    assert mult._b_coef(1, 100.0) == pytest.approx(1.0 - 1.0 / 100.0)
    assert mult._a_coef(2, 100.0) == pytest.approx(2 * 3 / 2 * (1 - 4 / 100.0))
    # junction design: (k^2/eta)(1 + b |t_{k-1} - eta/k|) = 1 exactly
    for k in (2, 3, 5):
        eta = 100.0
        b = mult._b_coef(k, eta)
        tprev = mult._t_junction(k - 1, eta)
        val = (k * k / eta) * (1.0 + b * abs(tprev - eta / k))
        assert val == pytest.approx(1.0, abs=1e-12)


def test_junction_continuity():
    for eta in (30.0, 100.0, 250.0):
        res = mult.junction_continuity_residuals(eta, P)
        assert res.max() <= 1e-12


def test_w_nondecreasing():
    eta = 144.0
    ts = np.linspace(1.0, 2.5 * eta, 4000)
    for k in (0, 2, 7):
        w = np.array([mult.w_value(t, k, eta, P) for t in ts])
        assert (np.diff(w) >= -1e-12 * w[:-1]).all()
        assert w[-1] == 1.0


def test_telescoped_growth_identity():
    for eta in (50.0, 100.0, 300.0):
        evaluated, product = mult.telescoped_growth_identity(eta, P)
        assert evaluated == pytest.approx(product, rel=1e-12)


def test_dtw_matches_finite_difference():
    eta = 200.0
    rng = np.random.default_rng(1)
    for _ in range(50):
        k = int(rng.integers(1, 14))
        t = float(rng.uniform(np.sqrt(eta), 1.9 * eta))
        d = 1e-6 * max(t, 1.0)
        wp = mult.w_value(t + d, k, eta, P)
        wm = mult.w_value(t - d, k, eta, P)
        w0 = mult.w_value(t, k, eta, P)
        fd = (wp - wm) / (2 * d * w0)
        an = mult.dtw_over_w(t, k, eta, P)
        if abs(fd - an) > 1e-3 * max(abs(an), 1.0):
            # junction straddle: finite difference crosses a kink
            continue
        assert an == pytest.approx(fd, rel=2e-4, abs=1e-6)


def test_a_multipliers_structure():
    eta = 100.0
    am = mult.a_multipliers(2 * eta + 1.0, 3, eta, P)
    expected_J = np.exp(P.mu * np.sqrt(eta)) + np.exp(P.mu * np.sqrt(3))
    assert am.J == pytest.approx(expected_J)
    assert am.Astar == pytest.approx(am.A * am.B)
    assert am.B == pytest.approx(np.sqrt(1 + (9 + eta) / (1 + (2 * eta + 1) ** 2)))
    assert am.A > 0


def test_lambda_monotone_and_floor():
    lam_prev = np.inf
    floor = 0.5 * (P.lambda0 + P.lambda_prime)
    for t in (0.0, 1.0, 5.0, 50.0, 500.0, 5e4):
        lam = mult.lambda_of(t, P)
        assert lam <= lam_prev + 1e-15
        assert lam >= floor - 1e-12
        lam_prev = lam
    assert mult.lambda_of(0.5, P) == pytest.approx(0.75 * P.lambda0 + 0.25 * P.lambda_prime)


def test_m_multipliers():
    t, k, xi = 10.0, 2, 30.0
    mm = mult.m_multipliers(t, k, xi, P)
    am = mult.a_multipliers(t, k, xi, P)
    kk = np.sqrt(1 + k * k)
    pre = kk * t * (t + kk + abs(xi)) / (1 + k**2 + xi**2)
    assert mm.M3 == pytest.approx(pre * am.A)
    assert mm.M3 > 0 and mm.M00 > 0
    with pytest.raises(ZeroModeForM3):
        mult.m_multipliers(t, 0, xi, P)
    # M3 >= <xi/(kt)>^{-1} A up to a constant, sampled
    rng = np.random.default_rng(0)
    worst = np.inf
    for _ in range(200):
        tt = float(rng.uniform(1.0, 50.0))
        kk_ = int(rng.integers(1, 6))
        xx = float(rng.uniform(-80.0, 80.0))
        m = mult.m_multipliers(tt, kk_, xx, P)
        a = mult.a_multipliers(tt, kk_, xx, P)
        gate = a.A / np.sqrt(1.0 + (xx / (kk_ * tt)) ** 2)
        worst = min(worst, m.M3 / gate)
    assert worst > 0.3


def test_gevrey_norm():
    spec = np.zeros((4, 64))
    assert mult.gevrey_norm(spec, 0.6, 0.2, 6.0) == 0.0
    eta = np.linspace(-8, 8, 64)
    spec[1, 32] = 1.0
    val = mult.gevrey_norm(spec, 0.6, 0.5, 2.0, k_modes=np.arange(4), eta_grid=eta)
    m = 1.0 + abs(eta[32])
    w = (eta[33] - eta[31]) / 2
    expect = np.sqrt(np.exp(2 * 0.5 * m**0.6) * (1 + m * m) ** 2.0 * w)
    assert val == pytest.approx(expect, rel=1e-12)
    # lambda = 0, sigma = 0 reduces to a plain discrete L2 norm
    rng = np.random.default_rng(2)
    spec = rng.standard_normal((3, 64)) + 1j * rng.standard_normal((3, 64))
    val = mult.gevrey_norm(spec, 0.6, 0.0, 0.0, eta_grid=eta)
    w_tr = np.full(64, eta[1] - eta[0])
    w_tr[0] = w_tr[-1] = (eta[1] - eta[0]) / 2
    expect = np.sqrt((np.abs(spec) ** 2 * w_tr).sum())
    assert val == pytest.approx(expect, rel=1e-12)
    # overflow guard path
    spec = np.zeros((2, 64))
    spec[1, 60] = 1e-200
    big = mult.gevrey_norm(spec, 0.6, 200.0, 0.0, eta_grid=np.linspace(0, 1e4, 64))
    assert np.isfinite(big)


def test_ratio_audit():
    rep = mult.ratio_audit(P, sample_count=2000, seed=3)
    assert rep["nonresonant_ratio_violations"] == 0
    assert rep["resonant_rate_violations"] == 0
    assert rep["rate_ratio_violations"] == 0
    assert rep["nonresonant_ratio_fitted_C"] < 50.0
    assert rep["resonant_rate_fitted_C"] < 50.0


def test_delta_lambda_cap():
    p = mult.MultiplierParams(lambda0=0.2, lambda_prime=0.1, delta_lambda=0.05).resolved()
    # requested 0.05 must be capped to keep the lambda floor
    assert p.delta_lambda < 0.05
    lam_inf = mult.lambda_of(1e8, p)
    assert lam_inf >= 0.5 * (p.lambda0 + p.lambda_prime) - 1e-9

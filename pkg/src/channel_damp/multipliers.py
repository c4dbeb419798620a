"""Time-dependent Fourier multipliers tracking the Orr mechanism.

Everything is a pure function of (t, k, eta) and a parameter set: critical
times and resonant intervals, the piecewise weight w with its analytic
logarithmic time derivative, the composite multipliers J/A (with the
resonant variants), the short-time density weight B and A*, the zero-mode
and pressure weights M00/M01 and M3..M5, and the shrinking Gevrey radius
lambda(t).

The growth exponent c_kappa1 is not pinned by the analysis; it defaults to 1
and is a configuration knob, since it rescales the total growth of 1/w.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np
from scipy.integrate import quad

from .errors import Overflow, ZeroModeForM3

_LOG_GUARD = 600.0


@dataclass(frozen=True)
class MultiplierParams:
    s: float = 0.6
    sigma: float = 6.0
    mu: float = 1.0
    lambda0: float = 0.2
    lambda_prime: float = 0.1
    delta_lambda: Optional[float] = None
    q_tilde: Optional[float] = None
    c_kappa1: float = 1.0

    def resolved(self) -> "MultiplierParams":
        """Fill the derived defaults and cap delta_lambda by the lambda floor."""
        q = self.q_tilde if self.q_tilde is not None else self.s / 8 + 7.0 / 16.0
        if not (0.5 < q <= self.s / 8 + 7.0 / 16.0):
            raise ValueError(f"q_tilde = {q} outside (1/2, s/8 + 7/16]")
        lam1 = 0.75 * self.lambda0 + 0.25 * self.lambda_prime
        lam_floor = 0.5 * (self.lambda0 + self.lambda_prime)
        I = quad(lambda tau: (1.0 + tau * tau) ** (-q), 1.0, np.inf)[0]
        delta_max = np.log((1.0 + lam1) / (1.0 + lam_floor)) / I
        want = self.delta_lambda if self.delta_lambda is not None \
            else (self.lambda0 - self.lambda_prime)
        delta = min(want, delta_max)
        return replace(self, q_tilde=q, delta_lambda=delta)


DEFAULT_PARAMS = MultiplierParams().resolved()


@dataclass
class CriticalTimes:
    k: int
    eta: float
    t_star: Optional[float]
    interval: Optional[tuple]
    resonant: Optional[tuple]


def _t_junction(j, eta):
    """t_{j, eta} for j >= 1 (eta > 0); t_{0, eta} = 2 eta."""
    if j == 0:
        return 2.0 * eta
    return eta / j - eta / (2.0 * j * (j + 1))


def critical_times(k, eta) -> CriticalTimes:
    """Critical time and (possibly empty) critical/resonant intervals."""
    k = int(k)
    a_eta = abs(float(eta))
    if k == 0:
        return CriticalTimes(k=0, eta=eta, t_star=2.0 * a_eta, interval=None,
                             resonant=None)
    E = int(np.floor(np.sqrt(a_eta)))
    j = abs(k)
    t_star = a_eta / j - a_eta / (2.0 * j * (j + 1))
    same_sign = (k >= 0) == (eta >= 0) or eta == 0
    if not same_sign or j > E or j < 1:
        return CriticalTimes(k=k, eta=eta, t_star=t_star, interval=None,
                             resonant=None)
    lo = _t_junction(j, a_eta)
    hi = _t_junction(j - 1, a_eta)
    interval = (lo, hi)
    resonant = interval if np.sqrt(a_eta) <= lo else None
    return CriticalTimes(k=k, eta=eta, t_star=t_star, interval=interval,
                         resonant=resonant)


def _b_coef(j, eta):
    if j == 1:
        return 1.0 - 1.0 / eta
    return 2.0 * (j - 1) / j * (1.0 - j * j / eta)


def _a_coef(j, eta):
    return 2.0 * (j + 1) / j * (1.0 - j * j / eta)


def _w_nr_at_junctions(eta, ck):
    """w_NR at the junction times t_j, j = 0..E, by backward recursion."""
    E = int(np.floor(np.sqrt(eta)))
    vals = np.ones(E + 1)
    for j in range(1, E + 1):
        # across I_j: drop (j^2/eta)^ck on the right half, (j^2/eta)^(1+ck) left
        vals[j] = vals[j - 1] * (j * j / eta) ** ck * (j * j / eta) ** (1.0 + ck)
    return vals


def _locate(eta, t):
    """Index j with t in I_j = [t_j, t_{j-1}], or 0 if t >= 2 eta, -1 if below."""
    E = int(np.floor(np.sqrt(eta)))
    if t >= 2.0 * eta:
        return 0
    for j in range(1, E + 1):
        if t >= _t_junction(j, eta):
            return j
    return -1


def _w_pair(t, eta, ck):
    """(w_NR, w_R) at time t for frequency eta > 1."""
    E = int(np.floor(np.sqrt(eta)))
    junc = _w_nr_at_junctions(eta, ck)
    j = _locate(eta, t)
    if j == 0:
        return 1.0, 1.0
    if j < 0:
        t = _t_junction(E, eta)
        j = E
    tc = eta / j
    b = _b_coef(j, eta)
    a = _a_coef(j, eta)
    if t >= tc:
        base = junc[j - 1]
        fac = (j * j / eta) * (1.0 + b * (t - tc))
        w_nr = base * fac**ck
        w_r = fac * w_nr
    else:
        w_at_tc = junc[j - 1] * (j * j / eta) ** ck
        fac = 1.0 + a * (tc - t)
        w_nr = w_at_tc * fac ** (-1.0 - ck)
        w_r = (j * j / eta) * fac * w_nr
    return w_nr, w_r


def w_value(t, k, eta, params: MultiplierParams = DEFAULT_PARAMS):
    """The Orr weight w_k(t, eta); w = 1 for t >= 2|eta| and |eta| <= 1."""
    p = params
    k = int(k)
    if eta < 0:
        k, eta = -k, -eta
    if eta <= 1.0 or t >= 2.0 * eta:
        return 1.0
    w_nr, w_r = _w_pair(t, eta, p.c_kappa1)
    ct = critical_times(k, eta)
    if ct.interval is not None and ct.interval[0] <= t <= ct.interval[1]:
        return w_r
    return w_nr


def dtw_over_w(t, k, eta, params: MultiplierParams = DEFAULT_PARAMS):
    """Analytic d/dt log w_k(t, eta) (zero off the growth window)."""
    p = params
    k = int(k)
    if eta < 0:
        k, eta = -k, -eta
    if eta <= 1.0 or t >= 2.0 * eta:
        return 0.0
    E = int(np.floor(np.sqrt(eta)))
    j = _locate(eta, t)
    if j <= 0:
        return 0.0
    tc = eta / j
    ck = p.c_kappa1
    resonant = False
    ct = critical_times(k, eta)
    if ct.interval is not None and ct.interval[0] <= t <= ct.interval[1]:
        resonant = abs(k) == j
    if t >= tc:
        b = _b_coef(j, eta)
        rate = ck * b / (1.0 + b * (t - tc))
        if resonant:
            rate += b / (1.0 + b * (t - tc))
    else:
        a = _a_coef(j, eta)
        rate = (1.0 + ck) * a / (1.0 + a * (tc - t))
        if resonant:
            rate -= a / (1.0 + a * (tc - t))
    return rate


_lambda_cache: Dict = {}


def lambda_of(t, params: MultiplierParams = DEFAULT_PARAMS):
    """Shrinking bulk Gevrey radius lambda(t)."""
    p = params
    lam1 = 0.75 * p.lambda0 + 0.25 * p.lambda_prime
    if t <= 1.0:
        return lam1
    key = (p.q_tilde, round(float(t), 12))
    if key not in _lambda_cache:
        # split at the algebraic-tail crossover so quad converges quietly
        mid = min(float(t), 1e4)
        I = quad(lambda tau: (1.0 + tau * tau) ** (-p.q_tilde), 1.0, mid)[0]
        if t > mid:
            I += quad(lambda tau: (1.0 + tau * tau) ** (-p.q_tilde), mid,
                      float(t), limit=200)[0]
        _lambda_cache[key] = I
    I = _lambda_cache[key]
    return (1.0 + lam1) * np.exp(-p.delta_lambda * I) - 1.0


def _bracket(k, eta):
    """<k, eta> with the l1 magnitude convention."""
    m = abs(k) + abs(eta)
    return np.sqrt(1.0 + m * m)


@dataclass
class AMultipliers:
    J: float
    A: float
    JR: float
    AR: float
    B: float
    Astar: float
    lam: float
    Atilde: float


def a_multipliers(t, k, eta, params: MultiplierParams = DEFAULT_PARAMS) -> AMultipliers:
    """Orr-weight multiplier family at one (t, k, eta)."""
    p = params
    lam = lambda_of(t, p)
    w = w_value(t, k, eta, p)
    J = np.exp(p.mu * np.sqrt(abs(eta))) / w + np.exp(p.mu * np.sqrt(abs(k)))
    br = _bracket(k, eta)
    A = np.exp(lam * br**p.s) * br**p.sigma * J
    # resonant-regularity variants (zero-mode bracket)
    a_eta = abs(eta)
    if a_eta <= 1.0 or t >= 2.0 * a_eta:
        wr_val = 1.0
    else:
        _, wr_val = _w_pair(max(t, _t_junction(int(np.sqrt(a_eta)), a_eta)),
                            a_eta, p.c_kappa1)
    JR = np.exp(p.mu * np.sqrt(a_eta)) / wr_val
    br0 = _bracket(0, eta)
    AR = np.exp(lam * br0**p.s) * br0**p.sigma * JR
    B = np.sqrt(1.0 + (k * k + abs(eta)) / (1.0 + t * t))
    Astar = A * B
    Atilde = np.exp(lam * br**p.s) * br**p.sigma * np.exp(p.mu * np.sqrt(abs(eta))) / w
    return AMultipliers(J=float(J), A=float(A), JR=float(JR), AR=float(AR),
                        B=float(B), Astar=float(Astar), lam=float(lam),
                        Atilde=float(Atilde))


@dataclass
class MMultipliers:
    M00: float
    M01: float
    M3: float
    M4: float
    M5: float


def m_multipliers(t, k, xi, params: MultiplierParams = DEFAULT_PARAMS) -> MMultipliers:
    """Zero-mode pressure weights M00/M01 and the k != 0 weights M3..M5."""
    p = params
    zero = a_multipliers(t, 0, xi, p)
    pre0 = t * (t * t + xi * xi) / (2.0 + xi * xi)
    M00 = pre0 * zero.A
    dw0 = dtw_over_w(t, 0, xi, p)
    M01 = pre0 * (np.sqrt(dw0) + _bracket(0, xi) ** (p.s / 2) / (1.0 + t * t) ** (p.s / 2)) * zero.A
    if k == 0:
        raise ZeroModeForM3("M3..M5 are defined for k != 0 only")
    am = a_multipliers(t, k, xi, p)
    kk = np.sqrt(1.0 + k * k)
    pre = kk * t * (t + kk + abs(xi)) / (1.0 + k * k + xi * xi)
    M3 = pre * am.A
    M4 = pre * (abs(k) + abs(xi)) ** (p.s / 2) / (1.0 + t * t) ** (p.s / 2) * am.A
    M5 = pre * np.sqrt(dtw_over_w(t, k, xi, p)) * am.Atilde
    return MMultipliers(M00=float(M00), M01=float(M01), M3=float(M3),
                        M4=float(M4), M5=float(M5))


def gevrey_norm(field_hat, s, lam, sigma, k_modes=None, eta_grid=None):
    """Gevrey norm with Sobolev correction of a (k, eta) spectrum.

    field_hat has shape (n_k, n_eta); the eta integral is a trapezoid over
    eta_grid.  Large exponents are handled in log space.
    """
    field_hat = np.asarray(field_hat)
    n_k, n_eta = field_hat.shape
    if k_modes is None:
        k_modes = np.arange(n_k)
    if eta_grid is None:
        eta_grid = np.arange(n_eta, dtype=float)
    k_modes = np.asarray(k_modes)
    eta_grid = np.asarray(eta_grid, dtype=float)
    w = np.zeros(n_eta)
    w[1:-1] = (eta_grid[2:] - eta_grid[:-2]) / 2
    w[0] = (eta_grid[1] - eta_grid[0]) / 2
    w[-1] = (eta_grid[-1] - eta_grid[-2]) / 2
    m = np.abs(k_modes)[:, None] + np.abs(eta_grid)[None, :]
    br2 = 1.0 + m * m
    expo = 2.0 * lam * m**s + sigma * np.log(br2)
    mag2 = np.abs(field_hat) ** 2
    if expo.max() <= _LOG_GUARD:
        total = float((mag2 * np.exp(expo) * w[None, :]).sum())
        return float(np.sqrt(total))
    # log-space evaluation
    with np.errstate(divide="ignore"):
        logterm = np.where(mag2 > 0, np.log(mag2) + expo + np.log(w[None, :]), -np.inf)
    peak = logterm.max()
    if peak == -np.inf:
        return 0.0
    total = np.exp(logterm - peak).sum()
    val = 0.5 * (peak + np.log(total))
    if val > _LOG_GUARD:
        raise Overflow(f"Gevrey norm exceeds exp({_LOG_GUARD})")
    return float(np.exp(val))


def ratio_audit(params: MultiplierParams = DEFAULT_PARAMS, sample_count=10_000,
                seed=0, eta_max=400.0, report_quantiles=False) -> Dict:
    """Sampled audits of the weight-comparison bounds.

    Fits the smallest constants validating the nonresonant-ratio bound
    (exponential in |eta - xi|^(1/2)), the resonant-interval growth-rate
    equivalence d_t w / w ~ 1/(1+|tau|), and the two-frequency rate-ratio
    bound, then re-checks every sample against the fitted constants.
    """
    p = params
    rng = np.random.default_rng(seed)
    n = int(sample_count)

    # nonresonant frequency-ratio bound: w_NR(t, xi)/w_NR(t, eta) <= C exp(mu_fit |eta-xi|^1/2).
    # Both constants are fitted: the default mu is not coupled to the growth
    # exponent of 1/w, so the effective exponent is measured, not assumed.
    eta = rng.uniform(2.0, eta_max, n)
    xi = rng.uniform(2.0, eta_max, n)
    t = rng.uniform(0.0, 2.2 * eta_max, n)
    ratio = np.empty(n)
    for i in range(n):
        wn_xi, _ = (1.0, 1.0) if (xi[i] <= 1 or t[i] >= 2 * xi[i]) \
            else _w_pair(t[i], xi[i], p.c_kappa1)
        wn_eta, _ = (1.0, 1.0) if (eta[i] <= 1 or t[i] >= 2 * eta[i]) \
            else _w_pair(t[i], eta[i], p.c_kappa1)
        ratio[i] = wn_xi / wn_eta
    gap = np.sqrt(np.abs(eta - xi))
    grow = (ratio > 1.0) & (gap >= 1.0)
    mu_fit = float((np.log(ratio[grow]) / gap[grow]).max()) if grow.any() else p.mu
    mu_fit = max(mu_fit, p.mu)
    r35 = ratio / np.exp(mu_fit * gap)
    C35 = float(r35.max())
    viol35 = int((r35 > C35 * (1 + 1e-12)).sum())

    # resonant-interval growth rate: d_t w / w ~ 1/(1+|tau|), finite-difference d_t w
    m33 = 0
    r33 = []
    while m33 < n // 4:
        eta_s = rng.uniform(30.0, eta_max)
        E = int(np.sqrt(eta_s))
        k_s = rng.integers(1, max(2, E))
        ct = critical_times(k_s, eta_s)
        if ct.interval is None:
            continue
        lo, hi = ct.interval
        t_s = rng.uniform(lo, hi)
        if t_s <= 2.0 * np.sqrt(eta_s):
            continue
        m33 += 1
        dt = min(1e-4, (hi - lo) * 1e-3)
        wp = w_value(t_s + dt, k_s, eta_s, p)
        wm = w_value(t_s - dt, k_s, eta_s, p)
        w0 = w_value(t_s, k_s, eta_s, p)
        fd = (wp - wm) / (2 * dt * w0)
        tau = t_s - eta_s / k_s
        r33.append(fd * (1.0 + abs(tau)))
    r33 = np.asarray(r33)
    r33 = r33[r33 > 0]
    C33 = float(max(r33.max(), 1.0 / r33.min()))
    viol33 = int(((r33 > C33 * (1 + 1e-12)) | (r33 < 1.0 / C33 * (1 - 1e-12))).sum())

    # two-frequency rate ratio bounded by <eta - xi>
    m34 = 0
    r34 = []
    while m34 < n // 4:
        eta_s = rng.uniform(30.0, eta_max)
        xi_s = rng.uniform(30.0, eta_max)
        lo = 2.0 * np.sqrt(max(eta_s, xi_s))
        hi = 2.0 * min(eta_s, xi_s)
        if hi <= lo + 1e-9:
            continue
        t_s = rng.uniform(lo, hi)
        k_s = rng.integers(1, 1 + int(np.sqrt(eta_s)))
        l_s = rng.integers(1, 1 + int(np.sqrt(xi_s)))
        num = dtw_over_w(t_s, k_s, eta_s, p)
        den = dtw_over_w(t_s, l_s, xi_s, p)
        if den <= 0 or num <= 0:
            continue
        m34 += 1
        r34.append((num / den) / np.hypot(1.0, eta_s - xi_s))
    r34 = np.asarray(r34)
    C34 = float(r34.max())
    viol34 = int((r34 > C34 * (1 + 1e-12)).sum())

    return {
        "nonresonant_ratio_fitted_C": C35, "nonresonant_ratio_fitted_mu": mu_fit,
        "nonresonant_ratio_violations": viol35,
        "resonant_rate_fitted_C": C33, "resonant_rate_violations": viol33,
        "rate_ratio_fitted_C": C34, "rate_ratio_violations": viol34,
        "samples": n,
    }


def junction_continuity_residuals(eta, params: MultiplierParams = DEFAULT_PARAMS):
    """Relative jumps of w_k across every junction time for frequency eta."""
    p = params
    eta = abs(float(eta))
    E = int(np.floor(np.sqrt(eta)))
    out = []
    for k in range(0, E + 1):
        for j in range(0, E + 1):
            tj = _t_junction(j, eta)
            lo = w_value(np.nextafter(tj, -np.inf), k, eta, p)
            hi = w_value(np.nextafter(tj, np.inf), k, eta, p)
            mid = w_value(tj, k, eta, p)
            out.append(abs(hi - lo) / mid)
            # also the interior critical time eta/j where the branches meet
            if j >= 1:
                tc = eta / j
                lo = w_value(np.nextafter(tc, -np.inf), k, eta, p)
                hi = w_value(np.nextafter(tc, np.inf), k, eta, p)
                out.append(abs(hi - lo) / w_value(tc, k, eta, p))
    return np.asarray(out)


def telescoped_growth_identity(eta, params: MultiplierParams = DEFAULT_PARAMS):
    """w_NR(t_E)/w_NR(2 eta) vs the closed telescoped product; exact match."""
    p = params
    eta = abs(float(eta))
    E = int(np.floor(np.sqrt(eta)))
    evaluated = _w_nr_at_junctions(eta, p.c_kappa1)[E]
    ck = p.c_kappa1
    product = 1.0
    for j in range(1, E + 1):
        product *= (j * j / eta) ** (1.0 + 2.0 * ck)
    return evaluated, product


def export_w_csv(path, k, eta_values, t_values, params: MultiplierParams = DEFAULT_PARAMS):
    """CSV dump of (t, eta, w, J, A, B, Astar) for a fixed wavenumber."""
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "eta", "w", "J", "A", "B", "Astar"])
        for eta in eta_values:
            for t in t_values:
                am = a_multipliers(t, k, eta, params)
                wv = w_value(t, k, eta, params)
                wr.writerow([repr(float(x)) for x in
                             (t, eta, wv, am.J, am.A, am.B, am.Astar)])

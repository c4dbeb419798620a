import numpy as np
import pytest

from channel_damp import profiles, rayleigh, sturm
from channel_damp import _stencils as st
from channel_damp.errors import BoundaryPoint, SingularStartFailure


def _exact_couette_phi1(y, k):
    D = y[:, None] - y[None, :]
    D = np.where(D == 0, 1.0, D)
    E = np.sinh(k * D) / (k * D)
    np.fill_diagonal(E, 1.0)
    return E


def test_phi1_couette_closed_form():
    prof = profiles.couette_constant(257)
    for k in (1, 3, 8):
        tab = rayleigh.phi1_table(prof, k)
        rel = np.abs(tab.phi1 - _exact_couette_phi1(prof.y, k)) / _exact_couette_phi1(prof.y, k)
        assert rel.max() < 5e-6
    tab = rayleigh.phi1_table(prof, 1)
    assert tab.phi1[-1, 0] == pytest.approx(np.sinh(1.0), rel=1e-7)


def test_phi1_convergence_order():
    errs = []
    for n in (257, 513):
        prof = profiles.couette_constant(n)
        tab = rayleigh.phi1_table(prof, 3)
        rel = np.abs(tab.phi1 - _exact_couette_phi1(prof.y, 3))
        errs.append(rel.max())
    order = np.log2(errs[0] / errs[1])
    assert order > 3.5


def test_phi1_boundary_data_and_est1():
    prof = profiles.couette_bump(129, eps_u=0.05)
    for k in (1, 3):
        tab = rayleigh.phi1_table(prof, k)
        d = np.arange(129)
        assert np.abs(tab.phi1[d, d] - 1.0).max() == 0.0
        assert np.abs(tab.dphi1[d, d]).max() == 0.0
        assert tab.phi1.min() >= 1.0
        D = prof.y[:, None] - prof.y[None, :]
        assert (D * tab.dphi1).min() >= -1e-13


def test_est_constants_stable_in_k():
    prof = profiles.couette_bump(257, eps_u=0.05)
    y = prof.y
    D = np.abs(y[:, None] - y[None, :])
    c2_all, c3_all, c5_all = [], [], []
    for k in (1, 2, 4, 8):
        tab = rayleigh.phi1_table(prof, k)
        off = k * D > 0.75
        # est2: two-sided exponential envelope constant
        expo = np.log(tab.phi1[off]) / (k * D[off])
        c2_all.append(max(expo.max(), 1.0 / expo.min()))
        # est3: |dphi1/phi1| against k*min(k|y-y'|, 1)
        denom = k * np.minimum(k * D, 1.0)
        mask = D > 0
        r = np.abs(tab.dphi1[mask]) / tab.phi1[mask] / denom[mask]
        c3_all.append(max(r.max(), 1.0 / r.min()))
        # est5: 0 <= phi1 - 1 <= C min(1, k^2|y-y'|^2) phi1; the constant is
        # fitted on the quadratic branch, the saturated branch is a <= 1 bound
        quad = mask & (k * D <= 1.0)
        r5 = (tab.phi1[quad] - 1.0) / ((k * D[quad]) ** 2 * tab.phi1[quad])
        assert r5.min() >= -1e-14
        c5_all.append(r5.max())
        sat = mask & (k * D > 1.0)
        if sat.any():
            assert ((tab.phi1[sat] - 1.0) / tab.phi1[sat]).max() <= 1.0
    for cs in (c2_all, c3_all, c5_all):
        assert max(cs) / min(cs) < 2.0


def test_phi1_eps_convergence_and_est6():
    prof = profiles.couette_constant(129)
    tab = rayleigh.phi1_table(prof, 1)
    c = 64
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        phi_eps, _, _ = rayleigh.phi1_eps_solve(prof, 1, prof.y[c], eps)
        errs.append(np.abs(phi_eps - tab.phi1[:, c]).max())
        assert np.abs(phi_eps).min() >= 0.5
    # err <= C * eps with a stable fitted constant
    cs = [e / eps for e, eps in zip(errs, (1e-2, 1e-3, 1e-4))]
    assert max(cs) < 100 * min(max(cs[1:]), cs[0])
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(SingularStartFailure):
        rayleigh.phi1_eps_solve(prof, 1, 0.5, 0.0)


def test_hilbert_pv_examples():
    u = np.linspace(0.0, 1.0, 1001)
    g = np.ones_like(u)
    assert rayleigh.hilbert_pv(g, u, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert rayleigh.hilbert_pv(u.copy(), u, 0.5) == pytest.approx(-1.0, abs=1e-6)
    assert rayleigh.hilbert_pv(g, u, 0.25) == pytest.approx(np.log(1.0 / 3.0), abs=1e-12)
    with pytest.raises(BoundaryPoint):
        rayleigh.hilbert_pv(g, u, 0.0)


def test_hilbert_pv_linearity_and_reflection():
    u = np.linspace(0.0, 1.0, 801)
    rng = np.random.default_rng(3)
    g1 = np.sin(3 * u) + 0.2 * rng.standard_normal(u.size) * 0  # smooth
    g2 = np.cos(2 * u)
    c = 0.5
    lhs = rayleigh.hilbert_pv(g1 + 2 * g2, u, c)
    rhs = rayleigh.hilbert_pv(g1, u, c) + 2 * rayleigh.hilbert_pv(g2, u, c)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    # reflection antisymmetry about the center for a symmetric interval
    g = np.sin(2 * np.pi * (u - 0.5))
    refl = g[::-1].copy()
    assert rayleigh.hilbert_pv(refl, u, c) == pytest.approx(-rayleigh.hilbert_pv(g, u, c), abs=1e-10)


def test_j_functions_couette_closed_form():
    prof = profiles.couette_constant(257)
    for k in (1, 3):
        spec = rayleigh.j_functions(prof, k)
        assert np.abs(spec.J2).max() == 0.0
        assert spec.rho[0] == 0.0 and spec.rho[-1] == 0.0
        y = prof.y[1:-1]
        J1_exact = -k * spec.rho[1:-1] * np.sinh(float(k)) / (np.sinh(k * y) * np.sinh(k * (1 - y)))
        assert np.abs(spec.J1[1:-1] - J1_exact).max() < 2e-5
        assert spec.indicator[1:-1].min() > 0.5


def test_j_functions_bump_indicator():
    for k in (1, 2, 4, 8):
        prof = profiles.couette_bump(257, eps_u=0.05)
        spec = rayleigh.j_functions(prof, k)
        lo = spec.indicator[1:-1].min()
        hi = spec.indicator[1:-1].max()
        assert lo > 0.1
        assert hi / lo < 10.0  # two-sided fitted constant exists


def test_wronskian_limit_consistency():
    prof = profiles.couette_bump(257, eps_u=0.05)
    spec = rayleigh.j_functions(prof, 1)
    cols = np.array([64, 107, 128, 146, 192])
    prev = None
    for eps, tol in ((1e-2, 5e-2), (1e-3, 1e-2)):
        _, _, wint = rayleigh._march_eps(prof, 1, eps, cols=cols)
        err = np.abs(spec.rho[cols] * wint - (spec.J1[cols] + 1j * np.pi * spec.J2[cols])).max()
        assert err < tol
        if prev is not None:
            assert err < prev
        prev = err


def test_pi_operators_basics():
    prof = profiles.couette_constant(257)
    tab = rayleigh.phi1_table(prof, 1)
    om = np.full(257, 2.0)
    pi1, pi2 = rayleigh.pi_operators(prof, 1, om, tab)
    assert pi2[128] == pytest.approx(2.0)
    z1, z2 = rayleigh.pi_operators(prof, 1, np.zeros(257), tab)
    assert np.abs(z1).max() == 0.0 and np.abs(z2).max() == 0.0


def test_pi1_l2_bound_stable_under_refinement():
    ratios = []
    for n in (129, 257):
        prof = profiles.couette_bump(n, eps_u=0.05)
        om = np.sin(2 * np.pi * prof.y) * np.exp(-30 * (prof.y - 0.5) ** 2)
        pi1, _ = rayleigh.pi_operators(prof, 1, om, rayleigh.phi1_table(prof, 1))
        w = st.trapz_weights(n, prof.h)
        ratios.append(np.sqrt(w @ np.abs(pi1) ** 2) / np.sqrt(w @ np.abs(om) ** 2))
    assert abs(ratios[0] - ratios[1]) / ratios[1] < 0.05


def test_pi1_matrix_matches_direct():
    prof = profiles.couette_bump(257, eps_u=0.05)
    sd = rayleigh.SpectralData(prof, 1)
    P1 = rayleigh.pi1_matrix(prof, 1, sd.tab, sd.ek)
    rng = np.random.default_rng(7)
    om = np.sin(np.pi * prof.y) * (1 + 0.3 * np.cos(4 * np.pi * prof.y))
    direct, _ = rayleigh.pi_operators(prof, 1, om, sd.tab)
    assert np.abs(P1 @ om - direct)[1:-1].max() < 5e-4


def test_resolvent_limit():
    prof = profiles.couette_bump(257, eps_u=0.05)
    sd = rayleigh.SpectralData(prof, 1)
    z = rayleigh.resolvent_limit(prof, 1, np.zeros(257), 0.5, +1, data=sd)
    assert np.abs(z.psiI).max() == 0.0
    om = np.sin(np.pi * prof.y) * np.exp(-30 * (prof.y - 0.4) ** 2)
    res = rayleigh.resolvent_limit(prof, 1, om, 0.37, +1, data=sd)
    assert res.psiI[0] == 0.0 and res.psiI[-1] == 0.0
    # plug back into the distorted Rayleigh equation away from y'
    S = sturm.stream_solver(prof, 1)
    lhs = (prof.u - prof.u_at(res.yprime)) * S.apply(res.psiI) \
        - prof.coeffs["phi1"] * res.psiI + om
    mask = np.abs(prof.y - res.yprime) > 0.12
    mask[:4] = mask[-4:] = False
    resid = np.abs(lhs[mask]).max() / np.abs(om).max()
    assert resid < 5e-3


def test_representation_psi_t0_and_zero():
    for make in (profiles.couette_constant, lambda n: profiles.couette_bump(n, eps_u=0.05)):
        prof = make(257)
        sd = rayleigh.SpectralData(prof, 1)
        om = np.sin(np.pi * prof.y) * np.exp(-40 * (prof.y - 0.5) ** 2)
        psi0 = sd.psi_hat(om, 0.0)
        psi_ell = sturm.stream_solver(prof, 1).solve(om.astype(complex))
        rel = np.linalg.norm(psi0 - psi_ell) / np.linalg.norm(psi_ell)
        assert rel < 1e-3
        assert np.abs(sd.psi_hat(np.zeros(257), 5.0)).max() == 0.0


def test_representation_psi_decay():
    prof = profiles.couette_bump(257, eps_u=0.05)
    sd = rayleigh.SpectralData(prof, 1)
    om = profiles.bump_fn(0.32, 0.45, 0.55, 0.68)[0](prof.y) * np.exp(2j * np.pi * prof.y)
    w = st.trapz_weights(257, prof.h)
    ts = np.linspace(20, 200, 12)
    norms = [np.sqrt(w @ np.abs(sd.psi_hat(om, t)) ** 2) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    assert slope <= -1.0


def test_cross_oracle_density_bump():
    # variable theta: the distorted elliptic solve and J2 both activate
    prof = profiles.density_bump(257, eps_theta=0.05)
    from channel_damp import evolve
    om0 = profiles.bump_fn(0.3, 0.42, 0.58, 0.7)[0](prof.y) * np.exp(-5j * prof.y)
    lin = evolve.evolve_linear(prof, 1, om0, 5.0, 0.01, save_times=[5.0])
    spec = evolve.evolve_linear_spectral(prof, 1, om0, [5.0])
    w = st.trapz_weights(257, prof.h)
    rel = np.sqrt(w @ np.abs(lin["psi"][0] - spec["psi"][0]) ** 2)
    rel /= np.sqrt(w @ np.abs(spec["psi"][0]) ** 2)
    assert rel < 1e-3


def test_resolvent_conjugation_symmetry():
    prof = profiles.couette_bump(129, eps_u=0.05)
    sd = rayleigh.SpectralData(prof, 1)
    om = profiles.bump_fn(0.3, 0.42, 0.58, 0.7)[0](prof.y)  # real data
    rp = rayleigh.resolvent_limit(prof, 1, om, 0.45, +1, data=sd)
    rm = rayleigh.resolvent_limit(prof, 1, om, 0.45, -1, data=sd)
    assert np.abs(rm.psiI - np.conj(rp.psiI)).max() < 1e-12


def test_contour_route_matches_representation():
    # (1/2 pi i) int (Psi_- - Psi_+) u' e^{-i u(y') k t} dy' is an independent
    # assembly of the evolved stream function from the resolvent limits
    prof = profiles.couette_bump(129, eps_u=0.05)
    n = prof.n_y
    sd = rayleigh.SpectralData(prof, 1)
    om = profiles.bump_fn(0.3, 0.42, 0.58, 0.7)[0](prof.y) * np.exp(-3j * prof.y)
    t = 4.0
    jump = np.zeros((n, n), dtype=complex)   # [y, y'] columns
    for c in range(1, n - 1):
        rp = rayleigh.resolvent_limit(prof, 1, om, prof.y[c], +1, data=sd)
        rm = rayleigh.resolvent_limit(prof, 1, om, prof.y[c], -1, data=sd)
        jump[:, c] = rm.psiI - rp.psiI
    wq = st.simpson_weights(n, prof.h)
    dens = wq * np.exp(-1j * prof.u * t) * prof.du
    psi_contour = (jump @ dens) / (2j * np.pi)
    psi_rep = sd.psi_hat(om, t)
    w = st.trapz_weights(n, prof.h)
    rel = np.sqrt(w @ np.abs(psi_contour - psi_rep) ** 2)
    rel /= np.sqrt(w @ np.abs(psi_rep) ** 2)
    assert rel < 5e-3


def test_spectral_assumption_gate():
    prof = profiles.couette_constant(129)
    rep = rayleigh.spectral_assumption_check(prof, 4)
    assert rep.verdict == "stable"
    prof2 = profiles.couette_bump(129, eps_u=0.05)
    rep2 = rayleigh.spectral_assumption_check(prof2, 4)
    assert rep2.verdict == "stable"
    assert min(rep2.indicator_floor.values()) > 0.1

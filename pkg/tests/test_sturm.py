import numpy as np
import pytest

from channel_damp import profiles, sturm
from channel_damp.errors import DensityTooLarge, NeumannZeroMode


def _couette(n=257):
    return profiles.couette_constant(n)


def test_q_solutions_constant_coefficients():
    prof = _couette(257)
    one = np.ones_like(prof.y)
    qa, dqa, qb, dqb = sturm.q_solutions(prof.y, one, one, 1)
    assert np.abs(qa - np.cosh(prof.y)).max() < 1e-9
    assert np.abs(qb - np.cosh(1 - prof.y)).max() < 1e-9
    assert qa[0] == 1.0 and dqa[0] == 0.0
    # boundary-slope reciprocity from the constant Wronskian
    ratio1 = -dqb[0] / dqa[-1]
    ratio2 = qb[0] / qa[-1]
    assert ratio1 == pytest.approx(ratio2, rel=1e-8)


def test_q_bounds_envelope():
    prof = profiles.density_bump(257, eps_theta=0.05)
    h1 = 1.0 / prof.theta
    qa, _, qb, _ = sturm.q_solutions(prof.y, h1, h1, 4)
    assert np.all(qa >= 1.0 - 1e-12)
    assert np.all(qb >= 1.0 - 1e-12)
    # e^{|k||v-anchor|/C} <= q <= e^{C |k||v-anchor|} once k|v-anchor| >~ 1
    mask = prof.y > 0.5
    expo = np.log(qa[mask]) / (4 * prof.y[mask])
    assert expo.min() > 0.3 and expo.max() < 3.0


def test_green_dirichlet_matches_sinh_kernel():
    prof = _couette(257)
    one = np.ones_like(prof.y)
    gk = sturm.green_kernel(prof.y, one, one, 1, "dirichlet")
    i = np.searchsorted(prof.y, 0.25)
    j = np.searchsorted(prof.y, 0.5)
    exact = np.sinh(0.25) * np.sinh(0.5) / np.sinh(1.0)
    assert gk.G[i, j] == pytest.approx(exact, abs=1e-8)
    assert gk.G[j, i] == pytest.approx(exact, abs=1e-8)
    assert gk.report["operator_green_identity"] < 1e-8
    # kernel symmetry of the corrected assembly
    assert np.abs(gk.G - gk.G.T).max() < 1e-10


def test_green_neumann_k0_rejected():
    prof = _couette(129)
    one = np.ones_like(prof.y)
    with pytest.raises(NeumannZeroMode):
        sturm.green_kernel(prof.y, one, one, 0, "neumann")


def test_green_formula_vs_factorization():
    prof = profiles.density_bump(129, eps_theta=0.05)
    h1 = 1.0 / prof.theta
    gk = sturm.green_kernel(prof.y, h1, h1, 2, "dirichlet")
    assert gk.report["formula_vs_factorization"] < 5e-4
    assert gk.report["wronskian_rel_spread"] < 1e-8
    gk_n = sturm.green_kernel(prof.y, prof.theta, prof.theta, 3, "neumann")
    assert gk_n.report["operator_green_identity"] < 1e-8


def test_solve_stream_manufactured():
    errs = []
    for n in (129, 257):
        prof = _couette(n)
        y = prof.y
        rhs = -(np.pi**2 + 1.0) * np.sin(np.pi * y)
        psi = sturm.solve_stream(prof, 1, rhs)
        errs.append(np.abs(psi - np.sin(np.pi * y)).max())
    assert errs[1] < 2e-8
    order = np.log2(errs[0] / errs[1])
    assert order > 3.0


def test_solve_stream_zero_and_linear():
    prof = _couette(129)
    assert np.abs(sturm.solve_stream(prof, 2, np.zeros(129))).max() == 0.0
    rng = np.random.default_rng(0)
    f = np.sin(2 * np.pi * prof.y) * rng.uniform(0.5, 1.5)
    g = np.cos(np.pi * prof.y)
    s = sturm.stream_solver(prof, 1)
    lhs = sturm.solve_stream(prof, 1, f + 2 * g, solver=s)
    rhs = sturm.solve_stream(prof, 1, f, solver=s) + 2 * sturm.solve_stream(prof, 1, g, solver=s)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_solve_stream_variable_theta_manufactured():
    # manufactured: psi = sin(pi y); F = (psi'/theta)' - k^2 psi / theta
    errs = []
    for n in (129, 257):
        prof = profiles.density_bump(n, eps_theta=0.05)
        y, h = prof.y, prof.h
        psi_exact = np.sin(np.pi * y)
        from channel_damp._stencils import deriv1
        F = deriv1(np.pi * np.cos(np.pi * y) / prof.theta, h) - 1.0 / prof.theta * psi_exact
        psi = sturm.solve_stream(prof, 1, F)
        errs.append(np.abs(psi - psi_exact).max())
    assert errs[1] < 5e-6


def test_solve_pressure_single_mode_no_coupling():
    prof = _couette(129)
    K = 4
    rhs = np.zeros((K + 1, 129), dtype=complex)
    rhs[2] = np.cos(np.pi * prof.y) * (1.0 + 0.5j)
    d = np.zeros_like(rhs)
    P, dP0 = sturm.solve_pressure(prof, d, rhs)
    ref = sturm.pressure_solver(prof, 2).solve(rhs[2])
    assert np.abs(P[2] - ref).max() < 1e-13
    assert np.abs(dP0).max() == 0.0


def test_solve_pressure_manufactured_with_coupling():
    n = 129
    prof = _couette(n)
    y = prof.y
    K = 4
    # manufactured P with Neumann-compatible y-profile, single mode k=2
    P_exact = np.zeros((K + 1, n), dtype=complex)
    P_exact[2] = np.cos(np.pi * y) * 0.3
    d = np.zeros((K + 1, n), dtype=complex)
    d[0] = 0.1 * profiles.bump_fn(0.3, 0.45, 0.55, 0.7)[0](y)
    from channel_damp._stencils import deriv1
    # rhs = div((theta+d) grad P) for the single mode
    theta_eff = prof.theta + d[0].real
    dP = deriv1(P_exact[2], prof.h)
    rhs = np.zeros_like(P_exact)
    rhs[2] = -(2**2) * theta_eff * P_exact[2] + deriv1(theta_eff * dP, prof.h)
    P, _ = sturm.solve_pressure(prof, d, rhs)
    err = np.abs(P[2] - P_exact[2]).max() / np.abs(P_exact[2]).max()
    assert err < 1e-5


def test_stream_kernel_decay_audit():
    prof = profiles.density_bump(129, eps_theta=0.05)
    rep = sturm.stream_kernel_decay_audit(prof, 2, eta_list=(8.0, 16.0))
    assert rep["lambda_fit"] > 0.0
    assert rep["C_fit"] < 100.0
    # envelope exponent stable across input frequencies
    lams = [r[1] for r in rep["per_eta"]]
    assert max(lams) / min(lams) < 2.0


def test_solve_pressure_density_too_large():
    prof = _couette(129)
    rhs = np.zeros((3, 129), dtype=complex)
    d = np.zeros_like(rhs)
    d[0] = 0.9
    with pytest.raises(DensityTooLarge):
        sturm.solve_pressure(prof, d, rhs)

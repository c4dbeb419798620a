import numpy as np
import pytest

from channel_damp import evolve, profiles, rayleigh, sturm
from channel_damp import _stencils as st
from channel_damp.errors import (
    CFLViolation,
    DensityTooLarge,
    SupportBreach,
    WindowTooShort,
)


def _mode_data(prof, K, eps=1e-3, eta0=-4.0):
    y = prof.y
    bump = profiles.bump_fn(0.32, 0.42, 0.58, 0.68)[0](y)
    w0 = np.zeros((K + 1, prof.n_y), dtype=complex)
    d0 = np.zeros_like(w0)
    w0[1] = eps * bump * np.exp(1j * eta0 * y)
    w0[2] = 0.3 * eps * bump * np.exp(1j * eta0 * y)
    d0[1] = 0.5 * eps * bump * np.exp(1j * eta0 * y)
    return w0, d0


def test_good_unknown_roundtrip():
    prof = profiles.density_bump(129, eps_theta=0.05)
    rng = np.random.default_rng(0)
    om = rng.standard_normal((3, 129)) + 1j * rng.standard_normal((3, 129))
    psi = rng.standard_normal((3, 129)) + 1j * rng.standard_normal((3, 129))
    wt = evolve.good_unknown(prof, om, psi)
    back = evolve.omega_from_good(prof, wt, psi)
    assert np.abs(back - om).max() < 1e-12
    # theta == 1 makes the good unknown the vorticity itself
    prof0 = profiles.couette_constant(129)
    wt0 = evolve.good_unknown(prof0, om, psi)
    assert np.abs(wt0 - om).max() == 0.0


def test_good_unknown_is_distorted_laplacian():
    prof = profiles.density_bump(129, eps_theta=0.05)
    S = sturm.stream_solver(prof, 2)
    rng = np.random.default_rng(1)
    wt_in = np.sin(np.pi * prof.y) * (1 + 0.2 * np.cos(3 * np.pi * prof.y)) + 0j
    psi = S.solve(wt_in)
    # rebuild omega from the good unknown and verify Delta-tilde psi = wt
    om = evolve.omega_from_good(prof, wt_in[None, :], psi[None, :])[0]
    wt_back = evolve.good_unknown(prof, om[None, :], psi[None, :])[0]
    resid = S.apply(psi) - wt_back
    assert np.abs(resid[4:-4]).max() / np.abs(wt_in).max() < 1e-6


def test_linear_couette_pure_phase():
    prof = profiles.couette_constant(129)
    om0 = profiles.bump_fn(0.32, 0.45, 0.55, 0.68)[0](prof.y) * (1 + 0j)
    traj = evolve.evolve_linear(prof, 1, om0, 5.0, 0.02, save_times=[5.0])
    w5 = traj["omega_tilde"][-1]
    assert np.abs(np.abs(w5) - np.abs(om0)).max() < 1e-10
    assert np.abs(w5 - om0 * np.exp(-1j * prof.y * 5.0)).max() < 1e-8
    zero = evolve.evolve_linear(prof, 1, np.zeros(129, complex), 1.0, 0.02)
    assert np.abs(zero["omega_tilde"][-1]).max() == 0.0


def test_linear_cfl_violation():
    prof = profiles.couette_constant(129)
    with pytest.raises(CFLViolation):
        evolve.evolve_linear(prof, 4, np.zeros(129, complex), 1.0, 0.5)


def test_cross_oracle_small():
    prof = profiles.couette_bump(129, eps_u=0.05)
    y = prof.y
    om0 = profiles.bump_fn(0.32, 0.45, 0.55, 0.68)[0](y) * np.exp(2j * np.pi * y)
    lin = evolve.evolve_linear(prof, 1, om0, 5.0, 0.01, save_times=[1.0, 5.0])
    spec = evolve.evolve_linear_spectral(prof, 1, om0, [1.0, 5.0])
    w = st.trapz_weights(129, prof.h)
    for a, b in zip(lin["psi"], spec["psi"]):
        rel = np.sqrt(w @ np.abs(a - b) ** 2) / np.sqrt(w @ np.abs(b) ** 2)
        assert rel < 1e-3


def test_nonlinear_fixed_point_and_guards():
    prof = profiles.density_bump(129, eps_theta=0.05)
    K = 4
    w0 = np.zeros((K + 1, 129), dtype=complex)
    d0 = np.zeros_like(w0)
    state = evolve.FieldState(t=0.0, omega_hat=w0, d_hat=d0)
    out = evolve.step_nonlinear(prof, state, 0.01)
    assert np.abs(out.omega_hat).max() == 0.0
    assert np.abs(out.d_hat).max() == 0.0
    # density too large
    d_big = d0.copy()
    d_big[0] = 0.9
    with pytest.raises(DensityTooLarge):
        evolve.step_nonlinear(prof, evolve.FieldState(0.0, w0, d_big), 0.01)
    # support breach: data hugging the wall
    w_bad = w0.copy()
    w_bad[1] = 1e-3 * np.exp(-((prof.y - 0.05) / 0.02) ** 2)
    with pytest.raises(SupportBreach):
        evolve.step_nonlinear(prof, evolve.FieldState(0.0, w_bad, d0), 0.01)
    with pytest.raises(CFLViolation):
        evolve.step_nonlinear(prof, evolve.FieldState(0.0, w0, d0), 1.0)


def test_nonlinear_invariants_short_run():
    prof = profiles.density_bump(129, eps_theta=0.05)
    w0, d0 = _mode_data(prof, K=8)
    state, diag, _ = evolve.run_nonlinear(prof, w0, d0, T=2.0, dt=0.02,
                                          diag_every=20)
    E = np.array(diag.energy)
    assert np.abs(E - E[0]).max() / E[0] < 1e-7
    wt = st.trapz_weights(129, prof.h)
    assert abs(wt @ state.omega_hat[0].real - wt @ w0[0].real) < 1e-10
    assert abs(wt @ state.d_hat[0].real - wt @ d0[0].real) < 1e-10
    assert np.abs(state.psi_hat[:, 0]).max() == 0.0
    assert np.abs(state.psi_hat[:, -1]).max() == 0.0
    assert min(diag.supp_lo) >= 2 * prof.kappa0 - evolve.SUPPORT_MARGIN
    assert max(diag.supp_hi) <= 1 - 2 * prof.kappa0 + evolve.SUPPORT_MARGIN


def test_nonlinear_step_order():
    prof = profiles.density_bump(129, eps_theta=0.05)
    w0, d0 = _mode_data(prof, K=4, eps=1e-2)
    outs = {}
    for dt in (0.04, 0.02, 0.01):
        s, _, _ = evolve.run_nonlinear(prof, w0, d0, T=0.4, dt=dt, diag_every=10**6)
        outs[dt] = s.omega_hat.copy()
    e1 = np.abs(outs[0.04] - outs[0.01]).max()
    e2 = np.abs(outs[0.02] - outs[0.01]).max()
    # RK4: halving dt should cut the error by ~16 (compare against finer ref)
    assert e1 / e2 > 10.0


def test_coord_map_zero_and_small():
    prof = profiles.density_bump(129, eps_theta=0.05)
    K = 4
    w0 = np.zeros((K + 1, 129), dtype=complex)
    d0 = np.zeros_like(w0)
    _, diag, _ = evolve.run_nonlinear(prof, w0, d0, T=0.5, dt=0.025, diag_every=5)
    coords = evolve.coord_map(profile=prof, diag=diag)
    last = coords[-1]
    assert np.abs(last.v - prof.u).max() == 0.0
    assert np.abs(last.Phi).max() == 0.0
    assert np.abs(last.h_dev).max() < 1e-12
    # small perturbation: |h| = O(eps)
    w0, d0 = _mode_data(prof, K=4, eps=1e-3)
    _, diag, _ = evolve.run_nonlinear(prof, w0, d0, T=2.0, dt=0.02, diag_every=20)
    coords = evolve.coord_map(prof, diag)
    assert max(np.abs(c.h_dev).max() for c in coords) < 50 * 1e-3


def test_scattering_profile_linear_couette_frozen():
    prof = profiles.couette_constant(129)
    om0 = profiles.bump_fn(0.32, 0.45, 0.55, 0.68)[0](prof.y) * np.exp(-3j * prof.y)
    traj = evolve.evolve_linear(prof, 1, om0, 8.0, 0.02, save_times=[0.0, 4.0, 8.0])
    Phi = np.zeros(129)
    Ws = []
    for t, wsnap in zip(traj["times"], traj["omega_tilde"]):
        modes = np.zeros((2, 129), dtype=complex)
        modes[1] = wsnap
        Ws.append(evolve.scattering_profile(prof, modes, t, Phi))
    assert np.abs(Ws[1] - Ws[0]).max() < 1e-8
    assert np.abs(Ws[2] - Ws[0]).max() < 1e-8
    # t = 0 pull-back is the initial data itself
    assert np.abs(Ws[0][1] - om0).max() == 0.0


def test_damping_rates_guards():
    with pytest.raises(WindowTooShort):
        evolve.damping_rates([1, 2, 3], [1, 1, 1])
    with pytest.raises(WindowTooShort):
        evolve.damping_rates(np.linspace(10, 20, 12), np.ones(12))
    fit = evolve.damping_rates(np.geomspace(1, 100, 12), np.full(12, 3.0))
    assert fit["exponent"] == pytest.approx(0.0, abs=1e-12)

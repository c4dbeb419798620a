"""Linear and nonlinear channel evolution with damping diagnostics.

Two independent linear routes (method-of-lines on the good unknown, and the
spectral representation formula) cross-check each other.  The nonlinear
solver advances vorticity and density spectrally in x and with 4th-order
stencils in y, recovering the stream function from a Dirichlet Poisson solve
and the pressure from the variable-density Neumann problem each stage.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import _stencils as st
from . import rayleigh, sturm
from .errors import (
    CFLViolation,
    DensityTooLarge,
    NonFiniteValue,
    SupportBreach,
    WindowTooShort,
)

CFL = 0.5
SUPPORT_MARGIN = 0.02
SUPPORT_TOL = 1e-7


# ---------------------------------------------------------------------------
# good unknown
# ---------------------------------------------------------------------------

def good_unknown(profile, omega_hat, psi_hat):
    """omega/theta - theta'/theta^2 psi_y, per x-mode."""
    dpsi = _dy(psi_hat, profile.h)
    return omega_hat / profile.theta - profile.dtheta / profile.theta**2 * dpsi


def omega_from_good(profile, omega_tilde_hat, psi_hat):
    """Inverse of good_unknown given the same stream function."""
    dpsi = _dy(psi_hat, profile.h)
    return profile.theta * omega_tilde_hat + profile.dtheta / profile.theta * dpsi


def _dy(modes, h):
    modes = np.asarray(modes)
    if modes.ndim == 1:
        return st.deriv1(modes, h)
    return st.deriv1(modes.T, h).T


# ---------------------------------------------------------------------------
# linear evolution
# ---------------------------------------------------------------------------

def evolve_linear(profile, k, omega_tilde0, T, dt, save_times=None):
    """Method-of-lines on d_t w = -ik (u w - (u'/theta)' psi), psi solved
    from the distorted elliptic problem each stage.

    Returns dict with times, omega snapshots, psi snapshots.
    """
    if k == 0:
        raise CFLViolation("linear evolution is per nonzero mode")
    dt_max = CFL / (abs(k) * np.abs(profile.u).max())
    if dt > dt_max:
        raise CFLViolation(f"dt = {dt} exceeds CFL bound {dt_max:.3e}")
    solver = sturm.stream_solver(profile, k)
    phic = profile.coeffs["phi1"]
    u = profile.u
    ik = 1j * k

    def rhs(w):
        psi = solver.solve(w)
        return -ik * (u * w - phic * psi)

    if save_times is None:
        save_times = [T]
    save_times = sorted(set(float(t) for t in save_times))
    w = np.asarray(omega_tilde0, dtype=complex).copy()
    t = 0.0
    out_t, out_w, out_psi = [], [], []

    def snapshot():
        out_t.append(t)
        out_w.append(w.copy())
        out_psi.append(solver.solve(w))

    if save_times and abs(save_times[0]) < 1e-14:
        snapshot()
        save_times = save_times[1:]
    for target in save_times:
        while t < target - 1e-12:
            step = min(dt, target - t)
            k1 = rhs(w)
            k2 = rhs(w + 0.5 * step * k1)
            k3 = rhs(w + 0.5 * step * k2)
            k4 = rhs(w + step * k3)
            w = w + (step / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += step
        if not np.isfinite(w).all():
            raise NonFiniteValue("linear evolution produced non-finite values")
        snapshot()
    return {"times": np.array(out_t), "omega_tilde": out_w, "psi": out_psi,
            "k": k}


def evolve_linear_spectral(profile, k, omega_tilde0, times,
                           data: Optional[rayleigh.SpectralData] = None):
    """psi snapshots from the representation formula; no time stepping."""
    if data is None:
        data = rayleigh.SpectralData(profile, k)
    return {"times": np.asarray(times, dtype=float),
            "psi": [data.psi_hat(omega_tilde0, t) for t in times],
            "k": k}


# ---------------------------------------------------------------------------
# nonlinear state
# ---------------------------------------------------------------------------

@dataclass
class FieldState:
    t: float
    omega_hat: np.ndarray     # (K+1, n_y) one-sided x-modes
    d_hat: np.ndarray
    psi_hat: Optional[np.ndarray] = None
    pressure: Optional[np.ndarray] = None
    dP0: Optional[np.ndarray] = None

    @property
    def K_x(self):
        return self.omega_hat.shape[0] - 1


@dataclass
class DiagSeries:
    times: List[float] = field(default_factory=list)
    uy_l2: List[float] = field(default_factory=list)
    ux_neq_l2: List[float] = field(default_factory=list)
    psi_neq_l2: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    supp_lo: List[float] = field(default_factory=list)
    supp_hi: List[float] = field(default_factory=list)
    p0ux: List[np.ndarray] = field(default_factory=list)
    p0dypsi: List[np.ndarray] = field(default_factory=list)
    dypsi_int: List[np.ndarray] = field(default_factory=list)


class NonlinearWorkspace:
    """Factorized solvers and scratch data shared across steps."""

    def __init__(self, profile, K_x):
        self.profile = profile
        self.K_x = K_x
        self.lap = {k: sturm.laplace_solver(profile, k) for k in range(K_x + 1)}
        self.press = {k: sturm.pressure_solver(profile, k) for k in range(1, K_x + 1)}

    def psi_from_omega(self, omega_hat):
        psi = np.zeros_like(omega_hat)
        for k in range(omega_hat.shape[0]):
            psi[k] = self.lap[k].solve(omega_hat[k])
        return psi


def _support_extent(profile, modes, tol_rel=1e-9):
    mag = np.abs(modes).max(axis=0)
    top = mag.max()
    if top == 0:
        return profile.y[0], profile.y[-1], (0.0, 0.0)
    on = mag > tol_rel * top
    lo = profile.y[on].min()
    hi = profile.y[on].max()
    return float(lo), float(hi), (float(mag[0] / top), float(mag[-1] / top))


def _rhs_nonlinear(profile, ws: NonlinearWorkspace, omega_hat, d_hat,
                   P_prev=None):
    h = profile.h
    Kp1 = omega_hat.shape[0]
    kvec = np.arange(Kp1)
    ik = (1j * kvec)[:, None]
    n_x = 4 * (Kp1 - 1) if Kp1 > 1 else 8

    psi = ws.psi_from_omega(omega_hat)
    psi_x = ik * psi
    psi_y = _dy(psi, h)
    psi_xx = -(kvec**2)[:, None] * psi
    psi_xy = _dy(psi_x, h)
    psi_yy = _dy(psi_y, h)

    # pressure: div((theta+d) grad P) = -2[(psi_xy)^2 - psi_xx psi_yy] - 2 u' psi_xx
    g = sturm._grid_batch(np.stack([psi_xy, psi_xx, psi_yy]), n_x)
    quad = 2.0 * sturm._spec_batch(np.stack([g[0] * g[0] - g[1] * g[2]]), Kp1)[0]
    rhsP = -quad - 2.0 * profile.du[None, :] * psi_xx
    P, dP0 = sturm.solve_pressure(profile, d_hat, rhsP, solvers=ws.press,
                                  psi_modes=psi, P_init=P_prev)
    dPdy = _dy(P, h)
    dPdy[0] = dP0
    dPdx = ik * P

    om_x = ik * omega_hat
    om_y = _dy(omega_hat, h)
    d_x = ik * d_hat
    d_y = _dy(d_hat, h)

    # one batched grid round-trip for every quadratic transport term
    fields = np.stack([-psi_y, psi_x, om_x, om_y, d_x, d_y, dPdy, dPdx])
    G = sturm._grid_batch(fields, n_x)
    Ux, Uy, gom_x, gom_y, gd_x, gd_y, gdPdy, gdPdx = G
    prods = np.stack([
        Ux * gom_x + Uy * gom_y,        # U . grad omega
        Ux * gd_x + Uy * gd_y,          # U . grad d
        gdPdy * gd_x - gdPdx * gd_y,    # curl of d grad P
    ])
    adv_om, adv_d, press_curl = sturm._spec_batch(prods, Kp1)

    dom = (-profile.u[None, :] * om_x + profile.d2u[None, :] * psi_x
           + profile.dtheta[None, :] * dPdx - press_curl - adv_om)
    dd = (-profile.u[None, :] * d_x - profile.dtheta[None, :] * psi_x - adv_d)
    return dom, dd, psi, P, dP0


def step_nonlinear(profile, state: FieldState, dt,
                   ws: Optional[NonlinearWorkspace] = None,
                   support_margin=SUPPORT_MARGIN) -> FieldState:
    """One RK4 step of the (omega, d) system with all guards."""
    if ws is None:
        ws = NonlinearWorkspace(profile, state.K_x)
    dt_max = CFL / (max(state.K_x, 1) * np.abs(profile.u).max())
    if dt > dt_max + 1e-15:
        raise CFLViolation(f"dt = {dt} exceeds CFL bound {dt_max:.3e}")
    dmax = np.abs(sturm._modes_to_grid(state.d_hat)).max()
    if dmax >= profile.theta.min() / 2:
        raise DensityTooLarge(f"max |d| = {dmax:.3e}")

    w0, d0 = state.omega_hat, state.d_hat
    Pp = state.pressure
    k1w, k1d, psi, P, dP0 = _rhs_nonlinear(profile, ws, w0, d0, P_prev=Pp)
    k2w, k2d, _, P2, _ = _rhs_nonlinear(profile, ws, w0 + 0.5 * dt * k1w,
                                        d0 + 0.5 * dt * k1d, P_prev=P)
    k3w, k3d, _, P3, _ = _rhs_nonlinear(profile, ws, w0 + 0.5 * dt * k2w,
                                        d0 + 0.5 * dt * k2d, P_prev=P2)
    k4w, k4d, _, P4, _ = _rhs_nonlinear(profile, ws, w0 + dt * k3w,
                                        d0 + dt * k3d, P_prev=P3)
    w1 = w0 + (dt / 6) * (k1w + 2 * k2w + 2 * k3w + k4w)
    d1 = d0 + (dt / 6) * (k1d + 2 * k2d + 2 * k3d + k4d)
    if not (np.isfinite(w1).all() and np.isfinite(d1).all()):
        raise NonFiniteValue("nonlinear step produced non-finite values")

    band_lo = 2 * profile.kappa0 - support_margin
    band_hi = 1 - 2 * profile.kappa0 + support_margin
    for name, f in (("omega", w1), ("d", d1)):
        mag = np.abs(f).max(axis=0)
        top = mag.max()
        if top > 0:
            outside = (profile.y < band_lo) | (profile.y > band_hi)
            if mag[outside].max(initial=0.0) > SUPPORT_TOL * top:
                raise SupportBreach(
                    f"{name} leaks outside [{band_lo:.3f}, {band_hi:.3f}]"
                )
    return FieldState(t=state.t + dt, omega_hat=w1, d_hat=d1,
                      psi_hat=psi, pressure=P4, dP0=dP0)


def energy(profile, omega_hat, d_hat, psi_hat, n_x=None):
    """Total energy (1/2) int rho |u_s + U|^2 with rho = 1/(theta + d)."""
    Kp1 = omega_hat.shape[0]
    if n_x is None:
        n_x = max(4 * (Kp1 - 1), 8)
    psi_y = _dy(psi_hat, profile.h)
    Ux = sturm._modes_to_grid(-psi_y, n_x) + profile.u[None, :]
    Uy = sturm._modes_to_grid((1j * np.arange(Kp1))[:, None] * psi_hat, n_x)
    dgrid = sturm._modes_to_grid(d_hat, n_x)
    rho = 1.0 / (profile.theta[None, :] + dgrid)
    w = st.trapz_weights(profile.n_y, profile.h)
    dx = 2 * np.pi / n_x
    return float(0.5 * (rho * (Ux**2 + Uy**2) * w[None, :]).sum() * dx)


def run_nonlinear(profile, omega0_hat, d0_hat, T, dt, diag_every=25,
                  support_margin=SUPPORT_MARGIN, snapshot_times=None):
    """Advance the nonlinear system to time T, recording diagnostics.

    Returns (final state, DiagSeries, snapshots) where snapshots maps the
    requested times to (omega_hat, d_hat) copies.
    """
    state = FieldState(t=0.0, omega_hat=np.array(omega0_hat, dtype=complex),
                       d_hat=np.array(d0_hat, dtype=complex))
    ws = NonlinearWorkspace(profile, state.K_x)
    diag = DiagSeries()
    snaps = {}
    want = sorted(snapshot_times or [])
    w = st.trapz_weights(profile.n_y, profile.h)
    n_steps = int(round(T / dt))
    accum_dypsi = np.zeros(profile.n_y)
    prev_p0dypsi = None

    def record(state, psi):
        kvec = np.arange(state.K_x + 1)
        uy2 = 0.0
        uxn2 = 0.0
        psin2 = 0.0
        for k in range(1, state.K_x + 1):
            uy2 += 2 * float(w @ np.abs(1j * k * psi[k]) ** 2)
            uxn2 += 2 * float(w @ np.abs(_dy(psi[k], profile.h)) ** 2)
            psin2 += 2 * float(w @ np.abs(psi[k]) ** 2)
        lo_o, hi_o, _ = _support_extent(profile, state.omega_hat)
        lo_d, hi_d, _ = _support_extent(profile, state.d_hat)
        diag.times.append(state.t)
        diag.uy_l2.append(np.sqrt(uy2))
        diag.ux_neq_l2.append(np.sqrt(uxn2))
        diag.psi_neq_l2.append(np.sqrt(psin2))
        diag.energy.append(energy(profile, state.omega_hat, state.d_hat, psi))
        diag.supp_lo.append(min(lo_o, lo_d))
        diag.supp_hi.append(max(hi_o, hi_d))
        p0dypsi = np.real(_dy(psi[0], profile.h))
        diag.p0ux.append(-p0dypsi)
        diag.p0dypsi.append(p0dypsi)
        diag.dypsi_int.append(accum_dypsi.copy())

    psi0 = ws.psi_from_omega(state.omega_hat)
    state.psi_hat = psi0
    record(state, psi0)
    prev_p0dypsi = np.real(_dy(psi0[0], profile.h))
    if want and abs(want[0]) < 1e-14:
        snaps[0.0] = (state.omega_hat.copy(), state.d_hat.copy(),
                      np.zeros(profile.n_y), 0.0)
        want = want[1:]
    for istep in range(n_steps):
        state = step_nonlinear(profile, state, dt, ws, support_margin)
        state.psi_hat = ws.psi_from_omega(state.omega_hat)
        cur = np.real(_dy(state.psi_hat[0], profile.h))
        accum_dypsi += 0.5 * dt * (prev_p0dypsi + cur)
        prev_p0dypsi = cur
        if want and state.t >= want[0] - 1e-9:
            # keyed by the requested time; the stored actual time must be
            # used for pull-back phases (a step of mismatch shows up as a
            # spurious phase floor in scattering distances)
            snaps[want[0]] = (state.omega_hat.copy(), state.d_hat.copy(),
                              -accum_dypsi.copy(), state.t)
            want = want[1:]
        if (istep + 1) % diag_every == 0 or istep == n_steps - 1:
            record(state, state.psi_hat)
    return state, diag, snaps


# ---------------------------------------------------------------------------
# coordinate change and scattering diagnostics
# ---------------------------------------------------------------------------

@dataclass
class CoordState:
    t: float
    v: np.ndarray
    dyv: np.ndarray
    dtv: np.ndarray
    Phi: np.ndarray
    h_dev: np.ndarray


def coord_map(profile, diag: DiagSeries) -> List[CoordState]:
    """Coordinate-change diagnostics from the accumulated zero-mode data.

    v(t, y) = u - (chi1/t) int_0^t P0(psi_y) dt'; Phi = -int_0^t P0(psi_y);
    the time derivative uses the instantaneous integrand.
    """
    out = []
    for i, t in enumerate(diag.times):
        I = diag.dypsi_int[i]
        Phi = -I
        if t > 0:
            v = profile.u - profile.chi1 * I / t
            dtv = -profile.chi1 * (diag.p0dypsi[i] * t - I) / t**2
        else:
            v = profile.u.copy()
            dtv = -profile.chi1 * diag.p0dypsi[i]
        dyv = st.deriv1(v, profile.h)
        out.append(CoordState(t=t, v=v, dyv=dyv, dtv=dtv, Phi=Phi,
                              h_dev=dyv - profile.du))
    return out


def scattering_profile(profile, omega_hat, t, Phi):
    """Pull-back W(t): each mode shifted by exp(ik (t u(y) + Phi(t, y)))."""
    Kp1 = omega_hat.shape[0]
    shift = t * profile.u + Phi
    phases = np.exp(1j * np.arange(Kp1)[:, None] * shift[None, :])
    return omega_hat * phases


def scattering_distance(profile, W1, W2):
    w = st.trapz_weights(profile.n_y, profile.h)
    d2 = float(w @ np.abs(W1[0] - W2[0]) ** 2)
    for k in range(1, W1.shape[0]):
        d2 += 2 * float(w @ np.abs(W1[k] - W2[k]) ** 2)
    return np.sqrt(d2)


def damping_rates(times, values, window=None):
    """Least-squares slope of log(value) against log(t).

    Needs at least 10 samples spanning a time decade inside the window.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, values = times[keep], values[keep]
    pos = (times > 0) & (values > 0)
    times, values = times[pos], values[pos]
    if times.size < 10:
        raise WindowTooShort(f"only {times.size} usable samples")
    if times.max() / times.min() < 10.0 - 1e-9:
        raise WindowTooShort("samples span less than a time decade")
    coef, residuals, *_ = np.polyfit(np.log(times), np.log(values), 1, full=True)
    resid = float(residuals[0]) if len(residuals) else 0.0
    return {"exponent": float(coef[0]), "amplitude": float(np.exp(coef[1])),
            "residual": resid, "n_samples": int(times.size)}

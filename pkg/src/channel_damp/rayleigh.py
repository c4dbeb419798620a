"""Distorted Rayleigh machinery for one x-wavenumber.

Builds, per wavenumber k: the homogeneous solutions phi1(y, y') marched
outward from every singular point y' on the grid, the boundary-value kernel
e(y, y'), the spectral functions (rho, J1, J2), the principal-value operators
Pi1/Pi2, limiting-absorption resolvent boundary values, and the
representation formula that evolves the stream function without time
stepping.

The kernel e is always assembled through its decomposition into a constant
part, an explicit logarithmic part and smooth one-sided remainders; that is
what makes the principal-value quadratures behave.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import _stencils as st
from .errors import (
    BoundaryPoint,
    MissingHomTable,
    NearEigenvalue,
    NonFiniteValue,
    SingularStartFailure,
)

NEAR_EIGEN_TOL = 1e-8
DEFAULT_EPS0 = 1e-3


# ---------------------------------------------------------------------------
# homogeneous solutions
# ---------------------------------------------------------------------------

@dataclass
class HomSolutionTable:
    """phi1(y, y', k) and its y-derivative for every grid singular point.

    Arrays are indexed [field point z, singular point y'].
    """

    k: int
    yprime_grid: np.ndarray
    phi1: np.ndarray
    dphi1: np.ndarray
    eps: float = 0.0
    wron_int: Optional[np.ndarray] = None  # int theta/phi^2 dz (eps != 0 only)


def _series_coeffs(profile, k):
    """Local Taylor coefficients of phi1 about each singular point.

    phi1 = 1 + c2 D^2 + c3(y') D^3 + c4(y') D^4 with D = y - y'.
    """
    du, d2u, d3u = profile.du, profile.d2u, profile.d3u
    th, dth, d2th = profile.theta, profile.dtheta, profile.d2theta
    alpha = d2u / du - dth / th
    beta = (d3u / (3 * du) + d2u**2 / (4 * du**2) - d2u * dth / (du * th)
            + dth**2 / th**2 - d2th / (2 * th))
    k2 = float(k) ** 2
    c2 = k2 / 6.0
    c3 = -alpha * k2 / 36.0
    c4 = (-(2.0 / 3.0) * k2 * beta + k2 * k2 / 6.0 + (5.0 / 12.0) * alpha**2 * k2) / 20.0
    return c2, c3, c4


def _series_eval(c2, c3, c4, delta):
    phi = 1.0 + c2 * delta**2 + c3 * delta**3 + c4 * delta**4
    dphi = 2 * c2 * delta + 3 * c3 * delta**2 + 4 * c4 * delta**3
    return phi, dphi


_SUBSTEP_C = 0.5


def _near_substeps(m, h):
    """Substep count for the cell m steps away from the singular point.

    Scaling n_sub ~ (m h)^(-1/2) keeps the accumulated near-singularity RK4
    error at O(h^4); a single step there would lock the march to O(h^2).
    """
    return max(1, int(np.ceil(_SUBSTEP_C / np.sqrt(m * h))))


def _march_real(profile, k):
    """Vectorized outward RK4 march of phi1 for every on-grid singular point."""
    n = profile.n_y
    h = profile.h
    u, th = profile.u, profile.theta
    y = profile.y
    u_mid, th_mid = profile.u_mid, profile.theta_mid
    u_fn, th_fn = profile.u_fn, profile.theta_fn
    c2, c3, c4 = _series_coeffs(profile, k)
    k2 = float(k) ** 2

    phi = np.full((n, n), np.nan)
    dphi = np.full((n, n), np.nan)

    cols = np.arange(n)
    for off in (-2, -1, 0, 1, 2):
        ok = (cols + off >= 0) & (cols + off <= n - 1)
        c = cols[ok]
        p, dp = _series_eval(c2, c3[c], c4[c], off * h)
        phi[c + off, c] = p
        dphi[c + off, c] = dp

    def q_at_nodes(p_idx, c_idx):
        return (u[p_idx] - u[c_idx]) ** 2 / th[p_idx]

    def rk4_step(F, P, q0, qm, q1, step):
        # F' = P/q, P' = k^2 q F
        k1F = P / q0
        k1P = k2 * q0 * F
        k2F = (P + 0.5 * step * k1P) / qm
        k2P = k2 * qm * (F + 0.5 * step * k1F)
        k3F = (P + 0.5 * step * k2P) / qm
        k3P = k2 * qm * (F + 0.5 * step * k2F)
        k4F = (P + step * k3P) / q1
        k4P = k2 * q1 * (F + step * k3F)
        Fn = F + (step / 6) * (k1F + 2 * k2F + 2 * k3F + k4F)
        Pn = P + (step / 6) * (k1P + 2 * k2P + 2 * k3P + k4P)
        return Fn, Pn

    for direction in (+1, -1):
        m = 2
        act = cols[(cols + 2 * direction >= 0) & (cols + 2 * direction <= n - 1)]
        F = phi[act + 2 * direction, act].copy()
        P = q_at_nodes(act + 2 * direction, act) * dphi[act + 2 * direction, act]
        while act.size:
            tgt = act + direction * (m + 1)
            step_ok = (tgt >= 0) & (tgt <= n - 1)
            act = act[step_ok]
            if not act.size:
                break
            F, P = F[step_ok], P[step_ok]
            nsub = _near_substeps(m, h)
            if nsub == 1:
                p0 = act + direction * m
                q0 = q_at_nodes(p0, act)
                mid = p0 if direction > 0 else p0 - 1
                qm = (u_mid[mid] - u[act]) ** 2 / th_mid[mid]
                q1 = q_at_nodes(p0 + direction, act)
                F, P = rk4_step(F, P, q0, qm, q1, direction * h)
            else:
                step = direction * h / nsub
                y0 = y[act + direction * m].astype(float)
                uc = u[act]
                for _ in range(nsub):
                    qa = (u_fn(y0) - uc) ** 2 / th_fn(y0)
                    qb = (u_fn(y0 + step / 2) - uc) ** 2 / th_fn(y0 + step / 2)
                    qc = (u_fn(y0 + step) - uc) ** 2 / th_fn(y0 + step)
                    F, P = rk4_step(F, P, qa, qb, qc, step)
                    y0 = y0 + step
            m += 1
            rows = act + direction * m
            phi[rows, act] = F
            dphi[rows, act] = P / q_at_nodes(rows, act)

    if not np.isfinite(phi).all():
        raise NonFiniteValue("phi1 march produced non-finite values")
    return phi, dphi


def phi1_table(profile, k) -> HomSolutionTable:
    """Homogeneous-solution table for all on-grid singular points."""
    if k == 0:
        raise SingularStartFailure("phi1 is defined for k != 0 only")
    phi, dphi = _march_real(profile, abs(int(k)))
    return HomSolutionTable(k=int(k), yprime_grid=profile.y, phi1=phi, dphi1=dphi)


def phi1_solve(profile, k, yprime):
    """phi1(., y', k) and its derivative for one singular point (snapped to grid)."""
    tab = phi1_table(profile, k)
    c = int(np.argmin(np.abs(profile.y - yprime)))
    return tab.phi1[:, c], tab.dphi1[:, c]


def _march_eps(profile, k, eps, cols=None, n_sub_cap=2048):
    """Complex regularized march from each singular point, with substepping.

    Returns (phi table, dphi table, wronskian integrals int_0^1 theta/phi^2).
    Only the requested columns are computed.
    """
    n = profile.n_y
    h = profile.h
    y = profile.y
    u, th = profile.u, profile.theta
    k2 = float(k) ** 2
    if cols is None:
        cols = np.arange(n)
    cols = np.asarray(cols, dtype=int)

    eps_scale = abs(eps) / profile.du.min()
    n_sub = int(min(n_sub_cap, max(8, np.ceil(8 * h / max(eps_scale, h / 64)))))

    phi = np.full((n, cols.size), np.nan, dtype=complex)
    dphi = np.full((n, cols.size), np.nan, dtype=complex)
    wint = np.zeros(cols.size, dtype=complex)

    u_fn, th_fn = profile.u_fn, profile.theta_fn
    uc = u[cols]

    def q_of(yy, ucv, thv=None):
        thv = th_fn(yy) if thv is None else thv
        return (u_fn(yy) - ucv - 1j * eps) ** 2 / thv

    def rk4(F, P, y0, step, ucv):
        q0 = q_of(y0, ucv)
        qm = q_of(y0 + step / 2, ucv)
        q1 = q_of(y0 + step, ucv)
        k1F = P / q0
        k1P = k2 * q0 * F
        k2F = (P + 0.5 * step * k1P) / qm
        k2P = k2 * qm * (F + 0.5 * step * k1F)
        k3F = (P + 0.5 * step * k2P) / qm
        k3P = k2 * qm * (F + 0.5 * step * k2F)
        k4F = (P + step * k3P) / q1
        k4P = k2 * q1 * (F + step * k3F)
        return (F + (step / 6) * (k1F + 2 * k2F + 2 * k3F + k4F),
                P + (step / 6) * (k1P + 2 * k2P + 2 * k3P + k4P))

    # the Wronskian integral int theta/phi_eps^2 splits into an explicitly
    # integrable singular part and a bounded phi1-correction accumulated
    # during the march at substep resolution
    for direction in (+1, -1):
        F = np.ones(cols.size, dtype=complex)
        P = np.zeros(cols.size, dtype=complex)
        alive = np.ones(cols.size, dtype=bool)
        phi[cols, np.arange(cols.size)] = 1.0
        dphi[cols, np.arange(cols.size)] = 0.0
        offset = 0
        integ_prev = np.zeros(cols.size, dtype=complex)
        while True:
            tgt = cols + direction * (offset + 1)
            alive = alive & (tgt >= 0) & (tgt <= n - 1)
            if not alive.any():
                break
            idx = np.where(alive)[0]
            sub = n_sub if offset < 2 else 1
            step = direction * h / sub
            y0 = y[cols[idx] + direction * offset].astype(float)
            Fa, Pa = F[idx], P[idx]
            ucv = uc[idx]
            prev = integ_prev[idx]
            acc = np.zeros(idx.size, dtype=complex)
            for s in range(sub):
                Fa, Pa = rk4(Fa, Pa, y0, step, ucv)
                y0 = y0 + step
                cur = (th_fn(y0) * (1.0 / Fa**2 - 1.0)
                       / (u_fn(y0) - ucv - 1j * eps) ** 2)
                acc += (prev + cur) * (step / 2)
                prev = cur
            F[idx], P[idx] = Fa, Pa
            wint[idx] += direction * acc
            integ_prev[idx] = prev
            offset += 1
            rows = cols[idx] + direction * offset
            phi[rows, idx] = Fa
            qend = (u[rows] - ucv - 1j * eps) ** 2 / th[rows]
            dphi[rows, idx] = Pa / qend
    # explicit singular part: int theta/(u - u_c - i eps)^2 by parts
    gm = th / profile.du
    g = st.deriv1(gm, h)
    w = st.trapz_weights(n, h)
    zeta = u[:, None] - uc[None, :] - 1j * eps
    bnd = -gm[-1] / zeta[-1, :] + gm[0] / zeta[0, :]
    sub_int = (g[:, None] - (g[cols] / profile.du[cols])[None, :] * profile.du[:, None]) / zeta
    logs = (g[cols] / profile.du[cols]) * (np.log(zeta[-1, :]) - np.log(zeta[0, :]))
    wint += bnd + w @ sub_int + logs
    if not np.isfinite(phi[:, 0]).all():
        raise NonFiniteValue("regularized phi1 march produced non-finite values")
    return phi, dphi, wint


def phi1_eps_solve(profile, k, yprime, eps):
    """Regularized phi1(., y', eps, k) for one singular point."""
    if eps == 0:
        raise SingularStartFailure("eps must be nonzero; use phi1_solve for eps=0")
    if k == 0:
        raise SingularStartFailure("phi1 is defined for k != 0 only")
    c = int(np.argmin(np.abs(profile.y - yprime)))
    phi, dphi, wint = _march_eps(profile, abs(int(k)), eps, cols=[c])
    return phi[:, 0], dphi[:, 0], complex(wint[0])


# ---------------------------------------------------------------------------
# principal value helpers
# ---------------------------------------------------------------------------

def hilbert_pv(g, u_grid, c):
    """P.V. int g(u)/(c - u) du over the sampled (possibly non-uniform) grid.

    Singularity subtraction: the regular part is integrated by trapezoid and
    the subtracted constant contributes the exact logarithm.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    g = np.asarray(g)
    if not (u_grid[0] < c < u_grid[-1]):
        raise BoundaryPoint(f"c = {c} is not interior to [{u_grid[0]}, {u_grid[-1]}]")
    i = int(np.argmin(np.abs(u_grid - c)))
    if i == 0 or i == u_grid.size - 1:
        raise BoundaryPoint("c snapped to an endpoint of the grid")
    cval = u_grid[i]
    vals = np.empty_like(g, dtype=np.result_type(g.dtype, float))
    mask = np.ones(u_grid.size, dtype=bool)
    mask[i] = False
    vals[mask] = (g[mask] - g[i]) / (cval - u_grid[mask])
    # at the singular node the integrand limit is -g'(c)
    dgdu = (g[i + 1] - g[i - 1]) / (u_grid[i + 1] - u_grid[i - 1])
    vals[i] = -dgdu
    quad = np.trapezoid(vals, u_grid)
    return quad + g[i] * np.log(abs((cval - u_grid[0]) / (u_grid[-1] - cval)))


def _hilbert_pv_interior(g, u_grid, du, h):
    """hilbert_pv evaluated at every interior grid point, vectorized.

    Written as a uniform-grid y-integral of the subtracted (smooth) integrand
    with Euler-Maclaurin endpoint corrections, plus the exact logarithm.
    """
    n = u_grid.size
    g = np.asarray(g, dtype=float)
    w = st.trapz_weights(n, h) + st.em_end_weights(n, h)
    dg = st.deriv1(g, h)
    diff = u_grid[:, None] - u_grid[None, :]          # c_i - u_j
    np.fill_diagonal(diff, 1.0)
    K = (g[None, :] - g[:, None]) * du[None, :] / diff
    K[np.arange(n), np.arange(n)] = -dg
    out = K @ w
    out[1:-1] += g[1:-1] * np.log((u_grid[1:-1] - u_grid[0]) / (u_grid[-1] - u_grid[1:-1]))
    out[0] = out[-1] = 0.0
    return out


# ---------------------------------------------------------------------------
# spectral functions and the kernel e(y, y')
# ---------------------------------------------------------------------------

@dataclass
class SpectralFunctions:
    k: int
    yprime_grid: np.ndarray
    rho: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    indicator: np.ndarray


@dataclass
class EKernelTable:
    """Kernel e[z, y'] plus the pieces of its singular decomposition."""

    k: int
    e: np.ndarray
    g0: np.ndarray            # theta/u' at y'
    g1: np.ndarray            # (theta/u')'/u' at y'
    a_table: np.ndarray       # theta (phi1^{-2}-1)/(u-u(y'))^2, diagonal patched
    r_table: np.ndarray       # phi_re/(u-u(y')), diagonal = one-sided average
    r_left: np.ndarray
    r_right: np.ndarray
    log_u_smooth: np.ndarray  # ln|u(z)-u(y')| - ln|z-y'| (smooth), [z, y']


def _a_table(profile, tab):
    """Integrand theta(z) (phi1^{-2} - 1)/(u(z)-u(y'))^2 with patched diagonal."""
    u, th, du = profile.u, profile.theta, profile.du
    k2 = float(tab.k) ** 2
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, 1.0)
    A = th[:, None] * (1.0 / tab.phi1**2 - 1.0) / diff**2
    np.fill_diagonal(A, -th * k2 / (3 * du**2))
    return A


def e_kernel_table(profile, tab: HomSolutionTable) -> EKernelTable:
    """Assemble e(z, y') through the constant/log/regular decomposition."""
    n = profile.n_y
    h = profile.h
    y, u, th, du = profile.y, profile.u, profile.theta, profile.du
    gm = th / du                                   # m(u(y)) = theta/u'
    gmp = st.deriv1(gm, h)                         # d/dy (theta/u')
    g0 = gm.copy()
    g1 = gmp / du                                  # m'(v) at v = u(y')
    gmpp = st.deriv1(gmp, h)
    m2 = (gmpp / du - gmp * profile.d2u / du**2) / du   # m''(v)

    phi1 = tab.phi1
    diff = u[:, None] - u[None, :]                 # u(z) - u(y')
    np.fill_diagonal(diff, 1.0)
    phi = diff * phi1
    dz = y[:, None] - y[None, :]
    np.fill_diagonal(dz, 1.0)

    # A_j: cumulative integrals of the patched ratio integrand
    A = _a_table(profile, tab)
    A0 = st.cumtrapz0_em(A, h, axis=0)
    A1 = A0 - A0[-1][None, :]

    # B_j: second-difference-quotient integrand of m, cumulated from each wall
    B_int = du[:, None] * (gm[:, None] - gm[None, :] - g1[None, :] * diff) / diff**2
    np.fill_diagonal(B_int, du * m2 / 2)
    B0 = st.cumtrapz0_em(B_int, h, axis=0)
    B1 = B0 - B0[-1][None, :]

    log_abs = np.log(np.abs(diff))
    np.fill_diagonal(log_abs, 0.0)
    log_u_smooth = log_abs - np.log(np.abs(dz))
    np.fill_diagonal(log_u_smooth, np.log(du))

    # array layout is [z, y']: z < y' is the strict upper triangle
    lower = np.triu(np.ones((n, n)), 1) > 0        # z < y'
    upper = np.tril(np.ones((n, n)), -1) > 0       # z > y'

    phi_re = np.zeros((n, n))
    for side, AB, j_idx in ((lower, A0 + B0, 0), (upper, A1 + B1, n - 1)):
        uj = u[j_idx]
        denom = uj - u[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            term4 = g0[None, :] * diff / denom * phi1
            term5 = -phi * g1[None, :] * np.log(np.abs(denom))
        contrib = phi * AB + g0[None, :] * (1.0 - phi1) + term4 + term5
        phi_re[side] = contrib[side]

    e = -g0[None, :] + phi * g1[None, :] * log_abs + phi_re
    e[np.arange(n), np.arange(n)] = -g0

    # one-sided diagonal limits of phi_re/(u - u(y')) for interior y'
    idx = np.arange(n)
    r_left = np.zeros(n)
    r_right = np.zeros(n)
    inner = idx[1:-1]
    for arr, AB, j_idx in ((r_left, A0 + B0, 0), (r_right, A1 + B1, n - 1)):
        uj = u[j_idx]
        arr[inner] = (AB[inner, inner] + g0[inner] / (uj - u[inner])
                      - g1[inner] * np.log(np.abs(uj - u[inner])))
    r_table = np.zeros((n, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        r_table[lower] = (phi_re / diff)[lower]
        r_table[upper] = (phi_re / diff)[upper]
    r_table[idx, idx] = 0.5 * (r_left + r_right)

    return EKernelTable(k=tab.k, e=e, g0=g0, g1=g1, a_table=A,
                        r_table=r_table, r_left=r_left, r_right=r_right,
                        log_u_smooth=log_u_smooth)


def j_functions(profile, k, tab: Optional[HomSolutionTable] = None,
                a_table: Optional[np.ndarray] = None) -> SpectralFunctions:
    """Spectral functions rho, J1, J2 and the no-embedded-eigenvalue indicator."""
    if tab is None:
        tab = phi1_table(profile, k)
    if tab.k != k:
        raise MissingHomTable(f"table is for k={tab.k}, requested k={k}")
    y, u, th, du, h = profile.y, profile.u, profile.theta, profile.du, profile.h
    n = profile.n_y
    rho = (u - u[0]) * (u[-1] - u)
    bterm = -(u[-1] - u) * th[0] / du[0] - (u - u[0]) * th[-1] / du[-1]
    A = a_table if a_table is not None else _a_table(profile, tab)
    w = st.trapz_weights(n, h) + st.em_end_weights(n, h)
    R = w @ A
    # Hilbert-transform term on the u-image grid
    g_im = st.deriv1(th / du, h) / du              # ((theta o u^-1)(u^-1)')'(u(y))
    H = _hilbert_pv_interior(g_im, u, du, h)
    J1 = bterm + rho * R - rho * H
    J2 = -rho * th**2 / du**3 * profile.coeffs["phi1"]
    indicator = (J1**2 + np.pi**2 * J2**2) / (1.0 + k * k * rho**2)
    return SpectralFunctions(k=k, yprime_grid=y, rho=rho, J1=J1, J2=J2,
                             indicator=indicator)


# ---------------------------------------------------------------------------
# Pi operators
# ---------------------------------------------------------------------------

def pi_operators(profile, k, omega_hat, tab: Optional[HomSolutionTable] = None):
    """(Pi1, Pi2) profiles over all interior singular points.

    Pi2 is pointwise theta omega / u'^2.  Pi1 is the principal-value part of
    the limiting-absorption boundary value, assembled from its four pieces:
    boundary contributions, the Hilbert transform on the u-image grid, the
    antiderivative correction, and the phi1 correction double integral.
    """
    if tab is None:
        tab = phi1_table(profile, k)
    y, u, th, du, h = profile.y, profile.u, profile.theta, profile.du, profile.h
    n = profile.n_y
    om = np.asarray(omega_hat)
    w = st.trapz_weights(n, h) + st.em_end_weights(n, h)

    Pi2 = th * om / du**2

    C = st.cumtrapz0_em(om, h)
    Omega = C[:, None] - C[None, :]                # int_{y'}^{z} omega
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, 1.0)

    # (i) boundary evaluations (interior singular points only)
    den0 = u[0] - u
    den1 = u[-1] - u
    den0[0] = den1[-1] = 1.0
    t_bnd = (th[0] * Omega[0, :] / (du[0] ** 2 * den0)
             - th[-1] * Omega[-1, :] / (du[-1] ** 2 * den1))
    t_bnd[0] = t_bnd[-1] = 0.0

    # (ii) Hilbert transform of theta omega / u'^2 on the u-image grid
    g_t = th * om / du**2
    if np.iscomplexobj(om):
        t_hil = -( _hilbert_pv_interior(g_t.real, u, du, h)
                   + 1j * _hilbert_pv_interior(g_t.imag, u, du, h))
    else:
        t_hil = -_hilbert_pv_interior(g_t, u, du, h)

    # (iii) antiderivative against m'(v): int Omega (theta/u')' /(u - u(y'))
    gmp = st.deriv1(th / du, h)
    K3 = Omega * gmp[:, None] / diff
    np.fill_diagonal(K3, om * gmp / du)
    t_anti = w @ K3

    # (iv) phi1-correction double integral
    P = st.cumtrapz0_em(om[:, None] * tab.phi1, h, axis=0)
    P = P - P[np.arange(n), np.arange(n)][None, :]
    K4 = th[:, None] * (P / tab.phi1**2 - Omega) / diff**2
    k2 = float(k) ** 2
    lin = -(5.0 / 18.0) * k2 * th * om / du**2
    d = np.arange(n)
    for off in (-1, 0, 1):
        rows = d[(d + off >= 0) & (d + off <= n - 1)]
        K4[rows + off, rows] = lin[rows] * (off * h)
    t_corr = w @ K4

    Pi1 = t_bnd + t_hil + t_anti + t_corr
    Pi1[0] = Pi1[-1] = 0.0
    return Pi1, Pi2


def pi1_matrix(profile, k, tab: HomSolutionTable, ek: EKernelTable,
               log_w: Optional[np.ndarray] = None) -> np.ndarray:
    """Dense matrix of Pi1 built from the e-kernel decomposition.

    Pi1[omega](y') = -P.V. int e(z, y')/(u(z) - u(y')) omega(z) dz; rows for
    wall points are zero (every use multiplies them by rho or phi1-coef,
    both of which vanish there).  The principal-value and regular parts use
    Euler-Maclaurin corrected trapezoids so the assembly converges faster
    than the plain second-order rule.
    """
    n = profile.n_y
    h = profile.h
    y, u, du, d2u = profile.y, profile.u, profile.du, profile.d2u
    w = st.trapz_weights(n, h)
    wem = w + st.em_end_weights(n, h)
    if log_w is None:
        log_w = st.log_weights_all(n, h)
    Dy = st.deriv1_matrix(n, h)
    em0 = st.fd_weights(np.arange(5) * h, 0.0, 1) * (h * h / 12)
    em1 = st.fd_weights(np.arange(5) * h, 4 * h, 1) * (h * h / 12)

    diff_zc = u[:, None] - u[None, :]              # u(z) - u(c) [z, c]
    np.fill_diagonal(diff_zc, 1.0)

    # (a) -g0(c) * PV int omega(z)/(u(z)-u(c)) dz  (smooth after subtraction)
    # The endpoint-corrected weights are used only for rows well separated
    # from the walls; stencils would straddle the singular node otherwise.
    # Near-wall rows keep the plain rule (their wave-kernel use is damped by
    # rho and the compactly supported coefficient anyway).
    S = np.zeros((n, n))
    inner = np.arange(1, n - 1)
    W_rows = np.tile(w, (n, 1))
    W_rows[5:n - 5, :] = wem[None, :]
    PV = np.zeros((n, n))
    M = (W_rows / diff_zc.T)                       # [c, z] weights; diagonal junk
    np.fill_diagonal(M, 0.0)
    PV[inner, :] = M[inner, :]
    L = np.zeros(n)
    L[inner] = np.log((u[-1] - u[inner]) / (u[inner] - u[0]))
    corr = np.zeros(n)
    sum_term = (M * du[None, :]).sum(axis=1)       # sum_j w_j u'_j/(u_j-u_c)
    corr[inner] = (-sum_term[inner] / du[inner] + L[inner] / du[inner]
                   - w[inner] * d2u[inner] / du[inner] ** 2)
    PV[inner, inner] += corr[inner]
    PV[inner, :] += (w[inner] / du[inner])[:, None] * Dy[inner, :]

    S += -ek.g0[:, None] * PV

    # (b) g1(c) * int phi1(z,c) ln|u(z)-u(c)| omega(z) dz; the smooth
    # log-ratio piece gets endpoint corrections, the genuine log piece keeps
    # the exact product rule (its prefactor g1 vanishes with the bump)
    LOG = log_w + W_rows * ek.log_u_smooth.T       # [c, z]
    S += ek.g1[:, None] * (LOG * tab.phi1.T)

    # (c) regular jump part: per-side trapezoid with one-sided averages at
    # the diagonal plus endpoint and diagonal Euler-Maclaurin corrections
    R = w[None, :] * ek.r_table.T
    R[5:n - 5, :5] += em0[None, :] * ek.r_table.T[5:n - 5, :5]
    R[5:n - 5, -5:] -= em1[None, :] * ek.r_table.T[5:n - 5, -5:]
    band = np.arange(5, n - 6)
    if band.size:
        bw = st.fd_weights(np.arange(5) * h, 4 * h, 1) * (h * h / 12)
        fw = st.fd_weights(np.arange(5) * h, 0.0, 1) * (h * h / 12)
        for j in range(5):
            colL = band - 4 + j
            vL = ek.r_left[band] if j == 4 else ek.r_table[colL, band]
            R[band, colL] -= bw[j] * vL
            colR = band + j
            vR = ek.r_right[band] if j == 0 else ek.r_table[colR, band]
            R[band, colR] += fw[j] * vR
    S += R

    S[0, :] = 0.0
    S[-1, :] = 0.0
    return -S


# ---------------------------------------------------------------------------
# stability scan
# ---------------------------------------------------------------------------

@dataclass
class StabilityReport:
    k_max: int
    verdict: str
    indicator_floor: Dict[int, float]
    wronskian_floor: Dict[int, float]
    suspects: list = field(default_factory=list)


def spectral_assumption_check(profile, k_max, eps0=DEFAULT_EPS0,
                              indicator_tol=1e-6, wronskian_tol=1e-6,
                              scan_stride=4) -> StabilityReport:
    """Scan 0 < |k| <= k_max for embedded eigenvalues and eigenvalues.

    (a) embedded: near-zeros of the normalized indicator (J1^2 + pi^2 J2^2);
    (b) eigenvalue: near-zeros of int theta/phi(.,y',eps0,k)^2 along the
        shifted spectrum line c = u(y') + i eps0.
    """
    suspects = []
    ind_floor = {}
    wron_floor = {}
    cols = np.arange(1, profile.n_y - 1, scan_stride)
    for k in range(1, int(k_max) + 1):
        tab = phi1_table(profile, k)
        spec = j_functions(profile, k, tab)
        floor = float(spec.indicator[1:-1].min())
        ind_floor[k] = floor
        if floor < indicator_tol:
            yy = profile.y[1 + int(np.argmin(spec.indicator[1:-1]))]
            suspects.append({"k": k, "type": "embedded", "yprime": float(yy)})
        _, _, wint = _march_eps(profile, k, eps0, cols=cols)
        rho = spec.rho[cols]
        wmag = np.abs(wint) * rho / np.sqrt(1.0 + k * k * rho**2)
        wfloor = float(wmag.min())
        wron_floor[k] = wfloor
        if wfloor < wronskian_tol:
            yy = profile.y[cols[int(np.argmin(wmag))]]
            suspects.append({"k": k, "type": "wronskian", "yprime": float(yy)})
    verdict = "stable" if not suspects else "suspect"
    return StabilityReport(k_max=int(k_max), verdict=verdict,
                           indicator_floor=ind_floor, wronskian_floor=wron_floor,
                           suspects=suspects)


# ---------------------------------------------------------------------------
# resolvent limits and the representation formula
# ---------------------------------------------------------------------------

@dataclass
class ResolventLimit:
    k: int
    yprime: float
    sign: int
    psiI: np.ndarray
    pi1_val: complex
    pi2_val: complex


class SpectralData:
    """Cached per-(profile, k) tables used by the representation formula."""

    def __init__(self, profile, k):
        if k == 0:
            raise SingularStartFailure("spectral data requires k != 0")
        self.profile = profile
        self.k = int(k)
        self.tab = phi1_table(profile, abs(self.k))
        self.ek = e_kernel_table(profile, self.tab)
        self.spec = j_functions(profile, abs(self.k), self.tab,
                                a_table=self.ek.a_table)

    def guard_eigenvalue(self):
        s = self.spec
        denom = np.sqrt(s.J1**2 + np.pi**2 * s.J2**2) / np.sqrt(1 + self.k**2 * s.rho**2)
        if denom[1:-1].min() < NEAR_EIGEN_TOL:
            raise NearEigenvalue(
                f"|J1 + i pi J2| floor {denom[1:-1].min():.3e} below {NEAR_EIGEN_TOL}"
            )

    def psi_hat(self, omega0_hat, t):
        """Stream function at time t from the representation formula."""
        self.guard_eigenvalue()
        prof = self.profile
        k = self.k
        om = np.asarray(omega0_hat, dtype=complex)
        Pi1, Pi2 = pi_operators(prof, abs(k), om, self.tab)
        s = self.spec
        weight = (s.J1 * Pi2 - s.J2 * Pi1) / (s.J1**2 + np.pi**2 * s.J2**2)
        phase = np.exp(-1j * prof.u * k * t)
        wq = st.simpson_weights(prof.n_y, prof.h)
        dens = phase * weight * s.rho * prof.du * wq
        return -(self.ek.e @ dens)


def resolvent_limit(profile, k, omega_hat, yprime, sign,
                    data: Optional[SpectralData] = None) -> ResolventLimit:
    """Boundary value Psi_pm^I of the resolvent at c = u(y') +- i0."""
    if data is None:
        data = SpectralData(profile, k)
    data.guard_eigenvalue()
    sgn = 1 if sign >= 0 else -1
    n = profile.n_y
    y, u, th, h = profile.y, profile.u, profile.theta, profile.h
    c = int(np.argmin(np.abs(y - yprime)))
    if c == 0 or c == n - 1:
        raise BoundaryPoint("yprime must be interior")
    om = np.asarray(omega_hat, dtype=complex)
    tab = data.tab
    phi1c = tab.phi1[:, c]
    diff = u - u[c]
    diff_safe = diff.copy()
    diff_safe[c] = 1.0
    phic = diff * phi1c

    Pi1, Pi2 = pi_operators(profile, abs(k), om, tab)
    s = data.spec
    ratio = (s.rho[c] * (Pi1[c] + sgn * 1j * np.pi * Pi2[c])
             / (s.J1[c] + sgn * 1j * np.pi * s.J2[c]))

    Pcum = st.cumtrapz0(om * phi1c, h)
    Pcum = Pcum - Pcum[c]
    integrand = th * Pcum / (diff_safe**2 * phi1c**2)
    integrand[c] = 0.0
    T0 = st.cumtrapz0(integrand, h)
    T1 = T0 - T0[-1]

    psi = np.zeros(n, dtype=complex)
    left = np.arange(n) < c
    right = np.arange(n) > c
    psi[left] = -phic[left] * T0[left] + ratio * data.ek.e[left, c]
    psi[right] = -phic[right] * T1[right] + ratio * data.ek.e[right, c]
    # diagonal point via two-sided average of neighbors
    psi[c] = 0.5 * (psi[c - 1] + psi[c + 1])
    return ResolventLimit(k=k, yprime=float(y[c]), sign=sgn, psiI=psi,
                          pi1_val=complex(Pi1[c]), pi2_val=complex(Pi2[c]))


def representation_psi(profile, k, omega0_hat, t,
                       data: Optional[SpectralData] = None):
    """psi_hat(t, k, .) via the spectral representation (no time stepping)."""
    if data is None:
        data = SpectralData(profile, k)
    return data.psi_hat(omega0_hat, t)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def export_hom_table_csv(path, tab: HomSolutionTable, stride=8):
    """Write phi1 columns (decimated) as CSV for plotting."""
    import csv

    cols = list(range(0, tab.yprime_grid.size, stride))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["y"] + [f"phi1_yp{tab.yprime_grid[c]:.6f}" for c in cols])
        for i, yv in enumerate(tab.yprime_grid):
            wr.writerow([repr(float(yv))] + [repr(float(tab.phi1[i, c])) for c in cols])


def export_spectral_csv(path, spec: SpectralFunctions):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["yprime", "rho", "J1", "J2", "indicator"])
        for i in range(spec.yprime_grid.size):
            wr.writerow([repr(float(v)) for v in
                         (spec.yprime_grid[i], spec.rho[i], spec.J1[i],
                          spec.J2[i], spec.indicator[i])])

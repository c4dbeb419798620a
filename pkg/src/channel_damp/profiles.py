"""Background shear/density profiles for the channel, with validation.

A profile bundles the shear u(y), the inverse density theta(y), their
derivatives, the smooth cut-offs, and the derived coefficient table used by
the spectral and evolution modules.  Built-in families are defined through
closed-form callables so that refining the grid refines the *sampling* of a
fixed function; this keeps grid-convergence studies honest.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import _stencils as st
from .errors import (
    GridTooCoarse,
    InvalidInterval,
    MonotonicityViolation,
    ParseError,
    PositivityViolation,
    SupportViolation,
    UnknownKey,
)

_MASTER_N = 8193  # resolution used to tabulate antiderivatives of bumps

SUPPORT_TOL = 1e-12


def _phi(x):
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C^inf step: 0 for x<=0, 1 for x>=1, exp(-1/x) blend between."""
    x = np.asarray(x, dtype=float)
    a = _phi(x)
    b = _phi(1.0 - x)
    return a / (a + b)


def smooth_step_d(x):
    """Derivative of smooth_step."""
    x = np.asarray(x, dtype=float)
    a = _phi(x)
    b = _phi(1.0 - x)
    da = np.zeros_like(x)
    db = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    da[inside] = np.exp(-1.0 / xi) / xi**2
    db[inside] = np.exp(-1.0 / (1.0 - xi)) / (1.0 - xi) ** 2
    s = a + b
    out = np.zeros_like(x)
    out[inside] = (da[inside] * b[inside] + a[inside] * db[inside]) / s[inside] ** 2
    return out


def bump_fn(a, plateau_lo, plateau_hi, b):
    """Closed-form C^inf bump: 1 on the plateau, 0 outside [a, b]."""
    if not (a < plateau_lo < plateau_hi < b):
        raise InvalidInterval(
            f"need a < plateau_lo < plateau_hi < b, got {a}, {plateau_lo}, {plateau_hi}, {b}"
        )

    def f(y):
        y = np.asarray(y, dtype=float)
        rise = smooth_step((y - a) / (plateau_lo - a))
        fall = smooth_step((b - y) / (b - plateau_hi))
        return rise * fall

    def df(y):
        y = np.asarray(y, dtype=float)
        rise = smooth_step((y - a) / (plateau_lo - a))
        fall = smooth_step((b - y) / (b - plateau_hi))
        drise = smooth_step_d((y - a) / (plateau_lo - a)) / (plateau_lo - a)
        dfall = -smooth_step_d((b - y) / (b - plateau_hi)) / (b - plateau_hi)
        return drise * fall + rise * dfall

    return f, df


def gevrey_cutoff(a, b, plateau_lo, plateau_hi, n_y, grid=None):
    """Sampled C^inf cut-off equal to 1 on [plateau_lo, plateau_hi], 0 outside [a, b]."""
    f, _ = bump_fn(a, plateau_lo, plateau_hi, b)
    y = np.linspace(0.0, 1.0, n_y) if grid is None else np.asarray(grid)
    return f(y)


def _antiderivative_spline(df: Callable, lo=0.0, hi=1.0) -> CubicSpline:
    """Spline of int_lo^y df on a fixed fine master grid (Simpson)."""
    yy = np.linspace(lo, hi, _MASTER_N)
    vals = df(yy)
    h = yy[1] - yy[0]
    # composite Simpson cumulative: pairwise panels, then cubic fill-in
    F = np.zeros(_MASTER_N)
    F[1:] = np.cumsum((vals[1:] + vals[:-1]) * (h / 2))
    # correct trapezoid to Simpson-level accuracy with endpoint-derivative terms
    dv = st.deriv1(vals, h)
    F[1:] -= (h * h / 12) * (dv[1:] - dv[:-1]).cumsum()
    return CubicSpline(yy, F)


@dataclass
class ChannelProfile:
    """Validated background state sampled on a uniform grid over [0, 1]."""

    n_y: int
    y: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    kappa0: float
    c0: float
    family: str
    params: Dict[str, float]
    coeffs: Dict[str, np.ndarray] = field(default_factory=dict)
    chi1: np.ndarray = None
    chi2: np.ndarray = None
    upsilon1: np.ndarray = None
    upsilon2: np.ndarray = None
    report: Dict[str, float] = field(default_factory=dict)
    u_fn: Optional[Callable] = None
    theta_fn: Optional[Callable] = None

    @property
    def h(self):
        return self.y[1] - self.y[0]

    # sampled third/second derivatives used by local series expansions
    @property
    def d3u(self):
        if "_d3u" not in self.report:
            self._d3u = st.deriv1(self.d2u, self.h)
            self.report["_d3u"] = 1.0
        return self._d3u

    @property
    def d2theta(self):
        if "_d2theta" not in self.report:
            self._d2theta = st.deriv1(self.dtheta, self.h)
            self.report["_d2theta"] = 1.0
        return self._d2theta

    def u_at(self, x):
        return self.u_fn(x)

    def theta_at(self, x):
        return self.theta_fn(x)

    @property
    def u_mid(self):
        if not hasattr(self, "_u_mid"):
            self._u_mid = self.u_fn(self.y[:-1] + 0.5 * self.h)
        return self._u_mid

    @property
    def theta_mid(self):
        if not hasattr(self, "_theta_mid"):
            self._theta_mid = self.theta_fn(self.y[:-1] + 0.5 * self.h)
        return self._theta_mid


def _derived_coefficients(y, u, du, d2u, theta, dtheta, chi2, dchi2, h):
    d2chi2 = st.deriv1(dchi2, h)
    phi = {}
    phi["phi1"] = st.deriv1(du / theta, h)
    phi["phi2"] = dtheta / theta
    d2theta = st.deriv1(dtheta, h)
    phi["phi3"] = d2theta / theta**2 - dtheta**2 / theta**3
    phi["phi4"] = 1.0 / theta
    phi["phi5"] = phi["phi2"] * phi["phi4"]
    phi["phi6"] = -2.0 * chi2 * du - 2.0 * u * dchi2
    phi["phi7"] = -du * d2chi2
    phi["phi8"] = d2chi2 * u
    phi["phi9"] = du
    phi["phi10"] = dtheta
    phi["phi11"] = theta
    return phi


def derived_coefficients(profile: ChannelProfile) -> Dict[str, np.ndarray]:
    """Coefficient table phi1..phi11 sampled with the module stencils."""
    dchi2 = getattr(profile, "_dchi2")
    return _derived_coefficients(
        profile.y, profile.u, profile.du, profile.d2u,
        profile.theta, profile.dtheta, profile.chi2, dchi2, profile.h,
    )


def _validate(y, u, du, d2u, theta, dtheta, kappa0, c0, band_slack=0.0):
    report = {}
    report["min_du"] = float(du.min())
    report["min_theta"] = float(theta.min())
    if report["min_du"] < c0:
        raise MonotonicityViolation(f"min u' = {report['min_du']:.3e} < c0 = {c0}")
    if report["min_theta"] < c0:
        raise PositivityViolation(f"min theta = {report['min_theta']:.3e} < c0 = {c0}")
    band = (y >= 4 * kappa0 - band_slack) & (y <= 1 - 4 * kappa0 + band_slack)
    scale_u = max(np.abs(d2u).max(), 1.0)
    scale_t = max(np.abs(dtheta).max(), 1.0)
    out_u = np.abs(d2u[~band]).max(initial=0.0)
    out_t = np.abs(dtheta[~band]).max(initial=0.0)
    report["support_excess_d2u"] = float(out_u / scale_u)
    report["support_excess_dtheta"] = float(out_t / scale_t)
    if out_u > SUPPORT_TOL * scale_u:
        raise SupportViolation(f"u'' leaks outside the support band by {out_u:.3e}")
    if out_t > SUPPORT_TOL * scale_t:
        raise SupportViolation(f"theta' leaks outside the support band by {out_t:.3e}")
    return report


def _assemble(n_y, kappa0, c0, family, params, u_fn, du_fn, d2u_fn, theta_fn,
              dtheta_fn, band_slack=0.0):
    if n_y < 33:
        raise GridTooCoarse(f"n_y = {n_y} < 33")
    if n_y % 2 == 0:
        raise GridTooCoarse(f"n_y = {n_y} must be odd")
    y = np.linspace(0.0, 1.0, n_y)
    h = y[1] - y[0]
    u = u_fn(y)
    du = du_fn(y)
    d2u = d2u_fn(y)
    theta = theta_fn(y)
    dtheta = dtheta_fn(y)
    report = _validate(y, u, du, d2u, theta, dtheta, kappa0, c0, band_slack)

    chi1_f, chi1_df = bump_fn(kappa0, 2 * kappa0, 1 - 2 * kappa0, 1 - kappa0)
    chi2_f, chi2_df = bump_fn(kappa0 / 2, kappa0, 1 - kappa0, 1 - kappa0 / 2)
    chi1 = chi1_f(y)
    chi2 = chi2_f(y)
    dchi2 = chi2_df(y)
    # Upsilon cut-offs live in the v = u(y) variable; sampled along u(y) they
    # are plain y cut-offs at the same thresholds because u is monotone.
    ups1 = chi1.copy()
    ups2 = chi2.copy()

    coeffs = _derived_coefficients(y, u, du, d2u, theta, dtheta, chi2, dchi2, h)
    prof = ChannelProfile(
        n_y=n_y, y=y, u=u, du=du, d2u=d2u, theta=theta, dtheta=dtheta,
        kappa0=kappa0, c0=c0, family=family, params=dict(params),
        coeffs=coeffs, chi1=chi1, chi2=chi2, upsilon1=ups1, upsilon2=ups2,
        report=report, u_fn=u_fn, theta_fn=theta_fn,
    )
    prof._dchi2 = dchi2
    return prof


def couette_constant(n_y, kappa0=0.1, c0=0.5):
    """Couette flow with constant density: u(y)=y, theta=1."""
    one = lambda y: np.ones_like(np.asarray(y, dtype=float))
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    ident = lambda y: np.asarray(y, dtype=float).copy()
    return _assemble(n_y, kappa0, c0, "couette_constant", {}, ident, one, zero, one, zero)


def _band_shape(kappa0):
    """Smooth bump on the support band, scaled so max |bump'| = 1.

    Used to normalize the bump families: with u'' = eps * bump'/max|bump'|
    the perturbation amplitude eps is exactly the sup of (u'/theta)'.
    """
    a, b = 4 * kappa0, 1 - 4 * kappa0
    half = (b - a) / 2
    dp = 0.05 * half
    bf, dbf = bump_fn(a, a + half - dp, b - half + dp, b)
    yy = np.linspace(a, b, 4097)
    scale = float(np.abs(dbf(yy)).max())
    return bf, dbf, scale


def couette_bump(n_y, eps_u=0.05, kappa0=0.1, c0=0.5):
    """Shear with a compactly supported curvature bump, max |u''| = eps_u."""
    bf, dbf, scale = _band_shape(kappa0)
    F = _antiderivative_spline(bf)

    def u_fn(y):
        y = np.asarray(y, dtype=float)
        return y + (eps_u / scale) * F(y)

    du_fn = lambda y: 1.0 + (eps_u / scale) * bf(y)
    d2u_fn = lambda y: (eps_u / scale) * dbf(y)
    one = lambda y: np.ones_like(np.asarray(y, dtype=float))
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    return _assemble(n_y, kappa0, c0, "couette_bump", {"eps_u": eps_u},
                     u_fn, du_fn, d2u_fn, one, zero)


def density_bump(n_y, eps_theta=0.05, kappa0=0.1, c0=0.5):
    """Couette shear with a compactly supported density bump, max |theta'| = eps_theta."""
    bf, dbf, scale = _band_shape(kappa0)
    ident = lambda y: np.asarray(y, dtype=float).copy()
    one = lambda y: np.ones_like(np.asarray(y, dtype=float))
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    theta_fn = lambda y: 1.0 + (eps_theta / scale) * bf(y)
    dtheta_fn = lambda y: (eps_theta / scale) * dbf(y)
    return _assemble(n_y, kappa0, c0, "density_bump", {"eps_theta": eps_theta},
                     ident, one, zero, theta_fn, dtheta_fn)


def custom_profile(n_y, u_samples, theta_samples, kappa0=0.1, c0=0.5):
    """Profile from sampled u and theta.

    Derivatives come from the local 4th-order stencils (a global spline rings
    outside compact supports); the support check allows a 3h-wide estimation
    smear at the band edge.
    """
    if n_y < 33:
        raise GridTooCoarse(f"n_y = {n_y} < 33")
    if n_y % 2 == 0:
        raise GridTooCoarse(f"n_y = {n_y} must be odd")
    y = np.linspace(0.0, 1.0, n_y)
    h = y[1] - y[0]
    u_arr = np.asarray(u_samples, dtype=float)
    t_arr = np.asarray(theta_samples, dtype=float)
    us = CubicSpline(y, u_arr)
    ts = CubicSpline(y, t_arr)
    du = st.deriv1(u_arr, h)
    d2u = st.deriv2(u_arr, h)
    dth = st.deriv1(t_arr, h)

    def tab(arr):
        def f(x):
            x = np.asarray(x, dtype=float)
            if x.shape == y.shape and np.array_equal(x, y):
                return arr.copy()
            return CubicSpline(y, arr)(x)
        return f

    return _assemble(
        n_y, kappa0, c0, "custom", {},
        us, tab(du), tab(d2u), ts, tab(dth), band_slack=3 * h,
    )


_FAMILIES = {
    "couette_constant": couette_constant,
    "couette_bump": couette_bump,
    "density_bump": density_bump,
}


def build_profile(spec: Dict) -> ChannelProfile:
    """Build and validate a profile from a named-family spec dict."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family is None:
        raise ParseError("profile spec needs a 'family' key")
    n_y = int(spec.pop("n_y", 257))
    kappa0 = float(spec.pop("kappa0", 0.1))
    c0 = float(spec.pop("c0", 0.5))
    if family == "custom":
        u_samples = spec.pop("u")
        theta_samples = spec.pop("theta")
        if spec:
            raise UnknownKey(f"unknown profile keys: {sorted(spec)}")
        return custom_profile(n_y, u_samples, theta_samples, kappa0, c0)
    if family not in _FAMILIES:
        raise UnknownKey(f"unknown profile family {family!r}")
    builder = _FAMILIES[family]
    kwargs = {}
    if family == "couette_bump":
        kwargs["eps_u"] = float(spec.pop("eps_u", 0.05))
    if family == "density_bump":
        kwargs["eps_theta"] = float(spec.pop("eps_theta", 0.05))
    if spec:
        raise UnknownKey(f"unknown profile keys: {sorted(spec)}")
    return builder(n_y, kappa0=kappa0, c0=c0, **kwargs)


def to_document(profile: ChannelProfile, include_arrays=False) -> str:
    """Serialize to a small TOML document."""
    lines = ["[profile]"]
    lines.append(f'family = "{profile.family}"')
    lines.append(f"n_y = {profile.n_y}")
    lines.append(f"kappa0 = {profile.kappa0!r}")
    lines.append(f"c0 = {profile.c0!r}")
    for key, val in sorted(profile.params.items()):
        lines.append(f"{key} = {val!r}")
    if include_arrays or profile.family == "custom":
        u_list = ", ".join(repr(float(v)) for v in profile.u)
        t_list = ", ".join(repr(float(v)) for v in profile.theta)
        lines.append(f"u = [{u_list}]")
        lines.append(f"theta = [{t_list}]")
    return "\n".join(lines) + "\n"


def from_document(text: str) -> ChannelProfile:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        data = tomllib.loads(text)
    except Exception as exc:
        raise ParseError(str(exc)) from exc
    if "profile" not in data:
        raise ParseError("missing [profile] table")
    spec = dict(data["profile"])
    if spec.get("family") != "custom":
        spec.pop("u", None)
        spec.pop("theta", None)
    return build_profile(spec)

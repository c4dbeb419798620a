"""Uniform-grid finite-difference stencils and quadrature helpers.

Everything here assumes a uniform grid including both endpoints.  Interior
stencils are 4th order; one-sided closures at the ends are 4th order for
first derivatives and 4th order (6-point) for second derivatives.
"""

import math

import numpy as np


def fd_weights(nodes, x0, m):
    """Finite-difference weights for the m-th derivative at x0 from nodes.

    Small Vandermonde solve; nodes must be distinct.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    A = np.vander(nodes - x0, n, increasing=True).T
    b = np.zeros(n)
    b[m] = float(math.factorial(m))
    return np.linalg.solve(A, b)


def deriv1(f, h):
    """4th-order first derivative of samples f on a uniform grid."""
    f = np.asarray(f)
    out = np.empty_like(f, dtype=np.result_type(f.dtype, float))
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    return out


def deriv2(f, h):
    """4th-order second derivative of samples f on a uniform grid."""
    f = np.asarray(f)
    out = np.empty_like(f, dtype=np.result_type(f.dtype, float))
    out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    out[0] = (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]) / (12 * h * h)
    out[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) / (12 * h * h)
    out[-2] = (10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]) / (12 * h * h)
    out[-1] = (45 * f[-1] - 154 * f[-2] + 214 * f[-3] - 156 * f[-4] + 61 * f[-5] - 10 * f[-6]) / (12 * h * h)
    return out


def deriv1_matrix(n, h):
    """Dense matrix form of deriv1 for an n-point grid."""
    D = np.zeros((n, n))
    for i in range(2, n - 2):
        D[i, i - 2:i + 3] = np.array([1, -8, 0, 8, -1]) / (12 * h)
    D[0, :5] = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    D[1, :5] = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    D[-2, -5:] = -np.array([-3, -10, 18, -6, 1])[::-1] / (12 * h)
    D[-1, -5:] = -np.array([-25, 48, -36, 16, -3])[::-1] / (12 * h)
    return D


def deriv2_matrix(n, h):
    """Dense matrix form of deriv2 for an n-point grid."""
    D = np.zeros((n, n))
    for i in range(2, n - 2):
        D[i, i - 2:i + 3] = np.array([-1, 16, -30, 16, -1]) / (12 * h * h)
    D[0, :6] = np.array([45, -154, 214, -156, 61, -10]) / (12 * h * h)
    D[1, :6] = np.array([10, -15, -4, 14, -6, 1]) / (12 * h * h)
    D[-2, -6:] = np.array([10, -15, -4, 14, -6, 1])[::-1] / (12 * h * h)
    D[-1, -6:] = np.array([45, -154, 214, -156, 61, -10])[::-1] / (12 * h * h)
    return D


def trapz_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def simpson_weights(n, h):
    """Composite Simpson weights; n must be odd."""
    if n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of points")
    w = np.zeros(n)
    w[0] = w[-1] = 1.0
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3)


def cumtrapz0(f, h, axis=-1):
    """Cumulative trapezoid along axis, zero at the first sample."""
    f = np.asarray(f)
    f = np.moveaxis(f, axis, -1)
    out = np.zeros_like(f, dtype=np.result_type(f.dtype, float))
    out[..., 1:] = np.cumsum((f[..., 1:] + f[..., :-1]) * (h / 2), axis=-1)
    return np.moveaxis(out, -1, axis)


def cumtrapz0_em(f, h, axis=-1):
    """Euler-Maclaurin corrected cumulative trapezoid (O(h^4) for smooth f)."""
    f = np.asarray(f)
    fm = np.moveaxis(f, axis, -1)
    out = np.zeros_like(fm, dtype=np.result_type(f.dtype, float))
    out[..., 1:] = np.cumsum((fm[..., 1:] + fm[..., :-1]) * (h / 2), axis=-1)
    df = np.moveaxis(deriv1(np.moveaxis(fm, -1, 0), h), 0, -1)
    out -= (h * h / 12) * (df - df[..., :1])
    return np.moveaxis(out, -1, axis)


def em_end_weights(n, h):
    """Row weights adding the Euler-Maclaurin endpoint correction to trapz.

    Returns r with sum((trapz_weights + r) * f) = int f + O(h^4) for smooth f:
    r encodes +h^2/12 f'(0) - h^2/12 f'(end) through one-sided stencils.
    """
    r = np.zeros(n)
    c0 = fd_weights(np.arange(5) * h, 0.0, 1)
    c1 = fd_weights(np.arange(5) * h, 4 * h, 1)
    r[:5] += (h * h / 12) * c0
    r[-5:] -= (h * h / 12) * c1
    return r


def midpoint_gradient_matrix(n, h):
    """(n-1) x n matrix mapping node values to 4th-order midpoint derivatives.

    Interior rows use the centered 4-point formula; the first and last rows
    use one-sided 5-point stencils so the operator keeps full bandwidth-2
    structure suitable for banded factorization.
    """
    M = np.zeros((n - 1, n))
    c = np.array([1.0, -27.0, 27.0, -1.0]) / (24 * h)
    for j in range(1, n - 2):
        M[j, j - 1:j + 3] = c
    x = np.arange(5) * h
    M[0, :5] = fd_weights(x, 0.5 * h, 1)
    M[n - 2, n - 5:] = fd_weights(x, 3.5 * h, 1)
    return M


def _log_moments(a, b):
    """(I0, I1) with I0=int_a^b ln|s| ds, I1=int_a^b s ln|s| ds."""
    def F0(s):
        out = np.where(s == 0.0, 0.0, s * np.log(np.abs(np.where(s == 0.0, 1.0, s)))) - s
        return out

    def F1(s):
        s2 = s * s
        out = 0.5 * np.where(s2 == 0.0, 0.0, s2 * np.log(np.abs(np.where(s == 0.0, 1.0, s)))) - 0.25 * s2
        return out

    return F0(b) - F0(a), F1(b) - F1(a)


def log_weights(n, h, i):
    """Quadrature weights w with sum(w*f) ~ int f(z) ln|z - z_i| dz.

    Piecewise-linear product rule on the uniform grid z_j = j*h; exact for
    f linear on each cell, including the two cells touching z_i.
    """
    j = np.arange(n - 1)
    a = (j - i) * h
    b = (j + 1 - i) * h
    I0, I1 = _log_moments(a, b)
    w = np.zeros(n)
    np.add.at(w, j, (b * I0 - I1) / h)
    np.add.at(w, j + 1, (I1 - a * I0) / h)
    return w


def log_weights_all(n, h):
    """Stack of log_weights(n, h, i) for every i; shape (n, n)."""
    j = np.arange(n - 1)[None, :]
    i = np.arange(n)[:, None]
    a = (j - i) * h
    b = (j + 1 - i) * h
    I0, I1 = _log_moments(a, b)
    W = np.zeros((n, n))
    left = (b * I0 - I1) / h
    right = (I1 - a * I0) / h
    for row in range(n):
        W[row, :-1] += left[row]
        W[row, 1:] += right[row]
    return W

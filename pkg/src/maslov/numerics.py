"""Small numerical kernels shared across modules."""

import math

import numpy as np

from .errors import BracketError

EPS = np.finfo(float).eps
CBRT_EPS = EPS ** (1.0 / 3.0)


def fd_step(x):
    """Central-difference step ``cbrt(eps) * max(1, |x|)``."""
    return CBRT_EPS * max(1.0, abs(float(x)))


def central_gradient(f, z):
    """Gradient of scalar ``f`` at vector ``z`` by central differences."""
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    for k in range(z.size):
        h = fd_step(z[k])
        zp = z.copy()
        zm = z.copy()
        zp[k] += h
        zm[k] -= h
        g[k] = (f(zp) - f(zm)) / (zp[k] - zm[k])
    return g


def sign(x):
    return int(np.sign(x))


def bisect_sign_change(f, a, b, fa=None, fb=None, xtol=1e-12, maxiter=200):
    """Bisection on the sign of ``f`` over ``[a, b]``.

    Returns the midpoint of the final bracket together with the bracket
    itself. Only the sign of ``f`` is used, so the routine is robust to the
    rounding noise of determinants near their zeros.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    sa, sb = np.sign(fa), np.sign(fb)
    if sa == 0:
        return a, (a, a)
    if sb == 0:
        return b, (b, b)
    if sa == sb:
        raise BracketError(f"no sign change on [{a}, {b}]")
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        m = 0.5 * (a + b)
        sm = np.sign(f(m))
        if sm == 0:
            return m, (m, m)
        if sm == sa:
            a = m
        else:
            b = m
    return 0.5 * (a + b), (a, b)


def safeguarded_newton(f, df, a, b, xtol=None, maxiter=100):
    """Newton iteration kept inside a sign-change bracket.

    Falls back to bisection whenever a Newton step leaves the bracket or
    fails to halve it, in the manner of ``rtsafe``.
    """
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"root not bracketed on [{a}, {b}]")
    if xtol is None:
        xtol = 4 * EPS * max(abs(a), abs(b), 1.0)
    lo, hi = (a, b) if fa < 0 else (b, a)
    x = 0.5 * (a + b)
    dx_old = abs(b - a)
    dx = dx_old
    fx, dfx = f(x), df(x)
    for _ in range(maxiter):
        newton_ok = dfx != 0 and (
            ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) < 0
        ) and abs(2.0 * fx) <= abs(dx_old * dfx)
        dx_old = dx
        if newton_ok:
            dx = fx / dfx
            x_new = x - dx
        else:
            dx = 0.5 * (hi - lo)
            x_new = lo + dx
        if abs(x_new - x) <= xtol:
            return x_new
        x = x_new
        fx, dfx = f(x), df(x)
        if fx == 0.0:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
    return x


def gauss_legendre_interval(f, a, b, n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xs = mid + half * nodes
    return half * float(np.dot(weights, f(xs)))


def spectral_derivative(samples, period):
    """Derivative of periodic, uniformly sampled data via FFT."""
    samples = np.asarray(samples, dtype=float)
    m = samples.size
    k = np.fft.rfftfreq(m, d=period / m) * 2.0 * math.pi
    coeffs = np.fft.rfft(samples)
    deriv = 1j * k * coeffs
    if m % 2 == 0:
        deriv[-1] = 0.0
    return np.fft.irfft(deriv, n=m)

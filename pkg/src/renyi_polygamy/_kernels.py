"""Compiled inner loop of the roof optimizer.

A decomposition is held as the rows of an m x d complex matrix; row i is the
unnormalized state sqrt(p_i)|psi_i>. Every move mixes two rows a, b by

    a' =  cos(t) a + sin(t) e^{i f} b
    b' = -sin(t) e^{-i f} a + cos(t) b

which keeps sum_i |row_i><row_i| fixed, so each move stays a decomposition of
the same density matrix. The objective depends on a row only through its
weight and the concurrence across the first-qubit cut.
"""

import math

import numpy as np
from numba import njit

KIND_CONCURRENCE = 0
KIND_RENYI = 1

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_QUARTER_PI = math.pi / 4.0


@njit(cache=True, nogil=True)
def f_of_c(c, alpha):
    q = 1.0 - c * c
    if q < 1e-14:
        return 1.0
    if c <= 0.0:
        return 0.0
    s = math.sqrt(q)
    big = 0.5 * (1.0 + s)
    small = c * c / (2.0 * (1.0 + s))
    if abs(alpha - 1.0) < 1e-9:
        return -(big * math.log2(big) + small * math.log2(small))
    return math.log2(big**alpha + small**alpha) / (1.0 - alpha)


@njit(cache=True, nogil=True)
def weighted_term(v, kind, alpha):
    h = v.shape[0] // 2
    na = 0.0
    nb = 0.0
    ip_re = 0.0
    ip_im = 0.0
    for j in range(h):
        a = v[j]
        b = v[h + j]
        na += a.real * a.real + a.imag * a.imag
        nb += b.real * b.real + b.imag * b.imag
        # <a|b>
        ip_re += a.real * b.real + a.imag * b.imag
        ip_im += a.real * b.imag - a.imag * b.real
    p = na + nb
    if p <= 1e-300:
        return 0.0
    det = na * nb - (ip_re * ip_re + ip_im * ip_im)
    if det < 0.0:
        det = 0.0
    c = 2.0 * math.sqrt(det) / p
    if c > 1.0:
        c = 1.0
    if kind == KIND_CONCURRENCE:
        return p * c
    return p * f_of_c(c, alpha)


@njit(cache=True, nogil=True)
def _pair_value(ra, rb, theta, phi, ta, tb, kind, alpha, sign):
    c = math.cos(theta)
    s = math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    se = s * e
    sec = s * e.conjugate()
    for j in range(ra.shape[0]):
        ta[j] = c * ra[j] + se * rb[j]
        tb[j] = c * rb[j] - sec * ra[j]
    return sign * (weighted_term(ta, kind, alpha) + weighted_term(tb, kind, alpha))


@njit(cache=True, nogil=True)
def _eval(ra, rb, x, fixed, which, ta, tb, kind, alpha, sign):
    if which == 0:
        return _pair_value(ra, rb, x, fixed, ta, tb, kind, alpha, sign)
    return _pair_value(ra, rb, fixed, x, ta, tb, kind, alpha, sign)


@njit(cache=True, nogil=True)
def _golden(ra, rb, lo, hi, fixed, which, ta, tb, kind, alpha, sign, xtol):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = _eval(ra, rb, x1, fixed, which, ta, tb, kind, alpha, sign)
    f2 = _eval(ra, rb, x2, fixed, which, ta, tb, kind, alpha, sign)
    while hi - lo > xtol:
        if f1 >= f2:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = _eval(ra, rb, x1, fixed, which, ta, tb, kind, alpha, sign)
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = _eval(ra, rb, x2, fixed, which, ta, tb, kind, alpha, sign)
    if f1 >= f2:
        return x1, f1
    return x2, f2


@njit(cache=True, nogil=True)
def objective(rows, kind, alpha):
    total = 0.0
    for i in range(rows.shape[0]):
        total += weighted_term(rows[i], kind, alpha)
    return total


@njit(cache=True, nogil=True)
def coordinate_search(rows, kind, alpha, sign, max_sweeps, tol, n_theta, n_phi, xtol, trace):
    """Improve ``rows`` in place; returns (signed value, sweeps run, converged).

    Each sweep visits every row pair once: a coarse (theta, phi) grid, then a
    golden-section search in theta and one in phi around the best grid point.
    A move is applied only if it strictly improves the pair's contribution,
    so the running value never decreases. ``trace[k]`` receives the value
    after sweep k.
    """
    m, d = rows.shape
    ta = np.empty(d, np.complex128)
    tb = np.empty(d, np.complex128)
    cur = sign * objective(rows, kind, alpha)
    dth = 2.0 * _QUARTER_PI / n_theta
    dph = math.pi / n_phi
    sweeps = 0
    converged = False
    for sweep in range(max_sweeps):
        start = cur
        sweeps += 1
        for a in range(m):
            for b in range(a + 1, m):
                ra = rows[a]
                rb = rows[b]
                base = _pair_value(ra, rb, 0.0, 0.0, ta, tb, kind, alpha, sign)
                best_t = 0.0
                best_p = 0.0
                best = base
                # theta has period pi/2 up to a row swap, phi period pi up to theta -> -theta
                for i in range(n_theta):
                    th = -_QUARTER_PI + (i + 0.5) * dth
                    for k in range(n_phi):
                        ph = k * dph
                        v = _pair_value(ra, rb, th, ph, ta, tb, kind, alpha, sign)
                        if v > best:
                            best = v
                            best_t = th
                            best_p = ph
                t2, v2 = _golden(ra, rb, best_t - dth, best_t + dth, best_p, 0, ta, tb, kind, alpha, sign, xtol)
                if v2 > best:
                    best = v2
                    best_t = t2
                p2, v3 = _golden(ra, rb, best_p - dph, best_p + dph, best_t, 1, ta, tb, kind, alpha, sign, xtol)
                if v3 > best:
                    best = v3
                    best_p = p2
                if best > base:
                    c = math.cos(best_t)
                    s = math.sin(best_t)
                    e = complex(math.cos(best_p), math.sin(best_p))
                    for j in range(d):
                        x = ra[j]
                        y = rb[j]
                        rows[a, j] = c * x + s * e * y
                        rows[b, j] = c * y - s * e.conjugate() * x
                    cur += best - base
        if sweep < trace.shape[0]:
            trace[sweep] = cur
        if cur - start < tol:
            converged = True
            break
    return cur, sweeps, converged

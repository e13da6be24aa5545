"""Complex gamma and zeta, Bessel functions of integer and imaginary order,
Hankel functions, and divisor-function coefficients.

Bessel functions are evaluated by the power series for |x| <= X_SWITCH and by
the Hankel large-argument expansion beyond. The series runs in double
precision with compensated summation; when the cancellation estimate says
double precision cannot meet the tolerance, the affected entries are
re-summed in extended precision. Outside the region where either route is
certified, OutOfValidatedRange is raised.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import (
    DivergentParameter,
    IntegerOrderUnsupported,
    OutOfValidatedRange,
    PoleAtNonpositiveInteger,
    PoleAtOne,
    UndefinedAtZero,
)

X_SWITCH = 20.0
T_CUT = 1e-5
MAX_IMAG_T = 100.0
MAX_ORDER = 200.0
MAX_SERIES_ARG = 60.0
EULER_GAMMA = 0.57721566490153286061

# Godfrey's coefficient set, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _is_nonpositive_integer(z) -> np.ndarray:
    z = np.asarray(z)
    return (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))


def loggamma(z):
    """A branch of log Gamma(z), continuous on Re z >= 1/2; exp() of it is exact Gamma."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(_is_nonpositive_integer(z)):
        raise PoleAtNonpositiveInteger("Gamma has a pole at a nonpositive integer")
    left = z.real < 0.5
    w = np.where(left, 1 - z, z) - 1
    acc = np.full(w.shape, _LANCZOS[0], dtype=complex)
    for i in range(1, len(_LANCZOS)):
        acc = acc + _LANCZOS[i] / (w + i)
    t = w + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(acc)
    if np.any(left):
        zl = z[left]
        out[left] = math.log(math.pi) - np.log(np.sin(np.pi * zl)) - out[left]
    return complex(out[0]) if scalar else out


def gamma_complex(z):
    return np.exp(loggamma(z))


# ---------------------------------------------------------------- zeta

@lru_cache(maxsize=None)
def _bernoulli_even(count: int):
    """B_2, B_4, ..., B_{2 count} as Fractions (Akiyama-Tanigawa)."""
    n_max = 2 * count
    a = [Fraction(0)] * (n_max + 1)
    out = []
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        if m >= 2 and m % 2 == 0:
            out.append(a[0])
    return tuple(out)


def _zeta_scalar(s: complex, terms: int | None = None, corrections: int = 14) -> complex:
    s = complex(s)
    if s == 1:
        raise PoleAtOne("zeta has a pole at s = 1")
    if terms is None:
        terms = int(20 + abs(s.imag) / 2 + max(0.0, -s.real))
    N = terms
    n = np.arange(1, N, dtype=float)
    head = np.exp(-s * np.log(n))
    total = complex(math.fsum(head.real), math.fsum(head.imag))
    Ns = cmath.exp(-s * math.log(N))
    total += N * Ns / (s - 1) + 0.5 * Ns
    rising = s
    power = Ns / N
    fact = 1.0
    for k, b in enumerate(_bernoulli_even(corrections), start=1):
        fact *= (2 * k - 1) * (2 * k) if k > 1 else 2
        total += float(b) / fact * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= N * N
    return total


def zeta(s, terms: int | None = None):
    """Riemann zeta by Euler-Maclaurin summation; `terms` sets the direct-sum length."""
    if np.ndim(s) == 0:
        return _zeta_scalar(complex(s), terms)
    arr = np.asarray(s, dtype=complex)
    return np.array([_zeta_scalar(v, terms) for v in arr.ravel()]).reshape(arr.shape)


# ---------------------------------------------------------------- Bessel core

_EPS = np.finfo(float).eps


def _validate(nu: np.ndarray, x: np.ndarray):
    if np.any(~np.isfinite(nu)):
        raise OutOfValidatedRange("order must be finite")
    if np.any(np.abs(nu) > MAX_ORDER):
        raise OutOfValidatedRange(f"|order| above {MAX_ORDER}")
    imag = nu.imag != 0
    if np.any(np.abs(nu.imag[imag]) > 2 * MAX_IMAG_T):
        raise OutOfValidatedRange(f"imaginary order |t| above {MAX_IMAG_T}")


def _envelope(nu, x):
    """Rough magnitude of J_nu near x, used to turn absolute error into a relative test."""
    return np.exp(0.5 * np.pi * np.abs(nu.imag)) * np.sqrt(2 / (np.pi * (np.abs(x) + np.abs(nu) + 1)))


def _series_double(nu, x, sign):
    """Return (value, abs_error_estimate) of the J (sign=-1) or I (sign=+1) series."""
    z2 = sign * x * x / 4
    term = np.ones(np.broadcast(nu, x).shape, dtype=complex)
    total = term.copy()
    comp = np.zeros_like(total)
    absum = np.ones(total.shape)
    for m in range(1, 400):
        term = term * z2 / (m * (nu + m))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        mag = np.abs(term)
        absum += mag
        if m > 4 and np.all(mag <= 1e-18 * absum):
            break
    pref = np.exp(nu * np.log(x / 2) - loggamma(nu + 1))
    return pref * total, 4 * _EPS * absum * np.abs(pref) * (1 + np.abs(nu))


def _series_mp(nu: complex, x: complex, sign: int, dps: int) -> complex:
    with mpmath.workdps(dps):
        nu_m = mpmath.mpc(nu)
        z2 = sign * mpmath.mpc(x) ** 2 / 4
        term = mpmath.mpc(1)
        total = mpmath.mpc(1)
        tiny = mpmath.mpf(10) ** (-dps)
        m = 0
        while True:
            m += 1
            term = term * z2 / (m * (nu_m + m))
            total += term
            if m > 4 and abs(term) < tiny * abs(total) or m > 4000:
                break
        pref = mpmath.exp(nu_m * mpmath.log(mpmath.mpc(x) / 2) - mpmath.loggamma(nu_m + 1))
        return complex(pref * total)


def _digits_needed(err, value):
    ratio = float(np.max(err / np.maximum(np.abs(value), 1e-300) / _EPS))
    return int(25 + math.log10(max(ratio, 1.0)))


def _asymptotic(nu, x, kind):
    """Hankel expansion for real x > 0. kind: 'j', 'y' or 'i' (the latter scaled by exp(-x)).

    Returns (value, relative error estimate).
    """
    mu = 4 * nu * nu
    shape = np.broadcast(nu, x).shape
    a = np.ones(shape, dtype=complex)
    p = np.ones(shape, dtype=complex)
    q = np.zeros(shape, dtype=complex)
    alt = np.ones(shape, dtype=complex)
    prev = np.full(shape, np.inf)
    err = np.zeros(shape)
    active = np.ones(shape, dtype=bool)
    for k in range(1, 200):
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8 * x)
        mag = np.abs(a)
        growing = (mag > prev) & ((2 * k - 1) ** 2 > np.abs(mu))
        err = np.where(active & growing, prev, err)
        active &= ~growing
        if kind == "i":
            alt = alt + np.where(active, (-1) ** k * a, 0)
        elif k % 2 == 0:
            p = p + np.where(active, (-1) ** (k // 2) * a, 0)
        else:
            q = q + np.where(active, (-1) ** ((k - 1) // 2) * a, 0)
        done = active & (mag < 1e-17)
        err = np.where(done, mag, err)
        active &= ~done
        prev = mag
        if not active.any():
            break
    err = np.where(active, prev, err)
    if kind == "i":
        return alt / np.sqrt(2 * np.pi * x), err
    chi = x - nu * np.pi / 2 - np.pi / 4
    amp = np.sqrt(2 / (np.pi * x))
    scale = np.abs(np.cos(chi)) + np.abs(np.sin(chi))
    if kind == "j":
        val = amp * (p * np.cos(chi) - q * np.sin(chi))
    else:
        val = amp * (p * np.sin(chi) + q * np.cos(chi))
    return val, err * amp * scale


def _prepare(nu, x):
    nu_a, x_a = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(x, dtype=complex))
    return nu_a.astype(complex), x_a.astype(complex), np.ndim(nu) == 0 and np.ndim(x) == 0


def _finish(out, scalar):
    return complex(out) if scalar else out


def _bessel_core(nu, x, sign, rel_tol=1e-11):
    """J_nu(x) (sign=-1) or I_nu(x) (sign=+1) for arrays, nu not a negative integer."""
    out = np.zeros(nu.shape, dtype=complex)
    if out.size == 0:
        return out
    big = np.abs(x) > X_SWITCH
    small = ~big
    if small.any():
        val, err = _series_double(nu[small], x[small], sign)
        bad = err > rel_tol * np.maximum(np.abs(val), _envelope(nu[small], x[small]))
        if bad.any():
            idx = np.flatnonzero(bad)
            nus, xs, vs, es = nu[small][idx], x[small][idx], val[idx], err[idx]
            for j in range(len(idx)):
                dps = _digits_needed(es[j : j + 1], vs[j : j + 1])
                val[idx[j]] = _series_mp(complex(nus[j]), complex(xs[j]), sign, dps)
        out[small] = val
    if big.any():
        xb, nb = x[big], nu[big]
        if np.any(xb.imag != 0) or np.any(xb.real <= 0):
            raise OutOfValidatedRange("large arguments are supported on the positive real axis only")
        if sign < 0:
            val, err = _asymptotic(nb, xb.real, "j")
        else:
            val, err = _asymptotic(nb, xb.real, "i")
        bad = err > rel_tol * np.maximum(np.abs(val), _envelope(nb, xb) if sign < 0 else np.abs(val))
        if bad.any():
            idx = np.flatnonzero(bad)
            if np.any(xb.real[idx] > MAX_SERIES_ARG):
                raise OutOfValidatedRange("argument beyond the validated Bessel envelope")
            for j in idx:
                v = _series_mp(complex(nb[j]), complex(xb[j]), sign, int(30 + xb.real[j] / 2.3))
                val[j] = v * math.exp(-xb.real[j]) if sign > 0 else v
        if sign > 0:
            val = val * np.exp(xb.real)
        out[big] = val
    return out


def _reflect_integer(nu):
    """Orders that are negative integers map to positive ones with sign (-1)^n."""
    neg = _is_nonpositive_integer(nu) & (nu.real < 0)
    sgn = np.where(neg & (np.abs(nu.real) % 2 == 1), -1.0, 1.0)
    return np.where(neg, -nu, nu), sgn, neg


def bessel_j(nu, x):
    """J_nu(x) for integer, real or complex order; x > 0 real, or complex with |x| <= X_SWITCH."""
    nu_a, x_a, scalar = _prepare(nu, x)
    _validate(nu_a, x_a)
    zero = x_a == 0
    if zero.any():
        if np.any(nu_a[zero].real <= 0) and np.any(nu_a[zero] != 0):
            raise UndefinedAtZero("J_nu(0) is only finite for nu = 0 or Re nu > 0")
        x_a = np.where(zero, 1.0, x_a)
    order, sgn, _ = _reflect_integer(nu_a)
    out = sgn * _bessel_core(order, x_a, -1)
    out = np.where(zero, np.where(nu_a == 0, 1.0, 0.0), out)
    return _finish(out, scalar)


def bessel_i(nu, x, scaled: bool = False):
    """I_nu(x); with scaled=True returns exp(-x) I_nu(x) (useful for large positive x)."""
    nu_a, x_a, scalar = _prepare(nu, x)
    _validate(nu_a, x_a)
    order, sgn, neg = _reflect_integer(nu_a)
    sgn = np.where(neg, 1.0, sgn)  # I_{-n} = I_n
    if scaled:
        big = (np.abs(x_a) > X_SWITCH) & (x_a.imag == 0)
        out = np.zeros(order.shape, dtype=complex)
        if big.any():
            val, err = _asymptotic(order[big], x_a[big].real, "i")
            if np.any(err > 1e-11 * np.abs(val)):
                raise OutOfValidatedRange("scaled I expansion not converged")
            out[big] = val
        if (~big).any():
            out[~big] = _bessel_core(order[~big], x_a[~big], 1) * np.exp(-x_a[~big])
        return _finish(sgn * out, scalar)
    return _finish(sgn * _bessel_core(order, x_a, 1), scalar)


def imaginary_order(t):
    """The order 2it attached to spectral parameter t."""
    return 2j * np.asarray(t, dtype=float)


# ---------------------------------------------------------------- B kernel

def _b_at_zero(x):
    """B at t = 0, i.e. -(2/pi) d/dnu J_nu(x) at nu = 0 (equal to -Y_0)."""
    out = np.zeros(x.shape)
    small = x <= X_SWITCH
    if small.any():
        xs = x[small]
        z = xs / 2
        lz = np.log(z)
        term = np.ones(xs.shape)
        harm = 0.0
        total = lz + EULER_GAMMA
        comp = np.zeros(xs.shape)
        absum = np.abs(total)
        for m in range(1, 400):
            term = term * (-(z * z)) / (m * m)
            harm += 1.0 / m
            piece = term * (lz - harm + EULER_GAMMA)
            y = piece - comp
            tt = total + y
            comp = (tt - total) - y
            total = tt
            absum += np.abs(piece)
            if m > 4 and np.all(np.abs(piece) <= 1e-18 * absum):
                break
        val = -(2 / np.pi) * total
        err = 4 * _EPS * absum
        bad = err > 1e-11 * np.maximum(np.abs(val), np.sqrt(2 / (np.pi * (xs + 1))))
        for j in np.flatnonzero(bad):
            val[j] = _b_at_zero_mp(float(xs[j]), _digits_needed(err[j : j + 1], val[j : j + 1]))
        out[small] = val
    if (~small).any():
        xb = x[~small]
        val, err = _asymptotic(np.zeros(xb.shape, dtype=complex), xb, "y")
        out[~small] = -val.real
    return out


def _b_at_zero_mp(x: float, dps: int) -> float:
    with mpmath.workdps(dps):
        z = mpmath.mpf(x) / 2
        lz = mpmath.log(z)
        term = mpmath.mpf(1)
        harm = mpmath.mpf(0)
        total = lz + mpmath.euler
        tiny = mpmath.mpf(10) ** (-dps)
        m = 0
        while True:
            m += 1
            term = term * (-(z * z)) / (m * m)
            harm += mpmath.mpf(1) / m
            piece = term * (lz - harm + mpmath.euler)
            total += piece
            if m > 4 and abs(piece) < tiny:
                break
        return float(-2 / mpmath.pi * total)


def bessel_b(t, x):
    """B_{2it}(x) = -Im J_{2it}(x) / sinh(pi t) for real t and x > 0; even in t."""
    t_a, x_a = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    scalar = np.ndim(t) == 0 and np.ndim(x) == 0
    if np.any(x_a <= 0):
        raise UndefinedAtZero("B kernel needs x > 0")
    if np.any(np.abs(t_a) > MAX_IMAG_T):
        raise OutOfValidatedRange(f"|t| above {MAX_IMAG_T}")
    ta = np.abs(t_a)
    out = np.zeros(t_a.shape)
    near = ta < T_CUT
    if near.any():
        out[near] = _b_at_zero(x_a[near])
    far = ~near
    if far.any():
        tf, xf = ta[far], x_a[far]
        j = bessel_j(2j * tf, xf)
        out[far] = -np.imag(j) / np.sinh(np.pi * tf)
    return float(out) if scalar else out


def bessel_b_combination(t, x):
    """(J_{-2it}(x) - J_{2it}(x)) / (2 sin(pi i t)) evaluated literally (complex)."""
    t = np.asarray(t, dtype=float)
    return (bessel_j(-2j * t, x) - bessel_j(2j * t, x)) / (2 * np.sin(np.pi * 1j * t))


# ---------------------------------------------------------------- Hankel

def _check_noninteger(alpha):
    a = np.asarray(alpha, dtype=complex)
    if np.any((a.imag == 0) & (a.real == np.round(a.real))):
        raise IntegerOrderUnsupported("Hankel formula needs a non-integer order")


def hankel1(alpha, x):
    _check_noninteger(alpha)
    alpha = np.asarray(alpha, dtype=complex)
    num = bessel_j(-alpha, x) - np.exp(-1j * np.pi * alpha) * bessel_j(alpha, x)
    return num / (1j * np.sin(np.pi * alpha))


def hankel2(alpha, x):
    _check_noninteger(alpha)
    alpha = np.asarray(alpha, dtype=complex)
    num = bessel_j(-alpha, x) - np.exp(1j * np.pi * alpha) * bessel_j(alpha, x)
    return num / (-1j * np.sin(np.pi * alpha))


# ---------------------------------------------------------------- coefficients

def tau_it(n: int, t: float) -> float:
    """Sum over ab = n of (a/b)^{it}; real because the pairs (a,b), (b,a) conjugate."""
    from .arithmetic import divisors

    if n < 1:
        raise ValueError("n must be positive")
    return math.fsum(math.cos(t * math.log(a * a / n)) for a in divisors(n))


@dataclass(frozen=True)
class EtaCoefficient:
    l: int
    t: float
    value: complex


def eta_coeff(l: int, t: float) -> EtaCoefficient:
    """Eisenstein coefficient 2 pi^{1+it} cosh(pi t)^{-1/2} tau_it(l) / (Gamma(1/2+it) zeta(1+2it))."""
    if t == 0:
        raise UndefinedAtZero("eta coefficient has a pole at t = 0")
    num = 2 * cmath.exp((1 + 1j * t) * math.log(math.pi)) * tau_it(l, t)
    den = math.sqrt(math.cosh(math.pi * t)) * gamma_complex(0.5 + 1j * t) * zeta(1 + 2j * t)
    return EtaCoefficient(l, t, complex(num / den))


def _sigma_sieve(N: int, w: complex) -> np.ndarray:
    """sigma_w(n) = sum_{a | n} a^w for n = 0..N."""
    out = np.zeros(N + 1, dtype=complex)
    for a in range(1, N + 1):
        out[a::a] += complex(a) ** w
    return out


def tau_table(N: int, t: float) -> np.ndarray:
    """tau_it(n) for n = 0..N (entry 0 unused)."""
    n = np.arange(N + 1, dtype=float)
    n[0] = 1
    sig = _sigma_sieve(N, 2j * t)
    return (np.exp(-1j * t * np.log(n)) * sig).real


def divisor_count_table(N: int) -> np.ndarray:
    d = np.zeros(N + 1, dtype=np.int64)
    for a in range(1, N + 1):
        d[a::a] += 1
    return d


def ramanujan_zeta_identity(T: float, t: float, s: complex, N: int):
    """Truncated sum of tau_iT(n) tau_it(n) n^{-s} and the four-zeta closed form."""
    s = complex(s)
    if s.real <= 1:
        raise DivergentParameter("needs Re(s) > 1")
    n = np.arange(1, N + 1, dtype=float)
    terms = tau_table(N, T)[1:] * tau_table(N, t)[1:] * np.exp(-s * np.log(n))
    truncated = complex(math.fsum(terms.real), math.fsum(terms.imag))
    closed = 1.0
    for a in (1, -1):
        for b in (1, -1):
            closed *= zeta(s + a * 1j * T + b * 1j * t)
    return truncated, complex(closed / zeta(2 * s))


def ramanujan_zeta_tail_bound(s: complex, N: int) -> float:
    """Estimated bound for the tail n > N of sum d(n)^2 n^{-Re s}, with safety factor 2.

    The first dyadic block is summed exactly; later blocks are extrapolated by the
    growth rate of the mean of d(n)^2, which behaves like log(n)^3.
    """
    sigma = complex(s).real
    d = divisor_count_table(2 * N).astype(float)
    n = np.arange(N + 1, 2 * N + 1, dtype=float)
    block = math.fsum(d[N + 1 :] ** 2 * n ** (-sigma))
    growth = (math.log(4 * N) / math.log(2 * N)) ** 3
    ratio = 2 ** (1 - sigma) * growth
    if ratio >= 1:
        return math.inf
    return 2 * block / (1 - ratio)

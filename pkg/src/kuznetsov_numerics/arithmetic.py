"""Integer arithmetic: multiplicative functions, Kloosterman and Ramanujan sums,
and the residue classes pairing solutions of c2*x + c1*y = n with units mod n.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

from .errors import DivergentParameter, InexactDivision, NotADivisor, NotCoprime

MAX_MODULUS = 2**31


@dataclass(frozen=True)
class Residue:
    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1 or not 0 <= self.value < self.modulus:
            raise ValueError(f"bad residue {self.value} mod {self.modulus}")

    @classmethod
    def of(cls, a: int, modulus: int) -> "Residue":
        return cls(a % modulus, modulus)


@dataclass(frozen=True)
class XClass:
    """Representative (x, y) of a class with c2*x + c1*y = n."""

    x: int
    y: int
    c1: int
    c2: int
    n: int


@dataclass(frozen=True)
class RPair:
    r1: Residue
    r2: Residue


# ---------------------------------------------------------------- factoring

@lru_cache(maxsize=65536)
def factorize(n: int) -> Tuple[Tuple[int, int], ...]:
    """Prime factorization of n >= 1 as ((p, e), ...) by wheel trial division."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    out = []
    for p in (2, 3, 5):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    p, steps, i = 7, (4, 2, 4, 2, 4, 6, 2, 6), 0
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += steps[i]
        i = (i + 1) % 8
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> List[int]:
    return [p for p, _ in factorize(abs(n))] if n else []


def euler_phi(n: int) -> int:
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def moebius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def divisors(n: int) -> List[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def num_divisors(n: int) -> int:
    return math.prod(e + 1 for _, e in factorize(n))


def mod_inverse(a: int, c: int) -> Residue:
    if c < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(a, c) != 1:
        raise NotCoprime(f"gcd({a}, {c}) != 1")
    return Residue(pow(a, -1, c) if c > 1 else 0, c)


# ---------------------------------------------------------------- Kloosterman

class KloostermanCache:
    """Memo of Kloosterman sums keyed by (a mod c, b mod c, c).

    Reads and writes are guarded, so one instance may be shared by threads.
    """

    def __init__(self):
        self._values: Dict[Tuple[int, int, int], float] = {}
        self._rows: Dict[Tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._values)

    def get(self, key):
        with self._lock:
            return self._values.get(key)

    def put(self, key, value):
        with self._lock:
            return self._values.setdefault(key, value)

    def row(self, a: int, c: int) -> np.ndarray:
        """Array S(a, b, c) for b = 0..c-1, computed once per (a mod c, c)."""
        key = (a % c, c)
        with self._lock:
            row = self._rows.get(key)
        if row is None:
            row = kloosterman_row(a, c)
            with self._lock:
                row = self._rows.setdefault(key, row)
        return row


def _kloosterman_direct(a: int, b: int, c: int) -> float:
    if c == 1:
        return 1.0
    terms = []
    for x in range(1, c):
        if math.gcd(x, c) == 1:
            k = (a * pow(x, -1, c) + b * x) % c
            terms.append(math.cos(2.0 * math.pi * k / c))
    return math.fsum(terms)


def kloosterman(a: int, b: int, c: int, cache: KloostermanCache | None = None) -> float:
    """S(a, b; c) = sum over units x mod c of cos(2 pi (a x^-1 + b x) / c)."""
    if c < 1:
        raise ValueError("modulus must be positive")
    if c >= MAX_MODULUS:
        raise ValueError("modulus too large")
    key = (a % c, b % c, c)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    value = _kloosterman_direct(*key)
    if cache is not None:
        value = cache.put(key, value)
    return value


def unit_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Units x mod c and their inverses, by vectorized exponentiation x^(phi(c)-1)."""
    if c == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    xs = np.array([x for x in range(1, c) if math.gcd(x, c) == 1], dtype=np.int64)
    if c == 2:
        return xs, xs.copy()
    e = euler_phi(c) - 1
    result = np.ones_like(xs)
    base = xs % c
    while e:
        if e & 1:
            result = result * base % c
        base = base * base % c
        e >>= 1
    return xs, result


def kloosterman_row(a: int, c: int) -> np.ndarray:
    """S(a, b; c) for every b mod c at once via a length-c discrete Fourier transform."""
    if c == 1:
        return np.ones(1)
    xs, inv = unit_inverses(c)
    seq = np.zeros(c, dtype=complex)
    seq[xs] = np.exp(2j * np.pi * ((a % c) * inv % c) / c)
    return (np.fft.ifft(seq) * c).real


# ---------------------------------------------------------------- Ramanujan

def ramanujan_closed(l: int, m: int) -> int:
    """mu(l/(l,m)) phi(l) / phi(l/(l,m))."""
    q = l // math.gcd(l, m)
    num = moebius(q) * euler_phi(l)
    value, rem = divmod(num, euler_phi(q))
    if rem:
        raise InexactDivision(f"phi({q}) does not divide {num}")
    return value


def ramanujan_divisor(n: int, m: int) -> int:
    """sum over r | (m, n) of mu(n/r) r."""
    g = math.gcd(n, m)
    return sum(moebius(n // r) * r for r in divisors(g))


# ---------------------------------------------------------------- residue classes

def enumerate_X(c1: int, c2: int, n: int) -> List[XClass]:
    if c1 < 1 or c2 < 1:
        raise ValueError("c1 and c2 must be positive")
    out = []
    for x in range(c1):
        if math.gcd(x, c1) != 1 or (c2 * x - n) % c1:
            continue
        y = (n - c2 * x) // c1
        if math.gcd(y, c2) == 1:
            out.append(XClass(x, y, c1, c2, n))
    return out


def enumerate_Y(c1: int, c2: int, n: int) -> List[Residue]:
    if n == 0:
        raise ValueError("n must be nonzero")
    d = math.gcd(c1, c2)
    if n % d:
        return []
    mod = abs(n)
    a, b, m = c1 // d, c2 // d, abs(n // d)
    proper = [dp for dp in divisors(d) if dp < d]
    out = []
    for r in range(mod):
        if math.gcd(r, mod) != 1:
            continue
        if (a * r + b) % m:
            continue
        if any((a * r + b) % abs(n // dp) == 0 for dp in proper):
            continue
        out.append(Residue(r, mod))
    return out


def _exact_div(num: int, den: int) -> int:
    q, rem = divmod(num, den)
    if rem:
        raise InexactDivision(f"{den} does not divide {num}")
    return q


def bijection_r(cls: XClass) -> RPair:
    """Map a class (x, y) to the pair r1 = (n xbar - c2)/c1, r2 = (n ybar - c1)/c2 mod n."""
    if cls.n == 0:
        raise ValueError("n must be nonzero")
    mod = abs(cls.n)
    xbar = mod_inverse(cls.x, cls.c1).value
    ybar = mod_inverse(cls.y, cls.c2).value
    r1 = _exact_div(cls.n * xbar - cls.c2, cls.c1)
    r2 = _exact_div(cls.n * ybar - cls.c1, cls.c2)
    return RPair(Residue.of(r1, mod), Residue.of(r2, mod))


# ---------------------------------------------------------------- Dirichlet series

def _check_divisor(d: int, n: int):
    if d < 1 or n < 1 or n % d:
        raise NotADivisor(f"{d} does not divide {n}")


def z_factor(d: int, n: int, s: complex) -> complex:
    """Sum of phi(d'd)/(d'd)^(1+s) over d' built from primes p | d with p not dividing n/d."""
    _check_divisor(d, n)
    if complex(s).real <= 0:
        raise DivergentParameter("z_factor needs Re(s) > 0")
    rest = n // d
    value = complex(1.0)
    for p, e in factorize(d):
        term = euler_phi(p**e) * complex(p) ** (-e * (1 + s))
        if rest % p:
            term /= 1 - complex(p) ** (-s)
        value *= term
    return value


def r_weight(n: int, d: int) -> float:
    _check_divisor(d, n)
    value = z_factor(d, n, 1).real
    for p in prime_divisors(n):
        value /= 1 + 1 / p
    return value


def _zeta(s):
    from .special import zeta

    return zeta(s)


def _ramanujan_row(N: int, m: int) -> np.ndarray:
    """f_c(m) for c = 1..N via the divisor-sum formula, sieved."""
    mu = moebius_sieve(N)
    f = np.zeros(N + 1)
    if m == 0:
        return np.array([0.0] + [float(v) for v in phi_sieve(N)[1:]])
    for r in divisors(abs(m)):
        if r > N:
            break
        # c = r k, contribution mu(k) r
        k = np.arange(1, N // r + 1)
        f[r * k] += mu[k] * r
    return f


def moebius_sieve(N: int) -> np.ndarray:
    mu = np.ones(N + 1, dtype=np.int64)
    mu[0] = 0
    is_comp = np.zeros(N + 1, dtype=bool)
    for p in range(2, N + 1):
        if is_comp[p]:
            continue
        is_comp[2 * p :: p] = True
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def phi_sieve(N: int) -> np.ndarray:
    phi = np.arange(N + 1, dtype=np.int64)
    for p in range(2, N + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


def dirichlet_series_check(l: int, lp: int, s: complex, N: int) -> Tuple[complex, complex]:
    """Truncated sum of f_c(l - l')/c^(s+1) against its closed form."""
    if complex(s).real <= 1:
        raise DivergentParameter("needs Re(s) > 1")
    m = l - lp
    f = _ramanujan_row(N, m)[1:]
    c = np.arange(1, N + 1, dtype=float)
    terms = f * np.exp(-(s + 1) * np.log(c))
    truncated = complex(math.fsum(terms.real), math.fsum(np.imag(terms)))
    if m == 0:
        closed = _zeta(s) / _zeta(s + 1)
    else:
        closed = sum(complex(r) ** (-s) for r in divisors(abs(m))) / _zeta(1 + s)
    return truncated, complex(closed)


def dirichlet_tail_bound(m: int, s: complex, N: int) -> float:
    """Rigorous bound on the tail c > N of the Ramanujan-sum series."""
    sigma = complex(s).real
    if m == 0:
        # phi(c)/c <= 1
        return N ** (1 - sigma) / (sigma - 1)
    # |f_c(m)| <= sigma_1(|m|)
    return sum(divisors(abs(m))) * N ** (-sigma) / sigma


def principal_l_ratio(n: int, s: complex) -> complex:
    """L(s, chi0)/L(s+1, chi0) for the trivial character mod n, via Euler factors."""
    value = _zeta(s) / _zeta(s + 1)
    for p in prime_divisors(n):
        value *= (1 - complex(p) ** (-s)) / (1 - complex(p) ** (-s - 1))
    return value


def phi_dirichlet_check(n: int, d: int, m: int, s: complex, N: int) -> Tuple[complex, complex]:
    """Sum over c1 <= N coprime to n/d of f_{d c1}(m)/(d c1)^(s+1) against the stated closed form.

    For m = 0 the closed form is Z(d, s) L(s, chi0)/L(s+1, chi0). For m != 0
    the returned closed value is the quoted M(s) expression and is not
    guaranteed to agree.
    """
    _check_divisor(d, n)
    if complex(s).real <= 1:
        raise DivergentParameter("needs Re(s) > 1")
    rest = n // d
    terms = []
    for c1 in range(1, N + 1):
        if math.gcd(c1, rest) != 1:
            continue
        c = d * c1
        f = euler_phi(c) if m == 0 else ramanujan_closed(c, m)
        if f:
            terms.append(f * complex(c) ** (-(s + 1)))
    truncated = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    if m == 0:
        closed = z_factor(d, n, s) * principal_l_ratio(n, s)
    else:
        sq_free = sum(moebius(k) ** 2 * complex(k) ** (-1 - s) for k in divisors(n))
        mob = sum(moebius(k) * complex(k) ** (-1 - s) for k in divisors(abs(m)))
        closed = sq_free * mob / _zeta(s + 1)
    return truncated, complex(closed)

"""Geometric sides of the Kuznetsov and Petersson formulas, their diagonal
terms and the Bessel kernels attached to a spectral test function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arithmetic import KloostermanCache, kloosterman
from .errors import TailNotNegligible
from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_semi_infinite
from .special import bessel_b, bessel_j
from .transforms import BumpFunction, t_rule


@dataclass(frozen=True)
class GeometricSideSpec:
    m1: int
    m2: int
    V: BumpFunction

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise ValueError("m1 and m2 must be positive")

    @property
    def scale(self) -> float:
        return 4 * math.pi * math.sqrt(self.m1 * self.m2)

    def c_range(self) -> range:
        """Moduli c with V(scale/c) possibly nonzero, padded by one on each side."""
        lo = max(1, int(math.floor(self.scale / self.V.b)) - 1)
        hi = int(math.ceil(self.scale / self.V.a)) + 1
        return range(lo, hi + 1)


def geometric_side(spec: GeometricSideSpec, cache: KloostermanCache | None = None) -> float:
    """sum over c of S(m1, m2; c) V(4 pi sqrt(m1 m2)/c) / c."""
    terms = []
    for c in spec.c_range():
        v = spec.V(spec.scale / c)
        if v:
            terms.append(kloosterman(spec.m1, spec.m2, c, cache) * v / c)
    return math.fsum(terms)


def geometric_side_many(m1: int, ns: np.ndarray, V: BumpFunction, cache: KloostermanCache) -> np.ndarray:
    """geometric_side(m1, n; V) for an array of n, using cached Kloosterman rows.

    Accumulation over c runs in increasing c for every n, so each entry is
    independent of how the n-array is chunked.
    """
    ns = np.asarray(ns, dtype=np.int64)
    out = np.zeros(ns.shape)
    if ns.size == 0:
        return out
    scale = 4 * math.pi * np.sqrt(m1 * ns.astype(float))
    lo = max(1, int(math.floor(scale.min() / V.b)) - 1)
    hi = int(math.ceil(scale.max() / V.a)) + 1
    for c in range(lo, hi + 1):
        vals = V(scale / c)
        if not vals.any():
            continue
        out += cache.row(m1, c)[ns % c] * vals / c
    return out


def kuznetsov_diag(h: Callable, spec: QuadSpec = DEFAULT_SPEC) -> float:
    """(1/pi) int_R h(t) tanh(pi t) t dt for even h, as (2/pi) int_0^inf."""
    res = integrate_semi_infinite(lambda t: np.asarray(h(t)) * np.tanh(np.pi * t) * t, 0.0, spec)
    return float(np.real(res.value)) * 2 / math.pi


def petersson_diag(h: Callable, K_max: int = 200, tol: float = 1e-12) -> float:
    """(1/pi) sum over even k > 0 of (k-1) h(k); doubles K_max once to bound the tail."""
    k = np.arange(2, 2 * K_max + 1, 2)
    terms = (k - 1) * np.asarray(h(k), dtype=float)
    half = math.fsum(terms[: K_max // 2])
    full = math.fsum(terms)
    if abs(full - half) > tol * max(1.0, abs(full)):
        raise TailNotNegligible(f"tail beyond k = {K_max} is {abs(full - half):.3g}")
    return full / math.pi


def b_plus_kernel(h: Callable, x, T_max: float = 30.0) -> np.ndarray | float:
    """4 int_0^T h(t) tanh(pi t) B_{2it}(x) t dt on a panelled Gauss-Legendre rule."""
    t, wt = t_rule(T_max)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    weight = np.asarray(h(t)) * np.tanh(np.pi * t) * t * wt
    out = 4 * (weight @ bessel_b(t[:, None], x_arr[None, :]))
    return float(out[0]) if np.ndim(x) == 0 else out


def g_hat_kernel(h: Callable, x, K_max: int = 60) -> np.ndarray | float:
    """4 sum over even k <= K_max of (k-1) h(k) J_{k-1}(x)."""
    k = np.arange(2, K_max + 1, 2)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    J = bessel_j((k - 1)[:, None].astype(float), x_arr[None, :]).real
    out = 4 * (((k - 1) * np.asarray(h(k), dtype=float)) @ J)
    return float(out[0]) if np.ndim(x) == 0 else out

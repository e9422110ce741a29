"""
Real-argument Bessel/Hankel functions and the Helmholtz mean-value factor.

The evaluators wrap scipy.special; `ascending_series` and `hankel_asymptotic`
are independent from-scratch expansions kept as oracles for the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .errors import SpecfunDomainError

ArrayLike = Union[float, np.ndarray]

EULER_GAMMA = 0.57721566490153286
J0_FIRST_ZERO = float(special.jn_zeros(0, 1)[0])  # 2.404825557695773
J1_FIRST_ZERO = float(special.jn_zeros(1, 1)[0])  # 3.831705970207512


def bessel_j(n: int, x: ArrayLike) -> ArrayLike:
    if n not in (0, 1, 2):
        raise SpecfunDomainError(f"bessel_j supports orders 0, 1, 2; got {n}")
    return special.jv(n, x)


def hankel1(n: int, x: ArrayLike) -> ArrayLike:
    """H_n^(1)(x) = J_n(x) + i Y_n(x) for x > 0."""
    if n not in (0, 1):
        raise SpecfunDomainError(f"hankel1 supports orders 0, 1; got {n}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or not np.all(np.isfinite(xa)):
        raise SpecfunDomainError("hankel1 needs finite x > 0 (Y_n is singular at 0)")
    return special.hankel1(n, x)


def bessel_y(n: int, x: ArrayLike) -> ArrayLike:
    return np.imag(hankel1(n, x))


@dataclass(frozen=True)
class MeanValueFactorQuery:
    d: int
    z: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise SpecfunDomainError(f"dimension must be 2 or 3, got {self.d}")
        if not (self.z >= 0):
            raise SpecfunDomainError(f"z must be nonnegative, got {self.z}")


def mean_value_factor(d: int, z: ArrayLike) -> ArrayLike:
    """Γ(d/2+1) J_{d/2}(z) / (z/2)^{d/2}, with the removable value 1 at z = 0.

    For d = 2 this is 2 J_1(z)/z. Small z use the two-term series to avoid
    the 0/0 quotient.
    """
    if d not in (2, 3):
        raise SpecfunDomainError(f"dimension must be 2 or 3, got {d}")
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise SpecfunDomainError("mean value factor needs z >= 0")
    nu = d / 2.0
    small = za < 1e-6
    safe = np.where(small, 1.0, za)
    val = special.gamma(nu + 1.0) * special.jv(nu, safe) / (safe / 2.0) ** nu
    series = 1.0 - za ** 2 / (4.0 * (nu + 1.0))
    out = np.where(small, series, val)
    return float(out) if np.ndim(z) == 0 else out


def mean_value(q: MeanValueFactorQuery) -> float:
    return float(mean_value_factor(q.d, q.z))


# ------------------------------------------------------------------ oracles

def ascending_series(n: int, x: float, terms: int = 80) -> float:
    """J_n(x) from the power series Σ (-1)^k (x/2)^{2k+n} / (k! (k+n)!)."""
    half = x / 2.0
    term = half ** n / math.factorial(n)
    total = term
    for k in range(1, terms):
        term *= -(half * half) / (k * (k + n))
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def y0_series(x: float, terms: int = 80) -> float:
    """Y_0 from (2/π)[(log(x/2)+γ) J_0(x) + Σ (-1)^{k+1} H_k (x²/4)^k / (k!)²]."""
    q = x * x / 4.0
    j0 = ascending_series(0, x, terms)
    total = 0.0
    term = 1.0
    h = 0.0
    for k in range(1, terms):
        term *= q / (k * k)
        h += 1.0 / k
        total += (-1) ** (k + 1) * h * term
    return (2.0 / math.pi) * ((math.log(x / 2.0) + EULER_GAMMA) * j0 + total)


def hankel_asymptotic(n: int, x: float, terms: int = 12) -> complex:
    """Large-argument expansion sqrt(2/(πx)) e^{i(x - nπ/2 - π/4)} Σ_k i^k a_k(n) / x^k."""
    mu = 4.0 * n * n
    ak = 1.0
    total = 1.0 + 0j
    best = abs(total)
    for k in range(1, terms):
        ak *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = (1j ** k) * ak / x ** k
        if abs(term) > best:  # asymptotic series started to diverge
            break
        total += term
        best = abs(term)
    phase = x - n * math.pi / 2.0 - math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * complex(math.cos(phase), math.sin(phase)) * total


def oracle_bessel_j(n: int, x: float) -> float:
    """Series below 12, asymptotic real part above."""
    if abs(x) < 12.0:
        return ascending_series(n, x)
    return hankel_asymptotic(n, x).real

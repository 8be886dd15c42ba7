"""Polynomial machinery: Chebyshev approximation of |x| and Hermite statistics.

The absolute value on [-1, 1] is approximated by the truncated Chebyshev
expansion

    G_K(x) = (2/pi) T_0(x) + (4/pi) sum_{k=1}^K (-1)^{k+1} T_{2k}(x) / (4k^2 - 1),

an even polynomial whose uniform error is at most 2/(pi(2K+1)).  Feeding its
monomial coefficients into probabilists' Hermite polynomials yields the
statistic

    s_K(x) = sum_{k=1}^K g_{2k} M^(1-2k) H_{2k}(x),

whose expectation under N(theta, 1) tracks |theta| up to a bias of order
M/(2K+1) for |theta| up to the working signal range.  The k = 0 constant is
deliberately dropped from s_K; including it would add M*g_0 to every value
without improving the expectation's shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, floor, log, pi

import numpy as np

MAX_HALF_DEGREE = 30
MAX_DEGREE = 2 * MAX_HALF_DEGREE


def _cheb_fractions(k: int) -> list[Fraction]:
    """Exact monomial coefficients of T_k from the closed-form expansion."""
    if k == 0:
        return [Fraction(1)]
    coeffs = [Fraction(0)] * (k + 1)
    for j in range(k // 2 + 1):
        term = Fraction((-1) ** j * k, k - j) * comb(k - j, j) * Fraction(2) ** (k - 2 * j - 1)
        coeffs[k - 2 * j] += term
    return coeffs


def cheb_coeffs(k: int) -> np.ndarray:
    """Monomial coefficients of the Chebyshev polynomial T_k (x^0 .. x^k).

    Coefficients are assembled exactly over the rationals; every entry of the
    result is an integer exactly representable in double precision for
    k <= 60, which is why larger degrees are rejected.
    """
    if k < 0:
        raise ValueError(f"degree must be nonnegative, got {k}")
    if k > MAX_DEGREE:
        raise ValueError(f"degree must be <= {MAX_DEGREE}, got {k}")
    out = np.empty(k + 1)
    for i, c in enumerate(_cheb_fractions(k)):
        if c.denominator != 1:
            raise AssertionError(f"non-integer Chebyshev coefficient at degree {k}")
        out[i] = float(c)
    return out


@dataclass(frozen=True)
class ChebCoeffs:
    """Even-monomial coefficients g_{2k}, k = 0..K, of the polynomial G_K."""

    K: int
    g: np.ndarray

    def evaluate(self, x) -> np.ndarray:
        """Evaluate G_K at x (scalar or array) via its even monomials."""
        x = np.asarray(x, dtype=np.float64)
        xsq = x * x
        # Horner in x^2, highest degree first
        acc = np.full_like(xsq, self.g[self.K])
        for k in range(self.K - 1, -1, -1):
            acc = acc * xsq + self.g[k]
        return acc


@lru_cache(maxsize=None)
def gk_coeffs(K: int) -> ChebCoeffs:
    """Coefficients of G_K, the degree-2K Chebyshev approximant of |x|.

    The rational part (everything except the 1/pi factor) is accumulated
    exactly and rounded to double once, so no cancellation error enters the
    combination of Chebyshev expansions.  Results are cached (the exact
    assembly costs far more than everything downstream); the coefficient
    array is frozen read-only so the cache cannot be poisoned.
    """
    if not 1 <= K <= MAX_HALF_DEGREE:
        raise ValueError(f"K must be in [1, {MAX_HALF_DEGREE}], got {K}")
    scaled = [Fraction(0)] * (K + 1)  # coefficient of x^{2l}, scaled by pi
    scaled[0] += Fraction(2)
    for k in range(1, K + 1):
        tk = _cheb_fractions(2 * k)
        weight = Fraction(4 * (-1) ** (k + 1), 4 * k * k - 1)
        for l in range(k + 1):
            scaled[l] += weight * tk[2 * l]
    g = np.array([float(c) for c in scaled]) / pi
    g.flags.writeable = False
    return ChebCoeffs(K=K, g=g)


def uniform_bound(K: int) -> float:
    """Worst-case |G_K(x) - |x|| on [-1, 1]; attained at x = 0."""
    return 2.0 / (pi * (2 * K + 1))


@dataclass(frozen=True)
class HermiteTable:
    """Values H_0(x) .. H_max_degree(x) of probabilists' Hermite polynomials."""

    max_degree: int
    values: np.ndarray


def hermite_values(max_degree: int, x: np.ndarray) -> np.ndarray:
    """All Hermite values H_0..H_max_degree at an array x, shape (deg+1, *x.shape).

    Uses the three-term recurrence H_{k+1}(x) = x H_k(x) - k H_{k-1}(x); only
    polynomial values are formed, so there is no factorial overflow.
    """
    if max_degree < 0:
        raise ValueError(f"max_degree must be nonnegative, got {max_degree}")
    if max_degree > MAX_DEGREE:
        raise ValueError(f"max_degree must be <= {MAX_DEGREE}, got {max_degree}")
    x = np.asarray(x, dtype=np.float64)
    table = np.empty((max_degree + 1,) + x.shape)
    table[0] = 1.0
    if max_degree >= 1:
        table[1] = x
    for k in range(1, max_degree):
        table[k + 1] = x * table[k] - k * table[k - 1]
    return table


def hermite_eval(max_degree: int, x: float) -> HermiteTable:
    """Hermite values at a single point, packaged with their degree."""
    values = hermite_values(max_degree, np.asarray(float(x)))
    return HermiteTable(max_degree=max_degree, values=values)


@dataclass(frozen=True)
class ApproxConfig:
    """Tuning bundle for the polynomial statistic.

    Defaults follow the working choices: scale m_n = 8*sqrt(log n) and
    truncation ceiling t_max = n^2 (natural log throughout).
    """

    n: int
    K: int = 8
    m_n: float = field(default=0.0)
    t_max: float = field(default=0.0)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2 (log n must be positive), got {self.n}")
        if not 1 <= self.K <= MAX_HALF_DEGREE:
            raise ValueError(f"K must be in [1, {MAX_HALF_DEGREE}], got {self.K}")
        if self.m_n == 0.0:
            object.__setattr__(self, "m_n", 8.0 * np.sqrt(log(self.n)))
        if self.t_max == 0.0:
            object.__setattr__(self, "t_max", float(self.n) ** 2)
        if self.m_n <= 0:
            raise ValueError(f"m_n must be positive, got {self.m_n}")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @property
    def lower_threshold(self) -> float:
        """sqrt(2 log n): boundary below which a tested value is noise-like."""
        return float(np.sqrt(2.0 * log(self.n)))

    @property
    def upper_threshold(self) -> float:
        """2 sqrt(2 log n): boundary above which |x| itself is the estimate."""
        return 2.0 * self.lower_threshold


def k_from_rate(r: float, n: int) -> int:
    """Degree rule K = max(1, floor(r log n)) for callers tuning K with n."""
    if r <= 0:
        raise ValueError(f"rate must be positive, got {r}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return max(1, floor(r * log(n)))


# below this size, per-element Python floats beat numpy's fixed call overhead
_SMALL_SIZE = 64


def _s_k_small(values: list[float], coeffs: list[tuple[float, int]], K: int) -> list[float]:
    """Per-element path with the same operation order as the array path,
    so the two produce bitwise-identical doubles."""
    out = []
    for x in values:
        h = [1.0, x]
        for k in range(1, 2 * K):
            h.append(x * h[k] - k * h[k - 1])
        total = 0.0
        comp = 0.0
        for coeff, k in coeffs:
            term = coeff * h[2 * k]
            new = total + term
            if abs(total) >= abs(term):
                comp += (total - new) + term
            else:
                comp += (term - new) + total
            total = new
        out.append(total + comp)
    return out


def s_k(x, cfg: ApproxConfig):
    """The Hermite statistic s_K(x) = sum_{k=1}^K g_{2k} m_n^(1-2k) H_{2k}(x).

    Accepts a scalar or an array.  Terms are accumulated from k = K down to
    k = 1 (smallest magnitude first) with Neumaier compensation: the terms
    alternate in sign and span many orders of magnitude, and the running
    compensation keeps the reduction faithful in double precision.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    g = gk_coeffs(cfg.K).g
    if arr.size <= _SMALL_SIZE:
        coeffs = [
            (float(g[k] * cfg.m_n ** (1 - 2 * k)), k) for k in range(cfg.K, 0, -1)
        ]
        values = _s_k_small(arr.tolist(), coeffs, cfg.K)
        return values[0] if scalar else np.array(values, dtype=np.float64)
    table = hermite_values(2 * cfg.K, arr)
    total = np.zeros_like(arr)
    comp = np.zeros_like(arr)
    for k in range(cfg.K, 0, -1):
        term = (g[k] * cfg.m_n ** (1 - 2 * k)) * table[2 * k]
        new = total + term
        comp += np.where(
            np.abs(total) >= np.abs(term),
            (total - new) + term,
            (term - new) + total,
        )
        total = new
    result = total + comp
    return float(result[0]) if scalar else result


def delta_k(x, cfg: ApproxConfig):
    """The truncated statistic min(s_K(x), t_max); the ceiling tames rare blowups."""
    value = s_k(x, cfg)
    if np.ndim(value) == 0:
        return min(value, cfg.t_max)
    return np.minimum(value, cfg.t_max)

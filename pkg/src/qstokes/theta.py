"""Jacobi theta function ``theta(z) = sum_n q^{-n(n+1)/2} z^n`` and its
translates ``theta_c(z) = theta(z / c)``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ZeroArgument
from .series import TruncatedLaurentSeries, series_multiply

# coefficients below this fraction of the largest one are dropped from
# theta expansions; they cannot influence double-precision results
_TRIM = 1e-24


def theta_exponent(n: int) -> int:
    return n * (n + 1) // 2


def _qpow(q: complex, e: int) -> complex:
    """``q**(-e)`` for an integer exponent, without overflow."""
    try:
        return q ** (-e)
    except OverflowError:
        return 0j


@dataclass(frozen=True)
class ThetaContext:
    """Theta evaluation parameters; the window widens itself until its edge
    coefficients are below ``1e-16`` of the central one."""

    q: complex
    coeff_window: int = 30

    def __post_init__(self):
        q = complex(self.q)
        if not abs(q) > 1 + 1e-6:
            raise ValueError(f"theta needs |q| > 1, got |q| = {abs(q)}")
        object.__setattr__(self, "q", q)
        W = max(1, int(self.coeff_window))
        lq = math.log(abs(q))
        while theta_exponent(W) * lq < 16 * math.log(10):
            W += 1
        object.__setattr__(self, "coeff_window", W)

    @property
    def log_q(self) -> float:
        return math.log(abs(self.q))

    def widened(self, factor=1.5) -> "ThetaContext":
        return ThetaContext(self.q, int(math.ceil(self.coeff_window * factor)) + 1)


def theta_coeff(ctx: ThetaContext, n: int) -> complex:
    """Laurent coefficient ``q^{-n(n+1)/2}``."""
    return _qpow(ctx.q, theta_exponent(int(n)))


def theta_coeffs(ctx: ThetaContext, lo: int, hi: int) -> np.ndarray:
    return np.array([theta_coeff(ctx, n) for n in range(lo, hi + 1)], dtype=complex)


def theta_eval(ctx: ThetaContext, z) -> complex:
    """Evaluate ``theta`` at ``z != 0``.

    The summation window is centred on the dominant term, so the truncation
    error is below ``1e-16`` relative for any ``z``.
    """
    z = complex(z)
    if z == 0:
        raise ZeroArgument("theta is not defined at z = 0")
    n0 = int(round(math.log(abs(z)) / ctx.log_q))
    W = ctx.coeff_window
    ns = np.arange(n0 - W, n0 + W + 1)
    # log of |q^{-n(n+1)/2} z^n| relative to the dominant term keeps powers finite
    logs = -(ns * (ns + 1) / 2) * np.log(ctx.q) + ns * np.log(z)
    shift = logs.real.max()
    terms = np.exp(logs - shift)
    return complex(terms.sum() * math.exp(shift))


def theta_c_eval(ctx: ThetaContext, c, z, delta: int = 1) -> complex:
    return theta_eval(ctx, complex(z) / complex(c)) ** delta


@lru_cache(maxsize=256)
def _theta_c_power_cached(q: complex, W: int, c: complex, delta: int):
    ctx = ThetaContext(q, W)
    ns = np.arange(-W, W + 1)
    base = theta_coeffs(ctx, -W, W) * np.power(c, -ns.astype(float))
    t1 = TruncatedLaurentSeries(-W, base, exact=True).trim(_TRIM)
    out = t1
    for _ in range(delta - 1):
        out = series_multiply(out, t1).trim(_TRIM)
    return out


def theta_c_power_series(ctx: ThetaContext, c, delta: int) -> TruncatedLaurentSeries:
    """Laurent expansion of ``theta_c(z)^delta`` (scalar, exact window).

    The coefficients of ``theta_c`` are ``theta_coeff(n) c^{-n}``; powers are
    repeated Cauchy products.  Coefficients negligible against the largest
    are trimmed so the series is a certified bilateral expansion.
    """
    c = complex(c)
    if c == 0:
        raise ZeroArgument("theta_c needs c != 0")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return TruncatedLaurentSeries.constant(1.0)
    return _theta_c_power_cached(ctx.q, ctx.coeff_window, c, int(delta))


def theta_zero_spiral(c, q, ms=range(-2, 3)) -> np.ndarray:
    """Points ``-c q^m`` of the zero spiral of ``theta_c``."""
    return np.array([-complex(c) * complex(q) ** m for m in ms])

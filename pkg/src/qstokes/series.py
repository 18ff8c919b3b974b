"""Matrix-valued truncated Laurent series on explicit degree windows.

A series stores coefficients for degrees ``n_min .. n_max``.  Below ``n_min``
the coefficients are zero.  Above ``n_max`` they are zero when the series is
``exact`` (a Laurent polynomial, or a bilateral series whose tails were
certified negligible), and unknown otherwise.  Every operation returns the
window on which its result is determined by its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyWindow, ZeroArgument


@dataclass(frozen=True, eq=False)
class TruncatedLaurentSeries:
    n_min: int
    coeffs: np.ndarray  # shape (N, rows, cols)
    exact: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.ndim != 3:
            raise DimensionMismatch(f"coefficient stack must be 3-d, got {c.shape}")
        if c.shape[0] == 0:
            raise EmptyWindow("series window is empty")
        if not np.all(np.isfinite(c)):
            raise ValueError("series coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n_min", int(self.n_min))

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, shape, n_min=0, n_max=0, exact=True):
        return cls(n_min, np.zeros((n_max - n_min + 1, *shape), dtype=complex), exact)

    @classmethod
    def constant(cls, M, exact=True):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls(0, M[None], exact)

    @classmethod
    def monomial(cls, M, degree, exact=True):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls(degree, M[None], exact)

    @classmethod
    def from_dict(cls, terms, shape=None, exact=True):
        """Build from ``{degree: matrix}``; an empty dict needs ``shape``."""
        if not terms:
            return cls.zeros(shape, exact=exact)
        degs = sorted(int(d) for d in terms)
        mats = {int(d): np.atleast_2d(np.asarray(m, dtype=complex)) for d, m in terms.items()}
        shp = mats[degs[0]].shape
        out = np.zeros((degs[-1] - degs[0] + 1, *shp), dtype=complex)
        for d in degs:
            if mats[d].shape != shp:
                raise DimensionMismatch("inconsistent coefficient shapes")
            out[d - degs[0]] = mats[d]
        return cls(degs[0], out, exact)

    # basic properties ---------------------------------------------------
    @property
    def n_max(self) -> int:
        return self.n_min + self.coeffs.shape[0] - 1

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def coeff(self, n: int) -> np.ndarray:
        if self.n_min <= n <= self.n_max:
            return self.coeffs[n - self.n_min]
        if n < self.n_min or self.exact:
            return np.zeros(self.shape, dtype=complex)
        raise EmptyWindow(f"degree {n} lies beyond the valid window (n_max={self.n_max})")

    def to_dict(self, drop_zeros=True):
        out = {}
        for n, c in zip(self.degrees, self.coeffs):
            if drop_zeros and not np.any(c):
                continue
            out[int(n)] = c
        return out

    def is_zero(self, tol=0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs)) <= tol)

    def support(self):
        """Lowest and highest degree with a nonzero coefficient (None if zero)."""
        nz = np.flatnonzero(np.any(self.coeffs != 0, axis=(1, 2)))
        if nz.size == 0:
            return None
        return self.n_min + int(nz[0]), self.n_min + int(nz[-1])

    # window manipulation -----------------------------------------------
    def window(self, lo: int, hi: int) -> "TruncatedLaurentSeries":
        """Restrict or zero-pad to degrees ``lo .. hi``.

        Padding above ``n_max`` is only allowed for exact series.
        """
        if hi < lo:
            raise EmptyWindow(f"empty window [{lo}, {hi}]")
        if hi > self.n_max and not self.exact:
            raise EmptyWindow(f"cannot extend a truncated series beyond degree {self.n_max}")
        out = np.zeros((hi - lo + 1, *self.shape), dtype=complex)
        a, b = max(lo, self.n_min), min(hi, self.n_max)
        if a <= b:
            out[a - lo:b - lo + 1] = self.coeffs[a - self.n_min:b - self.n_min + 1]
        exact = self.exact and hi >= self.n_max
        return TruncatedLaurentSeries(lo, out, exact)

    def trim(self, rel=0.0) -> "TruncatedLaurentSeries":
        """Drop leading and (for exact series) trailing coefficients whose
        magnitude is at most ``rel`` times the largest one."""
        mags = np.max(np.abs(self.coeffs), axis=(1, 2))
        top = mags.max()
        keep = np.flatnonzero(mags > rel * top)
        if keep.size == 0:
            return TruncatedLaurentSeries(self.n_min, self.coeffs[:1] * 0, self.exact)
        a = int(keep[0])
        b = int(keep[-1]) if self.exact else self.coeffs.shape[0] - 1
        return TruncatedLaurentSeries(self.n_min + a, self.coeffs[a:b + 1], self.exact)

    def shift(self, k: int) -> "TruncatedLaurentSeries":
        """Multiply by ``z^k``."""
        return TruncatedLaurentSeries(self.n_min + int(k), self.coeffs, self.exact)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        if other.shape != self.shape:
            raise DimensionMismatch(f"cannot add shapes {self.shape} and {other.shape}")
        lo = min(self.n_min, other.n_min)
        tops = [s.n_max for s in (self, other) if not s.exact]
        hi = min(tops) if tops else max(self.n_max, other.n_max)
        if hi < lo:
            raise EmptyWindow("sum has an empty window")
        out = self.window(lo, hi).coeffs + other.window(lo, hi).coeffs
        return TruncatedLaurentSeries(lo, out, self.exact and other.exact)

    def __neg__(self):
        return TruncatedLaurentSeries(self.n_min, -self.coeffs, self.exact)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "TruncatedLaurentSeries":
        return TruncatedLaurentSeries(self.n_min, self.coeffs * s, self.exact)

    def __mul__(self, other):
        if isinstance(other, TruncatedLaurentSeries):
            return series_multiply(self, other)
        return self.scale(other)

    __rmul__ = scale

    def left(self, M) -> "TruncatedLaurentSeries":
        """Left product with a constant matrix."""
        return TruncatedLaurentSeries(self.n_min, np.asarray(M, dtype=complex) @ self.coeffs, self.exact)

    def right(self, M) -> "TruncatedLaurentSeries":
        return TruncatedLaurentSeries(self.n_min, self.coeffs @ np.asarray(M, dtype=complex), self.exact)

    def transpose(self) -> "TruncatedLaurentSeries":
        return TruncatedLaurentSeries(self.n_min, self.coeffs.transpose(0, 2, 1), self.exact)

    def __call__(self, z):
        return series_eval(self, z)

    def __repr__(self):
        return (f"TruncatedLaurentSeries(window=[{self.n_min}, {self.n_max}], "
                f"shape={self.shape}, exact={self.exact})")


def series_multiply(f: TruncatedLaurentSeries, g: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    """Cauchy product, restricted to the degrees fully determined by the inputs."""
    if f.shape[1] != g.shape[0]:
        raise DimensionMismatch(f"inner dimensions differ: {f.shape} @ {g.shape}")
    lo = f.n_min + g.n_min
    if f.exact and g.exact:
        hi = f.n_max + g.n_max
    elif f.exact:
        hi = f.n_min + g.n_max
    elif g.exact:
        hi = f.n_max + g.n_min
    else:
        hi = min(f.n_max + g.n_min, f.n_min + g.n_max)
    if hi < lo:
        raise EmptyWindow("product window is empty")
    nf, ng = f.coeffs.shape[0], g.coeffs.shape[0]
    out = np.zeros((nf + ng - 1, f.shape[0], g.shape[1]), dtype=complex)
    # ascending-degree accumulation keeps the summation order fixed
    if nf <= ng:
        for m in range(nf):
            out[m:m + ng] += np.matmul(f.coeffs[m], g.coeffs)
    else:
        for m in range(ng):
            out[m:m + nf] += np.matmul(f.coeffs, g.coeffs[m])
    out = out[: hi - lo + 1]
    return TruncatedLaurentSeries(lo, out, f.exact and g.exact)


def series_scale_by(f: TruncatedLaurentSeries, t: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    """Product of a matrix series with a scalar series."""
    if t.shape != (1, 1):
        raise DimensionMismatch(f"expected a scalar series, got shape {t.shape}")
    r, c = f.shape
    flat = TruncatedLaurentSeries(f.n_min, f.coeffs.reshape(-1, 1, r * c), f.exact)
    prod = series_multiply(t, flat)
    return TruncatedLaurentSeries(prod.n_min, prod.coeffs.reshape(-1, r, c), prod.exact)


def series_sigma_q(f: TruncatedLaurentSeries, q) -> TruncatedLaurentSeries:
    """Coefficient map ``f_n -> q^n f_n`` realizing ``f(z) -> f(qz)``."""
    powers = np.power(complex(q), f.degrees.astype(float))
    return TruncatedLaurentSeries(f.n_min, f.coeffs * powers[:, None, None], f.exact)


def series_eval(f: TruncatedLaurentSeries, z, with_tail=False):
    """Evaluate ``sum_n f_n z^n`` over the window (ascending degree).

    With ``with_tail`` the magnitude of the last kept term is returned as a
    crude truncation diagnostic.
    """
    z = complex(z)
    if z == 0:
        raise ZeroArgument("series evaluation at z = 0")
    zp = np.power(z, f.degrees.astype(float))
    terms = f.coeffs * zp[:, None, None]
    value = terms.sum(axis=0)
    if with_tail:
        tail = float(np.max(np.abs(terms[-1]))) if not f.exact else 0.0
        return value, tail
    return value


def series_eval_many(f: TruncatedLaurentSeries, zs) -> np.ndarray:
    """Evaluate at a 1-d array of points; returns shape ``(len(zs), rows, cols)``."""
    zs = np.asarray(zs, dtype=complex).reshape(-1)
    if np.any(zs == 0):
        raise ZeroArgument("series evaluation at z = 0")
    zp = zs[:, None] ** f.degrees[None, :].astype(float)
    return np.einsum("pn,nrc->prc", zp, f.coeffs)


def scalar_coeffs(f: TruncatedLaurentSeries) -> np.ndarray:
    if f.shape != (1, 1):
        raise DimensionMismatch(f"expected a scalar series, got shape {f.shape}")
    return f.coeffs[:, 0, 0]


@dataclass(frozen=True, eq=False)
class ScaledCoefficientTrack:
    """Overflow-safe record of a scalar coefficient sequence.

    ``log_magnitudes[k]`` is ``log|f_{n_min+k}|`` (``-inf`` for zeros) and
    ``phases[k]`` the unit-modulus phase.
    """

    n_min: int
    log_magnitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        lm = np.asarray(self.log_magnitudes, dtype=float)
        ph = np.asarray(self.phases, dtype=complex)
        if lm.shape != ph.shape or lm.ndim != 1:
            raise DimensionMismatch("log_magnitudes and phases must be 1-d of equal length")
        fin = np.isfinite(lm)
        if np.any(np.abs(np.abs(ph[fin]) - 1.0) > 1e-12):
            raise ValueError("phases must have unit modulus")
        object.__setattr__(self, "log_magnitudes", lm)
        object.__setattr__(self, "phases", ph)

    @property
    def degrees(self):
        return np.arange(self.n_min, self.n_min + self.log_magnitudes.size)

    @classmethod
    def from_values(cls, values, n_min=0):
        v = np.asarray(values, dtype=complex)
        mag = np.abs(v)
        with np.errstate(divide="ignore"):
            lm = np.log(mag)
        ph = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0)
        return cls(n_min, lm, ph)

    @classmethod
    def from_series(cls, f: TruncatedLaurentSeries, entry=(0, 0)):
        return cls.from_values(f.coeffs[:, entry[0], entry[1]], f.n_min)

    @classmethod
    def from_log(cls, log_magnitudes, n_min=0, phases=None):
        lm = np.asarray(log_magnitudes, dtype=float)
        ph = np.ones(lm.shape, dtype=complex) if phases is None else phases
        return cls(n_min, lm, ph)

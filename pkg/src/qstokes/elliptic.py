"""Points of the elliptic curve ``E_q = C^* / q^Z`` and distances on it."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import ZeroArgument

# relative slack used to snap log|z| / log|q| onto an integer
_SNAP = 1e-12


def _band_index(z: complex, q: complex) -> int:
    x = math.log(abs(z)) / math.log(abs(q))
    k = round(x)
    if abs(x - k) < _SNAP:
        return int(k)
    return int(math.floor(x))


def canonical_rep(z, q) -> complex:
    """Representative of ``z q^Z`` with modulus in ``[1, |q|)``."""
    z, q = complex(z), complex(q)
    if z == 0:
        raise ZeroArgument("0 has no class in C*/q^Z")
    return z * q ** (-_band_index(z, q))


def log_distance(z1, z2, q) -> float:
    """Distance between the classes of ``z1`` and ``z2`` in the flat metric
    of ``C / (2 pi i Z + log(q) Z)``."""
    z1, z2, q = complex(z1), complex(z2), complex(q)
    if z1 == 0 or z2 == 0:
        raise ZeroArgument("0 has no class in C*/q^Z")
    w = z1 / z2
    k0 = -_band_index(w, q)
    best = math.inf
    for k in range(k0 - 2, k0 + 3):
        best = min(best, abs(cmath.log(w * q ** k)))
    return best


@dataclass(frozen=True)
class EllipticPoint:
    """A class in ``C^*/q^Z`` stored through its canonical representative."""

    rep: complex
    q: complex

    def __post_init__(self):
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "rep", canonical_rep(self.rep, self.q))

    def distance(self, other) -> float:
        z = other.rep if isinstance(other, EllipticPoint) else other
        return log_distance(self.rep, z, self.q)

    def same_class(self, other, tol=1e-9) -> bool:
        return self.distance(other) <= tol

    def power(self, k: int) -> "EllipticPoint":
        return EllipticPoint(self.rep ** k, self.q)

    def __complex__(self):
        return self.rep

    def to_list(self):
        return [self.rep.real, self.rep.imag]

    def __repr__(self):
        return f"EllipticPoint({self.rep:.12g} mod {self.q:g}^Z)"


def elliptic_class(z, q) -> EllipticPoint:
    return EllipticPoint(complex(z), complex(q))


def direction_rep(c, q) -> complex:
    """Representative used for summation in direction ``c``.

    An :class:`EllipticPoint` contributes its canonical representative; a raw
    complex number is used as given, which lets contours move continuously
    through the modulus band boundary.
    """
    if isinstance(c, EllipticPoint):
        return c.rep
    c = complex(c)
    if c == 0:
        raise ZeroArgument("summation direction must be nonzero")
    return c

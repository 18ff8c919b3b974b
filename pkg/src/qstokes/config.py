"""Global tolerances and the per-run configuration."""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field, asdict, replace

#: Default basepoint for fiber-functor evaluation.
DEFAULT_BASEPOINT = 0.77 + 0.13j
#: Default reference summation direction (representative in the annulus).
DEFAULT_REFERENCE_DIRECTION = 1.3 * cmath.exp(2.2j)


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-9
    # relative minimum singular value of a Sylvester operator
    sylvester: float = 1e-11
    # clustering radius for eigenvalues (relative)
    cluster: float = 1e-6
    # minimum log-distance on E_q between a direction and the resonance set
    resonance_margin: float = 1e-4
    # minimum log-distance of an evaluation point from the pole spiral
    pole: float = 1e-9
    # relative change allowed under doubling of contour samples
    quadrature: float = 1e-6


TOL = Tolerances()


def _is_pow2(m: int) -> bool:
    return m > 0 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class RunConfig:
    """Arbitrary choices of a pipeline run.

    ``basepoint`` is the point ``a`` at which Stokes matrices are evaluated and
    ``reference_direction`` the fixed direction ``c0`` against which the
    logarithms of Stokes matrices are taken.  ``rho is None`` selects the
    automatic contour radius.
    """

    basepoint: complex = DEFAULT_BASEPOINT
    reference_direction: complex = DEFAULT_REFERENCE_DIRECTION
    formal_window: int = 20
    theta_window: int = 30
    rho: float | None = None
    samples: int = 64
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.formal_window < 1 or self.theta_window < 1:
            raise ValueError("windows must be positive")
        if self.rho is not None and not 0 < self.rho < 0.1:
            raise ValueError("contour radius must satisfy 0 < rho < 0.1")
        if self.samples < 32 or not _is_pow2(self.samples):
            raise ValueError("contour samples must be a power of two >= 32")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["basepoint"] = [self.basepoint.real, self.basepoint.imag]
        c0 = complex(self.reference_direction)
        d["reference_direction"] = [c0.real, c0.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        for key in ("basepoint", "reference_direction"):
            if key in d and isinstance(d[key], (list, tuple)):
                d[key] = complex(d[key][0], d[key][1])
        if "contour" in d:
            contour = d.pop("contour")
            d.setdefault("rho", contour.get("rho"))
            d.setdefault("samples", contour.get("samples", 64))
        if "tolerances" in d:
            d["tolerances"] = Tolerances(**d["tolerances"])
        return cls(**d)

"""Level-by-level reconstruction of a system from its graded part and the
spectral components of its alien derivations."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .elliptic import EllipticPoint
from .errors import (
    GradedMismatch,
    InvalidSystem,
    QStokesError,
    SingularTransferMap,
    TargetOutsideRange,
    UnsupportedGaugeSearch,
)
from .galois import NilpotentBlockMatrix, alien_derivation, spectral_coordinates, spectral_project
from .system import QSystem, irr_delta

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LevelTruncation:
    """A system whose over-diagonal blocks above ``level`` vanish."""

    base: QSystem
    level: int

    def __post_init__(self):
        st = self.base.structure
        for (i, j) in self.base.offdiag:
            if st.level(i, j) > self.level:
                raise InvalidSystem(f"block {(i, j)} lies above level {self.level}")


def truncate_to_level(A: QSystem, delta: int) -> LevelTruncation:
    st = A.structure
    off = {k: v for k, v in A.offdiag.items() if st.level(*k) <= delta}
    return LevelTruncation(A.replace(offdiag=off), delta)


def level_equivalent(A: QSystem, B: QSystem, delta: int, gauge_search=False, tol=1e-12) -> dict:
    """Equality of the over-diagonals through level ``delta``.

    Only the trivial constant gauge is searched.
    """
    if gauge_search:
        raise UnsupportedGaugeSearch("searching over constant gauges other than the identity is not supported")
    if not A.same_graded(B, tol):
        raise GradedMismatch("systems have different graded parts")
    st = A.structure
    worst = 0.0
    for i, j in st.pairs():
        if st.level(i, j) > delta:
            continue
        a, b = A.block(i, j), B.block(i, j)
        d = a - b
        scale = max(1.0, float(np.max(np.abs(a.coeffs))), float(np.max(np.abs(b.coeffs))))
        worst = max(worst, float(np.max(np.abs(d.coeffs))) / scale)
    return {"equivalent": worst <= tol, "level": delta, "max_difference": worst}


@dataclass
class AlienTarget:
    """Projected alien derivations ``(delta, class) -> matrix``."""

    q: complex
    entries: dict = field(default_factory=dict)  # (delta, index) -> (EllipticPoint, NilpotentBlockMatrix)

    def level(self, delta: int) -> list:
        return [self.entries[k] for k in sorted(self.entries) if k[0] == delta]

    def levels(self) -> list:
        return sorted({k[0] for k in self.entries})

    def lookup(self, delta: int, point: EllipticPoint, tol=1e-9):
        for p, D in self.level(delta):
            if p.same_class(point, tol):
                return D
        return None


def _class_derivations(A: QSystem, points, config, cache=None):
    out = []
    for p in points:
        key = complex(p.rep)
        if cache is not None and key in cache:
            out.append(cache[key])
            continue
        r = alien_derivation(A, p, config=config)
        if cache is not None:
            cache[key] = r
        out.append(r)
    return out


def alien_targets(A: QSystem, config: RunConfig | None = None, levels=None) -> AlienTarget:
    """``spectral_project(Delta^(delta)_c(A))`` for every ``c`` in ``Sigma^delta``."""
    A0 = A.graded()
    res = A0.resonance
    levels = A.structure.levels() if levels is None else levels
    cache: dict = {}
    entries = {}
    for delta in levels:
        classes = res.classes(delta)
        derivs = _class_derivations(A, [cl.point for cl in classes], config, cache)
        for idx, (cl, r) in enumerate(zip(classes, derivs)):
            entries[(delta, idx)] = (cl.point, spectral_project(r.per_level[delta], A0, delta, cl.point))
    return AlienTarget(A.q, entries)


@dataclass
class TransferMap:
    delta: int
    basis: list
    rows: list          # (class index, witness)
    principal: np.ndarray
    matrix: np.ndarray  # all rows
    base: np.ndarray    # coordinates of the zero extension
    condition: float

    @property
    def square(self) -> np.ndarray:
        return self.matrix[self.principal]

    @property
    def size(self) -> tuple:
        return self.square.shape


def _coordinates(A: QSystem, A0: QSystem, delta: int, config, rows_by_class) -> np.ndarray:
    points = [cl.point for cl in rows_by_class]
    derivs = _class_derivations(A, points, config)
    vals = []
    for cl, r in zip(rows_by_class, derivs):
        ws = [w for w in cl.witnesses if w.delta == delta]
        vals.append(spectral_coordinates(r.per_level[delta], A0, ws))
    return np.concatenate(vals) if vals else np.zeros(0, dtype=complex)


def transfer_map(B, delta: int, config: RunConfig | None = None) -> TransferMap:
    """Finite-difference matrix of ``coefficients -> spectral coordinates of
    Delta^(delta)`` at the zero extension of ``B`` (exact by affineness)."""
    base_sys = B.base if isinstance(B, LevelTruncation) else B
    base_sys = truncate_to_level(base_sys, delta - 1).base
    A0 = base_sys.graded()
    classes = A0.resonance.classes(delta)
    basis = base_sys.level_basis(delta)
    base = _coordinates(base_sys, A0, delta, config, classes)
    cols = []
    for k in range(len(basis)):
        e = np.zeros(len(basis), dtype=complex)
        e[k] = 1.0
        cols.append(_coordinates(base_sys.with_level_coefficients(delta, e), A0, delta, config, classes) - base)
    L = np.array(cols).T if cols else np.zeros((base.size, 0), dtype=complex)
    # row bookkeeping: each witness contributes m_alpha * m_beta coordinates
    principal = []
    rows = []
    from .linalg import spectral_decomposition
    sds = [spectral_decomposition(Ai) for Ai in A0.diag]
    for idx, cl in enumerate(classes):
        for w in cl.witnesses:
            if w.delta != delta:
                continue
            m = sds[w.i].multiplicities[w.alpha_index] * sds[w.j].multiplicities[w.beta_index]
            rows += [(idx, w)] * m
            principal += [w.principal] * m
    principal = np.array(principal, dtype=bool)
    Ls = L[principal]
    cond = float(np.linalg.cond(Ls)) if Ls.size else 1.0
    return TransferMap(delta, basis, rows, principal, L, base, cond)


def _target_vector(targets: AlienTarget, A0: QSystem, delta: int) -> np.ndarray:
    classes = A0.resonance.classes(delta)
    vals = []
    for cl in classes:
        D = targets.lookup(delta, cl.point)
        if D is None:
            raise TargetOutsideRange(f"no target supplied for level {delta}, class {cl.point}")
        proj = spectral_project(D, A0, delta, cl.point)
        off = float(np.linalg.norm(proj.value - D.value))
        if off > 1e-8 * max(1.0, D.norm()):
            raise TargetOutsideRange(
                f"target at level {delta}, class {cl.point} leaves its eigenspace by {off:.2e}")
        ws = [w for w in cl.witnesses if w.delta == delta]
        vals.append(spectral_coordinates(D, A0, ws))
    return np.concatenate(vals) if vals else np.zeros(0, dtype=complex)


def reconstruct_level(B, targets: AlienTarget, config: RunConfig | None = None, delta=None,
                      cond_limit=1e10, range_tol=1e-6):
    """Extend ``B`` (vanishing above level ``delta - 1``) by the unique
    level-``delta`` over-diagonal in polynomial standard form whose alien
    derivations hit ``targets``.  Returns ``(LevelTruncation, report)``."""
    if not isinstance(B, LevelTruncation):
        B = truncate_to_level(B, 0 if delta is None else delta - 1)
    st = B.base.structure
    if delta is None:
        higher = [d for d in st.levels() if d > B.level]
        if not higher:
            return B, {"level": None}
        delta = higher[0]
    A0 = B.base.graded()
    T = transfer_map(B, delta, config)
    t = _target_vector(targets, A0, delta)
    rhs = t - T.base
    Ls = T.square
    if Ls.shape[0] != Ls.shape[1]:
        raise SingularTransferMap(f"transfer map at level {delta} has shape {Ls.shape}")
    if Ls.size and T.condition > cond_limit:
        raise SingularTransferMap(f"transfer map at level {delta} is singular (condition {T.condition:.2e})")
    u = np.linalg.solve(Ls, rhs[T.principal]) if Ls.size else np.zeros(0, dtype=complex)
    scale = max(float(np.linalg.norm(t)), float(np.linalg.norm(T.base)), 1e-300)
    predicted = float(np.linalg.norm(T.matrix @ u - rhs)) / scale
    if predicted > range_tol:
        raise TargetOutsideRange(
            f"level-{delta} targets are not reachable: off-range residual {predicted:.2e}")
    base_sys = truncate_to_level(B.base, delta - 1).base
    new = base_sys.with_level_coefficients(delta, u) if u.size else base_sys
    classes = A0.resonance.classes(delta)
    achieved = _coordinates(new, A0, delta, config, classes) if u.size else T.base
    residual = float(np.linalg.norm(achieved - t)) / max(float(np.linalg.norm(t)), 1e-300)
    report = {
        "level": delta,
        "irr": irr_delta(A0, delta),
        "transfer_shape": list(Ls.shape),
        "condition": T.condition,
        "predicted_residual": predicted,
        "residual": residual,
        "coefficients": u,
    }
    return LevelTruncation(new, delta), report


def reconstruct_full(A0: QSystem, targets: AlienTarget, config: RunConfig | None = None):
    """Run :func:`reconstruct_level` over every realized level in order."""
    if A0.offdiag:
        A0 = A0.graded()
    B = LevelTruncation(A0, 0)
    reports = []
    for delta in A0.structure.levels():
        try:
            B, rep = reconstruct_level(B, targets, config, delta=delta)
        except QStokesError as exc:
            raise type(exc)(f"level {delta}: {exc}") from exc
        reports.append(rep)
    return B.base, reports

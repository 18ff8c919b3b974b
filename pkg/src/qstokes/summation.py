"""Formal gauge transformations, directional summation and Stokes matrices."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockStructure
from .config import TOL
from .elliptic import EllipticPoint, direction_rep, log_distance
from .errors import (
    BasepointOnSpiral,
    GradedMismatch,
    InsufficientData,
    OnPoleSpiral,
    ResonantDirection,
    ResonantSylvester,
    WindowExhausted,
)
from .linalg import sylvester_solve_batch, unipotent_inverse
from .series import (
    ScaledCoefficientTrack,
    TruncatedLaurentSeries,
    series_eval,
    series_multiply,
    series_scale_by,
    series_sigma_q,
)
from .system import QSystem, check_formal_window
from .theta import ThetaContext, theta_c_power_series, theta_eval

log = logging.getLogger(__name__)

# relative size of the edge coefficients of a directional-sum block that
# certifies its window
_EDGE = 1e-14


# ---------------------------------------------------------------------------
# formal gauge


@dataclass(frozen=True, eq=False)
class FormalGauge:
    """Unipotent formal gauge ``F`` with ``(sigma_q F) A_0 = A F``."""

    structure: BlockStructure
    blocks: dict
    formal_window: int
    residuals: dict = field(default_factory=dict)

    def block(self, i, j) -> TruncatedLaurentSeries:
        if i == j:
            return TruncatedLaurentSeries.constant(np.eye(self.structure.ranks[i]))
        return self.blocks.get((i, j)) or TruncatedLaurentSeries.zeros(
            (self.structure.ranks[i], self.structure.ranks[j]))

    def matrix_series(self) -> TruncatedLaurentSeries:
        """Full ``n x n`` series on the common valid window."""
        st = self.structure
        lo = min([0] + [b.n_min for b in self.blocks.values()])
        tops = [b.n_max for b in self.blocks.values() if not b.exact]
        hi = min(tops) if tops else max([0] + [b.n_max for b in self.blocks.values()])
        out = np.zeros((hi - lo + 1, st.n, st.n), dtype=complex)
        out[-lo] = np.eye(st.n)
        for (i, j), b in self.blocks.items():
            out[:, st.slice(i), st.slice(j)] = b.window(lo, hi).coeffs
        return TruncatedLaurentSeries(lo, out, exact=not tops)

    def track(self, i, j, entry=(0, 0)) -> ScaledCoefficientTrack:
        return ScaledCoefficientTrack.from_series(self.block(i, j), entry)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _level_rhs(A: QSystem, i: int, j: int, lower: dict) -> TruncatedLaurentSeries:
    """``U_ij + sum_{i<l<j} U_il F_lj`` on its determined window."""
    V = A.block(i, j)
    for l in range(i + 1, j):
        if (i, l) in A.offdiag and (l, j) in lower:
            V = V + series_multiply(A.offdiag[(i, l)], lower[(l, j)])
    return V


def formal_gauge(A: QSystem, N: int = 20) -> FormalGauge:
    """Formal solution of ``sigma_q F_ij z^{mu_j} A_j - z^{mu_i} A_i F_ij = V_ij``.

    Blocks are solved in increasing level, then lexicographically, by the
    upward recursion ``f_n = A_i^{-1}(q^{n-delta} f_{n-delta} A_j - v_{n+mu_i})``
    started from the vanishing tail.  ``N`` bounds the highest degree kept.
    """
    st = A.structure
    q = A.q
    levels = st.levels()
    if levels:
        check_formal_window(q, N, min(levels))
    blocks: dict = {}
    residuals: dict = {}
    for i, j in st.pairs():
        delta = st.level(i, j)
        mu_i = st.slopes[i]
        V = _level_rhs(A, i, j, blocks)
        sup = V.support()
        if sup is None and V.exact:
            continue
        Ai_inv = np.linalg.inv(A.diag[i])
        Aj = A.diag[j]
        top = N if V.exact else min(N, V.n_max - mu_i)
        lo = (sup[0] - mu_i) if sup is not None else top
        lo = min(lo, top)
        f = np.zeros((top - lo + 1, st.ranks[i], st.ranks[j]), dtype=complex)
        for n in range(lo, top + 1):
            acc = -V.coeff(n + mu_i)
            if n - delta >= lo:
                acc = acc + q ** (n - delta) * f[n - delta - lo] @ Aj
            f[n - lo] = Ai_inv @ acc
        if not np.all(np.isfinite(f)):
            raise WindowExhausted(f"coefficients of block {(i, j)} overflow at window N={N}")
        F = TruncatedLaurentSeries(lo, f, exact=False)
        blocks[(i, j)] = F
        lhs = series_sigma_q(F, q).shift(st.slopes[j]).right(Aj)
        rhs = F.left(A.diag[i]).shift(mu_i) + V
        diff = (lhs - rhs)
        scale = max(float(np.max(np.abs(lhs.coeffs))), float(np.max(np.abs(rhs.coeffs))), 1e-300)
        residuals[(i, j)] = float(np.max(np.abs(diff.coeffs))) / scale
    return FormalGauge(st, blocks, N, residuals)


# ---------------------------------------------------------------------------
# directional summation


def singular_classes(A: QSystem):
    """Resonance classes of the graded part (all levels)."""
    return A.graded().resonance if A.offdiag else A.resonance


def check_direction(A: QSystem, c, margin=None):
    """Raise :class:`ResonantDirection` if ``c`` is within ``margin`` of the
    resonance set of ``A_0``; returns the distance otherwise."""
    margin = TOL.resonance_margin if margin is None else margin
    res = singular_classes(A)
    dist, cl = res.nearest(direction_rep(c, A.q))
    if dist < margin:
        w = cl.witnesses[0]
        raise ResonantDirection(
            f"direction {complex(direction_rep(c, A.q)):.6g} is resonant "
            f"(level {w.delta}, blocks {(w.i, w.j)}, alpha={w.alpha:.6g}, beta={w.beta:.6g}; "
            f"distance {dist:.3e} < {margin:g})",
            witness=w, distance=dist)
    return dist


@dataclass(frozen=True, eq=False)
class DirectionalSum:
    """Meromorphic unipotent gauge with block ``(i, j)`` equal to
    ``G_ij(z) / theta_c(z)^{delta_ij}``.

    The poles are confined to ``-c q^Z`` by construction.
    """

    structure: BlockStructure
    q: complex
    c: complex
    blocks: dict  # (i, j) -> G_ij (exact series)
    theta: ThetaContext
    diagnostics: dict = field(default_factory=dict)

    @property
    def direction(self) -> EllipticPoint:
        return EllipticPoint(self.c, self.q)

    def delta(self, i, j) -> int:
        return self.structure.level(i, j)

    def G(self, i, j) -> TruncatedLaurentSeries:
        if i == j:
            return TruncatedLaurentSeries.constant(np.eye(self.structure.ranks[i]))
        return self.blocks.get((i, j)) or TruncatedLaurentSeries.zeros(
            (self.structure.ranks[i], self.structure.ranks[j]))

    def pole_distance(self, z) -> float:
        return log_distance(-complex(z), self.c, self.q)

    def __call__(self, z) -> np.ndarray:
        return eval_sum(self, z)

    def compose(self, other: "DirectionalSum") -> "DirectionalSum":
        """Product ``self @ other`` (same direction representative)."""
        _same_frame(self, other)
        st = self.structure
        out = {}
        for i, j in st.pairs():
            acc = None
            for l in range(i, j + 1):
                if l != i and (i, l) not in self.blocks:
                    continue
                if l != j and (l, j) not in other.blocks:
                    continue
                term = series_multiply(self.G(i, l), other.G(l, j))
                acc = term if acc is None else acc + term
            if acc is not None and not acc.is_zero():
                out[(i, j)] = acc.trim(0.0)
        return DirectionalSum(st, self.q, self.c, out, self.theta)

    def inverse(self) -> "DirectionalSum":
        """Unipotent inverse ``sum_p (-N)^p`` on the numerators."""
        st = self.structure
        minus = {k: -v for k, v in self.blocks.items()}
        total = dict(minus)
        power = minus
        for _ in range(2, st.k):
            power = _nilpotent_product(power, minus, st)
            if not power:
                break
            for k, v in power.items():
                total[k] = total[k] + v if k in total else v
        return self._with(total)

    def _with(self, blocks: dict) -> "DirectionalSum":
        return DirectionalSum(self.structure, self.q, self.c, blocks, self.theta)

    def add(self, other: "DirectionalSum") -> "DirectionalSum":
        _same_frame(self, other)
        keys = sorted(set(self.blocks) | set(other.blocks))
        out = {}
        for k in keys:
            if k in self.blocks and k in other.blocks:
                out[k] = self.blocks[k] + other.blocks[k]
            else:
                out[k] = self.blocks.get(k, other.blocks.get(k))
        return DirectionalSum(self.structure, self.q, self.c, out, self.theta)

    def subtract_blocks(self, other: "DirectionalSum") -> dict:
        """Blockwise ``self - other`` of the numerators."""
        _same_frame(self, other)
        out = {}
        for k in sorted(set(self.blocks) | set(other.blocks)):
            out[k] = self.G(*k) - other.G(*k)
        return out


def _same_frame(a: DirectionalSum, b: DirectionalSum):
    if a.structure != b.structure or a.c != b.c or a.theta != b.theta:
        raise GradedMismatch("directional sums must share structure, direction and theta window")


def directional_sum(A: QSystem, c, theta: ThetaContext | None = None, check=True,
                    margin=None) -> DirectionalSum:
    """Summation ``S_c F_A`` of the formal gauge in direction ``c``.

    ``G_ij`` solves, coefficient by coefficient,
    ``c^delta (sigma_q G) A_j - A_i G = z^{-mu_i} (sum_l U_il G_lj theta_c^{mu_l-mu_i} + U_ij theta_c^delta)``.
    ``c`` may be an :class:`EllipticPoint` (canonical representative) or a
    complex representative used as given.
    """
    st = A.structure
    q = A.q
    c = direction_rep(c, q)
    theta = theta or ThetaContext(q)
    if check:
        check_direction(A, c, margin)
    for _ in range(4):
        try:
            return _directional_sum(A, c, theta)
        except _WidenWindow:
            theta = theta.widened()
    raise WindowExhausted("directional sum window could not be certified")


class _WidenWindow(Exception):
    pass


def _directional_sum(A: QSystem, c: complex, theta: ThetaContext) -> DirectionalSum:
    st = A.structure
    q = A.q
    powers = {}

    def tp(p):
        if p not in powers:
            powers[p] = theta_c_power_series(theta, c, p)
        return powers[p]

    blocks: dict = {}
    sylv_min = math.inf
    for i, j in st.pairs():
        delta = st.level(i, j)
        mu_i = st.slopes[i]
        W = None
        if (i, j) in A.offdiag:
            W = series_scale_by(A.offdiag[(i, j)], tp(delta))
        for l in range(i + 1, j):
            if (i, l) in A.offdiag and (l, j) in blocks:
                term = series_scale_by(series_multiply(A.offdiag[(i, l)], blocks[(l, j)]),
                                       tp(st.slopes[l] - mu_i))
                W = term if W is None else W + term
        if W is None or W.is_zero():
            continue
        W = W.shift(-mu_i)
        degs = W.degrees
        lams = c ** delta * np.power(q, degs.astype(float))
        try:
            g = sylvester_solve_batch(lams, A.diag[j], A.diag[i], W.coeffs)
        except ResonantSylvester as exc:
            raise ResonantDirection(
                f"direction {c:.6g} is resonant for block {(i, j)} at lambda={exc.lam:.6g}",
                witness=(i, j, exc.lam), distance=exc.sigma_min) from exc
        G = TruncatedLaurentSeries(W.n_min, g, exact=True)
        mags = np.max(np.abs(g), axis=(1, 2))
        if mags.max() > 0 and max(mags[0], mags[-1]) > _EDGE * mags.max():
            raise _WidenWindow()
        blocks[(i, j)] = G.trim(1e-24)
    return DirectionalSum(st, q, c, blocks, theta, {"theta_window": theta.coeff_window})


def eval_sum(S: DirectionalSum, z, check=True) -> np.ndarray:
    """Value ``I + [G_ij(z) / theta_c(z)^delta]`` at ``z`` off the pole spiral."""
    z = complex(z)
    if check and S.pole_distance(z) < TOL.pole:
        raise OnPoleSpiral(f"z={z:.6g} lies on the pole spiral -c q^Z of direction c={S.c:.6g}")
    st = S.structure
    out = np.eye(st.n, dtype=complex)
    if not S.blocks:
        return out
    th = theta_eval(S.theta, z / S.c)
    for (i, j), G in S.blocks.items():
        out[st.slice(i), st.slice(j)] = series_eval(G, z) / th ** st.level(i, j)
    return out


def relative_sum(A: QSystem, A_prime: QSystem, c, theta: ThetaContext | None = None) -> DirectionalSum:
    """``S_c F_{A'} (S_c F_A)^{-1}``, computed on the numerators.

    Written as ``I + (S' - S) S^{-1}`` so that blocks below the first level
    where ``A`` and ``A'`` differ vanish identically.
    """
    if not A.same_graded(A_prime):
        raise GradedMismatch("relative summation needs equal graded parts")
    theta = theta or ThetaContext(A.q)
    S = directional_sum(A, c, theta)
    Sp = directional_sum(A_prime, c, S.theta)
    if Sp.theta != S.theta:
        S = directional_sum(A, c, Sp.theta)
    diff = {}
    for k in sorted(set(S.blocks) | set(Sp.blocks)):
        d = Sp.G(*k) - S.G(*k)
        if not d.is_zero():
            diff[k] = d
    D = DirectionalSum(S.structure, S.q, S.c, diff, S.theta)
    Sinv = S.inverse()
    # (S' - S) has no diagonal, so the product keeps only strict blocks
    prod = _strict_product(D, Sinv)
    return DirectionalSum(S.structure, S.q, S.c, prod, S.theta)


def _nilpotent_product(X: dict, Y: dict, st) -> dict:
    """Product of two strictly upper block matrices given by their blocks."""
    out = {}
    for i, j in st.pairs():
        acc = None
        for l in range(i + 1, j):
            if (i, l) in X and (l, j) in Y:
                term = series_multiply(X[(i, l)], Y[(l, j)])
                acc = term if acc is None else acc + term
        if acc is not None and not acc.is_zero():
            out[(i, j)] = acc.trim(0.0)
    return out


def _strict_product(D: DirectionalSum, S: DirectionalSum) -> dict:
    st = D.structure
    out = {}
    for i, j in st.pairs():
        acc = None
        for l in range(i + 1, j + 1):
            if (i, l) not in D.blocks:
                continue
            if l != j and (l, j) not in S.blocks:
                continue
            term = series_multiply(D.blocks[(i, l)], S.G(l, j))
            acc = term if acc is None else acc + term
        if acc is not None and not acc.is_zero():
            out[(i, j)] = acc.trim(0.0)
    return out


# ---------------------------------------------------------------------------
# Stokes matrices


@dataclass(frozen=True, eq=False)
class StokesMatrix:
    value: np.ndarray
    c: complex
    d: complex
    basepoint: complex
    structure: BlockStructure

    def to_dict(self):
        return {
            "c": [self.c.real, self.c.imag],
            "d": [self.d.real, self.d.imag],
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "value": [[[v.real, v.imag] for v in row] for row in self.value],
        }


def check_basepoint(A: QSystem, a, directions, tol=None):
    tol = TOL.resonance_margin if tol is None else tol
    for c in directions:
        c = direction_rep(c, A.q)
        dist = log_distance(-complex(a), c, A.q)
        if dist < tol:
            raise BasepointOnSpiral(
                f"basepoint {complex(a):.6g} lies on the pole spiral of direction {c:.6g} (distance {dist:.2e})")


def evaluate_at(A: QSystem, c, a, theta=None) -> np.ndarray:
    return eval_sum(directional_sum(A, c, theta), a)


def stokes_matrix(A: QSystem, c, d, a, theta=None) -> StokesMatrix:
    """``(S_c F_A)(a)^{-1} (S_d F_A)(a)``, a unipotent matrix."""
    q = A.q
    c, d = direction_rep(c, q), direction_rep(d, q)
    a = complex(a)
    check_basepoint(A, a, [c, d])
    st = A.structure
    if c == d:
        return StokesMatrix(np.eye(st.n, dtype=complex), c, d, a, st)
    Fc = evaluate_at(A, c, a, theta)
    Fd = evaluate_at(A, d, a, theta)
    S = unipotent_inverse(Fc, st) @ Fd
    S = np.where(st.upper_mask(), S, np.eye(st.n))
    return StokesMatrix(S, c, d, a, st)


# ---------------------------------------------------------------------------
# q-Gevrey growth


def gevrey_level_estimate(track: ScaledCoefficientTrack, q, threshold=0.05) -> float:
    """Estimate ``delta`` from ``log|f_n| ~ n^2 log|q| / (2 delta) + b n + c``.

    The fit uses the tail half of the nonzero coefficients; a quadratic
    coefficient below ``threshold`` means convergent (returns ``inf``).
    """
    lm = track.log_magnitudes
    ns = track.degrees
    ok = np.isfinite(lm)
    if int(ok.sum()) < 10:
        raise InsufficientData(f"need at least 10 nonzero coefficients, got {int(ok.sum())}")
    n, y = ns[ok].astype(float), lm[ok]
    half = len(n) // 2
    n, y = n[half:], y[half:]
    lq = math.log(abs(complex(q)))
    X = np.stack([n ** 2 * lq / 2, n, np.ones_like(n)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a = float(coef[0])
    if a < threshold:
        return math.inf
    return 1.0 / a

"""q-difference systems in standard form and their tannakian constructions."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .blocks import BlockStructure
from .config import TOL
from .elliptic import EllipticPoint, canonical_rep, log_distance, _band_index
from .errors import (
    DimensionMismatch,
    IllConditionedEigenproblem,
    InvalidSystem,
    WindowExhausted,
)
from .linalg import eigen_clusters, null_space, spectral_decomposition
from .series import (
    TruncatedLaurentSeries,
    series_eval,
    series_eval_many,
    series_multiply,
    series_sigma_q,
)


def _as_series(value, shape):
    if isinstance(value, TruncatedLaurentSeries):
        if value.shape != shape:
            raise DimensionMismatch(f"block has shape {value.shape}, expected {shape}")
        if not value.exact:
            raise InvalidSystem("over-diagonal blocks must be Laurent polynomials")
        return value
    terms = {int(d): np.asarray(m, dtype=complex).reshape(shape) for d, m in dict(value).items()}
    return TruncatedLaurentSeries.from_dict(terms, shape=shape, exact=True)


@dataclass(frozen=True, eq=False)
class QSystem:
    """``sigma_q X = A X`` with ``A`` block upper triangular in standard form.

    ``diag[i]`` is the constant matrix ``A_i`` of the diagonal block
    ``z^{mu_i} A_i``; ``offdiag[(i, j)]`` the Laurent polynomial ``U_ij``.
    Blocks that are zero may be omitted.  ``perm`` records, for systems built
    by :func:`tensor` or :func:`dual`, the source index of every row.
    """

    q: complex
    structure: BlockStructure
    diag: tuple
    offdiag: dict = field(default_factory=dict)
    name: str = ""
    perm: tuple | None = None

    def __post_init__(self):
        q = complex(self.q)
        if not np.isfinite(q) or abs(q) <= 1 + 1e-6:
            raise InvalidSystem(f"need |q| > 1, got q = {q}")
        object.__setattr__(self, "q", q)
        st = self.structure
        if not isinstance(st, BlockStructure):
            raise InvalidSystem("structure must be a BlockStructure")
        if len(self.diag) != st.k:
            raise InvalidSystem(f"expected {st.k} diagonal blocks, got {len(self.diag)}")
        diag = []
        for i, (r, M) in enumerate(zip(st.ranks, self.diag)):
            M = np.atleast_2d(np.asarray(M, dtype=complex))
            if M.shape != (r, r):
                raise DimensionMismatch(f"diagonal block {i} has shape {M.shape}, expected {(r, r)}")
            if not np.all(np.isfinite(M)):
                raise InvalidSystem(f"diagonal block {i} is not finite")
            M.setflags(write=False)
            diag.append(M)
        object.__setattr__(self, "diag", tuple(diag))
        off = {}
        for key, val in dict(self.offdiag).items():
            i, j = (int(x) for x in key)
            if not 0 <= i < j < st.k:
                raise InvalidSystem(f"over-diagonal key {(i, j)} is not above the diagonal")
            s = _as_series(val, (st.ranks[i], st.ranks[j]))
            if not s.is_zero():
                off[(i, j)] = s
        object.__setattr__(self, "offdiag", dict(sorted(off.items())))

    # constructors --------------------------------------------------------
    @classmethod
    def from_blocks(cls, q, slopes, diag, offdiag=None, name=""):
        diag = [np.atleast_2d(np.asarray(M, dtype=complex)) for M in diag]
        st = BlockStructure(tuple(slopes), tuple(M.shape[0] for M in diag))
        return cls(q, st, tuple(diag), dict(offdiag or {}), name)

    def replace(self, **changes) -> "QSystem":
        d = dict(q=self.q, structure=self.structure, diag=self.diag,
                 offdiag=self.offdiag, name=self.name, perm=self.perm)
        d.update(changes)
        return QSystem(**d)

    # basic data ----------------------------------------------------------
    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def k(self) -> int:
        return self.structure.k

    @property
    def slopes(self):
        return self.structure.slopes

    @property
    def ranks(self):
        return self.structure.ranks

    def block(self, i, j) -> TruncatedLaurentSeries:
        """Over-diagonal block ``U_ij`` (zero series when absent)."""
        if (i, j) in self.offdiag:
            return self.offdiag[(i, j)]
        return TruncatedLaurentSeries.zeros((self.ranks[i], self.ranks[j]))

    @property
    def is_pure(self) -> bool:
        return self.k == 1

    @cached_property
    def matrix_series(self) -> TruncatedLaurentSeries:
        """The full matrix ``A(z)`` as an exact Laurent polynomial."""
        st = self.structure
        degs = [mu for mu in st.slopes]
        for s in self.offdiag.values():
            degs += [s.n_min, s.n_max]
        lo, hi = min(degs), max(degs)
        out = np.zeros((hi - lo + 1, st.n, st.n), dtype=complex)
        for i, (mu, Ai) in enumerate(zip(st.slopes, self.diag)):
            out[mu - lo, st.slice(i), st.slice(i)] = Ai
        for (i, j), s in self.offdiag.items():
            out[s.n_min - lo:s.n_max - lo + 1, st.slice(i), st.slice(j)] = s.coeffs
        return TruncatedLaurentSeries(lo, out, exact=True)

    def __call__(self, z) -> np.ndarray:
        return series_eval(self.matrix_series, z)

    def evaluate_many(self, zs) -> np.ndarray:
        return series_eval_many(self.matrix_series, zs)

    def graded(self) -> "QSystem":
        """Block-diagonal part ``A_0 = diag(z^{mu_i} A_i)``."""
        return self.replace(offdiag={}, name=(self.name + "_graded") if self.name else "")

    @property
    def is_polynomial(self) -> bool:
        st = self.structure
        for (i, j), s in self.offdiag.items():
            sup = s.support()
            if sup is not None and (sup[0] < st.slopes[i] or sup[1] >= st.slopes[j]):
                return False
        return True

    @property
    def is_normalized(self) -> bool:
        for Ai in self.diag:
            for lam in np.linalg.eigvals(Ai):
                if _band_index(complex(lam), self.q) != 0:
                    return False
        return True

    def same_graded(self, other: "QSystem", tol=0.0) -> bool:
        if self.structure != other.structure or abs(self.q - other.q) > tol * abs(self.q):
            return False
        return all(np.max(np.abs(a - b)) <= tol * max(1.0, np.max(np.abs(a)))
                   for a, b in zip(self.diag, other.diag))

    @cached_property
    def resonance(self) -> "ResonanceSet":
        return resonance_set(self)

    # polynomial standard form coordinates -----------------------------
    def level_basis(self, delta: int) -> list:
        """Free coefficients of the level-``delta`` over-diagonal in
        polynomial standard form: tuples ``(i, j, degree, row, col)``."""
        st = self.structure
        out = []
        for i, j in st.pairs(delta):
            for d in range(st.slopes[i], st.slopes[j]):
                for r in range(st.ranks[i]):
                    for c in range(st.ranks[j]):
                        out.append((i, j, d, r, c))
        return out

    def level_coefficients(self, delta: int) -> np.ndarray:
        vals = []
        for i, j, d, r, c in self.level_basis(delta):
            s = self.block(i, j)
            vals.append(s.coeff(d)[r, c])
        return np.array(vals, dtype=complex)

    def with_level_coefficients(self, delta: int, values, add=False) -> "QSystem":
        """Replace (or with ``add`` increment) the level-``delta``
        polynomial coefficients."""
        values = np.asarray(values, dtype=complex).reshape(-1)
        basis = self.level_basis(delta)
        if values.size != len(basis):
            raise DimensionMismatch(f"expected {len(basis)} coefficients, got {values.size}")
        st = self.structure
        off = dict(self.offdiag)
        blocks = {}
        for (i, j, d, r, c), v in zip(basis, values):
            if (i, j) not in blocks:
                lo, hi = st.slopes[i], st.slopes[j] - 1
                cur = self.block(i, j)
                if add:
                    lo2, hi2 = min(lo, cur.n_min), max(hi, cur.n_max)
                    arr = np.array(cur.window(lo2, hi2).coeffs)
                else:
                    sup = cur.support()
                    if sup is not None and (sup[0] < lo or sup[1] > hi):
                        raise InvalidSystem(f"block {(i, j)} is not in polynomial standard form")
                    lo2, hi2 = lo, hi
                    arr = np.zeros((hi - lo + 1, st.ranks[i], st.ranks[j]), dtype=complex)
                blocks[(i, j)] = (lo2, arr)
            lo2, arr = blocks[(i, j)]
            arr[d - lo2, r, c] = arr[d - lo2, r, c] + v if add else v
        for key, (lo2, arr) in blocks.items():
            off[key] = TruncatedLaurentSeries(lo2, arr, exact=True)
        return self.replace(offdiag=off)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"QSystem({tag} q={self.q:g}, slopes={self.slopes}, ranks={self.ranks}, blocks={sorted(self.offdiag)})"


# ---------------------------------------------------------------------------
# diagnostics and normalization


def validate(A: QSystem) -> dict:
    """Shape/invertibility report with the polynomial and normalized flags."""
    issues = []
    conds = []
    for i, Ai in enumerate(A.diag):
        c = float(np.linalg.cond(Ai))
        conds.append(c)
        if not np.isfinite(c) or c > 1e12:
            issues.append(f"diagonal block {i} is not invertible (condition {c:.3g})")
    return {
        "valid": not issues,
        "issues": issues,
        "pure": A.is_pure,
        "polynomial": A.is_polynomial,
        # eigenvalue bands are undefined for singular blocks
        "normalized": A.is_normalized if not issues else False,
        "slopes": list(A.slopes),
        "ranks": list(A.ranks),
        "condition_numbers": conds,
    }


def require_valid(A: QSystem) -> QSystem:
    rep = validate(A)
    if not rep["valid"]:
        raise InvalidSystem("; ".join(rep["issues"]))
    return A


@dataclass(frozen=True, eq=False)
class NormalizationGauge:
    """Block-diagonal gauge ``F`` with ``(sigma_q F) A' = A F``.

    On the generalized eigenspace ``k`` of ``A_i`` it acts as ``z^{m}``
    with ``m = shifts[i][k]``; ``bases[i]`` holds the eigen-basis.
    """

    q: complex
    structure: BlockStructure
    bases: tuple
    shifts: tuple

    @property
    def is_identity(self) -> bool:
        return all(m == 0 for ms in self.shifts for m in ms)

    def _series(self, sign: int, at_qz: bool = False) -> TruncatedLaurentSeries:
        st = self.structure
        terms: dict = {}
        for i, (sd, ms) in enumerate(zip(self.bases, self.shifts)):
            for cols, m in zip(sd.columns, ms):
                P = sd.basis[:, cols] @ sd.basis_inv[cols, :]
                e = sign * m
                M = np.zeros((st.n, st.n), dtype=complex)
                M[st.slice(i), st.slice(i)] = P * (self.q ** e if at_qz else 1.0)
                terms[e] = terms.get(e, 0) + M
        return TruncatedLaurentSeries.from_dict(terms, exact=True)

    def series(self) -> TruncatedLaurentSeries:
        return self._series(+1)

    def inverse_series(self) -> TruncatedLaurentSeries:
        return self._series(-1)


def normalize(A: QSystem):
    """Shear every eigenvalue of every ``A_i`` into ``1 <= |lambda| < |q|``.

    Returns ``(A', gauge)`` where ``gauge`` maps solutions of ``A'`` to
    solutions of ``A`` (``(sigma_q F) A' = A F``).
    """
    st = A.structure
    lq = math.log(abs(A.q))
    bases, shifts = [], []
    for i, Ai in enumerate(A.diag):
        sd = spectral_decomposition(Ai)
        ms = []
        for v in sd.values:
            x = math.log(abs(v)) / lq
            frac = abs(x - round(x))
            if 1e-12 <= frac < 1e-8:
                raise IllConditionedEigenproblem(
                    f"eigenvalue {v} of block {i} is within 1e-8 of a q-power boundary")
            ms.append(_band_index(v, A.q))
        bases.append(sd)
        shifts.append(tuple(ms))
    gauge = NormalizationGauge(A.q, st, tuple(bases), tuple(shifts))
    if gauge.is_identity:
        return A, gauge
    diag = []
    Finv_q, F = {}, {}
    for i, (sd, ms) in enumerate(zip(bases, shifts)):
        S, Sinv = sd.basis, sd.basis_inv
        scal = np.concatenate([np.full(mult, A.q ** (-m)) for mult, m in zip(sd.multiplicities, ms)])
        diag.append(S @ np.diag(scal) @ Sinv @ A.diag[i])
        fi, fq = {}, {}
        for cols, m in zip(sd.columns, ms):
            P = S[:, cols] @ Sinv[cols, :]
            fi[m] = fi.get(m, 0) + P
            fq[-m] = fq.get(-m, 0) + P * A.q ** (-m)
        F[i] = TruncatedLaurentSeries.from_dict(fi, exact=True)
        Finv_q[i] = TruncatedLaurentSeries.from_dict(fq, exact=True)
    off = {}
    for (i, j), U in A.offdiag.items():
        off[(i, j)] = series_multiply(series_multiply(Finv_q[i], U), F[j]).trim(0.0)
    name = A.name + "_normalized" if A.name else ""
    return QSystem(A.q, st, tuple(diag), off, name), gauge


def graded(A: QSystem) -> QSystem:
    return A.graded()


# ---------------------------------------------------------------------------
# tannakian constructions


def _permute(S: TruncatedLaurentSeries, perm) -> TruncatedLaurentSeries:
    p = np.asarray(perm)
    return TruncatedLaurentSeries(S.n_min, S.coeffs[:, p][:, :, p], S.exact)


def from_full_series(q, M: TruncatedLaurentSeries, slopes, ranks, name="", perm=None) -> QSystem:
    """Read a standard-form system off its full matrix series."""
    st = BlockStructure(tuple(slopes), tuple(ranks))
    diag = []
    for i, mu in enumerate(st.slopes):
        blk = M.coeffs[:, st.slice(i), st.slice(i)]
        Ai = M.coeff(mu)[st.slice(i), st.slice(i)]
        rest = np.array(blk)
        if M.n_min <= mu <= M.n_max:
            rest[mu - M.n_min] = 0
        if np.max(np.abs(rest), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Ai))):
            raise InvalidSystem(f"diagonal block {i} is not of the form z^{mu} A_{i}")
        diag.append(Ai)
    off = {}
    for i in range(st.k):
        for j in range(st.k):
            blk = TruncatedLaurentSeries(M.n_min, M.coeffs[:, st.slice(i), st.slice(j)], True)
            if i > j and not blk.is_zero(1e-14 * max(1.0, float(np.max(np.abs(M.coeffs))))):
                raise InvalidSystem("matrix is not block upper triangular")
            if i < j and not blk.is_zero():
                off[(i, j)] = blk.trim(0.0)
    return QSystem(q, st, tuple(diag), off, name, None if perm is None else tuple(int(x) for x in perm))


def tensor(A: QSystem, B: QSystem) -> QSystem:
    """Kronecker product regrouped by total slope (stable order)."""
    if abs(A.q - B.q) > 1e-14 * abs(A.q):
        raise InvalidSystem("tensor factors must share q")
    MA, MB = A.matrix_series, B.matrix_series
    lo = MA.n_min + MB.n_min
    out = np.zeros((MA.coeffs.shape[0] + MB.coeffs.shape[0] - 1, A.n * B.n, A.n * B.n), dtype=complex)
    for a, ca in enumerate(MA.coeffs):
        if not np.any(ca):
            continue
        for b, cb in enumerate(MB.coeffs):
            if np.any(cb):
                out[a + b] += np.kron(ca, cb)
    K = TruncatedLaurentSeries(lo, out, exact=True)
    tot = (A.structure.index_slopes[:, None] + B.structure.index_slopes[None, :]).reshape(-1)
    perm = np.argsort(tot, kind="stable")
    sl, counts = np.unique(tot[perm], return_counts=True)
    name = f"{A.name}⊗{B.name}" if A.name and B.name else ""
    return from_full_series(A.q, _permute(K, perm), sl, counts, name, perm)


def _upper_inverse(A: QSystem) -> TruncatedLaurentSeries:
    st = A.structure
    terms = {}
    for i, (mu, Ai) in enumerate(zip(st.slopes, A.diag)):
        M = np.zeros((st.n, st.n), dtype=complex)
        M[st.slice(i), st.slice(i)] = np.linalg.inv(Ai)
        terms[-mu] = terms.get(-mu, 0) + M
    Dinv = TruncatedLaurentSeries.from_dict(terms, exact=True)
    N = TruncatedLaurentSeries.zeros((st.n, st.n))
    for (i, j), U in A.offdiag.items():
        pad = np.zeros((U.coeffs.shape[0], st.n, st.n), dtype=complex)
        pad[:, st.slice(i), st.slice(j)] = U.coeffs
        N = N + TruncatedLaurentSeries(U.n_min, pad, True)
    X = -series_multiply(Dinv, N)
    inv = Dinv
    term = Dinv
    for _ in range(1, st.k):
        term = series_multiply(X, term)
        inv = inv + term
    return inv.trim(0.0)


def dual(A: QSystem) -> QSystem:
    """Standard-form representative of the contragredient ``(A^T)^{-1}``.

    Slopes are negated and the block order reversed; ``perm`` records the
    source index of every row.
    """
    st = A.structure
    invT = _upper_inverse(A).transpose()
    perm = np.concatenate([np.arange(st.offsets[i], st.offsets[i + 1]) for i in reversed(range(st.k))])
    slopes = [-m for m in reversed(st.slopes)]
    ranks = list(reversed(st.ranks))
    name = f"{A.name}^dual" if A.name else ""
    return from_full_series(A.q, _permute(invT, perm), slopes, ranks, name, perm)


def internal_hom(A: QSystem, B: QSystem) -> QSystem:
    """``Hom(A, B) = A^dual (x) B``; ``perm`` indexes ``kron(dual, B)``."""
    return tensor(dual(A), B)


def unit_system(q) -> QSystem:
    return QSystem.from_blocks(q, [0], [np.eye(1)], name="unit")


def permutation_matrix(perm) -> np.ndarray:
    """``P`` with ``(P^T M P)[a, b] = M[perm[a], perm[b]]``."""
    n = len(perm)
    P = np.zeros((n, n))
    P[np.asarray(perm), np.arange(n)] = 1.0
    return P


# ---------------------------------------------------------------------------
# morphisms


def annulus_samples(q, count=50, seed=0) -> np.ndarray:
    """Random points with ``1 <= |z| < |q|``."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(0.0, math.log(abs(complex(q))), count))
    phi = rng.uniform(0.0, 2 * math.pi, count)
    return r * np.exp(1j * phi)


@dataclass
class MorphismReport:
    coefficient_residual: float | None
    pointwise_residual: float
    lower_blocks: list
    samples: int

    @property
    def residual(self) -> float:
        vals = [self.pointwise_residual]
        if self.coefficient_residual is not None:
            vals.append(self.coefficient_residual)
        return max(vals)

    def to_dict(self):
        return {
            "coefficient_residual": self.coefficient_residual,
            "pointwise_residual": self.pointwise_residual,
            "lower_blocks": [list(b) for b in self.lower_blocks],
            "samples": self.samples,
        }


def is_morphism(F, A: QSystem, B: QSystem, sample_points=None, samples=50, seed=0) -> MorphismReport:
    """Residual of ``(sigma_q F) A = B F``.

    ``F`` is a series of shape ``(B.n, A.n)`` or any callable ``z -> matrix``.
    The coefficient residual (series input only) is taken over the window
    on which both sides are determined.  ``lower_blocks`` lists blocks
    ``(I, J)`` with ``nu_I > mu_J`` on which ``F`` is nonzero (report only).
    """
    q = A.q
    zs = annulus_samples(q, samples, seed) if sample_points is None else np.asarray(sample_points, dtype=complex)
    coef = None
    if isinstance(F, TruncatedLaurentSeries):
        if F.shape != (B.n, A.n):
            raise DimensionMismatch(f"morphism has shape {F.shape}, expected {(B.n, A.n)}")
        lhs = series_multiply(series_sigma_q(F, q), A.matrix_series)
        rhs = series_multiply(B.matrix_series, F)
        diff = lhs - rhs
        scale = max(float(np.max(np.abs(lhs.coeffs))), float(np.max(np.abs(rhs.coeffs))), 1e-300)
        coef = float(np.max(np.abs(diff.coeffs))) / scale
        evalF = lambda z: series_eval(F, z)
    else:
        evalF = F
    worst = 0.0
    lower = set()
    for z in zs:
        Fz, Fqz = evalF(z), evalF(q * z)
        l, r = Fqz @ A(z), B(z) @ Fz
        s = np.linalg.norm(Fqz) * np.linalg.norm(A(z)) + np.linalg.norm(B(z)) * np.linalg.norm(Fz)
        worst = max(worst, float(np.linalg.norm(l - r) / max(s, 1e-300)))
        for I in range(B.k):
            for J in range(A.k):
                if B.slopes[I] > A.slopes[J]:
                    blk = Fz[B.structure.slice(I), A.structure.slice(J)]
                    if np.max(np.abs(blk)) > 1e-10 * max(1.0, np.max(np.abs(Fz))):
                        lower.add((I, J))
    return MorphismReport(coef, worst, sorted(lower), len(zs))


# ---------------------------------------------------------------------------
# resonance combinatorics


@dataclass(frozen=True)
class ResonanceWitness:
    """``c^delta = (alpha / beta) ζ q^{root_k}``; ``principal`` when no
    fractional q-power is involved."""

    delta: int
    i: int
    j: int
    alpha: complex
    beta: complex
    alpha_index: int
    beta_index: int
    q_root: int
    unit_root: int

    @property
    def principal(self) -> bool:
        return self.q_root == 0

    def to_dict(self):
        return {
            "delta": self.delta, "pair": [self.i, self.j],
            "alpha": [self.alpha.real, self.alpha.imag],
            "beta": [self.beta.real, self.beta.imag],
            "principal": self.principal,
        }


@dataclass
class ResonanceClass:
    point: EllipticPoint
    delta: int
    witnesses: list

    @property
    def principal(self) -> bool:
        return any(w.principal for w in self.witnesses)


@dataclass
class ResonanceSet:
    q: complex
    levels: dict  # delta -> list[ResonanceClass]

    def classes(self, delta=None) -> list:
        if delta is not None:
            return list(self.levels.get(delta, []))
        return [c for d in sorted(self.levels) for c in self.levels[d]]

    def points(self, delta=None, tol=1e-9) -> list:
        """Distinct classes (deduplicated across levels)."""
        out = []
        for cl in self.classes(delta):
            if not any(cl.point.same_class(p, tol) for p in out):
                out.append(cl.point)
        return out

    def nearest(self, c):
        """``(distance, ResonanceClass)`` of the closest resonant class."""
        best, arg = math.inf, None
        for cl in self.classes():
            dist = log_distance(complex(c), cl.point.rep, self.q)
            if dist < best:
                best, arg = dist, cl
        return best, arg

    def contains(self, c, tol=None) -> bool:
        tol = TOL.resonance_margin if tol is None else tol
        return self.nearest(c)[0] < tol

    def is_empty(self) -> bool:
        return not any(self.levels.values())

    def to_dict(self):
        return {
            str(d): [{"class": cl.point.to_list(), "witnesses": [w.to_dict() for w in cl.witnesses]}
                     for cl in cls]
            for d, cls in sorted(self.levels.items())
        }


def _delta_roots(r: complex, q: complex, delta: int):
    """All classes ``c`` with ``c^delta in r q^Z``, tagged by their roots."""
    lr, lq = cmath.log(r), cmath.log(q)
    for qk in range(delta):
        for uj in range(delta):
            yield qk, uj, cmath.exp((lr + 2j * math.pi * uj + qk * lq) / delta)


def resonance_set(A0: QSystem, tol=1e-9) -> ResonanceSet:
    """Classes ``c`` with ``alpha / beta = c^delta`` in ``E_q`` for a slope
    pair at level ``delta`` and ``alpha``, ``beta`` eigenvalues of the two
    diagonal blocks.  Every ratio contributes ``delta^2`` classes (the
    ``delta``-torsion of ``E_q``)."""
    st = A0.structure
    spectra = [eigen_clusters(Ai) for Ai in A0.diag]
    levels: dict = {}
    for i, j in st.pairs():
        delta = st.level(i, j)
        for ai, (alpha, _) in enumerate(spectra[i]):
            for bj, (beta, _) in enumerate(spectra[j]):
                r = canonical_rep(alpha, A0.q) / canonical_rep(beta, A0.q)
                for qk, uj, c in _delta_roots(r, A0.q, delta):
                    w = ResonanceWitness(delta, i, j, complex(alpha), complex(beta), ai, bj, qk, uj)
                    pt = EllipticPoint(c, A0.q)
                    bucket = levels.setdefault(delta, [])
                    for cl in bucket:
                        if cl.point.same_class(pt, tol):
                            cl.witnesses.append(w)
                            break
                    else:
                        bucket.append(ResonanceClass(pt, delta, [w]))
    return ResonanceSet(A0.q, levels)


def irr_delta(A0: QSystem, delta: int) -> int:
    st = A0.structure
    return delta * sum(st.ranks[i] * st.ranks[j] for i, j in st.pairs(delta))


# ---------------------------------------------------------------------------
# covariant lines and invariant sections


@dataclass(frozen=True, eq=False)
class CovariantLine:
    vector: np.ndarray
    block: int
    alpha: complex


def _embed(A0: QSystem, i: int, v) -> np.ndarray:
    x = np.zeros(A0.n, dtype=complex)
    x[A0.structure.slice(i)] = v
    return x


def covariant_lines(A0: QSystem) -> list:
    """Vectors on one block, eigen for its constant matrix:
    ``A_0(z) X = alpha z^{mu_i} X``."""
    out = []
    for i, Ai in enumerate(A0.diag):
        for alpha, _ in eigen_clusters(Ai):
            K = null_space(Ai - alpha * np.eye(Ai.shape[0]), rtol=1e-8)
            for v in K.T:
                out.append(CovariantLine(_embed(A0, i, v), i, alpha))
    return out


def invariant_sections(A0: QSystem) -> np.ndarray:
    """Basis (columns) of constant ``X`` on slope-0 blocks with ``A_i X = X``."""
    cols = []
    for i, (mu, Ai) in enumerate(zip(A0.slopes, A0.diag)):
        if mu != 0:
            continue
        K = null_space(Ai - np.eye(Ai.shape[0]), rtol=1e-8)
        for v in K.T:
            cols.append(_embed(A0, i, v))
    if not cols:
        return np.zeros((A0.n, 0), dtype=complex)
    return np.array(cols).T


# ---------------------------------------------------------------------------
# sub-systems and polynomial solution spaces


def subsystem(A: QSystem, upto: int):
    """The sub-object on the first ``upto + 1`` blocks and its inclusion
    matrix ``(I; 0)``."""
    st = A.structure.sub(upto)
    off = {k: v for k, v in A.offdiag.items() if k[1] <= upto}
    name = f"{A.name}_sub{upto}" if A.name else ""
    sub = QSystem(A.q, st, A.diag[: upto + 1], off, name)
    Phi = np.zeros((A.n, st.n), dtype=complex)
    Phi[: st.n, : st.n] = np.eye(st.n)
    return sub, Phi


def _solution_matrix(A: QSystem, B: QSystem, lo: int, hi: int):
    """Matrix of ``F -> (sigma_q F) A - B F`` on coefficients ``F_lo..F_hi``
    (column-major vectorization of every ``F_m``)."""
    MA, MB = A.matrix_series, B.matrix_series
    na, nb = A.n, B.n
    blk = na * nb
    dlo = lo + min(MA.n_min, MB.n_min)
    dhi = hi + max(MA.n_max, MB.n_max)
    rows = (dhi - dlo + 1) * blk
    L = np.zeros((rows, (hi - lo + 1) * blk), dtype=complex)
    for m in range(lo, hi + 1):
        col = slice((m - lo) * blk, (m - lo + 1) * blk)
        for d, Ad in zip(MA.degrees, MA.coeffs):
            if np.any(Ad):
                r = m + d - dlo
                L[r * blk:(r + 1) * blk, col] += A.q ** m * np.kron(Ad.T, np.eye(nb))
        for d, Bd in zip(MB.degrees, MB.coeffs):
            if np.any(Bd):
                r = m + d - dlo
                L[r * blk:(r + 1) * blk, col] -= np.kron(np.eye(na), Bd)
    return L


def polynomial_morphisms(A: QSystem, B: QSystem, lo=-3, hi=3) -> list:
    """Laurent-polynomial solutions ``F`` (degrees ``lo..hi``) of
    ``(sigma_q F) A = B F``, as exact series of shape ``(B.n, A.n)``."""
    L = _solution_matrix(A, B, lo, hi)
    K = null_space(L, rtol=1e-10)
    out = []
    for v in K.T:
        coeffs = v.reshape(hi - lo + 1, A.n, B.n).transpose(0, 2, 1)
        out.append(TruncatedLaurentSeries(lo, coeffs, exact=True).trim(1e-12))
    return out


def polynomial_solutions(A: QSystem, lo=-3, hi=3) -> list:
    """Laurent-polynomial vector solutions of ``sigma_q X = A X``."""
    return polynomial_morphisms(unit_system(A.q), A, lo, hi)


def formal_window_cap(q, delta_min: int) -> int:
    """Largest ``N`` with ``|q|^{N^2 / (2 delta_min)} < 1e280``."""
    lq = math.log(abs(complex(q)))
    return int(math.floor(math.sqrt(2 * delta_min * 280 * math.log(10) / lq)))


def check_formal_window(q, N: int, delta_min: int):
    cap = formal_window_cap(q, delta_min)
    if N > cap:
        raise WindowExhausted(
            f"formal window N={N} exceeds the double-range cap {cap} for |q|={abs(q):.4g}, level {delta_min}")

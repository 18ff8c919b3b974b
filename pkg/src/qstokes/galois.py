"""Pure Galois group actions, q-alien derivations and their spectral pieces."""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockStructure, as_structure
from .config import TOL, RunConfig
from .elliptic import EllipticPoint, direction_rep, log_distance
from .errors import (
    BasepointIncompatible,
    ContourHitsResonance,
    IllConditionedEigenproblem,
    MissingCharacterValue,
    NotNilpotent,
    QuadratureNotConverged,
    ResonantDirection,
)
from .linalg import (
    dunford,
    exp_nilpotent_matrix,
    log_unipotent,
    log_unipotent_matrix,
    null_space,
    spectral_decomposition,
    unipotent_inverse,
)
from .series import series_scale_by
from .summation import check_direction, directional_sum, eval_sum, singular_classes
from .system import QSystem, invariant_sections, permutation_matrix, tensor
from .theta import ThetaContext, theta_c_power_series, theta_eval

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# nilpotent block matrices


@dataclass(frozen=True, eq=False)
class NilpotentBlockMatrix:
    """Strictly block-upper-triangular matrix for a slope structure."""

    structure: BlockStructure
    value: np.ndarray

    def __post_init__(self):
        st = as_structure(self.structure)
        M = st.check_square(self.value)
        dev = st.nilpotent_deviation(M)
        if dev > 1e-10 * max(1.0, float(np.max(np.abs(M)))):
            raise NotNilpotent(f"matrix leaves the strictly upper block shape by {dev:.3e}")
        M = np.where(st.upper_mask(), M, 0.0).astype(complex)
        M.setflags(write=False)
        object.__setattr__(self, "structure", st)
        object.__setattr__(self, "value", M)

    @classmethod
    def zeros(cls, structure):
        st = as_structure(structure)
        return cls(st, np.zeros((st.n, st.n), dtype=complex))

    def level(self, delta: int) -> "NilpotentBlockMatrix":
        return NilpotentBlockMatrix(self.structure, np.where(self.structure.level_mask(delta), self.value, 0.0))

    def norm(self) -> float:
        return float(np.linalg.norm(self.value))

    def __add__(self, other):
        return NilpotentBlockMatrix(self.structure, self.value + _val(other))

    def __sub__(self, other):
        return NilpotentBlockMatrix(self.structure, self.value - _val(other))

    def scale(self, s):
        return NilpotentBlockMatrix(self.structure, self.value * s)

    def to_list(self):
        return [[[v.real, v.imag] for v in row] for row in self.value]


def _val(D) -> np.ndarray:
    return D.value if isinstance(D, NilpotentBlockMatrix) else np.asarray(D, dtype=complex)


def level_components(D: NilpotentBlockMatrix) -> dict:
    """Exact partition of the blocks of ``D`` by slope difference."""
    return {delta: D.level(delta) for delta in D.structure.levels()}


# ---------------------------------------------------------------------------
# pure group


@dataclass(frozen=True)
class PureGroupElement:
    """Theta-torus parameter ``t``, unipotent exponent ``lam`` and a
    finite character ``{class representative: value}``."""

    torus: complex = 1.0
    unipotent_param: complex = 0.0
    character: dict = field(default_factory=dict)

    def __post_init__(self):
        if complex(self.torus) == 0:
            raise ValueError("torus parameter must be nonzero")
        for k, v in self.character.items():
            if complex(v) == 0:
                raise ValueError("character values must be nonzero")

    def gamma(self, alpha, q) -> complex:
        if log_distance(alpha, 1.0, q) < 1e-8:
            for k, v in self.character.items():
                if log_distance(k, 1.0, q) < 1e-8 and abs(complex(v) - 1) > 1e-12:
                    raise ValueError("character must send the class of 1 to 1")
            return 1.0
        for k, v in self.character.items():
            if log_distance(k, alpha, q) < 1e-8:
                return complex(v)
        raise MissingCharacterValue(f"no character value for the class of {complex(alpha):.6g}")


def act_pure(g: PureGroupElement, A0: QSystem) -> np.ndarray:
    """Block diagonal ``gamma(A_{i,s}) A_{i,u}^lam t^{mu_i}``."""
    st = A0.structure
    out = np.zeros((st.n, st.n), dtype=complex)
    for i, (mu, Ai) in enumerate(zip(st.slopes, A0.diag)):
        sd = spectral_decomposition(Ai)
        gam = np.concatenate([np.full(m, g.gamma(v, A0.q)) for v, m in zip(sd.values, sd.multiplicities)])
        Gs = sd.basis @ np.diag(gam) @ sd.basis_inv
        _, Au = dunford(Ai)
        Aul = exp_nilpotent_matrix(complex(g.unipotent_param) * log_unipotent_matrix(Au))
        out[st.slice(i), st.slice(i)] = Gs @ Aul * complex(g.torus) ** mu
    return out


def torus_matrix(t, structure) -> np.ndarray:
    st = as_structure(structure)
    return np.diag(np.asarray(complex(t), dtype=complex) ** st.index_slopes.astype(float))


def torus_conjugation_check(t, D, A0) -> dict:
    """Per-level ``|| (tau^{-1} D tau)^{(delta)} - t^delta D^{(delta)} ||``."""
    st = as_structure(A0)
    Dv = _val(D)
    tau = torus_matrix(t, st)
    C = np.linalg.solve(tau, Dv @ tau)
    out = {}
    for delta in st.levels():
        m = st.level_mask(delta)
        diff = np.where(m, C - complex(t) ** delta * Dv, 0.0)
        scale = max(1.0, float(np.max(np.abs(np.where(m, Dv, 0.0)), initial=0.0)))
        out[delta] = float(np.max(np.abs(diff))) / scale
    return out


# ---------------------------------------------------------------------------
# spectral projection onto g^(delta, c)


def _congruent(alpha, beta, c, delta, q, tol=1e-8) -> bool:
    return log_distance(alpha, beta * complex(c) ** delta, q) < tol


def spectral_project(D, A0: QSystem, delta: int, c) -> NilpotentBlockMatrix:
    """Keep the ``(alpha, beta)`` sub-blocks of level-``delta`` blocks with
    ``alpha c^{mu_i} = beta c^{mu_j}`` modulo ``q^Z``."""
    st = A0.structure
    Dv = _val(D)
    c = direction_rep(c, A0.q)
    out = np.zeros_like(Dv)
    sds = [spectral_decomposition(Ai) for Ai in A0.diag]
    for i, j in st.pairs(delta):
        blk = Dv[st.slice(i), st.slice(j)]
        acc = np.zeros_like(blk)
        for a, alpha in enumerate(sds[i].values):
            Pa = sds[i].projector(a)
            for b, beta in enumerate(sds[j].values):
                if _congruent(alpha, beta, c, delta, A0.q):
                    acc = acc + Pa @ blk @ sds[j].projector(b)
        out[st.slice(i), st.slice(j)] = acc
    return NilpotentBlockMatrix(st, out)


def spectral_coordinates(D, A0: QSystem, witnesses) -> np.ndarray:
    """Entries of ``S_i^{-1} D_ij S_j`` on the eigen sub-blocks named by
    resonance witnesses (``alpha_index``, ``beta_index``)."""
    st = A0.structure
    Dv = _val(D)
    sds = [spectral_decomposition(Ai) for Ai in A0.diag]
    out = []
    for w in witnesses:
        si, sj = sds[w.i], sds[w.j]
        blk = si.basis_inv @ Dv[st.slice(w.i), st.slice(w.j)] @ sj.basis
        out.append(blk[si.columns[w.alpha_index], sj.columns[w.beta_index]].ravel())
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)


# ---------------------------------------------------------------------------
# q-alien derivations


@dataclass(frozen=True, eq=False)
class AlienDerivationResult:
    direction: EllipticPoint
    c: complex
    value: NilpotentBlockMatrix
    per_level: dict
    diagnostics: dict

    def to_dict(self):
        return {
            "direction": [self.c.real, self.c.imag],
            "value": self.value.to_list(),
            "per_level": {str(d): v.to_list() for d, v in sorted(self.per_level.items())},
            "diagnostics": self.diagnostics,
        }


def contour_radius(A: QSystem, c, a, cap=1e-2) -> tuple:
    """Automatic radius and the log-distance to the nearest other singular
    class (resonance classes of every level and the class of ``-a``)."""
    q = A.q
    c = direction_rep(c, q)
    others = [p.rep for p in singular_classes(A).points()] + [-complex(a)]
    dists = [log_distance(c, p, q) for p in others]
    far = [d for d in dists if d > 1e-9]
    nearest = min(far) if far else math.inf
    return min(cap, nearest / 2), nearest


def _reference(A: QSystem, a, c0, theta):
    q = A.q
    try:
        check_direction(A, c0)
    except ResonantDirection:
        raise
    if log_distance(-complex(a), c0, q) < TOL.resonance_margin:
        raise BasepointIncompatible(f"basepoint {complex(a):.6g} lies on the pole spiral of c0={complex(c0):.6g}")
    Fc0 = eval_sum(directional_sum(A, c0, theta), a)
    return unipotent_inverse(Fc0, A.structure)


def stokes_log(A: QSystem, d, a, Fc0_inv, theta) -> np.ndarray:
    """``log((S_c0 F)(a)^{-1} (S_d F)(a))`` for a raw representative ``d``."""
    Fd = eval_sum(directional_sum(A, d, theta, check=False), a, check=False)
    return log_unipotent(Fc0_inv @ Fd, A.structure)


def alien_derivation(A: QSystem, c, a=None, c0=None, rho=None, samples=None,
                     theta: ThetaContext | None = None, config: RunConfig | None = None,
                     quadrature_tol=None) -> AlienDerivationResult:
    """Residue at ``d = c`` of ``d -> log S_{c0, d}(a)`` by the trapezoid rule
    on ``d = c (1 + rho e^{i phi})``, with one doubling of the sample count
    as error estimate."""
    cfg = config or RunConfig()
    q = A.q
    st = A.structure
    a = complex(cfg.basepoint if a is None else a)
    c0 = direction_rep(cfg.reference_direction if c0 is None else c0, q)
    M = int(cfg.samples if samples is None else samples)
    rho = cfg.rho if rho is None else rho
    theta = theta or ThetaContext(q, cfg.theta_window)
    qtol = cfg.tolerances.quadrature if quadrature_tol is None else quadrature_tol
    point = c if isinstance(c, EllipticPoint) else EllipticPoint(complex(c), q)
    c = direction_rep(c, q)

    if log_distance(-a, c, q) < 1e-9:
        raise BasepointIncompatible(f"the class of -a coincides with the direction {c:.6g}")
    auto, nearest = contour_radius(A, c, a)
    if rho is None:
        rho = auto
    elif rho >= nearest / 2:
        raise ContourHitsResonance(
            f"contour radius {rho:g} reaches a singular class at log-distance {nearest:.3e}")
    if not A.offdiag:
        zero = NilpotentBlockMatrix.zeros(st)
        diag = {"rho": rho, "samples": 2 * M, "error": 0.0, "scale": 0.0,
                "apparent_pole_order": 0, "max_log_norm": 0.0}
        return AlienDerivationResult(point, c, zero, level_components(zero), diag)

    Fc0_inv = _reference(A, a, c0, theta)
    phis = 2 * math.pi * np.arange(2 * M) / (2 * M)
    ex = np.exp(1j * phis)
    Ls = np.empty((2 * M, st.n, st.n), dtype=complex)
    for m in range(2 * M):
        Ls[m] = stokes_log(A, c * (1 + rho * ex[m]), a, Fc0_inv, theta)
    wv = Ls * ex[:, None, None]
    full = (c * rho / (2 * M)) * wv.sum(axis=0)
    half = (c * rho / M) * wv[::2].sum(axis=0)
    err = float(np.linalg.norm(full - half))
    max_L = float(np.max(np.linalg.norm(Ls, axis=(1, 2))))
    scale = max(float(np.linalg.norm(full)), rho * abs(c) * max_L)
    if err > qtol * max(scale, 1e-300):
        raise QuadratureNotConverged(
            f"doubling the contour samples changed the residue by {err:.3e} (scale {scale:.3e})")
    # Laurent coefficients b_{-k}, measured against the integrand size
    order = 0
    pole_terms = []
    for k in range(1, 5):
        mag = float(np.linalg.norm((Ls * ex[:, None, None] ** k).mean(axis=0)))
        pole_terms.append(mag / max(max_L, 1e-300))
        if mag > 1e-8 * max_L:
            order = k
    shape_dev = float(st.nilpotent_deviation(full))
    value = NilpotentBlockMatrix(st, full)
    diag = {
        "rho": rho,
        "samples": 2 * M,
        "error": err,
        "relative_error": err / max(scale, 1e-300),
        "scale": scale,
        "max_log_norm": max_L,
        "apparent_pole_order": order,
        "pole_terms": pole_terms,
        "shape_deviation": shape_dev,
        "basepoint": [a.real, a.imag],
        "reference_direction": [c0.real, c0.imag],
    }
    return AlienDerivationResult(point, c, value, level_components(value), diag)


def all_alien_derivations(A: QSystem, config: RunConfig | None = None, **kw) -> list:
    """Alien derivations at every class of the resonance set."""
    res = singular_classes(A)
    return [alien_derivation(A, p, config=config, **kw) for p in res.points()]


def level_one_residue(A: QSystem, c, a=None, theta: ThetaContext | None = None) -> np.ndarray:
    """Semi-analytic residue of the lowest-level blocks of ``S_d F_A(a)`` at
    ``d = c``.

    With ``A_i = P diag(alpha) P^{-1}`` and ``A_j = Q diag(beta) Q^{-1}`` the
    coefficient ``g_n(d)`` has entries ``W_kl(d) / (d^delta q^n beta_l - alpha_k)``,
    whose residue at ``d = c`` is ``W_kl(c) / (delta c^{delta-1} q^n beta_l)``.
    """
    q = A.q
    st = A.structure
    a = complex(RunConfig().basepoint if a is None else a)
    c = direction_rep(c, q)
    theta = theta or ThetaContext(q)
    out = np.zeros((st.n, st.n), dtype=complex)
    levels = st.levels()
    if not levels:
        return out
    d0 = levels[0]
    th_a = theta_eval(theta, a / c) ** d0
    tpow = theta_c_power_series(theta, c, d0)
    for i, j in st.pairs(d0):
        if (i, j) not in A.offdiag:
            continue
        al, P = np.linalg.eig(A.diag[i])
        be, Q = np.linalg.eig(A.diag[j])
        if np.linalg.cond(P) > 1e8 or np.linalg.cond(Q) > 1e8:
            raise IllConditionedEigenproblem("level-one oracle needs diagonalizable blocks")
        Pinv, Qinv = np.linalg.inv(P), np.linalg.inv(Q)
        W = series_scale_by(A.offdiag[(i, j)], tpow).shift(-st.slopes[i])
        acc = np.zeros((st.ranks[i], st.ranks[j]), dtype=complex)
        for n, wn in zip(W.degrees, W.coeffs):
            Wt = Pinv @ wn @ Q
            lam = c ** d0 * q ** int(n)
            for k in range(len(al)):
                for l in range(len(be)):
                    den = lam * be[l] - al[k]
                    if abs(den) <= 1e-8 * max(abs(lam * be[l]), abs(al[k])):
                        acc[k, l] += Wt[k, l] * a ** int(n) / (d0 * c ** (d0 - 1) * q ** int(n) * be[l])
        out[st.slice(i), st.slice(j)] = P @ acc @ Qinv / th_a
    return out


# ---------------------------------------------------------------------------
# functorial checks


def _rel(x, scale) -> float:
    return float(np.linalg.norm(x)) / max(float(scale), 1e-300)


def check_functoriality(D_A, D_B, F0) -> float:
    """``|| D_B F0 - F0 D_A ||`` relative to the sizes of both products."""
    DA, DB, F0 = _val(D_A), _val(D_B), np.asarray(F0, dtype=complex)
    l, r = DB @ F0, F0 @ DA
    return _rel(l - r, max(np.linalg.norm(l), np.linalg.norm(r), 1e-300))


def tensor_alignment(DA, DB, T: QSystem) -> np.ndarray:
    """``D_A (x) I + I (x) D_B`` in the row order of ``T = tensor(A, B)``."""
    DA, DB = _val(DA), _val(DB)
    K = np.kron(DA, np.eye(DB.shape[0])) + np.kron(np.eye(DA.shape[0]), DB)
    p = np.asarray(T.perm)
    return K[p][:, p]


def check_tensor_rule(A: QSystem, B: QSystem, c, config: RunConfig | None = None) -> dict:
    """Compare ``Delta(A (x) B)`` with ``Delta(A) (x) I + I (x) Delta(B)``."""
    cfg = config or RunConfig()
    T = tensor(A, B)
    a = cfg.basepoint
    rho = cfg.rho or min(contour_radius(S, c, a)[0] for S in (A, B, T))
    dA = alien_derivation(A, c, config=cfg, rho=rho).value
    dB = alien_derivation(B, c, config=cfg, rho=rho).value
    dT = alien_derivation(T, c, config=cfg, rho=rho).value
    pred = tensor_alignment(dA, dB, T)
    res = _rel(dT.value - pred, max(np.linalg.norm(pred), np.linalg.norm(dT.value), 1e-300))
    return {"residual": res, "norm": float(np.linalg.norm(dT.value)), "rho": rho}


def sections(A: QSystem, alien_data) -> np.ndarray:
    """Common kernel of all level components of the alien derivations,
    intersected with the invariant sections of ``A_0`` (columns)."""
    X0 = invariant_sections(A.graded())
    if X0.shape[1] == 0:
        return X0
    mats = []
    for item in alien_data:
        if isinstance(item, AlienDerivationResult):
            mats += [v.value for v in item.per_level.values()]
        else:
            mats.append(_val(item))
    if not mats:
        return X0
    stack = np.vstack([M @ X0 for M in mats])
    scale = max(1.0, max(float(np.linalg.norm(M)) for M in mats))
    _, s, vh = np.linalg.svd(stack)
    keep = np.sum(s > 1e-7 * scale)
    K = vh[keep:].conj().T
    return X0 @ K


def quotient_log_check(Fc, Fd, structure) -> dict:
    """Lowest level of ``log(Fc^{-1} Fd)`` against that of ``Fd - Fc``."""
    st = as_structure(structure)
    Fc, Fd = st.check_square(Fc), st.check_square(Fd)
    L = log_unipotent(unipotent_inverse(Fc, st) @ Fd, st)
    diff = Fd - Fc
    levels = st.levels()
    if not levels:
        return {"lowest_level": None, "residual": 0.0, "higher_residual": 0.0}
    d0 = levels[0]
    m0 = st.level_mask(d0)
    scale = max(1.0, float(np.max(np.abs(diff))))
    res = float(np.max(np.abs(np.where(m0, L - diff, 0.0)))) / scale
    hi = [float(np.max(np.abs(np.where(st.level_mask(d), L - diff, 0.0)))) / scale for d in levels[1:]]
    return {"lowest_level": d0, "residual": res, "higher_residual": max(hi, default=0.0)}

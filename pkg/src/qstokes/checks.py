"""Property suites: the acceptance criteria and the module invariants.

Every check returns a :class:`CheckResult` carrying the measured numbers next
to the tolerances they are compared with.  The command line ``check``
subcommand and the test-suite share these functions.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockStructure
from .config import RunConfig
from .corpus import CORPUS, load_example
from .elliptic import EllipticPoint, log_distance
from .galois import (
    alien_derivation,
    quotient_log_check,
    check_functoriality,
    check_tensor_rule,
    level_one_residue,
    sections,
    spectral_project,
    torus_conjugation_check,
)
from .io import dumps_system, loads_system
from .linalg import exp_nilpotent, log_unipotent
from .reconstruction import alien_targets, reconstruct_full, transfer_map, truncate_to_level
from .series import ScaledCoefficientTrack, TruncatedLaurentSeries, series_eval, series_multiply, series_sigma_q
from .summation import (
    directional_sum,
    eval_sum,
    formal_gauge,
    gevrey_level_estimate,
    singular_classes,
    stokes_matrix,
)
from .system import (
    QSystem,
    annulus_samples,
    covariant_lines,
    irr_delta,
    is_morphism,
    polynomial_solutions,
    subsystem,
    tensor,
)
from .theta import ThetaContext, theta_eval


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        nums = ", ".join(f"{k}={_fmt(v)}" + (f" (tol {_fmt(self.tolerance[k])})" if k in self.tolerance else "")
                         for k, v in self.measured.items())
        return f"[{status}] {self.name}: {nums}" + (f" -- {self.detail}" if self.detail else "")

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": self.measured,
                "tolerance": self.tolerance, "detail": self.detail}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _result(name, checks: dict, measured_extra=None, detail=""):
    """``checks`` maps a key to ``(value, tol, mode)``; mode 'le' or 'ge'."""
    measured, tol, ok = {}, {}, True
    for key, (value, t, mode) in checks.items():
        measured[key] = value
        tol[key] = t
        ok &= (value <= t) if mode == "le" else (value >= t)
    measured.update(measured_extra or {})
    return CheckResult(name, bool(ok), measured, tol, detail)


def _cfg(config):
    return config or RunConfig()


def _random_annulus(q, count, rng):
    r = abs(q) ** rng.uniform(0, 1, count)
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, count))


def _generic_directions(A: QSystem, count: int, rng, a, margin=0.05):
    """Random direction representatives away from every singular class and
    from the class of ``-a``."""
    q = A.q
    bad = [cl.point.rep for cl in singular_classes(A).classes()] + [-complex(a)]
    out = []
    while len(out) < count:
        c = complex(_random_annulus(q, 1, rng)[0])
        if all(log_distance(c, b, q) > margin for b in bad + out):
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# acceptance criteria


def crit_theta(config=None) -> CheckResult:
    rng = np.random.default_rng(_cfg(config).seed)
    worst, zeros = 0.0, 0.0
    for q in (2.0, 1.5 + 0.3j):
        ctx = ThetaContext(q)
        for z in _random_annulus(q, 100, rng):
            t = theta_eval(ctx, z)
            worst = max(worst, abs(theta_eval(ctx, q * z) - z * t) / abs(t))
        t1 = abs(theta_eval(ctx, 1.0))
        zeros = max(zeros, abs(theta_eval(ctx, -1.0)) / t1, abs(theta_eval(ctx, -q)) / t1)
    return _result("1 theta functional equation", {
        "functional_residual": (worst, 1e-9, "le"), "zero_residual": (zeros, 1e-9, "le")})


def _random_system(rng, q=2.0, k=3, nmax=6) -> QSystem:
    while True:
        ranks = rng.integers(1, 3, size=k)
        if ranks.sum() <= nmax:
            break
    slopes = np.sort(rng.choice(np.arange(0, 4), size=k, replace=False))
    diag = []
    for r in ranks:
        M = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
        # eigenvalues moved into the band [1, |q|)
        w, V = np.linalg.eig(M)
        w = abs(q) ** rng.uniform(0, 1, r) * np.exp(1j * np.angle(w))
        diag.append(V @ np.diag(w) @ np.linalg.inv(V))
    off = {}
    for i in range(k):
        for j in range(i + 1, k):
            terms = {d: rng.normal(size=(ranks[i], ranks[j])) + 1j * rng.normal(size=(ranks[i], ranks[j]))
                     for d in range(int(slopes[i]), int(slopes[j]))}
            off[(i, j)] = TruncatedLaurentSeries.from_dict(terms)
    return QSystem.from_blocks(q, slopes, diag, off)


def _abs_series(S: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    return TruncatedLaurentSeries(S.n_min, np.abs(S.coeffs).astype(complex), S.exact)


def gauge_residual(A: QSystem, fg) -> float:
    """Backward residual of ``A F = (sigma_q F) A_0``, computed independently
    of the recursion: per degree, the mismatch over the sum of the moduli of
    the contributing products, on the window where both sides are known."""
    F = fg.matrix_series()
    sF = series_sigma_q(F, A.q)
    MA, M0 = A.matrix_series, A.graded().matrix_series
    lhs, rhs = series_multiply(MA, F), series_multiply(sF, M0)
    mag = series_multiply(_abs_series(MA), _abs_series(F)) + series_multiply(_abs_series(sF), _abs_series(M0))
    lo, hi = max(lhs.n_min, rhs.n_min), min(lhs.n_max, rhs.n_max)
    worst = 0.0
    for n in range(lo, hi + 1):
        s = float(np.max(mag.coeff(n).real))
        if s > 0:
            worst = max(worst, float(np.max(np.abs(lhs.coeff(n) - rhs.coeff(n)))) / s)
    return worst


def crit_formal_anchor(config=None) -> CheckResult:
    E = load_example("estar")
    q = E.q
    fg = formal_gauge(E, 16)
    blk = fg.block(0, 1)
    anchor = 0.0
    for n in range(16):
        ref = -(q ** (n * (n - 1) // 2))
        anchor = max(anchor, abs(blk.coeff(n)[0, 0] - ref) / abs(ref))
    rng = np.random.default_rng(_cfg(config).seed + 1)
    rec = 0.0
    for _ in range(5):
        A = _random_system(rng)
        rec = max(rec, gauge_residual(A, formal_gauge(A, 15)))
    return _result("2 formal gauge anchor", {
        "anchor_relative": (anchor, 1e-12, "le"), "recursion_residual": (rec, 1e-9, "le")})


def crit_gevrey(config=None) -> CheckResult:
    q = 2.0
    lq = math.log(q)
    n = np.arange(41)
    errs = {}
    for delta in (1, 2):
        track = ScaledCoefficientTrack.from_log(n ** 2 * lq / (2 * delta) + 0.3 * n - 1.0)
        errs[f"synthetic_delta{delta}"] = abs(gevrey_level_estimate(track, q) - delta) / delta
    E = load_example("estar")
    est = gevrey_level_estimate(formal_gauge(E, 40).track(0, 1), q)
    errs["estar"] = abs(est - 1.0)
    geo = gevrey_level_estimate(ScaledCoefficientTrack.from_log(n * math.log(2.0)), q)
    return _result("3 q-Gevrey classifier",
                   {k: (v, 0.15, "le") for k, v in errs.items()} | {"geometric_is_analytic": (float(math.isinf(geo)), 1.0, "ge")})


def _sum_morphism_residual(A: QSystem, c, rng) -> float:
    S = directional_sum(A, c)
    zs = [z for z in _random_annulus(A.q, 200, rng)
          if S.pole_distance(z) > 0.05 and S.pole_distance(A.q * z) > 0.05][:50]
    rep = is_morphism(lambda z: eval_sum(S, z), A.graded(), A, sample_points=zs)
    return rep.pointwise_residual


def crit_sum_morphism(config=None) -> CheckResult:
    cfg = _cfg(config)
    rng = np.random.default_rng(cfg.seed + 2)
    E = load_example("estar")
    T = load_example("three_slope")
    r_e = _sum_morphism_residual(E, -1.0, rng)
    r_t = max(_sum_morphism_residual(T, c, rng) for c in _generic_directions(T, 2, rng, cfg.basepoint))
    # pure systems: the sum is the identity
    P = QSystem.from_blocks(2.0, (1,), [np.array([[1.2, 0.3], [0.0, 1.7]])])
    pure = 0.0
    for A in (load_example("unit"), P):
        S = directional_sum(A, 1.3j)
        for z in _random_annulus(2.0, 10, rng):
            pure = max(pure, float(np.max(np.abs(eval_sum(S, z) - np.eye(A.n)))))
    return _result("4 directional sum is a morphism", {
        "estar_residual": (r_e, 1e-8, "le"), "three_slope_residual": (r_t, 1e-8, "le"),
        "pure_identity": (pure, 1e-12, "le")})


def pole_orders(A: QSystem, c, radii=(1e-2, 1e-3), phase=0.7) -> dict:
    """Apparent pole order of every nonzero block near ``-c``."""
    S = directional_sum(A, c)
    z0 = -S.c
    st = A.structure
    out = {}
    for (i, j) in S.blocks:
        vals = []
        for r in radii:
            F = eval_sum(S, z0 * (1 + r * cmath.exp(1j * phase)))
            vals.append(float(np.linalg.norm(F[st.slice(i), st.slice(j)])))
        out[(i, j)] = (math.log(vals[1]) - math.log(vals[0])) / (math.log(radii[0]) - math.log(radii[1]))
    return out


def crit_pole_structure(config=None) -> CheckResult:
    worst_int, worst_excess = 0.0, -math.inf
    orders = {}
    for name, c in (("estar", -1.0), ("three_slope", 1.3j)):
        A = load_example(name)
        st = A.structure
        for (i, j), p in pole_orders(A, c).items():
            orders[f"{name}{(i, j)}"] = round(p, 3)
            worst_int = max(worst_int, abs(p - round(p)))
            worst_excess = max(worst_excess, round(p) - st.level(i, j))
    return _result("5 pole structure", {
        "distance_to_integer": (worst_int, 0.2, "le"), "order_minus_gap": (float(worst_excess), 0.0, "le")},
        {"orders": orders})


def crit_cocycle(config=None) -> CheckResult:
    cfg = _cfg(config)
    E = load_example("estar")
    a = cfg.basepoint
    c, d, e = 1.3j, -1.0, 1.5 * cmath.exp(-2.0j)
    st = E.structure
    Scd, Sde, Sce = (stokes_matrix(E, x, y, a).value for x, y in ((c, d), (d, e), (c, e)))
    coc = float(np.linalg.norm(Scd @ Sde - Sce))
    ident = float(np.max(np.abs(stokes_matrix(E, c, c, a).value - np.eye(st.n))))
    shape = max(st.unipotent_deviation(S) for S in (Scd, Sde, Sce))
    return _result("6 Stokes cocycle", {
        "cocycle": (coc, 1e-8, "le"), "identity": (ident, 1e-12, "le"), "shape": (float(shape), 0.0, "le")})


def crit_alien_vanishing(config=None) -> CheckResult:
    cfg = _cfg(config)
    rng = np.random.default_rng(cfg.seed + 3)
    E = load_example("estar")
    worst = 0.0
    for c in _generic_directions(E, 20, rng, cfg.basepoint):
        worst = max(worst, alien_derivation(E, c, config=cfg).value.norm())
    r = alien_derivation(E, 1.0, config=cfg)
    entry = abs(r.value.value[0, 1])
    return _result("7 alien vanishing and detection", {
        "generic_norm": (worst, 1e-6, "le"), "resonant_entry": (entry, 1e-3, "ge"),
        "doubling_change": (r.diagnostics["relative_error"], 1e-8, "le")})


def crit_level_one_residue(config=None) -> CheckResult:
    cfg = _cfg(config)
    worst = 0.0
    for name in ("estar", "estar_block"):
        A = load_example(name)
        d0 = A.structure.levels()[0]
        for cl in A.graded().resonance.classes(d0):
            D = alien_derivation(A, cl.point, config=cfg).per_level[d0].value
            R = level_one_residue(A, cl.point, cfg.basepoint)
            worst = max(worst, float(np.linalg.norm(D - R) / max(np.linalg.norm(R), 1e-300)))
    return _result("8 level-one residue oracle", {"relative": (worst, 1e-6, "le")})


def crit_reference_independence(config=None) -> CheckResult:
    cfg = _cfg(config)
    c0s = (cfg.reference_direction, 1.6 * cmath.exp(-1.1j))
    worst, higher = 0.0, 0.0
    for name in ("estar", "three_slope"):
        A = load_example(name)
        levels = A.structure.levels()
        d0 = levels[0]
        for cl in A.graded().resonance.classes(d0):
            D1, D2 = (alien_derivation(A, cl.point, c0=c0, config=cfg).per_level[d0].value for c0 in c0s)
            worst = max(worst, float(np.linalg.norm(D1 - D2) / max(np.linalg.norm(D1), 1e-300)))
        # higher levels: reported only
        for d in levels[1:]:
            for cl in A.graded().resonance.classes(d):
                D1, D2 = (alien_derivation(A, cl.point, c0=c0, config=cfg).per_level[d].value for c0 in c0s)
                higher = max(higher, float(np.linalg.norm(D1 - D2) / max(np.linalg.norm(D1), 1e-300)))
    return _result("9 lowest-level reference independence", {"relative": (worst, 1e-6, "le")},
                   {"higher_level_spread": higher})


def crit_tensor_rule(config=None) -> CheckResult:
    E = load_example("estar")
    r = check_tensor_rule(E, E, 1.0, _cfg(config))
    return _result("10 derivation rule on tensor products", {"residual": (r["residual"], 1e-5, "le")},
                   {"norm": r["norm"]})


def crit_torus(config=None) -> CheckResult:
    cfg = _cfg(config)
    A = load_example("three_slope")
    A0 = A.graded()
    worst = 0.0
    for cl in A0.resonance.classes():
        D = alien_derivation(A, cl.point, config=cfg).value
        for t in (2.0, 1j):
            worst = max(worst, max(torus_conjugation_check(t, D, A0).values(), default=0.0))
    return _result("11 torus conjugation", {"residual": (worst, 1e-12, "le")})


def crit_functoriality(config=None) -> CheckResult:
    cfg = _cfg(config)
    A = load_example("three_slope")
    sub, Phi = subsystem(A, 1)
    worst = 0.0
    for cl in A.graded().resonance.classes():
        rho = min(alien_derivation(X, cl.point, config=cfg).diagnostics["rho"] for X in (A, sub))
        DA = alien_derivation(A, cl.point, config=cfg, rho=rho).value
        DB = alien_derivation(sub, cl.point, config=cfg, rho=rho).value
        worst = max(worst, check_functoriality(DB, DA, Phi))
    return _result("12 functoriality for the slope truncation", {"residual": (worst, 1e-6, "le")})


def alien_section_dimension(A: QSystem, config=None) -> int:
    res = singular_classes(A)
    data = [alien_derivation(A, cl.point, config=config) for cl in res.classes()] if A.offdiag else []
    return int(sections(A, data).shape[1])


def crit_sections(config=None) -> CheckResult:
    dims = {}
    mismatch = 0
    for name in ("estar", "sections_counterexample"):
        A = load_example(name)
        via_alien = alien_section_dimension(A, _cfg(config))
        direct = len(polynomial_solutions(A, -4, 4))
        dims[name] = f"{via_alien}/{direct}"
        mismatch += abs(via_alien - direct)
    return _result("13 sections via alien kernels", {"dimension_mismatch": (float(mismatch), 0.0, "le")},
                   {"dimensions": dims})


def affine_test_system(rng=None, top=None) -> QSystem:
    """Slopes (0,1,2), ranks (1,1,2) with two eigenvalue classes on the top block."""
    one = np.ones((1, 1))
    off = {(0, 1): TruncatedLaurentSeries.from_dict({0: one}),
           (1, 2): TruncatedLaurentSeries.from_dict({1: np.array([[0.5, 0.2]])})}
    A = QSystem.from_blocks(2.0, (0, 1, 2), [one, 1.2 * one, np.diag([1.0, 1.5])], off)
    if top is None:
        top = rng.normal(size=4) + 1j * rng.normal(size=4)
    return A.with_level_coefficients(2, top)


def crit_affineness(config=None) -> CheckResult:
    cfg = _cfg(config)
    rng = np.random.default_rng(cfg.seed + 4)
    worst_rel, worst_off = 0.0, 0.0
    for _ in range(2):
        A, B = affine_test_system(rng), affine_test_system(rng)
        A0 = A.graded()
        for cl in A0.resonance.classes(2):
            DA = alien_derivation(A, cl.point, config=cfg)
            DB = alien_derivation(B, cl.point, config=cfg)
            diff = DB.per_level[2] - DA.per_level[2]
            off = float(np.linalg.norm((diff - spectral_project(diff, A0, 2, cl.point)).value))
            scale = max(DA.per_level[2].norm(), DB.per_level[2].norm(), 1e-300)
            worst_rel = max(worst_rel, off / max(diff.norm(), 1e-300))
            worst_off = max(worst_off, off / scale)
    return _result("14 affineness of alien derivations", {
        "off_eigenspace_relative_to_difference": (worst_rel, 1e-6, "le"),
        "off_eigenspace_relative_to_values": (worst_off, 1e-8, "le")})


def crit_dimension_count(config=None, names=CORPUS) -> CheckResult:
    cfg = _cfg(config)
    size_err, worst_cond = 0, 1.0
    sizes = {}
    for name in names:
        A = load_example(name)
        A0 = A.graded()
        for delta in A.structure.levels():
            T = transfer_map(truncate_to_level(A, delta - 1), delta, cfg)
            irr = irr_delta(A0, delta)
            sizes[f"{name}@{delta}"] = f"{T.size[0]}x{T.size[1]}/{irr}"
            size_err += abs(T.size[0] - irr) + abs(T.size[1] - irr)
            rank = np.linalg.matrix_rank(T.square) if T.square.size else 0
            size_err += irr - rank
            worst_cond = max(worst_cond, T.condition)
    return _result("15 transfer-map dimension count", {
        "size_or_rank_defect": (float(size_err), 0.0, "le"), "condition": (worst_cond, 1e6, "le")},
        {"sizes": sizes})


def coefficient_error(A: QSystem, B: QSystem) -> float:
    err, scale = 0.0, 0.0
    for delta in A.structure.levels():
        a, b = A.level_coefficients(delta), B.level_coefficients(delta)
        err = max(err, float(np.max(np.abs(a - b))))
        scale = max(scale, float(np.max(np.abs(a))))
    return err / max(scale, 1e-300)


def crit_round_trip(config=None) -> CheckResult:
    cfg = _cfg(config)
    out = {}
    for name in ("estar", "three_slope"):
        A = load_example(name)
        R, _ = reconstruct_full(A.graded(), alien_targets(A, cfg), cfg)
        out[name] = (coefficient_error(A, R), 1e-5, "le")
    return _result("16 freeness round trip", out)


def random_unipotent(st: BlockStructure, rng) -> np.ndarray:
    M = np.eye(st.n, dtype=complex)
    up = st.upper_mask() & ~np.eye(st.n, dtype=bool)
    M[up] = rng.normal(size=up.sum()) + 1j * rng.normal(size=up.sum())
    return M


def crit_quotient_log(config=None) -> CheckResult:
    rng = np.random.default_rng(_cfg(config).seed + 5)
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(2, 5))
        slopes = np.sort(rng.choice(np.arange(-2, 5), size=k, replace=False))
        st = BlockStructure(tuple(int(s) for s in slopes), tuple(int(r) for r in rng.integers(1, 3, size=k)))
        r = quotient_log_check(random_unipotent(st, rng), random_unipotent(st, rng), st)
        worst = max(worst, r["residual"])
    return _result("17 lowest level of log of a quotient", {"residual": (worst, 1e-12, "le")})


def crit_covariant_convergence(config=None) -> CheckResult:
    cfg = _cfg(config)
    A = load_example("covariant_convergent")
    A0 = A.graded()
    lines = [L for L in covariant_lines(A0) if L.block == 1]
    ann = {}
    for L in lines:
        worst = 0.0
        for cl in A0.resonance.classes():
            D = alien_derivation(A, cl.point, config=cfg).value.value
            worst = max(worst, float(np.linalg.norm(D @ L.vector)))
        ann[L.alpha] = worst
    X = next(L for L in lines if ann[L.alpha] <= 1e-8).vector
    directions = (1.3j, -1.0 * cmath.exp(0.4j), 1.5 * cmath.exp(-2.0j))
    zs = [0.9 + 0.5j, 1.3 - 0.2j]
    fg = formal_gauge(A, 20)
    spread, series_err = 0.0, 0.0
    for z in zs:
        vals = [eval_sum(directional_sum(A, c), z) @ X for c in directions]
        ref = series_eval(fg.matrix_series(), z) @ X
        spread = max(spread, max(float(np.linalg.norm(v - vals[0])) for v in vals) / np.linalg.norm(vals[0]))
        series_err = max(series_err, max(float(np.linalg.norm(v - ref)) for v in vals) / np.linalg.norm(ref))
    return _result("18 annihilated covariant vector gives a convergent solution", {
        "annihilation": (min(ann.values()), 1e-8, "le"), "direction_spread": (spread, 1e-6, "le"),
        "series_mismatch": (series_err, 1e-6, "le")})


ACCEPTANCE = (
    crit_theta, crit_formal_anchor, crit_gevrey, crit_sum_morphism, crit_pole_structure,
    crit_cocycle, crit_alien_vanishing, crit_level_one_residue, crit_reference_independence,
    crit_tensor_rule, crit_torus, crit_functoriality, crit_sections, crit_affineness,
    crit_dimension_count, crit_round_trip, crit_quotient_log, crit_covariant_convergence,
)


# ---------------------------------------------------------------------------
# invariants


def inv_serialization(config=None) -> CheckResult:
    worst = 0
    for name in CORPUS:
        A = load_example(name)
        B = loads_system(dumps_system(A))
        same = all(np.array_equal(x, y) for x, y in zip(A.diag, B.diag)) and A.offdiag.keys() == B.offdiag.keys()
        for k in A.offdiag:
            a, b = A.offdiag[k].to_dict(), B.offdiag[k].to_dict()
            same &= a.keys() == b.keys() and all(np.array_equal(a[n], b[n]) for n in a)
        worst += not same
    return _result("serialization round trip", {"mismatches": (float(worst), 0.0, "le")})


def inv_tensor_graded(config=None) -> CheckResult:
    E, T = load_example("estar"), load_example("three_slope")
    lhs, rhs = tensor(E, T).graded(), tensor(E.graded(), T.graded())
    diff = max(float(np.max(np.abs(x - y))) for x, y in zip(lhs.diag, rhs.diag))
    st = lhs.structure == rhs.structure
    return _result("graded part commutes with tensor", {
        "difference": (diff, 0.0, "le"), "structure_equal": (float(st), 1.0, "ge")})


def inv_covariant_lines(config=None) -> CheckResult:
    worst = 0.0
    for name in CORPUS:
        A0 = load_example(name).graded()
        for L in covariant_lines(A0):
            for z in (0.8 + 0.3j, 1.7j):
                lhs = A0(z) @ L.vector
                rhs = L.alpha * z ** A0.slopes[L.block] * L.vector
                worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return _result("covariant lines are eigenlines", {"residual": (worst, 1e-12, "le")})


def inv_irr_count(config=None) -> CheckResult:
    bad = 0
    for name in CORPUS:
        A = load_example(name)
        total = sum(irr_delta(A.graded(), d) for d in A.structure.levels())
        bad += total != sum(len(A.level_basis(d)) for d in A.structure.levels())
    return _result("irr counts free coefficients", {"mismatches": (float(bad), 0.0, "le")})


def inv_log_exp(config=None) -> CheckResult:
    rng = np.random.default_rng(_cfg(config).seed + 6)
    st = BlockStructure((0, 1, 3), (1, 2, 1))
    worst = 0.0
    for _ in range(10):
        U = random_unipotent(st, rng)
        worst = max(worst, float(np.max(np.abs(exp_nilpotent(log_unipotent(U, st), st) - U))))
    return _result("exp(log U) = U", {"residual": (worst, 1e-12, "le")})


def inv_monotone_locality(config=None) -> CheckResult:
    cfg = _cfg(config)
    rng = np.random.default_rng(cfg.seed + 7)
    A = affine_test_system(rng)
    B = affine_test_system(rng)
    worst = 0.0
    for cl in A.graded().resonance.classes(1):
        D1 = alien_derivation(A, cl.point, config=cfg).per_level[1]
        D2 = alien_derivation(B, cl.point, config=cfg).per_level[1]
        worst = max(worst, (D1 - D2).norm() / max(D1.norm(), 1e-300))
    return _result("lower levels ignore higher coefficients", {"relative": (worst, 1e-8, "le")})


def inv_normalize(config=None) -> CheckResult:
    from .system import normalize

    one = np.ones((1, 1))
    A = QSystem.from_blocks(2.0, (0, 1), [4 * one, 6 * one], {(0, 1): TruncatedLaurentSeries.from_dict({0: one})})
    An, gauge = normalize(A)
    rep = is_morphism(gauge.series(), An, A)
    return _result("normalization gauge is a morphism", {
        "residual": (max(rep.coefficient_residual or 0.0, rep.pointwise_residual), 1e-10, "le"),
        "normalized": (float(An.is_normalized), 1.0, "ge")})


INVARIANTS = (
    inv_serialization, inv_tensor_graded, inv_covariant_lines, inv_irr_count,
    inv_log_exp, inv_monotone_locality, inv_normalize,
)

SUITES = {"acceptance": ACCEPTANCE, "invariants": INVARIANTS}


def run_suite(name: str = "all", config=None) -> list:
    if name == "all":
        funcs = ACCEPTANCE + INVARIANTS
    elif name in SUITES:
        funcs = SUITES[name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    out = []
    for f in funcs:
        t0 = time.perf_counter()
        r = f(config)
        r.seconds = time.perf_counter() - t0
        out.append(r)
    return out

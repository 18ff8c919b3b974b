import cmath

import numpy as np
import pytest

from qstokes import load_example
from qstokes.config import RunConfig
from qstokes.elliptic import EllipticPoint
from qstokes.errors import (
    BasepointIncompatible,
    ContourHitsResonance,
    MissingCharacterValue,
    NotNilpotent,
    QuadratureNotConverged,
)
from qstokes.galois import (
    NilpotentBlockMatrix,
    PureGroupElement,
    act_pure,
    alien_derivation,
    quotient_log_check,
    check_functoriality,
    check_tensor_rule,
    level_components,
    level_one_residue,
    sections,
    spectral_project,
    torus_conjugation_check,
)
from qstokes.summation import directional_sum, eval_sum
from qstokes.system import QSystem, invariant_sections, tensor, unit_system
from qstokes.blocks import BlockStructure

A_BASE = 0.77 + 0.13j
# 1 / theta(a) at q = 2, a = 0.77 + 0.13i (40-digit direct summation): the
# residue of the closed-form estar sum at d = 1
ESTAR_DELTA = 0.26008710429933198657 + 0.03752837394252364998j
ONE = np.ones((1, 1))


def test_estar_alien_value(estar):
    r = alien_derivation(estar, 1.0)
    assert r.value.value[0, 1] == pytest.approx(ESTAR_DELTA, rel=1e-12)
    assert r.diagnostics["apparent_pole_order"] == 1
    assert r.diagnostics["relative_error"] < 1e-12
    assert r.diagnostics["shape_deviation"] == 0.0


def test_estar_alien_matches_oracle(estar):
    R = level_one_residue(estar, 1.0, A_BASE)
    assert R[0, 1] == pytest.approx(ESTAR_DELTA, rel=1e-12)


def test_nonresonant_alien_vanishes(estar):
    for c in (1.3j, -1.0, 1.7 * cmath.exp(2.5j)):
        assert alien_derivation(estar, c).value.norm() < 1e-12


def test_pure_alien_is_zero():
    A = QSystem.from_blocks(2.0, (0,), [np.diag([1.0, 1.5])])
    assert alien_derivation(A, 1.0).value.norm() == 0.0


def test_three_slope_level_two_against_finite_difference(three_slope):
    # residue at d = -1 as the mean of (d - c) log S_{c0,d}(a) over four
    # points d = c (1 + eps i^k), which cancels the regular terms to O(eps^4)
    r = alien_derivation(three_slope, -1.0)
    D = r.per_level[2].value[0, 2]
    W = r.per_level[1].norm()
    assert W < 1e-10
    c0 = RunConfig().reference_direction
    Fc0 = eval_sum(directional_sum(three_slope, c0), A_BASE)
    estimates = []
    for eps in (1e-3, 1e-3j, -1e-3, -1e-3j):
        d = -1.0 * (1 + eps)
        S = np.linalg.solve(Fc0, eval_sum(directional_sum(three_slope, d, check=False), A_BASE))
        L = S - np.eye(3)
        L = L - L @ L / 2
        estimates.append(-eps * L[0, 2])
    assert abs(np.mean(estimates) - D) < 1e-6 * abs(D)


def test_basepoint_guards(estar):
    with pytest.raises(BasepointIncompatible):
        alien_derivation(estar, -A_BASE)
    with pytest.raises(ContourHitsResonance):
        alien_derivation(estar, 1.0, rho=0.09, a=-1.05)
    with pytest.raises(QuadratureNotConverged):
        alien_derivation(estar, 1.0, rho=0.05, a=-1.2, samples=32, quadrature_tol=1e-18)


def test_reference_direction_independence(estar):
    d1 = alien_derivation(estar, 1.0).value.value
    d2 = alien_derivation(estar, 1.0, c0=1.6 * cmath.exp(-1.1j)).value.value
    assert np.allclose(d1, d2, rtol=1e-12)


def test_nilpotent_block_matrix_validation():
    st = BlockStructure((0, 1), (1, 1))
    with pytest.raises(NotNilpotent):
        NilpotentBlockMatrix(st, np.eye(2))
    D = NilpotentBlockMatrix(st, np.array([[0, 2.0], [0, 0]]))
    assert D.norm() == pytest.approx(2.0)


def test_level_components_partition():
    T2 = tensor(load_example("estar"), load_example("estar"))
    D = alien_derivation(T2, 1.0, rho=5e-3).value
    parts = level_components(D)
    assert sorted(parts) == [1, 2]
    assert np.array_equal(sum(p.value for p in parts.values()), D.value)


def test_act_pure():
    E = load_example("estar").graded()
    assert np.allclose(act_pure(PureGroupElement(), E), np.eye(2))
    assert np.allclose(act_pure(PureGroupElement(torus=3.0), E), np.diag([1, 3]))
    J = QSystem.from_blocks(2.0, (0,), [np.array([[1.0, 1.0], [0.0, 1.0]])])
    assert np.allclose(act_pure(PureGroupElement(unipotent_param=2.0), J), [[1, 2], [0, 1]])
    A = QSystem.from_blocks(2.0, (0,), [np.diag([1.0, 1.5])])
    g = PureGroupElement(character={1.5: 1j})
    assert np.allclose(act_pure(g, A), np.diag([1, 1j]))
    with pytest.raises(MissingCharacterValue):
        act_pure(PureGroupElement(), A)


def test_torus_conjugation(three_slope):
    D = alien_derivation(three_slope, -1.0).value
    A0 = three_slope.graded()
    assert max(torus_conjugation_check(1.0, D, A0).values()) == 0.0
    for t in (2.0, 1j):
        assert max(torus_conjugation_check(t, D, A0).values()) < 1e-12


def test_spectral_projection(estar):
    A0 = estar.graded()
    D = alien_derivation(estar, 1.0).value
    assert np.array_equal(spectral_project(D, A0, 1, 1.0).value, D.value)
    assert spectral_project(D, A0, 1, -1.0).norm() == 0.0
    # two eigenvalues on the top block: only the congruent column survives
    A = QSystem.from_blocks(2.0, (0, 1), [ONE, np.diag([1.0, 1.5])])
    X = NilpotentBlockMatrix(A.structure, np.array([[0, 1.0, 2.0], [0, 0, 0], [0, 0, 0]]))
    assert np.array_equal(spectral_project(X, A, 1, 1.0).value[0], [0, 1, 0])
    P = spectral_project(X, A, 1, 1 / 1.5)
    assert np.allclose(P.value[0], [0, 0, 2])


def test_functoriality_identity(estar):
    D = alien_derivation(estar, 1.0).value
    assert check_functoriality(D, D, np.eye(2)) == 0.0


def test_tensor_rule_with_unit(estar):
    r = check_tensor_rule(estar, unit_system(2.0), 1.0)
    assert r["residual"] < 1e-12


def test_sections(estar):
    assert sections(QSystem.from_blocks(2.0, (0,), [ONE]), []).shape == (1, 1)
    S = sections(estar, [alien_derivation(estar, 1.0)])
    assert S.shape == (2, 1) and np.allclose(np.abs(S[:, 0]), [1, 0])
    X = load_example("sections_counterexample")
    assert invariant_sections(X.graded()).shape[1] == 1
    res = [alien_derivation(X, cl.point) for cl in X.graded().resonance.classes()]
    assert sections(X, res).shape[1] == 0


def test_quotient_log_two_blocks(rng):
    st = BlockStructure((0, 2), (1, 2))
    B = np.eye(3, dtype=complex)
    A = np.eye(3, dtype=complex)
    A[0, 1:] = rng.normal(size=2)
    r = quotient_log_check(B, A, st)
    assert r["lowest_level"] == 2 and r["residual"] < 1e-15

import numpy as np
import pytest

from qstokes import load_example
from qstokes.errors import DimensionMismatch, InvalidSystem, WindowExhausted
from qstokes.series import TruncatedLaurentSeries as T, series_eval
from qstokes.summation import formal_gauge
from qstokes.system import (
    QSystem,
    covariant_lines,
    dual,
    formal_window_cap,
    check_formal_window,
    internal_hom,
    invariant_sections,
    irr_delta,
    is_morphism,
    normalize,
    polynomial_morphisms,
    polynomial_solutions,
    resonance_set,
    subsystem,
    tensor,
    unit_system,
    validate,
)

ONE = np.ones((1, 1))


def test_validate_flags(estar):
    rep = validate(load_example("unit"))
    assert rep["valid"] and rep["pure"] and rep["normalized"]
    rep = validate(estar)
    assert rep["valid"] and rep["polynomial"] and rep["normalized"] and not rep["pure"]
    rep = validate(QSystem.from_blocks(2.0, (0,), [4 * ONE]))
    assert rep["valid"] and not rep["normalized"]


def test_invalid_inputs():
    with pytest.raises(InvalidSystem):
        QSystem.from_blocks(0.5, (0,), [ONE])
    with pytest.raises(DimensionMismatch):
        QSystem.from_blocks(2.0, (0, 1), [ONE, ONE], {(0, 1): T.from_dict({0: np.ones((2, 1))})})
    assert not validate(QSystem.from_blocks(2.0, (0,), [np.zeros((1, 1))]))["valid"]


def test_normalize_identity_when_normalized(estar):
    An, gauge = normalize(estar)
    assert An is estar and gauge.is_identity


def test_normalize_shears_into_band():
    # eigenvalue 8 = 2^3 at q = 2: representative 1, gauge z^3 on that block
    A = QSystem.from_blocks(2.0, (0, 4), [8 * ONE, ONE], {(0, 1): T.from_dict({2: ONE})})
    An, gauge = normalize(A)
    assert An.is_normalized
    assert An.diag[0][0, 0] == pytest.approx(1.0)
    assert gauge.shifts == ((3,), (0,))
    rep = is_morphism(gauge.series(), An, A)
    assert rep.coefficient_residual < 1e-14 and rep.pointwise_residual < 1e-14


def test_normalize_two_q():
    # eigenvalue 2q = 4 at q = 2 lands on the representative 1 with gauge z^2
    A = QSystem.from_blocks(2.0, (0,), [4 * ONE])
    An, gauge = normalize(A)
    assert An.diag[0][0, 0] == pytest.approx(1.0)
    assert gauge.shifts == ((2,),)


def test_graded(estar):
    A0 = estar.graded()
    assert not A0.offdiag
    assert np.allclose(A0(0.5), np.diag([1.0, 0.5]))


def test_tensor_estar_square(estar):
    T2 = tensor(estar, estar)
    assert T2.slopes == (0, 1, 2) and T2.ranks == (1, 2, 1)
    assert T2.is_polynomial
    # sigma_q(X (x) Y) = (A (x) A)(X (x) Y) for the Kronecker product of two
    # solutions, checked through the unpermuted Kronecker matrix
    P = np.eye(4)[list(T2.perm)]
    for z in (0.8 + 0.3j, 1.4 - 0.9j):
        K = np.kron(estar(z), estar(z))
        assert np.allclose(P @ K @ P.T, T2(z))


def test_tensor_with_unit(estar):
    T1 = tensor(estar, unit_system(2.0))
    assert T1.slopes == estar.slopes
    for z in (0.7j, 1.3):
        assert np.allclose(T1(z), estar(z))


def test_dual():
    D = dual(QSystem.from_blocks(2.0, (0, 1), [ONE, ONE]))
    assert D.slopes == (-1, 0)
    assert np.allclose(D(0.5), np.diag([2.0, 1.0]))
    assert dual(unit_system(2.0)).slopes == (0,)


def test_dual_is_inverse_transpose(estar):
    D = dual(estar)
    P = np.eye(2)[list(D.perm)]
    for z in (0.6 + 0.2j, 1.5j):
        assert np.allclose(P @ np.linalg.inv(estar(z)).T @ P.T, D(z))


def test_internal_hom_with_unit(estar):
    H = internal_hom(unit_system(2.0), estar)
    assert H.slopes == estar.slopes
    assert internal_hom(estar, unit_system(2.0)).slopes == dual(estar).slopes


def test_is_morphism_controls(estar, rng):
    I = T.constant(np.eye(2))
    assert is_morphism(I, estar, estar).residual < 1e-15
    R = T.constant(rng.normal(size=(2, 2)))
    assert is_morphism(R, estar, estar).residual > 1e-2


def test_formal_gauge_is_morphism_up_to_tail(estar):
    F = formal_gauge(estar, 15).matrix_series()
    rep = is_morphism(F, estar.graded(), estar, sample_points=[0.01 + 0.005j])
    assert rep.coefficient_residual < 1e-14


def test_resonance_sets(estar, three_slope):
    res = resonance_set(estar.graded())
    assert [cl.point.rep for cl in res.classes(1)] == [pytest.approx(1.0)]
    assert resonance_set(unit_system(2.0)).is_empty()
    reps = sorted((complex(cl.point.rep) for cl in three_slope.graded().resonance.classes(2)),
                  key=lambda z: (z.real, z.imag))
    assert np.allclose(reps, [-np.sqrt(2), -1, 1, np.sqrt(2)], atol=1e-12)
    # delta = 2 with alpha / beta = q: the square roots of q
    A0 = QSystem.from_blocks(2.0, (0, 2), [1.0 * ONE, 1.0 * ONE])
    A0q = QSystem.from_blocks(2.0, (0, 2), [ONE, ONE])
    assert len(A0.resonance.classes(2)) == len(A0q.resonance.classes(2)) == 4
    principal = [cl for cl in A0.resonance.classes(2) if cl.principal]
    assert len(principal) == 2


def test_irr_delta(estar, three_slope):
    assert irr_delta(estar.graded(), 1) == 1
    assert irr_delta(three_slope.graded(), 2) == 2
    assert irr_delta(three_slope.graded(), 1) == 2
    assert irr_delta(estar.graded(), 3) == 0


def test_level_basis_counts(three_slope):
    for d in three_slope.structure.levels():
        assert len(three_slope.level_basis(d)) == irr_delta(three_slope.graded(), d)
    assert np.allclose(three_slope.level_coefficients(2), [0.3, 0.7])


def test_covariant_lines_and_sections(estar):
    lines = covariant_lines(estar.graded())
    assert [(L.block, L.alpha) for L in lines] == [(0, 1.0), (1, 1.0)]
    J = QSystem.from_blocks(2.0, (0,), [np.array([[1.0, 1.0], [0.0, 1.0]])])
    assert len(covariant_lines(J)) == 1
    assert len(covariant_lines(QSystem.from_blocks(2.0, (0,), [np.diag([1.0, 1.5])]))) == 2
    S = invariant_sections(estar.graded())
    assert S.shape == (2, 1) and np.allclose(S[:, 0], [1, 0])
    assert invariant_sections(QSystem.from_blocks(2.0, (0,), [1.5 * ONE])).shape[1] == 0
    assert invariant_sections(QSystem.from_blocks(2.0, (1,), [ONE])).shape[1] == 0


def test_polynomial_solutions(estar):
    sols = polynomial_solutions(estar)
    assert len(sols) == 1
    v = series_eval(sols[0], 0.9j)[:, 0]
    assert abs(v[1]) < 1e-12 and abs(v[0]) > 0


def test_hom_sections_match_morphisms(estar):
    # morphisms estar -> estar found by a linear solve; the sections of the
    # internal hom are counted the same way
    morph = polynomial_morphisms(estar, estar, -2, 2)
    H = internal_hom(estar, estar)
    assert len(morph) == len(polynomial_solutions(H, -2, 2))


def test_subsystem(three_slope):
    sub, Phi = subsystem(three_slope, 1)
    assert sub.slopes == (0, 1)
    assert is_morphism(T.constant(Phi), sub, three_slope).residual < 1e-15


def test_formal_window_cap():
    assert formal_window_cap(2.0, 1) == 43
    with pytest.raises(WindowExhausted):
        check_formal_window(2.0, 44, 1)

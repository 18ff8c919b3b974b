import cmath
import math

import numpy as np
import pytest

from qstokes import load_example
from qstokes.errors import BasepointOnSpiral, GradedMismatch, InsufficientData, OnPoleSpiral, ResonantDirection
from qstokes.series import ScaledCoefficientTrack, TruncatedLaurentSeries as T
from qstokes.summation import (
    directional_sum,
    eval_sum,
    formal_gauge,
    gevrey_level_estimate,
    relative_sum,
    stokes_matrix,
)
from qstokes.system import QSystem
from qstokes.theta import ThetaContext, theta_coeff

A_BASE = 0.77 + 0.13j
# closed-form sum for estar, f_c = sum_n c^-n q^-n(n+1)/2 z^n / (c q^n - 1) / theta(z/c),
# evaluated with 40-digit arithmetic
F_MINUS1_AT_09_05 = -0.73160439133928899129 - 0.92869591428415819555j
STOKES_13J_TO_MINUS1 = -0.35440655083675095687 + 0.28535279759719773075j


def test_estar_formal_coefficients(estar):
    f = formal_gauge(estar, 12).block(0, 1)
    assert f.n_min == 0
    assert [f.coeff(n)[0, 0].real for n in range(6)] == [-1, -1, -2, -8, -64, -1024]
    for n in range(13):
        assert f.coeff(n)[0, 0] == -(2.0 ** (n * (n - 1) // 2))
    assert f.coeff(-1)[0, 0] == 0


def test_pure_formal_gauge_is_identity():
    fg = formal_gauge(QSystem.from_blocks(2.0, (1,), [np.diag([1.0, 1.5])]))
    assert not fg.blocks
    assert np.array_equal(fg.matrix_series().coeff(0), np.eye(2))


def test_formal_recursion_residuals_small(three_slope):
    fg = formal_gauge(three_slope, 20)
    assert fg.max_residual < 1e-14


def test_estar_numerator_closed_form(estar):
    # c q^n g_n - g_n = theta_c coefficient n
    c = -1.0
    S = directional_sum(estar, c)
    G = S.G(0, 1)
    ctx = S.theta
    for n in range(-8, 9):
        expected = theta_coeff(ctx, n) * c ** (-n) / (c * 2.0 ** n - 1)
        assert G.coeff(n)[0, 0] == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_estar_sum_value(estar):
    F = eval_sum(directional_sum(estar, -1.0), 0.9 + 0.5j)
    assert F[0, 1] == pytest.approx(F_MINUS1_AT_09_05, rel=1e-12)
    assert np.array_equal(np.diag(F), [1, 1]) and F[1, 0] == 0


def test_resonant_direction_rejected(estar):
    with pytest.raises(ResonantDirection) as info:
        directional_sum(estar, 1.0)
    assert info.value.witness.delta == 1
    with pytest.raises(ResonantDirection):
        directional_sum(estar, 4.0 * (1 + 1e-7))


def test_pure_sum_is_identity():
    A = QSystem.from_blocks(2.0, (0,), [np.array([[1.0, 0.3], [0.0, 1.9]])])
    S = directional_sum(A, 1.3j)
    assert not S.blocks
    assert np.array_equal(eval_sum(S, 0.4 + 0.1j), np.eye(2))


def test_eval_on_pole_spiral_raises(estar):
    S = directional_sum(estar, -1.0)
    with pytest.raises(OnPoleSpiral):
        eval_sum(S, 2.0)


def test_simple_pole_near_minus_c(estar):
    S = directional_sum(estar, -1.0)
    vals = [abs(eval_sum(S, 1 + r)[0, 1]) for r in (1e-2, 1e-3)]
    order = math.log(vals[1] / vals[0]) / math.log(10)
    assert order == pytest.approx(1.0, abs=0.05)


def test_sum_independent_of_direction_representative(estar):
    S1 = eval_sum(directional_sum(estar, 1.3j), 0.9)
    S2 = eval_sum(directional_sum(estar, 2 * 1.3j), 0.9)
    assert np.allclose(S1, S2, rtol=1e-12)


def test_stokes_matrix_value(estar):
    S = stokes_matrix(estar, 1.3j, -1.0, A_BASE).value
    assert S[0, 1] == pytest.approx(STOKES_13J_TO_MINUS1, rel=1e-12)
    assert np.array_equal(stokes_matrix(estar, -1.0, -1.0, A_BASE).value, np.eye(2))


def test_stokes_pure_is_identity():
    A = load_example("unit")
    assert np.array_equal(stokes_matrix(A, 1.3j, -1.0, A_BASE).value, np.eye(1))


def test_stokes_basepoint_on_spiral(estar):
    with pytest.raises(BasepointOnSpiral):
        stokes_matrix(estar, 1.3j, -1.0, 1.0)


def test_compose_and_inverse(three_slope):
    S = directional_sum(three_slope, 1.3j)
    I = S.compose(S.inverse())
    z = 0.6 - 0.7j
    assert np.allclose(eval_sum(I, z), np.eye(3), atol=1e-13)
    assert np.allclose(eval_sum(S.inverse(), z), np.linalg.inv(eval_sum(S, z)), atol=1e-13)


def test_relative_sum(three_slope):
    c = 1.3j
    R = relative_sum(three_slope, three_slope, c)
    assert not R.blocks
    # change only the top level: lower blocks vanish exactly
    B = three_slope.with_level_coefficients(2, [1.0, -0.5])
    R = relative_sum(three_slope, B, c)
    assert set(R.blocks) == {(0, 2)}
    for z in (0.6 - 0.7j, 1.2 + 0.3j, -0.9 + 0.2j):
        direct = eval_sum(directional_sum(B, c), z) @ np.linalg.inv(eval_sum(directional_sum(three_slope, c), z))
        assert np.allclose(eval_sum(R, z), direct, atol=1e-12)
    with pytest.raises(GradedMismatch):
        relative_sum(three_slope, three_slope.replace(diag=(np.ones((1, 1)),) * 2 + (1.5 * np.ones((1, 1)),)), c)


def test_gevrey_examples(estar):
    q = 2.0
    n = np.arange(40)
    est = gevrey_level_estimate(ScaledCoefficientTrack.from_log(n * (n - 1) / 2 * math.log(q)), q)
    assert 0.85 <= est <= 1.15
    est = gevrey_level_estimate(ScaledCoefficientTrack.from_log(n ** 2 / 4 * math.log(q)), q)
    assert abs(est - 2) <= 0.3
    assert math.isinf(gevrey_level_estimate(ScaledCoefficientTrack.from_log(n * math.log(2.0)), q))
    with pytest.raises(InsufficientData):
        gevrey_level_estimate(ScaledCoefficientTrack.from_log(np.arange(5.0)), q)


def test_gevrey_two_block_level_two():
    # a single slope gap of 2 gives q-Gevrey level 2
    one = np.ones((1, 1))
    A = QSystem.from_blocks(2.0, (0, 2), [one, one], {(0, 1): T.from_dict({0: one, 1: one})})
    est = gevrey_level_estimate(formal_gauge(A, 40).track(0, 1), 2.0)
    assert abs(est - 2) / 2 <= 0.15

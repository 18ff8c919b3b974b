"""Deliberately wrong inputs must be rejected by the identity checks that
report exact zeros on correct inputs."""
import numpy as np

from qstokes import alien_derivation, load_example
from qstokes.blocks import BlockStructure
from qstokes.checks import random_unipotent
from qstokes.galois import quotient_log_check, check_functoriality, torus_conjugation_check
from qstokes.series import TruncatedLaurentSeries
from qstokes.system import is_morphism, subsystem


def test_log_of_quotient_differs_above_lowest_level(rng):
    st = BlockStructure((0, 1, 2), (1, 1, 1))
    r = quotient_log_check(random_unipotent(st, rng), random_unipotent(st, rng), st)
    assert r["residual"] < 1e-14
    assert r["higher_residual"] > 1e-3


def test_torus_check_detects_wrong_level_weights(three_slope):
    A0 = three_slope.graded()
    D = alien_derivation(three_slope, 1.0).value
    assert max(torus_conjugation_check(2.0, D, A0).values()) < 1e-12
    # conjugating with weights that are not the slopes breaks the scaling rule
    tau_wrong = np.diag([1.0, 2.0, 8.0])
    C = np.linalg.solve(tau_wrong, D.value @ tau_wrong)
    assert abs(C[0, 2] - 4.0 * D.value[0, 2]) > 1e-3 * abs(D.value[0, 2])


def test_functoriality_detects_wrong_inclusion(three_slope):
    sub, Phi = subsystem(three_slope, 1)
    DA = alien_derivation(three_slope, 1.0).value
    DB = alien_derivation(sub, 1.0).value
    assert check_functoriality(DB, DA, Phi) < 1e-6
    wrong = np.asarray(Phi, dtype=complex).copy()
    wrong[np.nonzero(wrong)] *= np.array([1.0, 1.7])[: np.count_nonzero(wrong)]
    assert check_functoriality(DB, DA, wrong) > 1e-3


def test_random_gauge_is_not_a_morphism(estar, rng):
    F = TruncatedLaurentSeries.from_dict({0: rng.normal(size=(2, 2)), 1: rng.normal(size=(2, 2))})
    assert is_morphism(F, estar, estar).residual > 1e-2

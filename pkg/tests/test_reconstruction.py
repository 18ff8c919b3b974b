import numpy as np
import pytest

from qstokes import load_example
from qstokes.errors import GradedMismatch, SingularTransferMap, TargetOutsideRange, UnsupportedGaugeSearch
from qstokes.galois import NilpotentBlockMatrix, alien_derivation
from qstokes.reconstruction import (
    AlienTarget,
    LevelTruncation,
    alien_targets,
    level_equivalent,
    reconstruct_full,
    reconstruct_level,
    transfer_map,
    truncate_to_level,
)
from qstokes.system import irr_delta
from qstokes.errors import InvalidSystem


def test_truncate_to_level(three_slope):
    assert truncate_to_level(three_slope, 5).base.offdiag.keys() == three_slope.offdiag.keys()
    assert not truncate_to_level(three_slope, 0).base.offdiag
    assert set(truncate_to_level(three_slope, 1).base.offdiag) == {(0, 1), (1, 2)}
    with pytest.raises(InvalidSystem):
        LevelTruncation(three_slope, 1)


def test_level_equivalence(estar, three_slope):
    for d in (1, 2):
        assert level_equivalent(three_slope, three_slope, d)["equivalent"]
    B = three_slope.with_level_coefficients(2, [0.1, 0.0], add=True)
    assert level_equivalent(three_slope, B, 1)["equivalent"]
    assert not level_equivalent(three_slope, B, 2)["equivalent"]
    E2 = estar.with_level_coefficients(1, [2.0])
    assert not level_equivalent(estar, E2, 1)["equivalent"]
    # the alien invariants tell the two classes apart as well
    d1 = alien_derivation(estar, 1.0).value.value[0, 1]
    d2 = alien_derivation(E2, 1.0).value.value[0, 1]
    assert d2 == pytest.approx(2 * d1, rel=1e-12)
    with pytest.raises(UnsupportedGaugeSearch):
        level_equivalent(estar, estar, 1, gauge_search=True)
    with pytest.raises(GradedMismatch):
        level_equivalent(estar, estar.replace(diag=(np.ones((1, 1)), 1.5 * np.ones((1, 1)))), 1)


def test_transfer_map_square(three_slope):
    for d in (1, 2):
        T = transfer_map(truncate_to_level(three_slope, d - 1), d)
        assert T.size == (irr_delta(three_slope.graded(), d),) * 2
        assert T.condition < 1e6


def test_base_target_gives_zero_extension(three_slope):
    B = truncate_to_level(three_slope, 1)
    targets = alien_targets(B.base)
    out, rep = reconstruct_level(B, targets, delta=2)
    assert np.allclose(rep["coefficients"], 0, atol=1e-12)
    assert set(out.base.offdiag) == {(0, 1), (1, 2)}


def test_estar_round_trip(estar):
    R, reps = reconstruct_full(estar.graded(), alien_targets(estar))
    assert R.level_coefficients(1) == pytest.approx(estar.level_coefficients(1), rel=1e-10)
    assert reps[0]["transfer_shape"] == [1, 1]


def test_sequential_round_trip(three_slope):
    R, reps = reconstruct_full(three_slope.graded(), alien_targets(three_slope))
    assert [r["level"] for r in reps] == [1, 2]
    for d in (1, 2):
        assert np.allclose(R.level_coefficients(d), three_slope.level_coefficients(d), rtol=1e-8)
    assert max(r["residual"] for r in reps) < 1e-10


def test_pure_targets_give_graded(three_slope):
    A0 = three_slope.graded()
    zero = alien_targets(A0)
    R, _ = reconstruct_full(A0, zero)
    assert not R.offdiag


def test_target_outside_eigenspace_rejected():
    A = load_example("two_eigen")
    targets = alien_targets(A)
    (p, D) = targets.entries[(1, 0)]
    bad = NilpotentBlockMatrix(D.structure, D.value + np.array([[0, 0, 1.0], [0, 0, 1.0], [0, 0, 0]]))
    entries = dict(targets.entries)
    entries[(1, 0)] = (p, bad)
    with pytest.raises(TargetOutsideRange):
        reconstruct_full(A.graded(), AlienTarget(targets.q, entries))


def test_missing_targets_rejected(three_slope):
    targets = alien_targets(three_slope, levels=[1])
    with pytest.raises(TargetOutsideRange, match="level 2"):
        reconstruct_full(three_slope.graded(), targets)


def test_singular_transfer_map_reported(three_slope):
    with pytest.raises(SingularTransferMap):
        reconstruct_level(truncate_to_level(three_slope, 1), alien_targets(three_slope), delta=2, cond_limit=10.0)


def test_two_eigen_and_tensor_round_trip():
    for name in ("two_eigen", "estar_tensor"):
        A = load_example(name)
        R, _ = reconstruct_full(A.graded(), alien_targets(A))
        for d in A.structure.levels():
            assert np.allclose(R.level_coefficients(d), A.level_coefficients(d), rtol=1e-7, atol=1e-9)

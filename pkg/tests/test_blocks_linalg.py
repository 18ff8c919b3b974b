import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qstokes.blocks import BlockStructure
from qstokes.errors import InvalidSystem, NotNilpotent, NotUnipotent, ResonantSylvester
from qstokes.linalg import (
    dunford,
    eigen_clusters,
    exp_nilpotent,
    log_unipotent,
    null_space,
    spectral_decomposition,
    sylvester_solve,
    sylvester_solve_batch,
    unipotent_inverse,
)

ST = BlockStructure((0, 1, 3), (1, 2, 1))


def random_unipotent(st, rng):
    M = np.eye(st.n, dtype=complex)
    up = st.upper_mask()
    M[up] = rng.normal(size=up.sum()) + 1j * rng.normal(size=up.sum())
    return M


def test_structure_basics():
    assert ST.n == 4 and ST.k == 3
    assert ST.offsets == (0, 1, 3, 4)
    assert ST.levels() == [1, 2, 3]
    assert ST.pairs(2) == [(1, 2)]
    assert ST.level(0, 2) == 3


def test_structure_rejects_unsorted_slopes():
    with pytest.raises(InvalidSystem):
        BlockStructure((1, 0), (1, 1))


def test_level_masks_partition_upper_part():
    total = sum(ST.level_mask(d).astype(int) for d in ST.levels())
    assert np.array_equal(total.astype(bool), ST.upper_mask())


def test_sylvester_scalar_and_resonance():
    # lam * X * A_j - A_i X = V with scalars
    X = sylvester_solve(2.0, np.array([[3.0]]), np.array([[1.0]]), np.array([[5.0]]))
    assert X[0, 0] == pytest.approx(1.0)
    with pytest.raises(ResonantSylvester):
        sylvester_solve(1.0, np.array([[2.0]]), np.array([[2.0]]), np.array([[1.0]]))


def test_sylvester_matrix_residual(rng):
    Aj = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    Ai = rng.normal(size=(2, 2))
    V = rng.normal(size=(2, 3))
    lam = 1.7 - 0.4j
    X = sylvester_solve(lam, Aj, Ai, V)
    assert np.allclose(lam * X @ Aj - Ai @ X, V, atol=1e-12)
    Xs = sylvester_solve_batch(np.array([lam, 2 * lam]), Aj, Ai, np.stack([V, V]))
    assert np.allclose(Xs[0], X)
    assert np.allclose(2 * lam * Xs[1] @ Aj - Ai @ Xs[1], V, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_log_exp_round_trip(seed):
    rng = np.random.default_rng(seed)
    U = random_unipotent(ST, rng)
    N = log_unipotent(U, ST)
    assert ST.nilpotent_deviation(N) == 0.0
    assert np.allclose(exp_nilpotent(N, ST), U, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unipotent_inverse(seed):
    rng = np.random.default_rng(seed)
    U = random_unipotent(ST, rng)
    assert np.allclose(unipotent_inverse(U, ST) @ U, np.eye(ST.n), atol=1e-10)


def test_shape_violations_raise():
    with pytest.raises(NotUnipotent):
        log_unipotent(2 * np.eye(ST.n), ST)
    bad = np.zeros((ST.n, ST.n))
    bad[3, 0] = 1.0
    with pytest.raises(NotNilpotent):
        exp_nilpotent(bad, ST)


def test_null_space_and_clusters():
    M = np.array([[1.0, 2.0], [2.0, 4.0]])
    K = null_space(M)
    assert K.shape == (2, 1)
    assert np.allclose(M @ K, 0)
    cl = eigen_clusters(np.diag([1.0, 1.0 + 1e-9, 3.0]))
    assert [m for _, m in cl] == [2, 1]


def test_spectral_decomposition_jordan_block():
    M = np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 5.0]])
    sd = spectral_decomposition(M)
    assert sorted(sd.multiplicities) == [1, 2]
    P = sum(sd.projectors())
    assert np.allclose(P, np.eye(3))
    Ms, Mu = dunford(M)
    # multiplicative decomposition M = Ms Mu with Mu unipotent
    assert np.allclose(Ms @ Mu, M)
    assert np.allclose(Ms @ Mu, Mu @ Ms)
    assert np.allclose(np.linalg.matrix_power(Mu - np.eye(3), 3), 0)
    assert np.allclose(Mu, [[1, 0.5, 0], [0, 1, 0], [0, 0, 1]])

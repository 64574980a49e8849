import numpy as np
from hypothesis import given, settings, strategies as st

from gl2adlv import modp


def test_rref_identity_recovery():
    M = np.array([[1, 2], [1, 1]])
    R, pivots, T = modp.rref(M, 3)
    assert pivots == [0, 1]
    assert np.array_equal((T @ M) % 3, R)
    assert np.array_equal(R, np.eye(2, dtype=np.int64))


def test_nullspace_members_annihilate():
    M = np.array([[1, 1, 0], [0, 0, 1]])
    ns = modp.nullspace(M, 2)
    assert ns.shape == (1, 3)
    assert not ((ns @ M.T) % 2).any()


def test_affine_solver_batch():
    L = np.array([[1, 0], [0, 0]])
    s = modp.AffineSolver(L, 3)
    rhs = np.array([[2, 0], [2, 1], [0, 0]])
    mask, part = s.solve_batch(rhs)
    assert mask.tolist() == [True, False, True]
    assert not ((part[mask] @ L.T - rhs[mask]) % 3).any()
    assert s.kernel.shape == (1, 2)


def test_solve_square_and_inverse():
    M = np.array([[2, 1], [1, 1]])
    x = modp.solve_square(M, np.array([1, 0]), 3)
    assert ((M @ x) % 3).tolist() == [1, 0]
    Minv = modp.mat_inv(M, 3)
    assert np.array_equal((M @ Minv) % 3, np.eye(2, dtype=np.int64))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 3 ** 9 - 1), st.sampled_from([2, 3]))
def test_rref_consistency_random(seed, p):
    rng = np.random.default_rng(seed)
    M = rng.integers(0, p, size=(4, 5))
    R, pivots, T = modp.rref(M, p)
    assert np.array_equal((T @ M) % p, R)
    ns = modp.nullspace(M, p)
    assert len(pivots) + ns.shape[0] == 5
    if ns.shape[0]:
        assert not ((ns @ M.T) % p).any()

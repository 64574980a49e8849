"""Dense linear algebra over the prime field Z/p, numpy int64 throughout.

Matrices are (rows, cols) arrays of residues.  Everything here is exact;
p is small (2 or 3 in practice) so int64 products never overflow.
"""

import numpy as np


def rref(mat, p):
    """Row reduce mat over Z/p.

    Returns (R, pivots, trans) with R = trans @ mat in reduced row echelon
    form and pivots the list of pivot column indices.
    """
    R = np.array(mat, dtype=np.int64) % p
    rows, cols = R.shape
    T = np.eye(rows, dtype=np.int64)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(R[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            R[[r, i]] = R[[i, r]]
            T[[r, i]] = T[[i, r]]
        inv = pow(int(R[r, c]), p - 2, p)
        R[r] = (R[r] * inv) % p
        T[r] = (T[r] * inv) % p
        mask = np.nonzero(R[:, c])[0]
        mask = mask[mask != r]
        if mask.size:
            f = R[mask, c][:, None]
            R[mask] = (R[mask] - f * R[r][None, :]) % p
            T[mask] = (T[mask] - f * T[r][None, :]) % p
        pivots.append(c)
        r += 1
    return R, pivots, T


def nullspace(mat, p):
    """Basis of the right null space of mat over Z/p, as rows of a matrix."""
    R, pivots, _ = rref(mat, p)
    rows, cols = R.shape
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-R[r, fc]) % p
    return basis


class AffineSolver:
    """Solve L @ z = c over Z/p for many right-hand sides with one L.

    L is (m, n).  Precomputes the reduction; solve_batch takes rhs of shape
    (B, m) and returns (mask, particular) where mask flags consistent systems
    and particular is one solution per consistent row (zeros elsewhere).
    kernel is the common null space basis, shape (k, n).
    """

    def __init__(self, L, p):
        self.p = p
        L = np.asarray(L, dtype=np.int64) % p
        self.m, self.n = L.shape
        R, pivots, T = rref(L, p)
        self.R = R
        self.pivots = pivots
        self.T = T
        self.rank = len(pivots)
        self.kernel = nullspace(L, p)

    def solve_batch(self, rhs):
        p = self.p
        rhs = np.asarray(rhs, dtype=np.int64) % p
        if rhs.ndim == 1:
            rhs = rhs[None, :]
        red = (rhs @ self.T.T) % p
        if self.rank < self.m:
            mask = ~np.any(red[:, self.rank:], axis=1)
        else:
            mask = np.ones(rhs.shape[0], dtype=bool)
        part = np.zeros((rhs.shape[0], self.n), dtype=np.int64)
        for r, pc in enumerate(self.pivots):
            part[:, pc] = red[:, r]
        part[~mask] = 0
        return mask, part


def solve_square(mat, rhs, p):
    """One exact solve of mat @ x = rhs; raises if singular/inconsistent."""
    mat = np.asarray(mat, dtype=np.int64)
    rhs = np.asarray(rhs, dtype=np.int64)
    solver = AffineSolver(mat, p)
    mask, part = solver.solve_batch(rhs[None, :])
    if not mask[0]:
        raise ArithmeticError("inconsistent linear system over Z/p")
    if solver.kernel.shape[0]:
        raise ArithmeticError("singular linear system over Z/p")
    return part[0]


def mat_inv(mat, p):
    mat = np.asarray(mat, dtype=np.int64) % p
    n = mat.shape[0]
    R, pivots, T = rref(mat, p)
    if len(pivots) != n:
        raise ArithmeticError("matrix not invertible over Z/p")
    return T % p

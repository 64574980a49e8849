"""Characters of the truncated unit groups and the predicates that sort them.

The dual of a finite abelian group is enumerated exactly by chain extension:
grow a subgroup one generator at a time and extend each character in all
solvable ways.  Exponents are stored as integer arrays mod the group
exponent N, so a character value is the N-th root of unity with that
exponent; no floats anywhere.
"""

import numpy as np

from . import trunc
from .cyclo import CycloNum


def _lcm(a, b):
    g, x = a, b
    while x:
        g, x = x, g % x
    return a // g * b


class AbelianDual:
    """All characters of a finite abelian group given by a multiplication
    table on ids 0..n-1.

    exps has one row per character; chi_k(g_i) = zeta_N ** exps[k, i].
    Rows are sorted lexicographically so the indexing is reproducible.
    """

    def __init__(self, table, identity=0):
        table = np.asarray(table, dtype=np.int64)
        n = table.shape[0]
        self.n = n
        self.identity = identity

        orders = np.zeros(n, dtype=np.int64)
        cur = np.arange(n)
        ids = np.arange(n)
        k = 0
        while (orders == 0).any():
            k += 1
            hit = (cur == identity) & (orders == 0)
            orders[hit] = k
            cur = table[cur, ids]
            if k > n:
                raise ArithmeticError("not a group table")
        N = 1
        for o in set(orders.tolist()):
            N = _lcm(N, int(o))
        self.N = N
        self.orders = orders

        covered = np.zeros(n, dtype=bool)
        covered[identity] = True
        H = [identity]
        exps = np.zeros((1, n), dtype=np.int64)
        while len(H) < n:
            h = int(np.argmin(covered))
            hp = [identity]
            curp = h
            s = 1
            while not covered[curp]:
                hp.append(curp)
                curp = int(table[curp, h])
                s += 1
            # curp = h^s is the first power landing in the old subgroup
            e_hs = exps[:, curp]
            if (e_hs % s).any():
                raise ArithmeticError("extension inconsistency")
            y0 = e_hs // s
            Y = (y0[:, None] + np.arange(s)[None, :] * (N // s)) % N
            C = exps.shape[0]
            Hids = np.array(H, dtype=np.int64)
            new_exps = np.zeros((C, s, n), dtype=np.int64)
            for j in range(s):
                cols = table[hp[j], Hids]
                new_exps[:, :, cols] = (exps[:, None, Hids]
                                        + j * Y[:, :, None]) % N
                if j:
                    covered[cols] = True
                    H.extend(int(c) for c in cols)
            exps = new_exps.reshape(C * s, n)
        if exps.shape[0] != n:
            raise ArithmeticError("dual size mismatch")
        order = np.lexsort(np.flipud(exps.T))
        self.exps = exps[order]
        if len(np.unique(self.exps, axis=0)) != n:
            raise ArithmeticError("dual characters collide")


def additive_exponents(lvl, codes, seed=1):
    """Exponent of zeta_p for the additive character x -> psi(seed * x) of
    the degree-1 level; the trace to the prime field is taken when q = p^e
    with e > 1."""
    codes = np.asarray(codes, dtype=np.int64)
    x = lvl.mul(codes, np.int64(seed))
    tr = x
    cur = x
    for _ in range(lvl.n - 1):
        cur = lvl.codes_of_digits((lvl.digits_of_codes(cur) @ lvl.frob_p_mat)
                                  % lvl.p)
        tr = lvl.add(tr, cur)
    if np.any(tr >= lvl.p):
        raise ArithmeticError("trace left the prime field")
    return tr


class TorusDual:
    """The dual of the truncated quadratic unit group, with the torus
    specific structure: sigma action, filtration masks, norm-one rows,
    and the class map to the residue quotient of order q+1."""

    def __init__(self, torus):
        self.torus = torus
        T = torus
        n = len(T.tau_codes)
        prod = T.torus_mul(T.tau_codes[:, None, :], T.tau_codes[None, :, :])
        table = T.tau_row(prod)
        one = np.zeros(T.m + 1, dtype=np.int64)
        one[0] = 1
        self.identity_row = int(T.tau_row(one[None, :])[0])
        self.dual = AbelianDual(table, self.identity_row)
        self.N = self.dual.N
        self.n = n
        self.table = table
        lvl2 = T.lvl2
        self.sigma_perm = T.tau_row(trunc.tsigma(lvl2, T.tau_codes))
        self.inv_perm = T.tau_row(T.torus_inv(T.tau_codes))
        # class of the leading coefficient in k2* / k*
        logs = lvl2.tables["log"][T.tau_codes[:, 0]]
        self.mu_class = logs % (T.q + 1)
        self.scalar_rows = T.scalar_rows()

    def unit_rows(self, i):
        """Rows with tau = 1 mod t^i (i >= 1); i = 0 gives every row."""
        if i == 0:
            return np.arange(self.n)
        T = self.torus
        one = np.zeros(T.m + 1, dtype=np.int64)
        one[0] = 1
        diff = T.lvl2.sub(T.tau_codes, one[None, :])
        return np.nonzero(trunc.tval(diff) >= i)[0]

    def norm_one_rows(self):
        return np.nonzero(self.torus.norm_one_mask)[0]

    def char(self, idx, t_val=None):
        return TorusChar(self, self.dual.exps[idx].copy(),
                         t_val if t_val is not None else CycloNum.rational(1))

    def all_chars(self, t_val=None):
        return [self.char(i, t_val) for i in range(self.n)]


class TorusChar:
    """A character of the quadratic torus units extended to the full
    multiplicative group of the local field by a chosen uniformizer value."""

    __slots__ = ("dual", "exps", "t_val")

    def __init__(self, dual, exps, t_val):
        self.dual = dual
        self.exps = np.asarray(exps, dtype=np.int64) % dual.N
        self.t_val = t_val

    # -- values ------------------------------------------------------------------

    def exp_at(self, rows):
        return self.exps[np.asarray(rows, dtype=np.int64)]

    def value_row(self, row):
        return CycloNum.root(self.dual.N, int(self.exps[row]))

    def value(self, tau, t_pow=0):
        """Value at t^t_pow * tau for a torus series tau."""
        row = int(self.dual.torus.tau_row(np.asarray(tau)[None, :])[0])
        if row < 0:
            raise ValueError("not a unit series")
        v = self.value_row(row)
        if t_pow:
            tv = self.t_val
            out = v
            for _ in range(abs(t_pow)):
                out = out * tv if t_pow > 0 else out * tv.conj()
            return out
        return v

    # -- algebra -------------------------------------------------------------------

    def sigma(self):
        return TorusChar(self.dual, self.exps[self.dual.sigma_perm], self.t_val)

    def inverse(self):
        return TorusChar(self.dual, (-self.exps) % self.dual.N,
                         self.t_val.conj())

    def mul(self, other):
        if other.dual is not self.dual:
            raise ValueError("characters of different groups")
        return TorusChar(self.dual, (self.exps + other.exps) % self.dual.N,
                         self.t_val * other.t_val)

    def __eq__(self, other):
        return (isinstance(other, TorusChar) and other.dual is self.dual
                and np.array_equal(other.exps, self.exps)
                and other.t_val == self.t_val)

    def agrees_on(self, other, rows):
        return np.array_equal(self.exps[rows], other.exps[rows])

    def trivial_on(self, rows):
        return not self.exps[rows].any()

    # -- invariants ------------------------------------------------------------------

    def level(self):
        """Largest i in 1..m with a nontrivial value on units = 1 mod t^i;
        0 for characters trivial on the 1-units."""
        for i in range(self.dual.torus.m, 0, -1):
            if not self.trivial_on(self.dual.unit_rows(i)):
                return i
        return 0

    def is_admissible(self):
        return not np.array_equal(self.exps, self.exps[self.dual.sigma_perm])

    def is_minimal(self):
        """sigma-twist differs already on the deepest unit layer."""
        m = self.dual.torus.m
        rows = self.dual.unit_rows(m)
        return not self.agrees_on(self.sigma(), rows)

    def is_generic(self):
        """Nontrivial on norm-one elements of the deepest unit layer."""
        m = self.dual.torus.m
        rows = np.intersect1d(self.dual.unit_rows(m), self.norm_one_rows())
        return not self.trivial_on(rows)

    def norm_one_rows(self):
        return self.dual.norm_one_rows()

    def agreement_level(self, chi):
        """Least i with self = chi or chi^sigma on units = 1 mod t^i;
        m+1 when even the trivial layer fails (it never does: t^(m+1) = 0)."""
        chis = chi.sigma()
        for i in range(self.dual.torus.m + 2):
            rows = self.dual.unit_rows(i)
            if self.agrees_on(chi, rows) or self.agrees_on(chis, rows):
                return i
        raise AssertionError("unreachable: agreement at the trivial layer")

    def central_match(self, chi):
        """Same restriction to the central rows (the scalar series)."""
        return self.agrees_on(chi, self.dual.scalar_rows)

    def residue_twists(self):
        """The q+1 characters equal to this one on the base-field units and
        the 1-units, differing by a character of the order q+1 residue
        quotient.  Includes self."""
        N = self.dual.N
        q = self.dual.torus.q
        if N % (q + 1):
            raise ArithmeticError("exponent not divisible by q+1")
        out = []
        for j in range(q + 1):
            e = (self.exps + j * (N // (q + 1)) * self.dual.mu_class) % N
            out.append(TorusChar(self.dual, e, self.t_val))
        return out

"""The truncated groups GL_2(k[t]/t^(m+1)), their standard subgroups, and
the nonsplit torus sitting inside by conjugation.

Element layout: an element is an int64 array of shape (..., 4, m+1); axis -2
runs over the entries (a, b, c, d) of [[a, b], [c, d]], axis -1 over t-adic
coefficients (codes in the coefficient field, lowest degree first).  All
group operations broadcast over leading axes.
"""

import numpy as np

from . import trunc


def all_series(lvl, prec):
    """Every series in lvl[t]/t^prec, as a (Q^prec, prec) code array."""
    Q = lvl.Q
    count = Q ** prec
    idx = np.arange(count, dtype=np.int64)
    out = np.empty((count, prec), dtype=np.int64)
    for i in range(prec):
        out[:, i] = idx % Q
        idx //= Q
    return out


def all_unit_series(lvl, prec):
    s = all_series(lvl, prec)
    return s[s[:, 0] != 0]


class KmGroup:
    """GL_2 over k[t]/t^(m+1), k the degree-1 tower level (size q)."""

    def __init__(self, tower, m):
        self.tower = tower
        self.m = m
        self.prec = m + 1
        self.lvl = tower.level(1)
        self.q = self.lvl.Q
        self._all = None
        self._all_sorted = None

    def order(self):
        q = self.q
        return (q * q - 1) * (q * q - q) * q ** (4 * self.m)

    def identity(self):
        g = np.zeros((4, self.prec), dtype=np.int64)
        g[0, 0] = 1
        g[3, 0] = 1
        return g

    # -- arithmetic -------------------------------------------------------------

    def mul(self, X, Y):
        X = np.asarray(X, dtype=np.int64)
        Y = np.asarray(Y, dtype=np.int64)
        lvl = self.lvl
        a1, b1, c1, d1 = (X[..., i, :] for i in range(4))
        a2, b2, c2, d2 = (Y[..., i, :] for i in range(4))
        m = lambda u, v: trunc.tmul(lvl, u, v)
        out = np.empty(np.broadcast_shapes(X.shape, Y.shape), dtype=np.int64)
        out[..., 0, :] = lvl.add(m(a1, a2), m(b1, c2))
        out[..., 1, :] = lvl.add(m(a1, b2), m(b1, d2))
        out[..., 2, :] = lvl.add(m(c1, a2), m(d1, c2))
        out[..., 3, :] = lvl.add(m(c1, b2), m(d1, d2))
        return out

    def det(self, X):
        X = np.asarray(X, dtype=np.int64)
        lvl = self.lvl
        return lvl.sub(trunc.tmul(lvl, X[..., 0, :], X[..., 3, :]),
                       trunc.tmul(lvl, X[..., 1, :], X[..., 2, :]))

    def inv(self, X):
        X = np.asarray(X, dtype=np.int64)
        lvl = self.lvl
        dinv = trunc.tinv(lvl, self.det(X))
        out = np.empty_like(X)
        out[..., 0, :] = trunc.tmul(lvl, dinv, X[..., 3, :])
        out[..., 1, :] = lvl.neg(trunc.tmul(lvl, dinv, X[..., 1, :]))
        out[..., 2, :] = lvl.neg(trunc.tmul(lvl, dinv, X[..., 2, :]))
        out[..., 3, :] = trunc.tmul(lvl, dinv, X[..., 0, :])
        return out

    def conj(self, g, X):
        """g X g^-1, broadcasting."""
        return self.mul(self.mul(g, X), self.inv(g))

    def power(self, X, k):
        X = np.asarray(X, dtype=np.int64)
        if k < 0:
            X = self.inv(X)
            k = -k
        out = np.broadcast_to(self.identity(), X.shape).copy()
        cur = X
        while k:
            if k & 1:
                out = self.mul(out, cur)
            cur = self.mul(cur, cur)
            k >>= 1
        return out

    def trace(self, X):
        X = np.asarray(X, dtype=np.int64)
        return self.lvl.add(X[..., 0, :], X[..., 3, :])

    # -- encoding ----------------------------------------------------------------

    def encode(self, X):
        """Pack an element into a single int64: base-q digits, entry-major."""
        X = np.asarray(X, dtype=np.int64)
        flat = X.reshape(X.shape[:-2] + (4 * self.prec,))
        pw = self.q ** np.arange(4 * self.prec, dtype=np.int64)
        return flat @ pw

    def decode(self, codes):
        codes = np.asarray(codes, dtype=np.int64)
        out = np.empty(codes.shape + (4 * self.prec,), dtype=np.int64)
        v = codes.copy()
        for i in range(4 * self.prec):
            out[..., i] = v % self.q
            v //= self.q
        return out.reshape(codes.shape + (4, self.prec))

    # -- enumeration ---------------------------------------------------------------

    def enumerate_all(self):
        if self._all is None:
            total = self.q ** (4 * self.prec)
            cand = self.decode(np.arange(total, dtype=np.int64))
            d0 = self.det(cand)[:, 0]
            self._all = cand[d0 != 0]
        return self._all

    def all_encoded_sorted(self):
        if self._all_sorted is None:
            self._all_sorted = np.sort(self.encode(self.enumerate_all()))
        return self._all_sorted

    def index_of(self, X):
        """Position of each element in the sorted encoding of the full group."""
        enc = self.encode(X)
        srt = self.all_encoded_sorted()
        pos = np.searchsorted(srt, enc)
        if np.any(pos >= len(srt)) or np.any(srt[pos] != enc):
            raise KeyError("element not in group enumeration")
        return pos

    def unipotent_upper(self, bcoeffs):
        b = np.asarray(bcoeffs, dtype=np.int64)
        out = np.zeros(b.shape[:-1] + (4, self.prec), dtype=np.int64)
        out[..., 0, 0] = 1
        out[..., 3, 0] = 1
        out[..., 1, :] = b
        return out

    def enumerate_unipotent(self):
        return self.unipotent_upper(all_series(self.lvl, self.prec))

    def scalar(self, zcoeffs):
        z = np.asarray(zcoeffs, dtype=np.int64)
        out = np.zeros(z.shape[:-1] + (4, self.prec), dtype=np.int64)
        out[..., 0, :] = z
        out[..., 3, :] = z
        return out

    def enumerate_scalars(self):
        return self.scalar(all_unit_series(self.lvl, self.prec))

    # -- structure ---------------------------------------------------------------

    def in_congruence(self, X, i):
        """Mask: X = 1 mod t^i (i=0 accepts everything)."""
        X = np.asarray(X, dtype=np.int64)
        if i == 0:
            return np.ones(X.shape[:-2], dtype=bool)
        delta = X.copy()
        delta[..., 0, 0] = self.lvl.sub(delta[..., 0, 0], 1)
        delta[..., 3, 0] = self.lvl.sub(delta[..., 3, 0], 1)
        return ~np.any(delta[..., :, :i], axis=(-2, -1))

    def central_level(self, X):
        """Largest i with X in scalars * (1 + t^i M); central elements get
        m+1.  Diagonal agreement and off-diagonal vanishing mod t^i."""
        X = np.asarray(X, dtype=np.int64)
        offv = np.minimum(trunc.tval(X[..., 1, :]), trunc.tval(X[..., 2, :]))
        diag = self.lvl.sub(X[..., 0, :], X[..., 3, :])
        diagv = trunc.tval(diag)
        return np.minimum(np.minimum(offv, diagv), self.m + 1)

    def element_level(self, X):
        """Largest i with X = 1 mod t^i; the identity gets m+1."""
        X = np.asarray(X, dtype=np.int64)
        delta = X.copy()
        delta[..., 0, 0] = self.lvl.sub(delta[..., 0, 0], 1)
        delta[..., 3, 0] = self.lvl.sub(delta[..., 3, 0], 1)
        ev = np.minimum(np.minimum(trunc.tval(delta[..., 0, :]),
                                   trunc.tval(delta[..., 1, :])),
                        np.minimum(trunc.tval(delta[..., 2, :]),
                                   trunc.tval(delta[..., 3, :])))
        return np.minimum(ev, self.m + 1)

    def is_maximal(self, X):
        """Congruence depth equals depth mod center.

        Raises on the identity, where the notion degenerates.
        """
        X = np.asarray(X, dtype=np.int64)
        el = self.element_level(X)
        if np.any(el >= self.m + 1):
            raise ValueError("maximality is undefined for the identity")
        return el == self.central_level(X)

    def pgl_order(self, g, cap=20000):
        """Order of g modulo scalars."""
        cur = np.array(g, dtype=np.int64)
        for k in range(1, cap + 1):
            if self.central_level(cur) >= self.m + 1:
                return k
            cur = self.mul(cur, g)
        raise ArithmeticError("order cap exceeded")

    def moebius_act(self, X, lvl, a, C, A):
        """Fractional-linear action on point triples (a, C, A).

        a -> (x1 a + x2)/(x3 a + x4), C -> det(X) C/(x3 a + x4), A fixed.
        X has level-1 entries; a, C, A carry codes of the bigger coefficient
        field lvl.  Entries of X are zero-padded to the precision of a and
        pushed into lvl through the tower.  Raises when x3 a + x4 is not a
        unit.
        """
        a = np.asarray(a, dtype=np.int64)
        C = np.asarray(C, dtype=np.int64)
        na = a.shape[-1]
        emb = self.tower.embed(1, lvl.d)
        ent = np.zeros((4, na), dtype=np.int64)
        ent[:, : self.prec] = emb.codes(np.asarray(X, dtype=np.int64))
        num = lvl.add(trunc.tmul(lvl, ent[0], a), ent[1])
        den = lvl.add(trunc.tmul(lvl, ent[2], a), ent[3])
        if np.any(den[..., 0] == 0):
            raise ArithmeticError("non-unit denominator in the action")
        a_new = trunc.tmul(lvl, num, trunc.tinv(lvl, den))
        det1 = self.det(np.asarray(X, dtype=np.int64))
        det2 = emb.codes(det1)
        nc = C.shape[-1]
        scale = trunc.tinv(lvl, den[..., :nc])
        C_new = trunc.tmul(lvl, trunc.tmul(lvl, C, scale), det2)
        return a_new, C_new, np.asarray(A, dtype=np.int64)

    def left_coset_reps(self, sub_mats):
        """Greedy left-coset representatives of a subgroup, smallest encoded
        element first."""
        srt = self.all_encoded_sorted()
        seen = np.zeros(len(srt), dtype=bool)
        reps = []
        while not seen.all():
            i = int(np.argmin(seen))
            rep = self.decode(np.array([srt[i]]))[0]
            coset = self.mul(rep[None, :, :], sub_mats)
            pos = np.searchsorted(srt, np.sort(self.encode(coset)))
            seen[pos] = True
            reps.append(rep)
        return np.array(reps, dtype=np.int64)

    def conjugacy_classes(self):
        """Partition of the full group into conjugacy classes by orbit BFS.

        Returns a list of (representative, member_positions) with positions
        indexing all_encoded_sorted().
        """
        srt = self.all_encoded_sorted()
        gens = self._conj_generators()
        gens_inv = self.inv(gens)
        n = len(srt)
        assigned = np.zeros(n, dtype=bool)
        classes = []
        while not assigned.all():
            start = int(np.argmin(assigned))
            frontier = np.array([start], dtype=np.int64)
            members = {start}
            assigned[start] = True
            while frontier.size:
                mats = self.decode(srt[frontier])
                new = []
                for gi in range(len(gens)):
                    out = self.mul(self.mul(gens[gi][None], mats),
                                   gens_inv[gi][None])
                    pos = np.searchsorted(srt, self.encode(out))
                    fresh = pos[~assigned[pos]]
                    if fresh.size:
                        fresh = np.unique(fresh)
                        assigned[fresh] = True
                        members.update(fresh.tolist())
                        new.append(fresh)
                frontier = np.concatenate(new) if new else np.empty(0, np.int64)
            idx = np.array(sorted(members), dtype=np.int64)
            classes.append((self.decode(np.array([srt[idx[0]]]))[0], idx))
        return classes

    def _conj_generators(self):
        lvl = self.lvl
        gens = []
        for i in range(self.prec):
            b = np.zeros(self.prec, dtype=np.int64)
            b[i] = 1
            u = self.unipotent_upper(b)
            gens.append(u)
            low = self.identity()
            low[2, i] = 1
            gens.append(low)
        # diagonal generators: a unit generating k* and 1 + t^i
        if self.q > 2:
            gamma = int(lvl.tables["gen"])
            d = self.identity()
            d[0, 0] = gamma
            gens.append(d)
        for i in range(1, self.prec):
            d = self.identity()
            d[0, i] = 1
            gens.append(d)
        return np.array(gens, dtype=np.int64)


class TorusData:
    """The nonsplit maximal torus of a KmGroup and its ambient bookkeeping.

    tau_codes: all units of k2[t]/t^(m+1), shape (B, m+1), level-2 codes.
    mats: the corresponding matrices in the truncated GL_2 (level-1 entries).
    The torus element diag(tau, sigma tau) is conjugated into rational form
    by a fixed eigenvector matrix attached to a chosen nonsplit quadratic
    generator beta.
    """

    def __init__(self, group):
        self.group = group
        tower = group.tower
        self.lvl2 = tower.level(2)
        self.emb = tower.embed(1, 2)
        q = group.q
        m = group.m
        self.q, self.m = q, m

        self.D, self.beta, s2 = self._pick_beta()
        self.s = s2
        self.tau_codes = all_unit_series(self.lvl2, m + 1)
        self.mats = self._conjugate_in(self.tau_codes)
        self.enc = group.encode(self.mats)
        order = np.argsort(self.enc)
        # keep tau rows aligned with sorted encodings for lookups
        self._enc_sorted = self.enc[order]
        self._row_of_sorted = order
        norm = trunc.norm_sigma(self.lvl2, self.tau_codes)
        one = np.zeros(m + 1, dtype=np.int64)
        one[0] = 1
        self.norm_one_mask = np.all(norm == one, axis=-1)
        self._tau_lookup = self._build_tau_lookup()

    # -- construction -----------------------------------------------------------

    def _pick_beta(self):
        group = self.group
        lvl1, lvl2 = group.lvl, self.lvl2
        q = self.q
        if q % 2 == 1:
            # least nonsquare D; beta = [[0,1],[D,0]], eigenvalues +-sqrt(D)
            sq = set((lvl1.mul(np.arange(1, q), np.arange(1, q))).tolist())
            D = min(set(range(1, q)) - sq)
            D2 = int(self.emb.codes(np.array([D]))[0])
            lam = None
            for c in range(1, lvl2.Q):
                if int(lvl2.mul(np.array([c]), np.array([c]))[0]) == D2:
                    lam = c
                    break
            beta = np.array([[0, 1], [D, 0]], dtype=np.int64)
            s = np.array([[1, 1], [lam, int(lvl2.frob(np.array([lam]))[0])]],
                         dtype=np.int64)
        else:
            # least D with T^2 + T + D irreducible; beta = [[0,D],[1,1]]
            D = None
            lam = None
            for cand in range(1, q):
                c2 = int(self.emb.codes(np.array([cand]))[0])
                for x in range(lvl2.Q):
                    x2 = int(lvl2.mul(np.array([x]), np.array([x]))[0])
                    if int(lvl2.add(np.array([x2]),
                                    np.array([x]))[0]) == c2 and \
                       x not in self.emb.codes(np.arange(q)).tolist():
                        D, lam = cand, x
                        break
                if D is not None:
                    break
            beta = np.array([[0, D], [1, 1]], dtype=np.int64)
            D2 = int(self.emb.codes(np.array([D]))[0])
            s = np.array([[D2, D2], [lam, int(lvl2.frob(np.array([lam]))[0])]],
                         dtype=np.int64)
        return D, beta, s

    def _conjugate_in(self, taus):
        """c_s(diag(tau, sigma tau)) for a batch of torus series."""
        lvl2 = self.lvl2
        m = self.m
        B = taus.shape[0]
        s = self.s
        # constant series for s and s^-1 over level 2
        det = int(lvl2.sub(lvl2.mul(np.array([s[0, 0]]), np.array([s[1, 1]])),
                           lvl2.mul(np.array([s[0, 1]]), np.array([s[1, 0]])))[0])
        dinv = int(lvl2.inv(np.array([det]))[0])
        si = np.array([[s[1, 1], int(lvl2.neg(np.array([s[0, 1]]))[0])],
                       [int(lvl2.neg(np.array([s[1, 0]]))[0]), s[0, 0]]],
                      dtype=np.int64)
        si_flat = lvl2.mul(si.reshape(-1), dinv).reshape(2, 2)
        st = trunc.tsigma(lvl2, taus)
        # entries of s * diag(tau, st) * si
        out2 = np.empty((B, 4, m + 1), dtype=np.int64)
        for r in range(2):
            for c in range(2):
                term1 = lvl2.mul(int(s[r, 0]),
                                 lvl2.mul(taus, int(si_flat[0, c])))
                term2 = lvl2.mul(int(s[r, 1]),
                                 lvl2.mul(st, int(si_flat[1, c])))
                out2[:, 2 * r + c, :] = lvl2.add(term1, term2)
        # entries must be sigma-fixed, then project to level 1
        flat = out2.reshape(-1)
        if not np.array_equal(self.lvl2.frob(flat), flat):
            raise ArithmeticError("torus conjugation left the base field")
        return self.emb.codes_preimage(flat).reshape(B, 4, m + 1)

    # -- lookups -----------------------------------------------------------------

    def _tau_key(self, taus):
        pw = self.lvl2.Q ** np.arange(self.m + 1, dtype=np.int64)
        return np.asarray(taus, dtype=np.int64) @ pw

    def _build_tau_lookup(self):
        size = self.lvl2.Q ** (self.m + 1)
        look = np.full(size, -1, dtype=np.int64)
        look[self._tau_key(self.tau_codes)] = np.arange(len(self.tau_codes))
        return look

    def tau_row(self, taus):
        """Row indices of given torus series in tau_codes; -1 if not a unit."""
        return self._tau_lookup[self._tau_key(taus)]

    def torus_mul(self, t1, t2):
        return trunc.tmul(self.lvl2, t1, t2)

    def torus_inv(self, t1):
        return trunc.tinv(self.lvl2, t1)

    def scalar_rows(self):
        """Rows of tau_codes lying in the level-1 coefficient subring: these
        are exactly the central elements of the torus image."""
        mask = trunc.subfield_mask(self.group.tower, 1, 2,
                                   self.tau_codes).all(axis=-1)
        return np.nonzero(mask)[0]

    def embed_scalar_series(self, z):
        """Level-1 unit series -> torus series (same element, bigger field)."""
        return self.emb.codes(np.asarray(z, dtype=np.int64))

    def tau_level(self, taus=None):
        """Per-row level: max i with tau = (level-1 unit series) * (1 + O(t^i));
        central rows get m+1."""
        taus = self.tau_codes if taus is None else np.asarray(taus, np.int64)
        lvl2 = self.lvl2
        B = len(taus)
        out = np.zeros(B, dtype=np.int64)
        units1 = all_unit_series(self.group.lvl, self.m + 1)
        cents = self.emb.codes(units1)
        for i in range(1, self.m + 2):
            hit = np.zeros(B, dtype=bool)
            for crow in cents:
                diff = lvl2.sub(taus, crow[None, :])
                hit |= trunc.tval(diff) >= i
            out[hit & (out == i - 1)] = i
        return out

    def char_poly_map(self, x, ell, taus):
        """Evaluate det(tau - x~)/t^(2 ell) for torus series tau = 1 mod t^ell.

        x is a single level-1 matrix congruent to 1 mod t^ell; taus is a
        (B, m+1) batch of level-2 unit series.  Both are lifted to precision
        m + ell + 1 by zero padding (the result does not depend on the lift),
        the determinant is formed over the quadratic extension, the forced
        t^(2 ell) is stripped, and the value is returned at precision
        m - ell + 1.
        """
        group = self.group
        m = self.m
        lvl2 = self.lvl2
        taus = np.atleast_2d(np.asarray(taus, dtype=np.int64))
        x = np.asarray(x, dtype=np.int64)
        if int(group.element_level(x)) < ell:
            raise ValueError("matrix is not 1 mod t^ell")
        one = np.zeros(m + 1, dtype=np.int64)
        one[0] = 1
        if np.any(trunc.tval(lvl2.sub(taus, one[None, :])) < ell):
            raise ValueError("series outside the depth-ell torus subgroup")
        P = m + ell + 1
        xw = np.zeros((4, P), dtype=np.int64)
        xw[:, : m + 1] = self.emb.codes(x)
        tw = np.zeros((taus.shape[0], P), dtype=np.int64)
        tw[:, : m + 1] = taus
        d1 = trunc.tmul(lvl2, lvl2.sub(tw, xw[0][None, :]),
                        lvl2.sub(tw, xw[3][None, :]))
        d2 = trunc.tmul(lvl2, xw[1], xw[2])
        det = lvl2.sub(d1, d2[None, :])
        if ell and np.any(det[:, : 2 * ell]):
            raise ArithmeticError("determinant not divisible by t^(2 ell)")
        return det[:, 2 * ell: 2 * ell + (m - ell + 1)]

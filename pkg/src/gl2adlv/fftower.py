"""Compatible towers of finite fields F_{q^d} with deterministic construction.

A tower fixes q = p^e and a set of extension degrees d over F_q.  Every level
is realized as F_p[y]/(f) where f is the lexicographically least monic
irreducible of the right degree (least when coefficient vectors are packed
into an integer, constant term in the lowest position).  Embeddings between
comparable levels are derived from a single root choice per level inside the
ambient level of degree lcm(degrees), which forces the triangle
embed(d1,d3) = embed(d2,d3) o embed(d1,d2) to commute on the nose.

Element encodings: an element of a level of absolute degree n over F_p is a
vector of n coefficients in {0..p-1} (the digit form) or the packed integer
sum(digit_i * p^i) (the code form).  Small levels carry exp/log tables and do
vectorized code arithmetic; arbitrary levels support vectorized digit
arithmetic driven by the reduction matrix of f.
"""

import functools
import random

import numpy as np

from . import modp

TABLE_MAX = 1 << 16
SCAN_MAX = 1 << 22


# ---------------------------------------------------------------------------
# dense F_p[x] helpers on plain int lists, low degree first


def _pm_trim(a):
    i = len(a) - 1
    while i > 0 and a[i] == 0:
        i -= 1
    return a[: i + 1]


def _pm_mul(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _pm_trim(out)


def _pm_rem(a, f, p):
    a = list(a)
    df = len(f) - 1
    inv = pow(f[-1], p - 2, p)
    for i in range(len(a) - 1, df - 1, -1):
        c = a[i] % p
        if c:
            c = (c * inv) % p
            for j in range(df + 1):
                a[i - df + j] = (a[i - df + j] - c * f[j]) % p
    return _pm_trim(a[:df] or [0])

def _pm_gcd(a, b, p):
    a, b = _pm_trim(list(a)), _pm_trim(list(b))
    while b != [0]:
        a, b = b, _pm_rem(a, b, p)
    if a != [0]:
        inv = pow(a[-1], p - 2, p)
        a = [(c * inv) % p for c in a]
    return a


def _pm_powmod(base, exp, f, p):
    res = [1]
    base = _pm_rem(base, f, p)
    while exp:
        if exp & 1:
            res = _pm_rem(_pm_mul(res, base, p), f, p)
        base = _pm_rem(_pm_mul(base, base, p), f, p)
        exp >>= 1
    return res


def _is_irreducible(f, p):
    n = len(f) - 1
    x = [0, 1]
    xq = _pm_powmod(x, p ** n, f, p)
    if _pm_trim([(a - b) % p for a, b in
                 zip(xq + [0] * len(x), x + [0] * len(xq))]) != [0]:
        return False
    m = n
    for ell in range(2, n + 1):
        if ell * ell > n:
            break
        if m % ell == 0:
            while m % ell == 0:
                m //= ell
            xe = _pm_powmod(x, p ** (n // ell), f, p)
            d = _pm_gcd([(a - b) % p for a, b in
                         zip(xe + [0, 0], x + [0] * len(xe))], f, p)
            if len(d) > 1:
                return False
    if m > 1:
        xe = _pm_powmod(x, p ** (n // m), f, p)
        d = _pm_gcd([(a - b) % p for a, b in
                     zip(xe + [0, 0], x + [0] * len(xe))], f, p)
        if len(d) > 1:
            return False
    return True


@functools.lru_cache(maxsize=None)
def least_irreducible(p, n):
    """Lexicographically least monic irreducible of degree n over F_p.

    Candidates are ordered by the packed integer of their lower coefficients;
    the constant term is forced nonzero.
    """
    if n == 1:
        return (1, 1)  # y + 1, root -1
    for packed in range(1, p ** n):
        coeffs = []
        v = packed
        for _ in range(n):
            coeffs.append(v % p)
            v //= p
        if coeffs[0] == 0:
            continue
        f = coeffs + [1]
        if _is_irreducible(f, p):
            return tuple(f)
    raise ArithmeticError("no irreducible found")  # pragma: no cover


def factorize(n):
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


# ---------------------------------------------------------------------------


class FieldLevel:
    """One field F_{q^d} = F_p[y]/(f), q = p^e, absolute degree n = e*d."""

    def __init__(self, tower, d):
        self.tower = tower
        self.p = tower.p
        self.e = tower.e
        self.d = d
        self.n = tower.e * d
        self.Q = self.p ** self.n
        if self.Q >= (1 << 62):
            raise OverflowError("field too large for int64 codes")
        self.poly = least_irreducible(self.p, self.n)
        self._tables = None
        self._red = None
        self._frob = None

    # -- digit/code conversion ------------------------------------------------

    def digits_of_codes(self, codes):
        codes = np.asarray(codes, dtype=np.int64)
        out = np.empty(codes.shape + (self.n,), dtype=np.int64)
        v = codes.copy()
        for i in range(self.n):
            out[..., i] = v % self.p
            v //= self.p
        return out

    def codes_of_digits(self, digits):
        digits = np.asarray(digits, dtype=np.int64) % self.p
        pw = self.p ** np.arange(self.n, dtype=np.int64)
        return digits @ pw

    # -- table arithmetic on codes (small levels) ------------------------------

    @property
    def tables(self):
        if self._tables is None:
            if self.Q > TABLE_MAX:
                raise MemoryError(f"level d={self.d}: no code tables above "
                                  f"{TABLE_MAX} elements")
            self._tables = self._build_tables()
        return self._tables

    def _build_tables(self):
        p, n, Q = self.p, self.n, self.Q
        red = self.reduction
        # multiplication by y as a matrix on digit vectors
        dig = self.digits_of_codes(np.arange(Q))
        # find a multiplicative generator deterministically
        fac = factorize(Q - 1)
        gen = None
        unit = np.zeros(n, dtype=np.int64)
        unit[0] = 1
        for c in range(1, Q):
            cd = dig[c]
            ok = all(not np.array_equal(
                self._pow_digits_slow(cd, (Q - 1) // ell, red), unit)
                for ell in fac)
            if ok:
                gen = c
                break
        exp = np.empty(2 * (Q - 1), dtype=np.int64)
        log = np.zeros(Q, dtype=np.int64)
        cur = np.zeros(n, dtype=np.int64)
        cur[0] = 1
        gd = dig[gen]
        for i in range(Q - 1):
            code = int(self.codes_of_digits(cur))
            exp[i] = code
            exp[i + Q - 1] = code
            log[code] = i
            cur = self._mul_digits_pair(cur, gd, red)
        return {"exp": exp, "log": log, "dig": dig, "gen": gen,
                "pw": self.p ** np.arange(n, dtype=np.int64)}

    def _pow_digits_slow(self, cd, k, red):
        out = np.zeros(self.n, dtype=np.int64)
        out[0] = 1
        base = cd.copy()
        while k:
            if k & 1:
                out = self._mul_digits_pair(out, base, red)
            base = self._mul_digits_pair(base, base, red)
            k >>= 1
        return out

    def _mul_digits_pair(self, a, b, red):
        conv = np.zeros(2 * self.n - 1, dtype=np.int64)
        for i in range(self.n):
            if a[i]:
                conv[i:i + self.n] += a[i] * b
        return (conv @ red) % self.p

    # vectorized code ops

    def add(self, a, b):
        t = self.tables
        da = t["dig"][np.asarray(a, dtype=np.int64)]
        db = t["dig"][np.asarray(b, dtype=np.int64)]
        return ((da + db) % self.p) @ t["pw"]

    def neg(self, a):
        t = self.tables
        da = t["dig"][np.asarray(a, dtype=np.int64)]
        return ((-da) % self.p) @ t["pw"]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        out[nz] = t["exp"][t["log"][a[nz]] + t["log"][b[nz]]]
        return out

    def inv(self, a):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero field element")
        return t["exp"][(self.Q - 1) - t["log"][a]]

    def pow(self, a, k):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(a.shape, dtype=np.int64)
        if k == 0:
            return np.ones(a.shape, dtype=np.int64)
        k = k % (self.Q - 1) if k >= 0 else (k % (self.Q - 1))
        nz = a != 0
        out[nz] = t["exp"][(t["log"][a[nz]] * k) % (self.Q - 1)]
        return out

    def frob(self, a, j=1):
        """a^(q^j) on codes."""
        return self.pow(a, pow(self.tower.q, j, self.Q - 1) if self.Q > 2 else 1)

    def all_codes(self):
        return np.arange(self.Q, dtype=np.int64)

    # -- digit arithmetic (any level) ------------------------------------------

    @property
    def reduction(self):
        """(2n-1, n) matrix: row i = digits of y^i mod f."""
        if self._red is None:
            n, p = self.n, self.p
            red = np.zeros((2 * n - 1, n), dtype=np.int64)
            cur = [1]
            for i in range(2 * n - 1):
                row = cur + [0] * (n - len(cur))
                red[i] = row[:n]
                cur = _pm_rem([0] + cur, list(self.poly), p)
            self._red = red
        return self._red

    def mul_digits(self, A, B):
        """Batched field product of digit arrays with matching shapes (..., n)."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        A, B = np.broadcast_arrays(A, B)
        conv = np.zeros(A.shape[:-1] + (2 * self.n - 1,), dtype=np.int64)
        for i in range(self.n):
            conv[..., i:i + self.n] += A[..., i:i + 1] * B
        return (conv @ self.reduction) % self.p

    def mulmat(self, c):
        """(n, n) matrix of multiplication by the digit vector c, acting on rows."""
        c = np.asarray(c, dtype=np.int64)
        eye = np.eye(self.n, dtype=np.int64)
        return self.mul_digits(np.broadcast_to(c, (self.n, self.n)), eye)

    @property
    def frob_p_mat(self):
        """(n, n) matrix of x -> x^p on digit rows."""
        if self._frob is None:
            rows = []
            for j in range(self.n):
                b = np.zeros(self.n, dtype=np.int64)
                b[j] = 1
                rows.append(self._pow_digits_slow(b, self.p, self.reduction))
            self._frob = np.array(rows, dtype=np.int64)
        return self._frob

    def sigma_mat(self, j=1):
        """Matrix of x -> x^(q^j) on digit rows."""
        M = np.eye(self.n, dtype=np.int64)
        F = self.frob_p_mat
        for _ in range((self.e * j) % self.n if self.n > 1 else 0):
            M = (M @ F) % self.p
        return M

    def inv_digits(self, A):
        """Batched inverse of digit vectors, via x^(Q-2) with p-power steps."""
        A = np.asarray(A, dtype=np.int64)
        exp = self.Q - 2
        digs = []
        v = exp
        while v:
            digs.append(v % self.p)
            v //= self.p
        out = None
        cur = A
        F = self.frob_p_mat
        for dcount in digs:
            for _ in range(dcount):
                out = cur.copy() if out is None else self.mul_digits(out, cur)
            cur = (cur @ F) % self.p
        if out is None:
            out = np.zeros_like(A)
            out[..., 0] = 1
        bad = ~np.any(A % self.p, axis=-1)
        if np.any(bad):
            raise ZeroDivisionError("inverse of zero field element")
        return out

    def pow_digits(self, A, k):
        A = np.asarray(A, dtype=np.int64)
        if k < 0:
            A = self.inv_digits(A)
            k = -k
        out = np.zeros_like(A)
        out[..., 0] = 1
        cur = A
        while k:
            if k & 1:
                out = self.mul_digits(out, cur)
            cur = self.mul_digits(cur, cur)
            k >>= 1
        return out


# ---------------------------------------------------------------------------


class Embedding:
    """F_p-algebra embedding between two levels, as a digit matrix."""

    def __init__(self, src, dst, matrix):
        self.src = src
        self.dst = dst
        self.matrix = np.asarray(matrix, dtype=np.int64)
        self._code_map = None
        self._back = None

    def digits(self, src_digits):
        return (np.asarray(src_digits, dtype=np.int64) @ self.matrix) % self.src.p

    def codes(self, src_codes):
        if self._code_map is None:
            if self.src.Q > TABLE_MAX:
                d = self.src.digits_of_codes(np.asarray(src_codes))
                return self.dst.codes_of_digits(self.digits(d))
            alld = self.src.digits_of_codes(np.arange(self.src.Q))
            self._code_map = self.dst.codes_of_digits(self.digits(alld))
        return self._code_map[np.asarray(src_codes, dtype=np.int64)]

    def codes_preimage(self, dst_codes):
        """Pull codes back along the embedding; raises if any lies outside
        the image subfield."""
        if self._back is None:
            fwd = self.codes(np.arange(self.src.Q, dtype=np.int64))
            back = np.full(self.dst.Q, -1, dtype=np.int64)
            back[fwd] = np.arange(self.src.Q, dtype=np.int64)
            self._back = back
        out = self._back[np.asarray(dst_codes, dtype=np.int64)]
        if np.any(out < 0):
            raise ValueError("element not in subfield image")
        return out


class FieldTower:
    """Levels F_{q^d} for d in a fixed degree set, with compatible embeddings."""

    def __init__(self, p, e, degrees):
        if p < 2 or any(p % k == 0 for k in range(2, int(p ** 0.5) + 1)):
            raise ValueError("p must be prime")
        if e < 1:
            raise ValueError("e must be positive")
        degrees = sorted(set(int(d) for d in degrees) | {1})
        if any(d < 1 for d in degrees):
            raise ValueError("degrees must be positive")
        self.p = p
        self.e = e
        self.q = p ** e
        self.degrees = degrees
        self.ambient_degree = _lcm_list(degrees)
        self.levels = {}
        for d in degrees:
            self.levels[d] = FieldLevel(self, d)
        if self.ambient_degree not in self.levels:
            self.levels[self.ambient_degree] = FieldLevel(self, self.ambient_degree)
        self._roots_in_ambient = {}
        self._embeddings = {}

    def level(self, d):
        return self.levels[d]

    # -- embeddings ------------------------------------------------------------

    def _ambient_root(self, d):
        """Digit vector of the canonical root of level d's poly in the ambient."""
        if d in self._roots_in_ambient:
            return self._roots_in_ambient[d]
        amb = self.levels[self.ambient_degree]
        lvl = self.levels[d]
        if d == self.ambient_degree:
            r = np.zeros(amb.n, dtype=np.int64)
            if amb.n == 1:
                r[0] = (-lvl.poly[0]) % self.p
            else:
                r[1] = 1
        else:
            roots = _all_roots_in(lvl.poly, amb)
            codes = amb.codes_of_digits(np.array(roots))
            r = roots[int(np.argmin(codes))]
        self._roots_in_ambient[d] = r
        return r

    def _phi_to_ambient(self, d):
        amb = self.levels[self.ambient_degree]
        lvl = self.levels[d]
        r = self._ambient_root(d)
        rows = []
        cur = np.zeros(amb.n, dtype=np.int64)
        cur[0] = 1
        for _ in range(lvl.n):
            rows.append(cur.copy())
            cur = amb.mul_digits(cur, r)
        return np.array(rows, dtype=np.int64)

    def embed(self, d1, d2):
        """Embedding level d1 -> level d2; requires d1 | d2."""
        key = (d1, d2)
        if key in self._embeddings:
            return self._embeddings[key]
        if d1 not in self.levels or d2 not in self.levels:
            raise KeyError(f"degree not in tower: {key}")
        if d2 % d1 != 0:
            raise ValueError(f"no embedding F_(q^{d1}) -> F_(q^{d2}): {d1} does "
                             f"not divide {d2}")
        src, dst = self.levels[d1], self.levels[d2]
        if d1 == d2:
            M = np.eye(src.n, dtype=np.int64)
        elif d2 == self.ambient_degree:
            M = self._phi_to_ambient(d1)
        else:
            A = self._phi_to_ambient(d2)  # (n2, nD)
            B = self._phi_to_ambient(d1)  # (n1, nD)
            M = np.zeros((src.n, dst.n), dtype=np.int64)
            solver = modp.AffineSolver(A.T, self.p)
            mask, part = solver.solve_batch(B)
            if not np.all(mask) or solver.kernel.shape[0]:
                raise ArithmeticError("embedding solve failed")  # pragma: no cover
            M = part
        emb = Embedding(src, dst, M)
        self._embeddings[key] = emb
        return emb

    def subfield_codes(self, d1, d2):
        """Codes in level d2 of the image of all of level d1 (d1 small)."""
        emb = self.embed(d1, d2)
        return emb.codes(np.arange(self.levels[d1].Q, dtype=np.int64))

    # -- spec-level ops ----------------------------------------------------------

    def frobenius(self, x, j=1):
        """q-power Frobenius iterate on a FieldElem."""
        lvl = self.levels[x.d]
        if lvl.Q <= TABLE_MAX:
            return FieldElem(self, x.d, int(lvl.frob(np.array([x.code]), j)[0]))
        dig = lvl.digits_of_codes(np.array([x.code]))[0]
        out = (dig @ lvl.sigma_mat(j)) % self.p
        return FieldElem(self, x.d, int(lvl.codes_of_digits(out)))

    def artin_schreier_trace_zero_set(self, d=2):
        """All x in F_{q^d} with x^q + x = 0, as a sorted code array."""
        lvl = self.levels[d]
        codes = lvl.all_codes()
        vals = lvl.add(lvl.frob(codes, 1), codes)
        return np.sort(codes[vals == 0])


class FieldElem:
    """A tagged element of one tower level, stored as a packed code."""

    __slots__ = ("tower", "d", "code")

    def __init__(self, tower, d, code):
        self.tower = tower
        self.d = d
        self.code = int(code)

    def _lvl(self):
        return self.tower.levels[self.d]

    def _bin(self, other, op):
        if isinstance(other, FieldElem):
            if other.d != self.d:
                raise ValueError("mixed levels; embed explicitly")
            oc = other.code
        else:
            raise TypeError("field ops need FieldElem operands")
        lvl = self._lvl()
        return FieldElem(self.tower, self.d,
                         int(getattr(lvl, op)(np.array([self.code]),
                                              np.array([oc]))[0]))

    def __add__(self, other):
        return self._bin(other, "add")

    def __sub__(self, other):
        return self._bin(other, "sub")

    def __mul__(self, other):
        return self._bin(other, "mul")

    def inverse(self):
        lvl = self._lvl()
        return FieldElem(self.tower, self.d, int(lvl.inv(np.array([self.code]))[0]))

    def __eq__(self, other):
        return (isinstance(other, FieldElem) and other.d == self.d
                and other.code == self.code)

    def __hash__(self):
        return hash((self.d, self.code))

    def __repr__(self):
        return f"FieldElem(d={self.d}, code={self.code})"


def make_tower(p, e, degrees):
    """Build the tower of fields F_{(p^e)^d} for d in degrees (1 always added)."""
    return FieldTower(p, e, degrees)


def _lcm_list(xs):
    out = 1
    for x in xs:
        g, a = out, x
        while a:
            g, a = a, g % a
        out = out // g * x
    return out


# ---------------------------------------------------------------------------
# polynomial root finding over a level, used for embeddings


def _lp_trim(c):
    i = len(c) - 1
    while i > 0 and not c[i].any():
        i -= 1
    return c[: i + 1]


def _lp_mul(lvl, a, b):
    out = np.zeros((len(a) + len(b) - 1, lvl.n), dtype=np.int64)
    for i in range(len(a)):
        if a[i].any():
            prod = lvl.mul_digits(np.broadcast_to(a[i], (len(b), lvl.n)), b)
            out[i:i + len(b)] = (out[i:i + len(b)] + prod) % lvl.p
    return _lp_trim(out)


def _lp_rem(lvl, a, f):
    a = a.copy()
    df = len(f) - 1
    if df == 0:
        return np.zeros((1, lvl.n), dtype=np.int64)
    lead_inv = lvl.inv_digits(f[-1][None, :])[0]
    for i in range(len(a) - 1, df - 1, -1):
        if not a[i].any():
            continue
        c = lvl.mul_digits(a[i][None, :], lead_inv[None, :])[0]
        sub = lvl.mul_digits(np.broadcast_to(c, (df + 1, lvl.n)), f)
        a[i - df: i + 1] = (a[i - df: i + 1] - sub) % lvl.p
    return _lp_trim(a[:df] if df else a[:1])


def _lp_gcd(lvl, a, b):
    a, b = _lp_trim(a.copy()), _lp_trim(b.copy())
    while len(b) > 1 or b[0].any():
        a, b = b, _lp_rem(lvl, a, b)
    if len(a) > 1 or a[0].any():
        inv = lvl.inv_digits(a[-1][None, :])[0]
        a = lvl.mul_digits(a, np.broadcast_to(inv, a.shape))
    return a


def _lp_powmod(lvl, base, exp, f):
    res = np.zeros((1, lvl.n), dtype=np.int64)
    res[0, 0] = 1
    base = _lp_rem(lvl, base, f)
    while exp:
        if exp & 1:
            res = _lp_rem(lvl, _lp_mul(lvl, res, base), f)
        base = _lp_rem(lvl, _lp_mul(lvl, base, base), f)
        exp >>= 1
    return res


def _all_roots_in(poly_fp, lvl):
    """All roots in lvl of a squarefree F_p polynomial that splits there."""
    f = np.zeros((len(poly_fp), lvl.n), dtype=np.int64)
    f[:, 0] = np.array(poly_fp, dtype=np.int64) % lvl.p
    # keep only the part splitting in lvl
    x = np.zeros((2, lvl.n), dtype=np.int64)
    x[1, 0] = 1
    xq = _lp_powmod(lvl, x, lvl.Q, f)
    diff = xq.copy()
    if len(diff) < 2:
        diff = np.vstack([diff, np.zeros((2 - len(diff), lvl.n), dtype=np.int64)])
    diff[1, 0] = (diff[1, 0] - 1) % lvl.p
    f = _lp_gcd(lvl, f, _lp_trim(diff))
    rng = random.Random(f"roots:{lvl.p}:{lvl.n}:{len(poly_fp)}")
    roots = []
    _split_all(lvl, f, rng, roots)
    return roots


def _split_all(lvl, f, rng, roots):
    f = _lp_trim(f)
    deg = len(f) - 1
    if deg == 0:
        return
    if deg == 1:
        # root = -c0 / c1
        inv = lvl.inv_digits(f[1][None, :])[0]
        r = lvl.mul_digits(((-f[0]) % lvl.p)[None, :], inv[None, :])[0]
        roots.append(r)
        return
    while True:
        a = np.array([rng.randrange(lvl.p) for _ in range(lvl.n)], dtype=np.int64)
        b = np.array([rng.randrange(lvl.p) for _ in range(lvl.n)], dtype=np.int64)
        lin = np.vstack([a[None, :], np.zeros((1, lvl.n), dtype=np.int64)])
        lin[1] = b
        if not b.any():
            continue
        if lvl.p == 2:
            # trace map of lin over F_2
            acc = _lp_rem(lvl, lin, f)
            cur = acc.copy()
            for _ in range(lvl.n - 1):
                cur = _lp_rem(lvl, _lp_mul(lvl, cur, cur), f)
                acc = _pad_add(lvl, acc, cur)
            h = acc
        else:
            h = _lp_powmod(lvl, lin, (lvl.Q - 1) // 2, f)
            h = h.copy()
            h[0, 0] = (h[0, 0] - 1) % lvl.p
        g = _lp_gcd(lvl, f, _lp_trim(h))
        dg = len(g) - 1
        if 0 < dg < deg:
            _split_all(lvl, g, rng, roots)
            q2, r2 = _lp_divide(lvl, f, g)
            _split_all(lvl, q2, rng, roots)
            return


def _pad_add(lvl, a, b):
    m = max(len(a), len(b))
    out = np.zeros((m, lvl.n), dtype=np.int64)
    out[: len(a)] += a
    out[: len(b)] += b
    return out % lvl.p


def _lp_divide(lvl, a, f):
    a = a.copy()
    df = len(f) - 1
    qout = np.zeros((max(len(a) - df, 1), lvl.n), dtype=np.int64)
    lead_inv = lvl.inv_digits(f[-1][None, :])[0]
    for i in range(len(a) - 1, df - 1, -1):
        if not a[i].any():
            continue
        c = lvl.mul_digits(a[i][None, :], lead_inv[None, :])[0]
        qout[i - df] = c
        sub = lvl.mul_digits(np.broadcast_to(c, (df + 1, lvl.n)), f)
        a[i - df: i + 1] = (a[i - df: i + 1] - sub) % lvl.p
    return _lp_trim(qout), _lp_trim(a[:df] if df else a[:1])

"""Coefficientwise equation systems for the level-m covering pieces, their
exact point counts over F_{q^(2s)}, determinant-fiber analysis, predicted
compactly-supported cohomology tables with Frobenius data, fixed-point
consistency checks, and the double-coset normal form used by the covering
comparison.

Conventions.  A multiplicative series C is stored through its unit constant
term c_0 and normalized tail, C = c_0(1 + c_1 t + ... + c_m t^m); additive
series keep plain coefficient vectors.  Scans run over a single field level
F_{q^(2s)} in a fresh tower, so every enumeration is exact table arithmetic.
sigma always means the coefficientwise q-power map.
"""

import json
import math

import numpy as np

from . import fftower, trunc
from .trunc import LaurentElem

ENGINE_VERSION = "1"
DEFAULT_BOUND = 1 << 28

KINDS = ("Yvm", "Yv0m", "Zm", "Zm1", "Superbasic", "CurveCminus", "CurveCplus")

# scan chunk target, rows; keeps intermediate expansion arrays in memory
_CHUNK_ROWS = 1 << 22


class BoundExceeded(RuntimeError):
    """Search space or coefficient table too large for exact enumeration."""


def _prime_power(q):
    for p in range(2, q + 1):
        if q % p == 0:
            e = 0
            r = q
            while r % p == 0:
                r //= p
                e += 1
            if r != 1:
                raise ValueError(f"q = {q} is not a prime power")
            return p, e
    raise ValueError(f"q = {q} is not a prime power")


class Coord:
    """One scan coordinate: a name and a domain tag.

    Domains: "free" (all of F_Q), "unit" (nonzero), "not_in_base" (outside
    F_q), "quad_not_base" (in F_{q^2} but outside F_q, a fixed finite set
    independent of the extension step).
    """

    __slots__ = ("name", "domain")

    def __init__(self, name, domain):
        self.name = name
        self.domain = domain

    def __repr__(self):
        return f"Coord({self.name!r}, {self.domain!r})"


class Equation:
    """A single closed condition: label, participating coordinate names and
    a vectorized predicate env -> bool mask."""

    __slots__ = ("label", "participants", "fn")

    def __init__(self, label, participants, fn):
        self.label = label
        self.participants = tuple(participants)
        self.fn = fn

    def __repr__(self):
        return f"Equation({self.label!r})"


class VarietySystem:
    """A parametrized coefficientwise equation system over F_{q^(2s)}."""

    def __init__(self, kind, q, m, n, coords, equations):
        self.kind = kind
        self.q = q
        self.m = m
        self.n = n
        self.p, self.e = _prime_power(q)
        self.coords = list(coords)
        self.equations = list(equations)
        used = set()
        for eq in self.equations:
            used.update(eq.participants)
        names = [c.name for c in self.coords]
        if len(set(names)) != len(names):
            raise ValueError("duplicate coordinate name")
        missing = used - set(names)
        if missing:
            raise ValueError(f"equation references unknown coordinates {missing}")
        self._scanned = [c for c in self.coords if c.name in used]
        self._free = [c for c in self.coords if c.name not in used]

    @property
    def scanned(self):
        return list(self._scanned)

    @property
    def free(self):
        return list(self._free)

    def cache_key(self):
        key = f"{self.kind} q={self.q} m={self.m}"
        if self.n is not None:
            key += f" n={self.n}"
        return key

    def __repr__(self):
        return (f"VarietySystem({self.cache_key()}, {len(self.coords)} coords, "
                f"{len(self.equations)} equations)")


def default_n(m):
    """Smallest even integer exceeding m."""
    return m + 2 if m % 2 == 0 else m + 1


def field_for(sys_or_q, s):
    """Tower carrying F_q, F_{q^2} and the scan field F_{q^(2s)}."""
    if isinstance(sys_or_q, VarietySystem):
        p, e = sys_or_q.p, sys_or_q.e
    else:
        p, e = _prime_power(sys_or_q)
    if s < 1:
        raise ValueError("extension step s must be positive")
    try:
        tower = fftower.make_tower(p, e, [1, 2, 2 * s])
    except OverflowError:
        raise BoundExceeded(
            f"coefficient field F_{{q^{2 * s}}} too large to construct")
    lvl = tower.level(2 * s)
    if lvl.Q > fftower.TABLE_MAX:
        raise BoundExceeded(
            f"coefficient field of size {lvl.Q} exceeds the code-table "
            f"capacity {fftower.TABLE_MAX}")
    return tower, lvl


def _domain_size(domain, q, Q):
    if domain == "free":
        return Q
    if domain == "unit":
        return Q - 1
    if domain == "not_in_base":
        return Q - q
    if domain == "quad_not_base":
        return q * q - q
    raise ValueError(f"unknown domain {domain!r}")


def _domain_codes(domain, q, tower, lvl):
    codes = lvl.all_codes()
    if domain == "free":
        return codes
    if domain == "unit":
        return codes[1:]
    if domain == "not_in_base":
        return codes[lvl.frob(codes) != codes]
    if domain == "quad_not_base":
        sub = tower.subfield_codes(2, lvl.d)
        return np.sort(sub[lvl.frob(sub) != sub])
    raise ValueError(f"unknown domain {domain!r}")


# -- series helpers used inside equation predicates ----------------------------

def _stack(env, names):
    cols = [np.asarray(env[nm], dtype=np.int64) for nm in names]
    return np.stack(np.broadcast_arrays(*cols), axis=-1) if len(cols) > 1 \
        else cols[0][..., None]


def _mult_series(lvl, env, upto):
    """C = c0(1 + c1 t + ... ) as a coefficient array of prec upto+1."""
    tail = [env[f"c{i}"] for i in range(1, upto + 1)]
    c0 = np.asarray(env["c0"], dtype=np.int64)
    shape = np.broadcast_shapes(*(np.asarray(t).shape for t in tail),
                                c0.shape) if tail else c0.shape
    out = np.zeros(shape + (upto + 1,), dtype=np.int64)
    out[..., 0] = 1
    for i, t in enumerate(tail, start=1):
        out[..., i] = t
    return lvl.mul(out, np.broadcast_to(c0[..., None], out.shape))


def _as_diff_series(lvl, env, prefix, upto):
    """sigma(a) - a coefficientwise, for a = (a_0 .. a_upto)."""
    a = _stack(env, [f"{prefix}{i}" for i in range(upto + 1)])
    return lvl.sub(lvl.frob(a), a)


# -- system builders ------------------------------------------------------------

def _build_yv(kind, q, m, n):
    coords = []
    for i in range(m + 1):
        coords.append(Coord(f"a{i}", "not_in_base" if i == 0 else "free"))
        coords.append(Coord(f"c{i}", "unit" if i == 0 else "free"))
    for i in range(m + 1, n):
        coords.append(Coord(f"a{i}", "free"))
    for i in range(m):
        coords.append(Coord(f"A{i}", "free"))
    eqs = []
    for L in range(m + 1):
        parts = [f"a{i}" for i in range(L + 1)] + [f"c{i}" for i in range(L + 1)]
        if kind == "Yv0m":
            def fn(lvl, env, L=L):
                S = _as_diff_series(lvl, env, "a", L)
                C = _mult_series(lvl, env, L)
                lhs = trunc.tmul(lvl, C, trunc.tsigma(lvl, C))
                return lhs[..., L] == S[..., L]
            label = f"coeff_{L}(C*sigma(C) - S) = 0"
        else:
            def fn(lvl, env, L=L):
                S = _as_diff_series(lvl, env, "a", L)
                C = _mult_series(lvl, env, L)
                lhs = trunc.tmul(lvl, trunc.tsigma(lvl, C, 2), S)
                rhs = trunc.tmul(lvl, C, trunc.tsigma(lvl, S))
                return lhs[..., L] == rhs[..., L]
            label = f"coeff_{L}(sigma^2(C)*S - C*sigma(S)) = 0"
        eqs.append(Equation(label, parts, fn))
    return VarietySystem(kind, q, m, n, coords, eqs)


def _build_superbasic(q, m, n):
    coords = [Coord("c0", "unit")]
    for L in range(1, m + 1):
        coords.append(Coord(f"a{L - 1}", "free"))
        coords.append(Coord(f"c{L}", "free"))
    for i in range(m, n):
        coords.append(Coord(f"a{i}", "free"))
    for i in range(m):
        coords.append(Coord(f"A{i}", "free"))
    eqs = []
    for L in range(m + 1):
        parts = [f"c{i}" for i in range(L + 1)] + [f"a{i}" for i in range(L)]
        def fn(lvl, env, L=L):
            C = _mult_series(lvl, env, L)
            if L == 0:
                W = np.ones_like(C)
            else:
                a = _stack(env, [f"a{i}" for i in range(L)])
                u = trunc.tmul(lvl, a, trunc.tsigma(lvl, a))
                W = np.zeros(u.shape[:-1] + (L + 1,), dtype=np.int64)
                W[..., 0] = 1
                W[..., 1:] = lvl.neg(u)
            lhs = trunc.tmul(lvl, C, trunc.tsigma(lvl, W))
            rhs = trunc.tmul(lvl, W, trunc.tsigma(lvl, C, 2))
            return lhs[..., L] == rhs[..., L]
        eqs.append(Equation(
            f"coeff_{L}(C*sigma(W) - W*sigma^2(C)) = 0, W = 1 - t*a*sigma(a)",
            parts, fn))
    return VarietySystem("Superbasic", q, m, n, coords, eqs)


def _boundary_pair_equation():
    def fn(lvl, env):
        c0 = np.asarray(env["c0"], dtype=np.int64)
        a0 = np.asarray(env["a0"], dtype=np.int64)
        return lvl.mul(lvl.frob(c0), c0) == lvl.sub(lvl.frob(a0), a0)
    return Equation("c0^(q+1) = sigma(a0) - a0", ["a0", "c0"], fn)


def _layer_equation(q, mp):
    """alpha_mp^q + alpha_mp = sum_{i=1}^{floor((mp-1)/2)} (c_i - c_i^(q^2))
    * c_{mp-i}^q + [mp even] * c_{mp/2}^(q+1)."""
    parts = [f"alpha{mp}"] + [f"c{i}" for i in range(1, mp)]
    def fn(lvl, env, mp=mp):
        al = np.asarray(env[f"alpha{mp}"], dtype=np.int64)
        lhs = lvl.add(lvl.frob(al), al)
        rhs = np.zeros_like(lhs)
        for i in range(1, (mp - 1) // 2 + 1):
            ci = np.asarray(env[f"c{i}"], dtype=np.int64)
            cj = np.asarray(env[f"c{mp - i}"], dtype=np.int64)
            term = lvl.mul(lvl.sub(ci, lvl.frob(ci, 2)), lvl.frob(cj))
            rhs = lvl.add(rhs, term)
        if mp % 2 == 0:
            ch = np.asarray(env[f"c{mp // 2}"], dtype=np.int64)
            rhs = lvl.add(rhs, lvl.mul(lvl.frob(ch), ch))
        return lhs == rhs
    return Equation(f"layer {mp}: alpha^q + alpha = boundary bilinear form",
                    parts, fn)


def _build_zm(q, m):
    coords = [Coord("a0", "quad_not_base"), Coord("c0", "free")]
    for i in range(1, m + 1):
        coords.append(Coord(f"alpha{i}", "free"))
        coords.append(Coord(f"c{i}", "free"))
    eqs = [_boundary_pair_equation()]
    for mp in range(1, m + 1):
        eqs.append(_layer_equation(q, mp))
    return VarietySystem("Zm", q, m, None, coords, eqs)


def zm_fiber_system(q, m):
    """The piece of the Zm system left after fixing the boundary pair
    (a_0, c_0) and the first affine-line layer alpha_1: coordinates
    c_1..c_m, alpha_2..alpha_m with the layer equations from 2 on."""
    if m < 1:
        raise ValueError("the fiber system needs m >= 1")
    # declared order: c1, alpha2, c2, alpha3, ..., alpha_m, c_m
    coords = [Coord("c1", "free")]
    for i in range(2, m + 1):
        coords.append(Coord(f"alpha{i}", "free"))
        coords.append(Coord(f"c{i}", "free"))
    eqs = [_layer_equation(q, mp) for mp in range(2, m + 1)]
    return VarietySystem("Zm_fiber", q, m, None, coords, eqs)


def _build_zm1(q, m):
    coords = []
    for i in range(1, m + 1):
        coords.append(Coord(f"ap{i}", "free"))
        coords.append(Coord(f"c{i}", "free"))
    eqs = []
    for mp in range(1, m + 1):
        parts = [f"ap{mp}"] + [f"c{i}" for i in range(1, mp)]
        def fn(lvl, env, mp=mp):
            ap = np.asarray(env[f"ap{mp}"], dtype=np.int64)
            lhs = lvl.add(lvl.frob(ap), ap)
            rhs = np.zeros_like(lhs)
            for i in range(1, mp):
                ci = np.asarray(env[f"c{i}"], dtype=np.int64)
                cj = np.asarray(env[f"c{mp - i}"], dtype=np.int64)
                rhs = lvl.add(rhs, lvl.mul(lvl.frob(ci), cj))
            return lhs == rhs
        eqs.append(Equation(
            f"layer {mp}: ap^q + ap = sum_i c_i^q c_({mp}-i)", parts, fn))
    return VarietySystem("Zm1", q, m, None, coords, eqs)


def _build_curve(kind, q):
    sign = -1 if kind == "CurveCminus" else 1
    def fn(lvl, env):
        x = np.asarray(env["x"], dtype=np.int64)
        y = np.asarray(env["y"], dtype=np.int64)
        lhs = lvl.mul(lvl.frob(y), y)
        fx = lvl.frob(x)
        rhs = lvl.sub(fx, x) if sign < 0 else lvl.add(fx, x)
        return lhs == rhs
    op = "-" if sign < 0 else "+"
    eq = Equation(f"y^(q+1) = x^q {op} x", ["x", "y"], fn)
    return VarietySystem(kind, q, 0, None,
                         [Coord("x", "free"), Coord("y", "free")], [eq])


def build_system(kind, q, m=0, n=None):
    """Construct the equation system of the given kind.

    For the covering kinds (Yvm, Yv0m, Superbasic) n must be even with
    m < n; it defaults to the smallest even integer above m.  The affine
    model kinds (Zm, Zm1) and the curves ignore n.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if kind in ("Yvm", "Yv0m", "Superbasic"):
        if n is None:
            n = default_n(m)
        if n % 2 != 0:
            raise ValueError("n must be even")
        if m >= n:
            raise ValueError(f"need m < n, got m={m}, n={n}")
        if kind == "Superbasic":
            return _build_superbasic(q, m, n)
        return _build_yv(kind, q, m, n)
    if kind == "Zm":
        return _build_zm(q, m)
    if kind == "Zm1":
        return _build_zm1(q, m)
    return _build_curve(kind, q)


# -- enumeration ---------------------------------------------------------------

def _scan(sys, tower, lvl, bound, outer=None, want_points=False):
    q, Q = sys.q, lvl.Q
    scanned = sys.scanned
    free = sys.free
    gate = math.prod(_domain_size(c.domain, q, Q) for c in scanned)
    if want_points:
        gate *= math.prod(_domain_size(c.domain, q, Q) for c in free)
    if gate > bound:
        raise BoundExceeded(
            f"scan of {gate} assignments exceeds the bound {bound}")

    by_trigger = {}
    index = {c.name: i for i, c in enumerate(scanned)}
    for eq in sys.equations:
        trig = max(index[nm] for nm in eq.participants)
        by_trigger.setdefault(trig, []).append(eq)

    if not scanned:
        rows = 1
        cols = {}
        if want_points:
            cols = _expand_free(sys, tower, lvl, {}, 1)
            return cols, math.prod(
                _domain_size(c.domain, q, Q) for c in free)
        return rows, None

    domains = [_domain_codes(c.domain, q, tower, lvl) for c in scanned]
    first = np.asarray(outer, dtype=np.int64) if outer is not None \
        else domains[0]
    if len(scanned) > 1:
        chunk = max(1, _CHUNK_ROWS // int(domains[1].shape[0]))
    else:
        chunk = max(1, _CHUNK_ROWS)

    total = 0
    parts = []
    for lo in range(0, first.shape[0], chunk):
        cols = {scanned[0].name: first[lo:lo + chunk].copy()}
        nrows = cols[scanned[0].name].shape[0]
        for eq in by_trigger.get(0, []):
            mask = eq.fn(lvl, cols)
            if not mask.all():
                cols = {nm: v[mask] for nm, v in cols.items()}
            nrows = cols[scanned[0].name].shape[0]
        for idx in range(1, len(scanned)):
            if nrows == 0:
                break
            dom = domains[idx]
            k = dom.shape[0]
            cols = {nm: np.repeat(v, k) for nm, v in cols.items()}
            cols[scanned[idx].name] = np.tile(dom, nrows)
            nrows *= k
            for eq in by_trigger.get(idx, []):
                mask = eq.fn(lvl, cols)
                if not mask.all():
                    cols = {nm: v[mask] for nm, v in cols.items()}
                nrows = cols[scanned[idx].name].shape[0]
        if nrows:
            total += int(nrows)
            if want_points:
                parts.append(cols)
    if not want_points:
        return total, None
    if parts:
        cols = {nm: np.concatenate([p[nm] for p in parts]) for nm in parts[0]}
    else:
        cols = {c.name: np.zeros(0, dtype=np.int64) for c in scanned}
    cols = _expand_free(sys, tower, lvl, cols, total)
    return cols, total * math.prod(
        _domain_size(c.domain, q, Q) for c in free)


def _expand_free(sys, tower, lvl, cols, nrows):
    for c in sys.free:
        dom = _domain_codes(c.domain, sys.q, tower, lvl)
        k = dom.shape[0]
        cols = {nm: np.repeat(v, k) for nm, v in cols.items()}
        cols[c.name] = np.tile(dom, nrows) if nrows else \
            np.zeros(0, dtype=np.int64)
        nrows *= k
    return cols


def _cache_lookup(path, key, s):
    try:
        with open(path, "r") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if (rec.get("sys") == key and rec.get("s") == s
                        and rec.get("engine_version") == ENGINE_VERSION):
                    return int(rec["count"])
    except FileNotFoundError:
        return None
    return None


def _cache_append(path, key, s, count):
    rec = {"sys": key, "s": s, "count": count,
           "engine_version": ENGINE_VERSION}
    with open(path, "a") as fh:
        fh.write(json.dumps(rec) + "\n")


def count_points(sys, s=1, bound=DEFAULT_BOUND, cache=None, outer=None):
    """Exact number of F_{q^(2s)}-rational solutions.

    Coordinates that appear in no equation are never scanned; their domain
    sizes multiply the scan total.  The bound gates the product of the
    scanned domain sizes.  outer restricts the first scanned coordinate to
    the given codes (the work-splitting axis); counts over a partition of
    the first domain add up to the full count.
    """
    if cache is not None and outer is None:
        hit = _cache_lookup(cache, sys.cache_key(), s)
        if hit is not None:
            return hit
    tower, lvl = field_for(sys, s)
    nrows, _ = _scan(sys, tower, lvl, bound, outer=outer)
    count = int(nrows) * math.prod(
        _domain_size(c.domain, sys.q, lvl.Q) for c in sys.free)
    if cache is not None and outer is None:
        _cache_append(cache, sys.cache_key(), s, count)
    return count


def enumerate_points(sys, s=1, bound=DEFAULT_BOUND):
    """All F_{q^(2s)}-points as a dict of coordinate columns (free
    coordinates fully expanded).  Returns (tower, lvl, columns)."""
    tower, lvl = field_for(sys, s)
    cols, total = _scan(sys, tower, lvl, bound, want_points=True)
    return tower, lvl, cols


def satisfies(sys, lvl, env):
    """Mask of assignments fulfilling every equation and domain constraint."""
    names = [c.name for c in sys.coords]
    arrs = np.broadcast_arrays(*[np.asarray(env[nm], dtype=np.int64)
                                 for nm in names])
    env = dict(zip(names, arrs))
    mask = np.ones(arrs[0].shape, dtype=bool)
    for c in sys.coords:
        v = env[c.name]
        if c.domain == "unit":
            mask &= v != 0
        elif c.domain == "not_in_base":
            mask &= lvl.frob(v) != v
        elif c.domain == "quad_not_base":
            mask &= (lvl.frob(v, 2) == v) & (lvl.frob(v) != v)
    for eq in sys.equations:
        mask &= eq.fn(lvl, env)
    return mask


# -- boundary sets --------------------------------------------------------------

def n_minus_points(q):
    """The boundary pairs (a_0, c_0) with a_0 in F_{q^2} outside F_q and
    c_0^(q+1) = a_0^q - a_0.  For odd q the c_0-coordinate generates the
    degree-4 extension, so the pairs are enumerated there; all (q^2-q)(q+1)
    of them are rational over F_{q^4}.  Sorted by (a_0, c_0) code: the
    canonical ordering used everywhere."""
    p, e = _prime_power(q)
    tower = fftower.make_tower(p, e, [1, 2, 4])
    lvl = tower.level(4)
    sub = tower.subfield_codes(2, 4)
    asub = sub[lvl.frob(sub) != sub]
    codes = lvl.all_codes()
    a = np.repeat(asub, lvl.Q)
    c = np.tile(codes, asub.shape[0])
    mask = lvl.mul(lvl.frob(c), c) == lvl.sub(lvl.frob(a), a)
    a, c = a[mask], c[mask]
    order = np.lexsort((c, a))
    return tower, lvl, np.stack([a[order], c[order]], axis=1)


def n_minus_fixed_count(q, s):
    """Boundary pairs fixed by the s-th power of the arithmetic involution
    (a_0, c_0) -> (a_0, -c_0): exactly the pairs rational over F_{q^(2s)}."""
    tower, lvl, pts = n_minus_points(q)
    c = pts[:, 1]
    for _ in range(s):
        c = lvl.neg(c)
    return int(np.count_nonzero(c == pts[:, 1]))


def k_minus_codes(q):
    """All x in F_{q^2} with x^q + x = 0."""
    p, e = _prime_power(q)
    tower = fftower.make_tower(p, e, [1, 2])
    return tower.artin_schreier_trace_zero_set(2)


# -- determinant fibers ----------------------------------------------------------

def det_fiber_analysis(sys, s=1, bound=DEFAULT_BOUND):
    """Fiber counts of the determinant map point -> C*sigma(C)/S mod t^(m+1)
    over the enumerated points of a Yvm system.

    Checks that every value is a base-rational unit series and that all
    nonempty fibers are equinumerous, and reports the unit-fiber count
    together with the covering-degree bookkeeping: the fiber over 1 is a
    disjoint union of free orbits of the norm-one torus (order (q+1)q^m),
    so the orbit count must divide it and stay at or below the base count
    (Q - q) * Q^(n - 1 + m).
    """
    if sys.kind != "Yvm":
        raise ValueError("determinant fibers are analyzed on Yvm systems")
    m, n, q = sys.m, sys.n, sys.q
    tower, lvl, cols = enumerate_points(sys, s, bound)
    npts = cols["a0"].shape[0]
    S = _as_diff_series(lvl, cols, "a", m)
    C = _mult_series(lvl, cols, m)
    det = trunc.tmul(lvl, trunc.tmul(lvl, C, trunc.tsigma(lvl, C)),
                     trunc.tinv(lvl, S))
    if npts and np.any(lvl.frob(det) != det):
        raise ValueError("determinant value outside the base field")
    emb = tower.embed(1, lvl.d)
    det1 = emb.codes_preimage(det)
    fibers = {}
    for row in det1:
        key = tuple(int(x) for x in row)
        fibers[key] = fibers.get(key, 0) + 1
    sizes = set(fibers.values())
    if len(sizes) > 1:
        raise ValueError(f"determinant fibers not equinumerous: {sorted(sizes)}")
    one = tuple([1] + [0] * m)
    fiber_over_1 = fibers.get(one, 0)
    t0 = torus_norm_one_order(q, m)
    if fiber_over_1 % t0 != 0:
        raise ValueError("unit fiber not a union of norm-one torus orbits")
    Q = lvl.Q
    base = (Q - q) * Q ** (n - 1 + m)
    orbits = fiber_over_1 // t0
    if orbits > base:
        raise ValueError("more torus orbits than base points")
    return {
        "kind": sys.kind, "q": q, "m": m, "n": n, "s": s,
        "fibers": fibers,
        "image_size": len(fibers),
        "fiber_over_1": fiber_over_1,
        "total": npts,
        "torus_norm_one_order": t0,
        "orbits_over_1": orbits,
        "base_count": base,
    }


def torus_norm_one_order(q, m):
    """Order of the norm-one subgroup of unit series over F_{q^2} mod
    t^(m+1), counted by enumeration."""
    p, e = _prime_power(q)
    tower = fftower.make_tower(p, e, [1, 2])
    lvl = tower.level(2)
    from .groups import all_unit_series
    taus = all_unit_series(lvl, m + 1)
    norms = trunc.norm_sigma(lvl, taus)
    one = np.zeros(m + 1, dtype=np.int64)
    one[0] = 1
    return int(np.count_nonzero(np.all(norms == one, axis=-1)))


# -- cohomology tables and fixed-point checks ------------------------------------

class CohTable:
    """Predicted compactly-supported Betti numbers and Frobenius actions for
    the unit-determinant covering piece.

    Degrees run from d0 - m to d0 + 1 with d0 = 2(n-1) + 2m + 1.  The top
    degree carries a one-dimensional Tate piece, degree d0 a curve piece of
    dimension q(q-1) whose trace is assembled from affine curve counts, and
    degree d0 - j (1 <= j <= m) one block of dimension q^(2(j-1))(q-1) for
    each boundary pair, permuted by (a_0, c_0) -> (a_0, -c_0) and scaled by
    (-1)^(d0-j) q^(d0-j).
    """

    def __init__(self, q, m, n, nminus):
        self.q = q
        self.m = m
        self.n = n
        self.nminus = nminus
        self.d0 = 2 * (n - 1) + 2 * m + 1
        self.rows = [
            {"degree": self.d0 + 1, "dim": 1, "block": "tate",
             "twist": n + m},
            {"degree": self.d0, "dim": q * (q - 1), "block": "curve",
             "twist": n + m - 1},
        ]
        for j in range(1, m + 1):
            per = (q - 1) * q ** (2 * (j - 1))
            self.rows.append({
                "degree": self.d0 - j, "dim": nminus * per, "block": "perm",
                "per_block_dim": per, "sign": (-1) ** (self.d0 - j),
                "qpow": self.d0 - j,
            })

    def dims(self):
        return {r["degree"]: r["dim"] for r in self.rows}

    def dim(self, degree):
        return self.dims().get(degree, 0)

    def predicted_count(self, s, cminus, nminus_fixed):
        """Alternating Frobenius-trace sum at extension step s, taking the
        number of F_{q^(2s)}-points on the minus curve and the fixed pairs
        of the s-fold boundary involution."""
        q, m, n = self.q, self.m, self.n
        Q = q ** (2 * s)
        total = Q ** (n + m) - Q ** (n + m - 1) * (q + Q - cminus)
        for r in self.rows:
            if r["block"] != "perm":
                continue
            d = r["qpow"]
            term = (-1) ** (d * (s + 1)) * q ** (d * s) \
                * r["per_block_dim"] * nminus_fixed
            total += term
        return total


def coh_table(q, m, n):
    """Predicted table for the given parameters, with the boundary-pair
    count taken from honest enumeration."""
    if not 0 <= m < n:
        raise ValueError("need 0 <= m < n")
    _, _, pts = n_minus_points(q)
    return CohTable(q, m, n, int(pts.shape[0]))


def zm1_h_table(q, m):
    """Compactly-supported Betti numbers of the bilinear-layer system:
    q in degree 2m and q^(2(j-1))(q-1) in degree 2m+1-j for 1 < j <= m."""
    h = {2 * m: q}
    for j in range(2, m + 1):
        h[2 * m + 1 - j] = q ** (2 * (j - 1)) * (q - 1)
    return h


def lefschetz_check(sys, coh=None, s=1, curve_counts=None, bound=DEFAULT_BOUND,
                    cache=None):
    """Compare the enumerated count with the fixed-point prediction.

    Yv0m: assembles the alternating trace sum from the cohomology table;
    the curve block needs #CurveCminus(F_{q^(2s)}) supplied (dict s->count
    or an integer).  Zm1: checks the eigenvalue model (-q)^i per degree and
    reports whether the count meets the Lefschetz upper bound (maximality).
    Zm: checks the product decomposition over boundary pairs and the first
    affine-line layer against the fiber system.
    """
    q, m = sys.q, sys.m
    if sys.kind == "Yv0m":
        if coh is None:
            coh = coh_table(q, m, sys.n)
        if curve_counts is None:
            raise ValueError("missing curve data: supply the minus-curve "
                             "count at this extension step")
        cminus = curve_counts.get(s) if isinstance(curve_counts, dict) \
            else int(curve_counts)
        if cminus is None:
            raise ValueError(f"missing curve data for s={s}")
        counted = count_points(sys, s, bound, cache)
        predicted = coh.predicted_count(s, cminus, n_minus_fixed_count(q, s))
        return {"kind": sys.kind, "q": q, "m": m, "n": sys.n, "s": s,
                "counted": counted, "predicted": predicted,
                "equal": counted == predicted}
    if sys.kind == "Zm1":
        h = zm1_h_table(q, m)
        counted = count_points(sys, s, bound, cache)
        predicted = sum((-1) ** (i * (s + 1)) * q ** (i * s) * hi
                        for i, hi in h.items())
        upper = sum(q ** (i * s) * hi for i, hi in h.items())
        return {"kind": sys.kind, "q": q, "m": m, "s": s,
                "counted": counted, "predicted": predicted,
                "equal": counted == predicted,
                "upper_bound": upper, "maximal": counted == upper}
    if sys.kind == "Zm":
        counted = count_points(sys, s, bound, cache)
        # only boundary components rational over the scan field contribute
        nrat = n_minus_fixed_count(q, s)
        if m == 0:
            return {"kind": sys.kind, "q": q, "m": m, "s": s,
                    "counted": counted, "predicted": nrat,
                    "equal": counted == nrat}
        kminus = int(k_minus_codes(q).shape[0])
        fiber = count_points(zm_fiber_system(q, m), s, bound)
        predicted = nrat * kminus * fiber
        return {"kind": sys.kind, "q": q, "m": m, "s": s,
                "counted": counted, "predicted": predicted,
                "equal": counted == predicted,
                "rational_boundary_pairs": nrat, "line_layer": kminus,
                "fiber_count": fiber}
    raise ValueError(f"no fixed-point check for kind {sys.kind!r}")


# -- Laurent 2x2 helpers ----------------------------------------------------------

def _lmul(a, b):
    if a is None or b is None:
        return None
    return a * b


def _ladd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _lneg(a):
    return None if a is None else -a


def laurent_matmul(X, Y):
    """2x2 product of LaurentElem matrices; None encodes an exact zero."""
    out = [[None, None], [None, None]]
    for i in range(2):
        for j in range(2):
            out[i][j] = _ladd(_lmul(X[i][0], Y[0][j]), _lmul(X[i][1], Y[1][j]))
    return out


def laurent_matinv(X):
    """Inverse of a 2x2 LaurentElem matrix with unit-valuation determinant."""
    det = _ladd(_lmul(X[0][0], X[1][1]), _lneg(_lmul(X[0][1], X[1][0])))
    if det is None:
        raise ZeroDivisionError("singular matrix")
    v = det.valuation()
    if v is None:
        raise ZeroDivisionError("determinant vanishes on the known window")
    dinv = det.drop_to(v).inverse()
    return [[_lmul(X[1][1], dinv), _lmul(_lneg(X[0][1]), dinv)],
            [_lmul(_lneg(X[1][0]), dinv), _lmul(X[0][0], dinv)]]


def laurent_matsigma(X, j=1):
    return [[None if e is None else e.sigma(j) for e in row] for row in X]


def _pad(arr, prec):
    arr = np.asarray(arr, dtype=np.int64)
    out = np.zeros(prec, dtype=np.int64)
    out[: arr.shape[0]] = arr
    return out


def phi_rep(lvl, n, C, D, E, B, prec=None):
    """The lower-unipotent / antidiagonal / diagonal / lower-unipotent
    representative with coordinates (C, D mod t^(m+1); E, B mod t^m), as a
    2x2 LaurentElem matrix: entries
    [[t^(1-n) D B, t^(-n) D], [-t^n C + t^(2-n) E D B, t^(1-n) E D]]."""
    C = np.asarray(C, dtype=np.int64)
    D = np.asarray(D, dtype=np.int64)
    E = np.asarray(E, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    m = C.shape[0] - 1
    if prec is None:
        prec = 2 * n + 2 * m + 3
    Dp, Bp, Ep, Cp = (_pad(x, prec) for x in (D, B, E, C))
    DB = trunc.tmul(lvl, Dp, Bp)
    ED = trunc.tmul(lvl, Ep, Dp)
    EDB = trunc.tmul(lvl, ED, Bp)
    x11 = LaurentElem(lvl, 1 - n, DB) if B.shape[0] else None
    x12 = LaurentElem(lvl, -n, Dp)
    x22 = LaurentElem(lvl, 1 - n, ED) if E.shape[0] else None
    x21 = LaurentElem(lvl, n, lvl.neg(Cp))
    if E.shape[0] and B.shape[0]:
        x21 = x21 + LaurentElem(lvl, 2 - n, EDB)
    return [[x11, x12], [x21, x22]]


def psi_rep(lvl, n, a, C, D, A, B, prec=None):
    """Representative of the upper-cell point with coordinates
    (a mod t^n; C, D units mod t^(m+1); A, B mod t^(m+1)):
    [[1, a], [0, 1]] diag(t^(n/2), t^(-n/2)) diag(C, D)
    [[1, A], [0, 1]] [[1, 0], [tB, 1]]."""
    if n % 2 != 0:
        raise ValueError("n must be even")
    k = n // 2
    C = np.asarray(C, dtype=np.int64)
    m = C.shape[0] - 1
    if prec is None:
        prec = 4 * n + 2 * m + 6
    ap, Cp, Dp, Ap, Bp = (_pad(x, prec) for x in (a, C, D, A, B))
    one = _pad([1], prec)
    M1 = [[LaurentElem(lvl, k, one), LaurentElem(lvl, -k, ap)],
          [None, LaurentElem(lvl, -k, one)]]
    M2 = [[LaurentElem(lvl, 0, Cp), None], [None, LaurentElem(lvl, 0, Dp)]]
    M3 = [[LaurentElem(lvl, 0, one), LaurentElem(lvl, 0, Ap)],
          [None, LaurentElem(lvl, 0, one)]]
    M4 = [[LaurentElem(lvl, 0, one), None],
          [LaurentElem(lvl, 1, Bp), LaurentElem(lvl, 0, one)]]
    return laurent_matmul(laurent_matmul(M1, M2), laurent_matmul(M3, M4))


def _zero_laurent(lvl, shift, prec):
    return LaurentElem(lvl, shift, np.zeros(prec, dtype=np.int64))


def invm_normal_form(x, m):
    """Coordinates (C, D, E, B) of the level-m double coset of x.

    x is a 2x2 array of LaurentElem sharing one field level, lying in the
    Iwahori double coset of the antidiagonal element with upper-right entry
    t^(-n); n is read off the upper-right valuation and must exceed m.
    Entries must be known through t^(n+m).  Returns code arrays of lengths
    (m+1, m+1, m, m).  Raises ValueError when x is not in the coset or the
    precision is insufficient.
    """
    (x11, x12), (x21, x22) = x
    lvl = x12.lvl
    v = x12.valuation()
    if v is None or v >= 0:
        raise ValueError("upper-right entry must have negative valuation")
    n = -v
    if m >= n:
        raise ValueError(f"need m < n for the level-m form, got m={m}, n={n}")
    hi = n + m + 1

    def window(entry, floor, prec, what):
        if entry is None:
            return np.zeros(prec, dtype=np.int64)
        if entry.shift > floor:
            if prec == 0:
                # nothing to extract and nothing verifiable below the window
                return np.zeros(0, dtype=np.int64)
            raise ValueError(f"{what}: insufficient precision; coefficients "
                             f"from t^{floor} on are required")
        try:
            e = entry.drop_to(floor)
        except ValueError:
            raise ValueError(f"{what}: nonzero coefficient below t^{floor}; "
                             "not in the double coset")
        try:
            return e.window(floor, prec)
        except ValueError:
            raise ValueError(f"{what}: insufficient precision; need "
                             f"coefficients through t^{floor + prec - 1}")

    D = window(x12, -n, m + 1, "upper-right entry")
    if D[0] == 0:
        raise ValueError("upper-right entry has valuation above the "
                         "antidiagonal depth; not in the double coset")
    Dinv = trunc.tinv(lvl, D)
    if m > 0:
        B = trunc.tmul(lvl, window(x11, 1 - n, m, "upper-left entry"),
                       Dinv[:m])
        E = trunc.tmul(lvl, window(x22, 1 - n, m, "lower-right entry"),
                       Dinv[:m])
    else:
        window(x11, 1 - n, 0, "upper-left entry")
        window(x22, 1 - n, 0, "lower-right entry")
        B = np.zeros(0, dtype=np.int64)
        E = np.zeros(0, dtype=np.int64)

    z11 = x11 if x11 is not None else _zero_laurent(lvl, 1 - n, hi)
    z22 = x22 if x22 is not None else _zero_laurent(lvl, 1 - n, hi)
    z21 = x21 if x21 is not None else _zero_laurent(lvl, 2 - n, hi)
    det = z11 * z22 - x12 * z21
    vd = det.valuation()
    if vd is None or vd != 0:
        raise ValueError("determinant is not a unit of valuation zero")
    detw = window(det.drop_to(0), 0, m + 1, "determinant")
    C = trunc.tmul(lvl, detw, Dinv)

    # no further congruence is needed: vanishing of the determinant below
    # t^0 forces x21 = x12^(-1) x11 x22 mod t^n, which pins the lower-left
    # window to t^(2-n) E D B through t^(m+1-n) since 2n >= m+2
    return C, D, E, B


def sigma_conjugate_to_standard(q, m, n, C, D, E, B, d_in=2):
    """Trivializing conjugator for a twisted double-coset representative.

    Input coordinates live over the tower level of degree d_in.  When the
    emptiness criterion holds (B != -sigma(E)) returns None.  Otherwise
    searches successive even-degree levels for a solution of the twisted
    Lang equation d = D sigma(C) sigma^2(d), builds
    i = [[1,0],[tE,1]] diag(d, C sigma(d)), verifies through the normal
    form that i^(-1) x sigma(i) is the standard representative, and
    returns a dict with the conjugator and its field data.  Raises when no
    table-sized level admits a solution.
    """
    p, e = _prime_power(q)
    base_tower = fftower.make_tower(p, e, [1, 2, d_in])
    blvl = base_tower.level(d_in)
    C = np.asarray(C, dtype=np.int64)
    D = np.asarray(D, dtype=np.int64)
    E = np.asarray(E, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if not np.array_equal(B, blvl.neg(blvl.frob(E))):
        return None

    base = d_in if d_in % 2 == 0 else 2 * d_in
    cand = []
    dd = base
    while (p ** (e * dd)) <= fftower.TABLE_MAX:
        cand.append(dd)
        dd += base
    for dprime in cand:
        tower = fftower.make_tower(p, e, sorted({1, 2, d_in, dprime}))
        lvl = tower.level(dprime)
        emb = tower.embed(d_in, dprime)
        Ce, De = emb.codes(C), emb.codes(D)
        Ee, Be = emb.codes(E), emb.codes(B)
        u = trunc.tmul(lvl, De, trunc.tsigma(lvl, Ce))
        codes = lvl.all_codes()[1:]
        sol = codes[lvl.mul(lvl.frob(codes, 2), u[0]) == codes]
        if sol.shape[0] == 0:
            continue
        d10 = int(sol.min())
        # normalized tail: sigma^2(g) v = g with v = u / u_0, g = 1 + ...
        v = lvl.mul(u, lvl.inv(u[0]))
        g = np.zeros(m + 1, dtype=np.int64)
        g[0] = 1
        ok = True
        for i in range(1, m + 1):
            rhs = v[i]
            for j in range(1, i):
                rhs = lvl.add(rhs, lvl.mul(lvl.frob(g[j], 2), v[i - j]))
            rhs = lvl.neg(rhs)
            allc = lvl.all_codes()
            soli = allc[lvl.sub(lvl.frob(allc, 2), allc) == rhs]
            if soli.shape[0] == 0:
                ok = False
                break
            g[i] = int(soli.min())
        if not ok:
            continue
        d10a = np.zeros(m + 1, dtype=np.int64)
        d10a[0] = d10
        d1 = trunc.tmul(lvl, d10a, g)
        d2 = trunc.tmul(lvl, Ce, trunc.tsigma(lvl, d1))

        prec = 2 * n + 2 * m + 3
        one = _pad([1], prec)
        d1p, d2p, Ep2 = _pad(d1, prec), _pad(d2, prec), _pad(Ee, prec)
        imat = [[LaurentElem(lvl, 0, d1p), None],
                [LaurentElem(lvl, 1, trunc.tmul(lvl, Ep2, d1p)),
                 LaurentElem(lvl, 0, d2p)]]
        rep = phi_rep(lvl, n, Ce, De, Ee, Be, prec)
        y = laurent_matmul(laurent_matinv(imat),
                           laurent_matmul(rep, laurent_matsigma(imat)))
        Cy, Dy, Ey, By = invm_normal_form(y, m)
        ident = np.zeros(m + 1, dtype=np.int64)
        ident[0] = 1
        if not (np.array_equal(Cy, ident) and np.array_equal(Dy, ident)
                and not Ey.any() and not By.any()):
            raise RuntimeError("conjugator verification failed")
        return {"i": imat, "tower": tower, "degree": dprime,
                "d1": d1, "d2": d2}
    raise RuntimeError("Lang solution not found within the degree bound; "
                       "raise the bound")

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gl2adlv import fftower, groups, trunc


def _km(p, e, m, extra=()):
    tw = fftower.make_tower(p, e, [1, 2, *extra])
    return groups.KmGroup(tw, m)


def test_group_orders():
    assert _km(2, 1, 1).order() == 96
    assert _km(2, 1, 2).order() == 1536
    assert _km(3, 1, 1).order() == 3888
    assert _km(3, 1, 2).order() == 314928


def test_enumeration_matches_order():
    for p, m in ((2, 1), (3, 1), (2, 2)):
        G = _km(p, 1, m)
        assert len(G.enumerate_all()) == G.order()


def test_encode_decode_roundtrip():
    G = _km(3, 1, 1)
    X = G.enumerate_all()[:200]
    assert np.array_equal(G.decode(G.encode(X)), X)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3 ** 8 - 1), st.integers(0, 3 ** 8 - 1))
def test_mul_inv_det(i, j):
    G = _km(3, 1, 1)
    allg = G.enumerate_all()
    x = allg[i % len(allg)]
    y = allg[j % len(allg)]
    prod = G.mul(x, y)
    # det multiplicative
    assert np.array_equal(G.det(prod),
                          trunc.tmul(G.lvl, G.det(x), G.det(y)))
    # inverse really inverts
    assert np.array_equal(G.mul(prod, G.inv(prod)), G.identity())


def test_subgroup_sizes():
    G = _km(2, 1, 1)
    allg = G.enumerate_all()
    assert int(G.in_congruence(allg, 1).sum()) == 16
    assert len(G.enumerate_unipotent()) == 4
    assert len(G.enumerate_scalars()) == 2
    G3 = _km(3, 1, 2)
    assert len(G3.enumerate_unipotent()) == 27
    assert len(G3.enumerate_scalars()) == 18


def test_central_level():
    G = _km(3, 1, 2)
    assert int(G.central_level(G.identity())) == 3
    z = G.scalar(np.array([2, 1, 0]))
    assert int(G.central_level(z)) == 3
    u = G.unipotent_upper(np.array([0, 1, 0]))
    assert int(G.central_level(u)) == 1
    d = G.identity()
    d[0, 0] = 2
    assert int(G.central_level(d)) == 0


def test_element_level():
    G = _km(3, 1, 2)
    assert int(G.element_level(G.identity())) == 3
    z = G.scalar(np.array([2, 1, 0]))
    assert int(G.element_level(z)) == 0
    z1 = G.scalar(np.array([1, 2, 0]))
    assert int(G.element_level(z1)) == 1
    u = G.unipotent_upper(np.array([0, 0, 1]))
    assert int(G.element_level(u)) == 2


def test_pgl_order_small():
    G = _km(2, 1, 1)
    assert G.pgl_order(G.identity()) == 1
    u = G.unipotent_upper(np.array([1, 0]))
    assert G.pgl_order(u) == 2
    w = np.zeros((4, 2), dtype=np.int64)
    w[1, 0] = 1
    w[2, 0] = 1
    assert G.pgl_order(w) == 2


def test_left_cosets_partition():
    G = _km(2, 1, 1)
    reps = G.left_coset_reps(G.enumerate_scalars())
    assert len(reps) == G.order() // 2


def test_conjugacy_classes_partition():
    G = _km(2, 1, 1)
    classes = G.conjugacy_classes()
    total = sum(len(idx) for _, idx in classes)
    assert total == G.order()
    # sampled closure: conjugating a member stays in its class
    srt = G.all_encoded_sorted()
    rep, idx = classes[len(classes) // 2]
    g = G.decode(srt[np.array([3, 17, 40])])
    conj = G.conj(g, rep[None])
    pos = np.searchsorted(srt, G.encode(conj))
    member = set(idx.tolist())
    assert all(int(p) in member for p in pos)


def test_torus_sizes_and_membership():
    for p in (2, 3):
        G = _km(p, 1, 1)
        T = groups.TorusData(G)
        q = G.q
        assert len(T.tau_codes) == (q * q - 1) * q ** 2
        # injective into the group
        assert len(np.unique(T.enc)) == len(T.enc)
        G.index_of(T.mats)  # raises if any falls outside
        assert int(T.norm_one_mask.sum()) == (q + 1) * q
        assert len(T.scalar_rows()) == (q - 1) * q


def test_torus_is_homomorphic_image():
    G = _km(3, 1, 1)
    T = groups.TorusData(G)
    rng = np.random.default_rng(3)
    i = rng.integers(0, len(T.tau_codes), size=25)
    j = rng.integers(0, len(T.tau_codes), size=25)
    prod_tau = T.torus_mul(T.tau_codes[i], T.tau_codes[j])
    rows = T.tau_row(prod_tau)
    assert (rows >= 0).all()
    assert np.array_equal(G.mul(T.mats[i], T.mats[j]), T.mats[rows])
    # det of the image is the norm of tau
    det1 = G.det(T.mats[i])
    norm2 = trunc.norm_sigma(T.lvl2, T.tau_codes[i])
    assert np.array_equal(T.emb.codes(det1), norm2)


def test_torus_beta_is_conjugated_eigenpair():
    for p in (2, 3):
        tw = fftower.make_tower(p, 1, [1, 2])
        G = groups.KmGroup(tw, 0)
        T = groups.TorusData(G)
        lam = None
        lvl2 = T.lvl2
        # the eigenvalue attached to beta's rational form
        if p == 3:
            D2 = T.emb.codes(np.array([T.D]))[0]
            for c in range(1, lvl2.Q):
                if int(lvl2.mul(np.array([c]), np.array([c]))[0]) == D2:
                    lam = c
                    break
        else:
            D2 = T.emb.codes(np.array([T.D]))[0]
            for c in range(lvl2.Q):
                c2 = int(lvl2.mul(np.array([c]), np.array([c]))[0])
                if int(lvl2.add(np.array([c2]), np.array([c]))[0]) == D2 \
                        and c not in (0, 1):
                    lam = c
                    break
        row = T.tau_row(np.array([[lam]]))[0]
        expect = np.zeros((4, 1), dtype=np.int64)
        expect[:, 0] = T.beta.reshape(-1)
        assert np.array_equal(T.mats[row], expect)


def test_tau_levels():
    G = _km(2, 1, 1)
    T = groups.TorusData(G)
    lev = T.tau_level()
    counts = np.bincount(lev, minlength=3)
    assert counts.tolist() == [8, 2, 2]
    # level of the matrix image agrees
    glev = G.central_level(T.mats)
    assert np.array_equal(glev, lev)


def test_is_maximal_examples():
    for p in (2, 3):
        G = _km(p, 1, 1)
        T = groups.TorusData(G)
        lvl2 = T.lvl2
        # 1 + omega t, omega outside the rational subfield: maximal
        rat = set(T.emb.codes(np.arange(G.q)).tolist())
        omega = min(c for c in range(lvl2.Q) if c not in rat)
        tau = np.array([[1, omega]], dtype=np.int64)
        row = T.tau_row(tau)[0]
        assert bool(G.is_maximal(T.mats[row]))
        # 1 + t is central, not maximal
        tau_c = np.array([[1, 1]], dtype=np.int64)
        rowc = T.tau_row(tau_c)[0]
        assert not bool(G.is_maximal(T.mats[rowc]))
        # rational scalars are never maximal
        z = G.scalar(np.array([1, 1]))
        assert not bool(G.is_maximal(z))
        with pytest.raises(ValueError):
            G.is_maximal(G.identity())


def test_maximality_criterion_lower_left_entry():
    # over the whole torus image: maximal <=> v_t of the lower-left entry
    # equals the congruence depth, and that entry is
    # t^l * unit * (tau - sigma tau) up to the fixed eigenvector frame
    for p in (2, 3):
        G = _km(p, 1, 2)
        T = groups.TorusData(G)
        lev = T.tau_level()
        noncentral = lev < G.m + 1
        mats = T.mats[noncentral]
        taus = T.tau_codes[noncentral]
        maxmask = G.is_maximal(mats)
        x3v = trunc.tval(mats[:, 2, :])
        el = G.element_level(mats)
        assert np.array_equal(maxmask, x3v == el)
        # x3 = t^l u (tau - sigma tau): valuations add up
        diff = T.lvl2.sub(taus, trunc.tsigma(T.lvl2, taus))
        assert np.array_equal(x3v, trunc.tval(diff))


def test_char_poly_map_example():
    # x = 1 + t*beta at level one: the reduced characteristic value is
    # tau1^2 - D for odd q (beta = [[0,1],[D,0]])
    G = _km(3, 1, 1)
    T = groups.TorusData(G)
    x = G.identity()
    x[1, 1] = 1
    x[2, 1] = T.D
    taus = T.tau_codes[trunc.tval(T.lvl2.sub(
        T.tau_codes, np.array([1, 0])[None, :])) >= 1]
    vals = T.char_poly_map(x, 1, taus)
    lvl2 = T.lvl2
    t1 = taus[:, 1]
    D2 = T.emb.codes(np.array([T.D]))[0]
    expect = lvl2.sub(lvl2.mul(t1, t1), D2)
    assert np.array_equal(vals[:, 0], expect)


def test_char_poly_map_invariances():
    G = _km(2, 1, 1)
    T = groups.TorusData(G)
    rng = np.random.default_rng(7)
    lev = T.tau_level()
    # a maximal depth-one torus element
    cand = [r for r in np.nonzero(lev == 1)[0].tolist()
            if bool(G.is_maximal(T.mats[r]))]
    row = cand[0]
    x = T.mats[row]
    taus = T.tau_codes[T.tau_level() >= 1]
    base = T.char_poly_map(x, 1, taus)
    # conjugation invariance
    for _ in range(4):
        g = G.decode(G.all_encoded_sorted()[
            rng.integers(0, G.order(), size=1)])[0]
        assert np.array_equal(T.char_poly_map(G.conj(g, x), 1, taus), base)
    # the torus argument factors: p_x(tau) vanishes exactly at tau_x and
    # its conjugate
    tx = T.tau_codes[row]
    sx = trunc.tsigma(T.lvl2, tx[None, :])[0]
    zero = ~np.any(base, axis=1)
    hits = {tuple(t) for t in taus[zero].tolist()}
    assert tuple(tx.tolist()) in hits and tuple(sx.tolist()) in hits


def test_char_poly_map_rejects_shallow_tau():
    G = _km(2, 1, 1)
    T = groups.TorusData(G)
    x = G.identity()
    x[1, 1] = 1
    x[2, 1] = T.D
    bad = T.tau_codes[T.tau_level() == 0][:3]
    with pytest.raises(ValueError):
        T.char_poly_map(x, 1, bad)


def test_moebius_action_law():
    G = _km(2, 1, 1)
    tw = G.tower
    lvl = tw.level(2)
    rng = np.random.default_rng(11)
    allg = G.enumerate_all()
    for _ in range(20):
        x = allg[rng.integers(0, len(allg))]
        y = allg[rng.integers(0, len(allg))]
        a = rng.integers(0, lvl.Q, size=(2,))
        C = np.array([1 + rng.integers(0, lvl.Q - 1), rng.integers(0, lvl.Q)])
        A = rng.integers(0, lvl.Q, size=(1,))
        try:
            a1, C1, A1 = G.moebius_act(y, lvl, a, C, A)
            a2, C2, A2 = G.moebius_act(x, lvl, a1, C1, A1)
        except ArithmeticError:
            continue
        a3, C3, A3 = G.moebius_act(G.mul(x, y), lvl, a, C, A)
        assert np.array_equal(a2, a3)
        assert np.array_equal(C2, C3)
        assert np.array_equal(A2, A3)


def test_moebius_rejects_nonunit_denominator():
    G = _km(2, 1, 1)
    lvl = G.tower.level(2)
    w = np.zeros((4, 2), dtype=np.int64)
    w[1, 0] = 1
    w[2, 0] = 1
    # a with a_0 = 0 sends the denominator x3 a + x4 to a non-unit
    with pytest.raises(ArithmeticError):
        G.moebius_act(w, lvl, np.array([0, 1]), np.array([1, 0]),
                      np.array([0]))

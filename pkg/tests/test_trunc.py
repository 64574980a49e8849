import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gl2adlv import fftower, trunc


def _f2():
    return fftower.make_tower(2, 1, [1]).level(1)


def test_geometric_series_inverse():
    lvl = _f2()
    one_minus_t = np.array([1, 1, 0])  # 1 + t over F_2, i.e. 1 - t
    inv = trunc.tinv(lvl, one_minus_t)
    assert inv.tolist() == [1, 1, 1]
    assert trunc.tmul(lvl, one_minus_t, inv).tolist() == [1, 0, 0]


def test_tmul_matches_poly_mul():
    lvl = fftower.make_tower(3, 1, [1]).level(1)
    a = np.array([1, 2, 0])
    b = np.array([2, 1, 1])
    # (1+2t)(2+t+t^2) = 2 + 5t + 3t^2 + ... = 2 + 2t mod 3, t^2 coeff 1+2=3=0
    assert trunc.tmul(lvl, a, b).tolist() == [2, 2, 0]


def test_tsigma_is_coefficientwise():
    tw = fftower.make_tower(2, 1, [2])
    lvl = tw.level(2)
    a = np.array([2, 3, 1])
    s = trunc.tsigma(lvl, a)
    assert s.tolist() == [3, 2, 1]


def test_tval():
    A = np.array([[0, 0, 2], [1, 0, 0], [0, 0, 0]])
    assert trunc.tval(A).tolist() == [2, 0, 3]


def test_norm_sigma_lands_in_subfield():
    tw = fftower.make_tower(3, 1, [1, 2])
    lvl = tw.level(2)
    rng = np.random.default_rng(5)
    C = rng.integers(0, 9, size=(40, 3))
    N = trunc.norm_sigma(lvl, C)
    assert trunc.subfield_mask(tw, 1, 2, N).all()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=3, max_size=3),
       st.lists(st.integers(0, 8), min_size=3, max_size=3))
def test_sigma_is_ring_hom_on_series(ca, cb):
    tw = fftower.make_tower(3, 1, [2])
    lvl = tw.level(2)
    a, b = np.array(ca), np.array(cb)
    lhs = trunc.tsigma(lvl, trunc.tmul(lvl, a, b))
    rhs = trunc.tmul(lvl, trunc.tsigma(lvl, a), trunc.tsigma(lvl, b))
    assert np.array_equal(lhs, rhs)


def test_trunc_elem_ring_ops():
    lvl = _f2()
    x = trunc.TruncElem(lvl, [1, 1, 0])
    y = trunc.TruncElem(lvl, [1, 0, 1])
    assert (x * y).coeffs.tolist() == [1, 1, 1]
    assert (x + y).coeffs.tolist() == [0, 1, 1]
    assert x.inverse().coeffs.tolist() == [1, 1, 1]
    assert not (x + y).is_unit()
    assert (x + y).valuation() == 1


def test_laurent_mul_and_inverse_track_shift():
    lvl = _f2()
    x = trunc.LaurentElem(lvl, -2, [1, 0, 1])  # t^-2 (1 + t^2)
    xi = x.inverse()
    assert xi.shift == 2
    prod = x * xi
    assert prod.shift == 0
    assert prod.coeffs.tolist() == [1, 0, 0]
    assert x.valuation() == -2


def test_laurent_add_keeps_overlap_only():
    lvl = _f2()
    x = trunc.LaurentElem(lvl, -1, [1, 1, 1])  # knows t^-1..t^1
    y = trunc.LaurentElem(lvl, 0, [1, 1])      # knows t^0..t^1
    z = x + y
    assert z.shift == -1
    assert z.coeffs.tolist() == [1, 0, 0]
    assert z.prec == 3


def test_laurent_drop_and_window():
    lvl = _f2()
    x = trunc.LaurentElem(lvl, -1, [0, 1, 1])
    y = x.drop_to(0)
    assert y.shift == 0 and y.coeffs.tolist() == [1, 1]
    with pytest.raises(ValueError):
        x.drop_to(1)
    assert x.window(0, 2).tolist() == [1, 1]
    with pytest.raises(ZeroDivisionError):
        x.inverse()
    assert y.inverse().shift == 0

"""Truncated power series and Laurent expansions with coefficients in a
tower level.

A truncated series mod t^prec is a code array of shape (..., prec), entry i
holding the t^i coefficient; all kernel functions broadcast over the leading
axes so batches of series go through numpy in one call.  Laurent elements
track an explicit t-shift together with the window of known coefficients, so
precision bookkeeping survives multiplication and inversion of elements with
poles.
"""

import numpy as np


def tmul(lvl, A, B):
    """Product in lvl[t]/t^prec of coefficient arrays of equal prec."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    prec = A.shape[-1]
    if B.shape[-1] != prec:
        raise ValueError("mixed truncation precision")
    shape = np.broadcast_shapes(A.shape, B.shape)
    out = np.zeros(shape, dtype=np.int64)
    for k in range(prec):
        acc = out[..., k]
        for i in range(k + 1):
            acc = lvl.add(acc, lvl.mul(A[..., i], B[..., k - i]))
        out[..., k] = acc
    return out


def tinv(lvl, A):
    """Inverse of unit series (constant term nonzero) mod t^prec."""
    A = np.asarray(A, dtype=np.int64)
    prec = A.shape[-1]
    out = np.zeros_like(A)
    b0 = lvl.inv(A[..., 0])
    out[..., 0] = b0
    for k in range(1, prec):
        s = np.zeros(A.shape[:-1], dtype=np.int64)
        for i in range(1, k + 1):
            s = lvl.add(s, lvl.mul(A[..., i], out[..., k - i]))
        out[..., k] = lvl.neg(lvl.mul(b0, s))
    return out


def tsigma(lvl, A, j=1):
    """Coefficientwise q^j-power Frobenius."""
    return lvl.frob(np.asarray(A, dtype=np.int64), j)


def tval(A):
    """t-adic valuation per series; prec stands in for +infinity."""
    A = np.asarray(A)
    prec = A.shape[-1]
    nz = A != 0
    has = nz.any(axis=-1)
    idx = np.argmax(nz, axis=-1)
    return np.where(has, idx, prec)


def norm_sigma(lvl, A, j=1):
    """A * sigma^j(A); for A over a quadratic extension and j=1 this is the
    norm down to the fixed field (coefficients land in the subfield)."""
    return tmul(lvl, A, tsigma(lvl, A, j))


def subfield_mask(tower, d_sub, d, codes):
    """Boolean mask of which codes of level d lie in the image of level d_sub."""
    sub = tower.subfield_codes(d_sub, d)
    flag = np.zeros(tower.level(d).Q, dtype=bool)
    flag[sub] = True
    return flag[np.asarray(codes, dtype=np.int64)]


class TruncElem:
    """Scalar in lvl[t]/t^prec.  Convenience wrapper over the array kernels."""

    __slots__ = ("lvl", "coeffs")

    def __init__(self, lvl, coeffs):
        self.lvl = lvl
        self.coeffs = np.asarray(coeffs, dtype=np.int64).copy()
        if self.coeffs.ndim != 1:
            raise ValueError("TruncElem holds a single series")

    @property
    def prec(self):
        return self.coeffs.shape[0]

    def _check(self, other):
        if not isinstance(other, TruncElem):
            raise TypeError("need TruncElem")
        if other.lvl is not self.lvl or other.prec != self.prec:
            raise ValueError("mixed rings")

    def __add__(self, other):
        self._check(other)
        return TruncElem(self.lvl, self.lvl.add(self.coeffs, other.coeffs))

    def __sub__(self, other):
        self._check(other)
        return TruncElem(self.lvl, self.lvl.sub(self.coeffs, other.coeffs))

    def __mul__(self, other):
        self._check(other)
        return TruncElem(self.lvl, tmul(self.lvl, self.coeffs, other.coeffs))

    def inverse(self):
        return TruncElem(self.lvl, tinv(self.lvl, self.coeffs))

    def sigma(self, j=1):
        return TruncElem(self.lvl, tsigma(self.lvl, self.coeffs, j))

    def is_unit(self):
        return self.coeffs[0] != 0

    def valuation(self):
        return int(tval(self.coeffs))

    def __eq__(self, other):
        return (isinstance(other, TruncElem) and other.lvl is self.lvl
                and np.array_equal(other.coeffs, self.coeffs))

    def __hash__(self):
        return hash((id(self.lvl), self.coeffs.tobytes()))

    def __repr__(self):
        return f"TruncElem({self.coeffs.tolist()})"


class LaurentElem:
    """t^shift * series, with coefficients known for exponents
    shift, shift+1, ..., shift+prec-1 only.

    Operations keep the honest window: adding two elements only knows the
    overlap, multiplying keeps min(prec) coefficients, inversion needs the
    leading coefficient to be a unit.
    """

    __slots__ = ("lvl", "shift", "coeffs")

    def __init__(self, lvl, shift, coeffs):
        self.lvl = lvl
        self.shift = int(shift)
        self.coeffs = np.asarray(coeffs, dtype=np.int64).copy()

    @property
    def prec(self):
        return self.coeffs.shape[0]

    @classmethod
    def from_trunc(cls, x, shift=0):
        return cls(x.lvl, shift, x.coeffs)

    def __add__(self, other):
        if other.lvl is not self.lvl:
            raise ValueError("mixed rings")
        s = min(self.shift, other.shift)
        end = min(self.shift + self.prec, other.shift + other.prec)
        if end <= s:
            raise ValueError("no overlap of known coefficient windows")
        out = np.zeros(end - s, dtype=np.int64)
        a0 = self.shift - s
        out[a0:a0 + self.prec][: end - self.shift] = \
            self.coeffs[: end - self.shift]
        b0 = other.shift - s
        seg = other.coeffs[: end - other.shift]
        out[b0:b0 + len(seg)] = self.lvl.add(out[b0:b0 + len(seg)], seg)
        return LaurentElem(self.lvl, s, out)

    def __neg__(self):
        return LaurentElem(self.lvl, self.shift, self.lvl.neg(self.coeffs))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if other.lvl is not self.lvl:
            raise ValueError("mixed rings")
        prec = min(self.prec, other.prec)
        a = self.coeffs[:prec]
        b = other.coeffs[:prec]
        return LaurentElem(self.lvl, self.shift + other.shift,
                           tmul(self.lvl, a, b))

    def inverse(self):
        if self.coeffs[0] == 0:
            raise ZeroDivisionError("leading coefficient not a unit; "
                                    "shift the window first")
        return LaurentElem(self.lvl, -self.shift, tinv(self.lvl, self.coeffs))

    def sigma(self, j=1):
        return LaurentElem(self.lvl, self.shift,
                           tsigma(self.lvl, self.coeffs, j))

    def valuation(self):
        """Exact t-adic valuation; None if zero on the whole known window."""
        v = int(tval(self.coeffs))
        if v == self.prec:
            return None
        return self.shift + v

    def shifted(self, k):
        """Multiply by t^k (exact)."""
        return LaurentElem(self.lvl, self.shift + k, self.coeffs)

    def drop_to(self, shift):
        """Reinterpret with a higher starting exponent, checking the dropped
        leading coefficients vanish."""
        k = shift - self.shift
        if k < 0:
            raise ValueError("can only raise the shift")
        if k >= self.prec or self.coeffs[:k].any():
            raise ValueError("nonzero coefficient below requested shift")
        return LaurentElem(self.lvl, shift, self.coeffs[k:])

    def window(self, shift, prec):
        """Coefficients for t^shift..t^(shift+prec-1); error outside knowledge."""
        if shift < self.shift:
            raise ValueError("window starts below known coefficients")
        k = shift - self.shift
        if k + prec > self.prec:
            raise ValueError("window exceeds known coefficients")
        return self.coeffs[k:k + prec].copy()

    def __eq__(self, other):
        if not isinstance(other, LaurentElem) or other.lvl is not self.lvl:
            return False
        va, vb = self.valuation(), other.valuation()
        if va is None or vb is None:
            return va is None and vb is None
        if va != vb:
            return False
        ea = self.shift + self.prec
        eb = other.shift + other.prec
        e = min(ea, eb)
        return np.array_equal(self.window(va, e - va), other.window(vb, e - vb))

    def __repr__(self):
        return f"LaurentElem(t^{self.shift} * {self.coeffs.tolist()})"

"""Exact arithmetic in cyclotomic fields Q(zeta_N).

Values of the finite-group characters in this package are sums of roots of
unity; floating point would wash out the cancellations the comparisons
depend on, so everything here is Fractions on the power basis
1, x, ..., x^(phi(N)-1) modulo the N-th cyclotomic polynomial.
"""

import functools
from fractions import Fraction

import numpy as np


def _divisors(N):
    out = [d for d in range(1, N + 1) if N % d == 0]
    return out


def _poly_div_exact(a, b):
    """Exact division of integer polynomials (low first), b monic or with
    leading +-1."""
    a = list(a)
    out = [0] * (len(a) - len(b) + 1)
    lead = b[-1]
    for i in range(len(a) - 1, len(b) - 2, -1):
        c = a[i]
        if c % lead != 0:
            raise ArithmeticError("division not exact")
        c //= lead
        out[i - len(b) + 1] = c
        for j, bj in enumerate(b):
            a[i - len(b) + 1 + j] -= c * bj
    if any(a[: len(b) - 1]):
        raise ArithmeticError("division not exact")
    return out


@functools.lru_cache(maxsize=None)
def cyclotomic_polynomial(N):
    """Coefficients of Phi_N, constant term first."""
    if N == 1:
        return (-1, 1)
    poly = [0] * (N + 1)
    poly[0] = -1
    poly[N] = 1
    for d in _divisors(N)[:-1]:
        poly = _poly_div_exact(poly, cyclotomic_polynomial(d))
    return tuple(poly)


@functools.lru_cache(maxsize=None)
def _power_rows(N):
    """(N, phi(N)) int64 matrix; row j = x^j mod Phi_N.  Since Phi_N divides
    x^N - 1, exponents are first reduced mod N."""
    phi = len(cyclotomic_polynomial(N)) - 1
    rows = np.zeros((N, phi), dtype=np.int64)
    f = list(cyclotomic_polynomial(N))
    cur = [0] * phi
    cur[0] = 1
    for j in range(N):
        rows[j] = cur
        cur = [0] + cur
        if cur[phi] != 0:
            c = cur[phi]
            cur = [cur[i] - c * f[i] for i in range(phi)]
        else:
            cur = cur[:phi]
    return rows


class CycloNum:
    """An element of Q(zeta_N) with exact Fraction coefficients."""

    __slots__ = ("N", "coeffs")

    def __init__(self, N, coeffs):
        phi = len(cyclotomic_polynomial(N)) - 1
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != phi:
            raise ValueError(f"need {phi} coefficients for N={N}")
        self.N = N
        self.coeffs = coeffs

    @classmethod
    def root(cls, N, k=1):
        """zeta_N^k."""
        rows = _power_rows(N)
        return cls(N, rows[k % N].tolist())

    @classmethod
    def rational(cls, a):
        return cls(1, [Fraction(a)])

    # -- change of field -----------------------------------------------------

    def lift(self, M):
        if M % self.N != 0:
            raise ValueError("can only lift to a multiple of N")
        if M == self.N:
            return self
        rows = _power_rows(M)
        step = M // self.N
        phi = rows.shape[1]
        out = [Fraction(0)] * phi
        for j, c in enumerate(self.coeffs):
            if c:
                row = rows[(j * step) % M]
                for i in range(phi):
                    if row[i]:
                        out[i] += c * int(row[i])
        return CycloNum(M, out)

    def _pair(self, other):
        if not isinstance(other, CycloNum):
            other = CycloNum.rational(other)
        N = self.N * other.N // _gcd(self.N, other.N)
        return self.lift(N), other.lift(N)

    # -- ring ops --------------------------------------------------------------

    def __add__(self, other):
        a, b = self._pair(other)
        return CycloNum(a.N, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CycloNum(self.N, [-c for c in self.coeffs])

    def __sub__(self, other):
        a, b = self._pair(other)
        return CycloNum(a.N, [x - y for x, y in zip(a.coeffs, b.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycloNum(self.N, [c * other for c in self.coeffs])
        a, b = self._pair(other)
        phi = len(a.coeffs)
        conv = [Fraction(0)] * (2 * phi - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        conv[i + j] += x * y
        rows = _power_rows(a.N)
        out = [Fraction(0)] * phi
        for j, c in enumerate(conv):
            if c:
                row = rows[j % a.N]
                for i in range(phi):
                    if row[i]:
                        out[i] += c * int(row[i])
        return CycloNum(a.N, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, Fraction)):
            raise TypeError("division only by rationals")
        return CycloNum(self.N, [c / other for c in self.coeffs])

    # -- Galois ----------------------------------------------------------------

    def galois(self, k):
        """Apply zeta -> zeta^k; k must be prime to N."""
        if _gcd(k % self.N, self.N) != 1:
            raise ValueError("k not prime to N")
        rows = _power_rows(self.N)
        phi = len(self.coeffs)
        out = [Fraction(0)] * phi
        for j, c in enumerate(self.coeffs):
            if c:
                row = rows[(j * k) % self.N]
                for i in range(phi):
                    if row[i]:
                        out[i] += c * int(row[i])
        return CycloNum(self.N, out)

    def conj(self):
        """Complex conjugation."""
        return self.galois(self.N - 1) if self.N > 1 else self

    # -- predicates --------------------------------------------------------------

    def is_rational(self):
        return all(c == 0 for c in self.coeffs[1:])

    def rational_value(self):
        if not self.is_rational():
            raise ArithmeticError(f"not rational: {self!r}")
        return self.coeffs[0]

    def is_integral(self):
        return all(c.denominator == 1 for c in self.coeffs)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if not isinstance(other, CycloNum):
            return NotImplemented
        a, b = self._pair(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        if self.is_rational():
            return hash(self.coeffs[0])
        return hash((self.N, self.coeffs))

    def __repr__(self):
        if self.is_rational():
            return f"CycloNum({self.coeffs[0]})"
        return f"CycloNum(N={self.N}, {[str(c) for c in self.coeffs]})"

    # -- serialization -------------------------------------------------------------

    def to_obj(self):
        return {"N": self.N,
                "coeffs": [[c.numerator, c.denominator] for c in self.coeffs]}

    @classmethod
    def from_obj(cls, obj):
        return cls(obj["N"], [Fraction(n, d) for n, d in obj["coeffs"]])


def accumulate_root_counts(N, exponents, counts):
    """Sum of counts[i] * zeta_N^exponents[i], folded through one table pass."""
    exponents = np.asarray(exponents, dtype=np.int64) % N
    counts = np.asarray(counts, dtype=np.int64)
    acc = np.zeros(N, dtype=np.int64)
    np.add.at(acc, exponents, counts)
    rows = _power_rows(N)
    out = acc @ rows
    return CycloNum(N, out.tolist())


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a

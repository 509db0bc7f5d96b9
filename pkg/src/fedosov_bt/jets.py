"""Truncated Taylor jets in a holomorphic chart, batched over base points.

A :class:`ChartJet` stores the Taylor coefficients ``c[A, B]`` of a smooth
complex function ``F(z0 + u)`` in the displacement variables ``u`` and
``conj(u)``, for all multi-indices with ``|A| + |B| <= order``.  Coefficients
are stored as a 2-D array whose rows are the multi-indices (graded order, so a
lower-order jet is a prefix of a higher-order one) and whose columns are
independent base points.  Every arithmetic operation therefore runs over a
whole quadrature grid at once.

Two coefficient domains are supported: complex double (``complex128``) and
exact Gaussian rationals (numpy ``object`` arrays of ``QQ_I`` elements).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from sympy.polys.domains import QQ_I

from . import kernels


class JetOrderError(ValueError):
    """Raised when a computation needs Taylor data beyond the stored order."""


# ---------------------------------------------------------------------------
# exact scalars


def exact(x) -> object:
    """Convert an int, Fraction, Gaussian-integer complex, or QQ_I element to QQ_I."""
    if isinstance(x, QQ_I.dtype):
        return x
    if isinstance(x, (int, np.integer)):
        return QQ_I(int(x), 0)
    if isinstance(x, Fraction):
        return QQ_I.convert(QQ_I.dom(x.numerator, x.denominator))
    if isinstance(x, complex):
        if x.real != int(x.real) or x.imag != int(x.imag):
            raise ValueError(f"cannot convert non-integral complex {x!r} exactly")
        return QQ_I(int(x.real), int(x.imag))
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return QQ_I.convert(QQ_I.dom(int(x.numerator), int(x.denominator)))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact Gaussian rational")


def gaussian(re, im=0) -> object:
    """Exact Gaussian rational ``re + i*im`` from ints or Fractions."""
    return exact(Fraction(re)) + exact(Fraction(im)) * QQ_I(0, 1)


def to_complex(x) -> complex:
    if isinstance(x, QQ_I.dtype):
        return complex(float(x.x), float(x.y))
    return complex(x)


_to_complex_u = np.frompyfunc(to_complex, 1, 1)
_exact_u = np.frompyfunc(exact, 1, 1)
_conj_exact_u = np.frompyfunc(lambda q: QQ_I(q.x, -q.y), 1, 1)
_inv_exact_u = np.frompyfunc(lambda q: QQ_I.one / q, 1, 1)


def imag_unit(is_exact: bool):
    return QQ_I(0, 1) if is_exact else 1j


def as_complex_array(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == object:
        return _to_complex_u(arr).astype(np.complex128)
    return np.asarray(arr, dtype=np.complex128)


# ---------------------------------------------------------------------------
# multi-index tables


@lru_cache(maxsize=None)
def monomials(n: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples (length 2n: holomorphic then antiholomorphic), graded by degree."""
    out: list[tuple[int, ...]] = []
    nv = 2 * n
    for d in range(order + 1):
        for bars in itertools.combinations(range(d + nv - 1), nv - 1):
            prev = -1
            expo = []
            for b in bars + (d + nv - 1,):
                expo.append(b - prev - 1)
                prev = b
            out.append(tuple(expo))
    return tuple(out)


@lru_cache(maxsize=None)
def index_of(n: int, order: int) -> dict[tuple[int, ...], int]:
    return {e: i for i, e in enumerate(monomials(n, order))}


def n_coeffs(n: int, order: int) -> int:
    return math.comb(order + 2 * n, 2 * n)


@dataclass(frozen=True)
class ProductTable:
    ia: np.ndarray
    ib: np.ndarray
    it: np.ndarray
    m_out: int
    groups: tuple


@lru_cache(maxsize=None)
def product_table(n: int, na: int, nb: int, nout: int) -> ProductTable:
    mons_a = monomials(n, na)
    mons_b = monomials(n, nb)
    idx = index_of(n, nout)
    ia, ib, it = [], [], []
    for i, ea in enumerate(mons_a):
        da = sum(ea)
        if da > nout:
            break
        for j, eb in enumerate(mons_b):
            if da + sum(eb) > nout:
                break
            ia.append(i)
            ib.append(j)
            it.append(idx[tuple(x + y for x, y in zip(ea, eb))])
    ia_arr = np.asarray(ia, dtype=np.int32)
    ib_arr = np.asarray(ib, dtype=np.int32)
    it_arr = np.asarray(it, dtype=np.int32)
    groups = []
    for i in np.unique(ia_arr):
        sel = ia_arr == i
        groups.append((int(i), ib_arr[sel].astype(np.intp), it_arr[sel].astype(np.intp)))
    return ProductTable(ia_arr, ib_arr, it_arr, n_coeffs(n, nout), tuple(groups))


@lru_cache(maxsize=None)
def derivative_table(n: int, order: int, var: int) -> tuple[np.ndarray, np.ndarray]:
    """Source rows and integer factors so that ``d/dvar`` maps order -> order - 1."""
    idx = index_of(n, order)
    src, fac = [], []
    for e in monomials(n, order - 1):
        up = list(e)
        up[var] += 1
        src.append(idx[tuple(up)])
        fac.append(up[var])
    return np.asarray(src, dtype=np.intp), np.asarray(fac, dtype=np.int64)


@lru_cache(maxsize=None)
def conjugation_permutation(n: int, order: int) -> np.ndarray:
    idx = index_of(n, order)
    return np.asarray([idx[e[n:] + e[:n]] for e in monomials(n, order)], dtype=np.intp)


# ---------------------------------------------------------------------------
# the jet type


class ChartJet:
    """Truncated Taylor jet of a complex function at a batch of base points.

    ``order`` is the truncation order; when ``poly`` is set the jet is an exact
    polynomial of degree at most ``order`` and all higher coefficients are
    known to vanish.
    """

    __slots__ = ("n", "order", "coeffs", "poly")
    __array_priority__ = 100

    def __init__(self, n: int, order: int, coeffs: np.ndarray, poly: bool = False):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.shape[0] != n_coeffs(n, order):
            raise ValueError(
                f"expected {n_coeffs(n, order)} coefficient rows for n={n}, order={order}, got {coeffs.shape[0]}"
            )
        self.n = n
        self.order = order
        self.coeffs = coeffs
        self.poly = poly

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, n: int, value, exact_mode: bool = False) -> "ChartJet":
        """Exact constant (a degree-0 polynomial); ``value`` may be a per-point array."""
        val = np.asarray(value, dtype=object if exact_mode else np.complex128)
        if exact_mode and val.ndim == 0:
            val = np.asarray([exact(value)], dtype=object)
        elif exact_mode:
            val = _exact_u(val).astype(object)
        return cls(n, 0, np.atleast_1d(val)[None, :], poly=True)

    @classmethod
    def zeros(cls, n: int, order: int, npts: int = 1, exact_mode: bool = False, poly: bool = False) -> "ChartJet":
        if exact_mode:
            c = np.empty((n_coeffs(n, order), npts), dtype=object)
            c.fill(QQ_I.zero)
        else:
            c = np.zeros((n_coeffs(n, order), npts), dtype=np.complex128)
        return cls(n, order, c, poly=poly)

    @classmethod
    def coordinate(cls, n: int, base: np.ndarray, i: int, conj: bool = False, exact_mode: bool = False) -> "ChartJet":
        """Exact jet of ``z^i`` (or ``conj(z^i)``) at the base points ``base[i]``."""
        base = np.atleast_2d(np.asarray(base, dtype=object if exact_mode else np.complex128))
        npts = base.shape[1]
        out = cls.zeros(n, 1, npts, exact_mode, poly=True)
        b = base[i]
        if exact_mode:
            b = _exact_u(b).astype(object)
            if conj:
                b = _conj_exact_u(b).astype(object)
            one = QQ_I.one
        else:
            if conj:
                b = np.conj(b)
            one = 1.0
        out.coeffs[0] = b
        var = (n + i) if conj else i
        e = [0] * (2 * n)
        e[var] = 1
        out.coeffs[index_of(n, 1)[tuple(e)]] = one
        return out

    @classmethod
    def displacement_monomial(cls, n: int, expo: tuple[int, ...], exact_mode: bool = False) -> "ChartJet":
        """Exact polynomial ``u^A conj(u)^B`` (same at every base point)."""
        deg = sum(expo)
        out = cls.zeros(n, deg, 1, exact_mode, poly=True)
        out.coeffs[index_of(n, deg)[tuple(expo)]] = QQ_I.one if exact_mode else 1.0
        return out

    # -- basic properties -------------------------------------------------
    @property
    def npts(self) -> int:
        return self.coeffs.shape[1]

    @property
    def is_exact(self) -> bool:
        return self.coeffs.dtype == object

    def value(self) -> np.ndarray:
        """Function values at the base points."""
        return self.coeffs[0]

    def coefficient(self, a: tuple[int, ...], b: tuple[int, ...]) -> np.ndarray:
        expo = tuple(a) + tuple(b)
        if sum(expo) > self.order:
            if self.poly:
                return np.zeros(self.npts, dtype=self.coeffs.dtype) if not self.is_exact else np.full(self.npts, QQ_I.zero, dtype=object)
            raise JetOrderError(f"coefficient of degree {sum(expo)} requested from a jet of order {self.order}")
        return self.coeffs[index_of(self.n, self.order)[expo]]

    def derivative_value(self, a: tuple[int, ...], b: tuple[int, ...]) -> np.ndarray:
        """Value of the mixed partial derivative ``d^A dbar^B F`` at the base points."""
        fac = 1
        for x in tuple(a) + tuple(b):
            fac *= math.factorial(x)
        return self.coefficient(a, b) * fac

    def copy(self) -> "ChartJet":
        return ChartJet(self.n, self.order, self.coeffs.copy(), self.poly)

    def truncate(self, order: int) -> "ChartJet":
        """Forget coefficients above ``order``; the result is a plain (non-polynomial) jet."""
        if order > self.order:
            if self.poly:
                return self._padded(order, poly=False)
            raise JetOrderError(f"cannot raise jet order from {self.order} to {order}")
        return ChartJet(self.n, order, self.coeffs[: n_coeffs(self.n, order)], poly=False)

    def _padded(self, order: int, poly: bool) -> "ChartJet":
        out = ChartJet.zeros(self.n, order, self.npts, self.is_exact, poly=poly)
        out.coeffs[: self.coeffs.shape[0]] = self.coeffs
        return out

    def to_complex(self) -> "ChartJet":
        return ChartJet(self.n, self.order, as_complex_array(self.coeffs), self.poly)

    def max_abs(self) -> float:
        if self.coeffs.size == 0:
            return 0.0
        return float(np.max(np.abs(as_complex_array(self.coeffs))))

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.is_exact:
            return not any(bool(c) for c in self.coeffs.flat)
        return self.max_abs() <= tol

    # -- arithmetic -------------------------------------------------------
    def _align(self, other: "ChartJet") -> tuple[np.ndarray, np.ndarray, int, bool]:
        if other.n != self.n:
            raise ValueError("jet dimension mismatch")
        if self.poly and other.poly:
            order, poly = max(self.order, other.order), True
        elif self.poly:
            order, poly = other.order, False
        elif other.poly:
            order, poly = self.order, False
        else:
            order, poly = min(self.order, other.order), False
        a = self._fit(order)
        b = other._fit(order)
        a, b = _unify_domain(a, b)
        return a, b, order, poly

    def _fit(self, order: int) -> np.ndarray:
        m = n_coeffs(self.n, order)
        if m <= self.coeffs.shape[0]:
            return self.coeffs[:m]
        if not self.poly:
            raise JetOrderError("jet order too small")
        return self._padded(order, True).coeffs

    def __add__(self, other):
        if isinstance(other, ChartJet):
            a, b, order, poly = self._align(other)
            return ChartJet(self.n, order, a + b, poly)
        return self + _scalar_jet(self, other)

    __radd__ = __add__

    def __neg__(self) -> "ChartJet":
        return ChartJet(self.n, self.order, -self.coeffs, self.poly)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ChartJet):
            return _jet_mul(self, other)
        if isinstance(other, np.ndarray) and other.ndim == 1:
            return ChartJet(self.n, self.order, self.coeffs * other[None, :], self.poly)
        return ChartJet(self.n, self.order, self.coeffs * _coerce_scalar(other, self.is_exact), self.poly)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ChartJet):
            return self * other.reciprocal()
        if self.is_exact:
            return self * (QQ_I.one / _coerce_scalar(other, True))
        return ChartJet(self.n, self.order, self.coeffs / other, self.poly)

    def conj(self) -> "ChartJet":
        """Jet of the complex-conjugate function."""
        perm = conjugation_permutation(self.n, self.order)
        c = self.coeffs[perm]
        c = _conj_exact_u(c).astype(object) if self.is_exact else np.conj(c)
        return ChartJet(self.n, self.order, c, self.poly)

    # -- differentiation --------------------------------------------------
    def deriv(self, var: int) -> "ChartJet":
        """Partial derivative in variable ``var`` (0..n-1: z^i, n..2n-1: conj(z)^j)."""
        if self.order == 0:
            if self.poly:
                return ChartJet.zeros(self.n, 0, self.npts, self.is_exact, poly=True)
            raise JetOrderError("cannot differentiate a jet of order 0")
        src, fac = derivative_table(self.n, self.order, var)
        c = self.coeffs[src] * (fac[:, None] if not self.is_exact else fac.astype(object)[:, None])
        return ChartJet(self.n, self.order - 1, c, self.poly)

    def d(self, i: int) -> "ChartJet":
        return self.deriv(i)

    def dbar(self, j: int) -> "ChartJet":
        return self.deriv(self.n + j)

    # -- analytic functions via Taylor composition --------------------------
    def _compose(self, coeff_fn) -> "ChartJet":
        """``h(F)`` where ``coeff_fn(c0, j)`` gives the j-th Taylor coefficient of h at c0."""
        if self.poly and self.order > 0:
            raise JetOrderError("analytic functions of a polynomial jet need an explicit truncation order")
        c0 = self.coeffs[0]
        g = self.copy()
        g.coeffs = g.coeffs.copy()
        g.coeffs[0] = 0
        g.poly = False
        out = ChartJet.zeros(self.n, self.order, self.npts, self.is_exact)
        out.coeffs[0] = coeff_fn(c0, 0)
        power = None
        for j in range(1, self.order + 1):
            power = g if power is None else power * g
            out = out + power * coeff_fn(c0, j)
        return out

    def reciprocal(self) -> "ChartJet":
        if self.poly and self.order == 0:
            inv = _inv_exact_u(self.coeffs).astype(object) if self.is_exact else 1.0 / self.coeffs
            return ChartJet(self.n, 0, inv, True)
        inv0 = _inv_exact_u(self.coeffs[0]).astype(object) if self.is_exact else 1.0 / self.coeffs[0]
        return self._compose(lambda c0, j: ((-1) ** j) * inv0 ** (j + 1))

    def log(self, with_constant: bool = True) -> "ChartJet":
        """Principal logarithm; ``with_constant=False`` drops the (possibly irrational) value term."""
        inv0 = _inv_exact_u(self.coeffs[0]).astype(object) if self.is_exact else 1.0 / self.coeffs[0]

        def coeff(c0, j):
            if j == 0:
                if with_constant and not self.is_exact:
                    return np.log(c0)
                zero = np.empty(c0.shape, dtype=object) if self.is_exact else np.zeros_like(c0)
                if self.is_exact:
                    zero.fill(QQ_I.zero)
                return zero
            sign = 1 if j % 2 == 1 else -1
            return inv0**j * Fraction(sign, j) if not self.is_exact else inv0**j * exact(Fraction(sign, j))

        if with_constant and self.is_exact:
            raise ValueError("exact logarithm value is not rational; pass with_constant=False")
        return self._compose(coeff)

    def exp(self) -> "ChartJet":
        if self.is_exact:
            raise ValueError("exp is not available in exact mode")
        e0 = np.exp(self.coeffs[0])
        return self._compose(lambda c0, j: e0 / math.factorial(j))

    def __pow__(self, p: int) -> "ChartJet":
        if not isinstance(p, int) or p < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = ChartJet.constant(self.n, 1, self.is_exact)
        for _ in range(p):
            out = out * self
        return out

    def __repr__(self) -> str:
        kind = "poly" if self.poly else "jet"
        return f"ChartJet(n={self.n}, order={self.order}, {kind}, npts={self.npts}, exact={self.is_exact})"


def _coerce_scalar(x, exact_mode: bool):
    if exact_mode:
        return exact(x)
    if isinstance(x, QQ_I.dtype):
        return to_complex(x)
    return x


def _scalar_jet(like: ChartJet, value) -> ChartJet:
    if isinstance(value, np.ndarray):
        return ChartJet.constant(like.n, value, like.is_exact)
    return ChartJet.constant(like.n, _coerce_scalar(value, like.is_exact), like.is_exact)


def _unify_domain(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if (a.dtype == object) != (b.dtype == object):
        return as_complex_array(a), as_complex_array(b)
    return a, b


def _jet_mul(x: ChartJet, y: ChartJet) -> ChartJet:
    if x.n != y.n:
        raise ValueError("jet dimension mismatch")
    # cheap path: multiplication by an exact constant
    for s, t in ((x, y), (y, x)):
        if s.poly and s.order == 0:
            a, b = _unify_domain(s.coeffs, t.coeffs)
            return ChartJet(t.n, t.order, b * a[0][None, :], t.poly)
    if x.poly and y.poly:
        nout, poly = x.order + y.order, True
    elif x.poly:
        nout, poly = y.order, False
    elif y.poly:
        nout, poly = x.order, False
    else:
        nout, poly = min(x.order, y.order), False
    na, nb = min(x.order, nout), min(y.order, nout)
    a = x.coeffs[: n_coeffs(x.n, na)]
    b = y.coeffs[: n_coeffs(y.n, nb)]
    a, b = _unify_domain(a, b)
    table = product_table(x.n, na, nb, nout)
    return ChartJet(x.n, nout, kernels.jet_mul(a, b, table), poly)


def jet_sum(jets, like: ChartJet | None = None) -> ChartJet:
    out = None
    for j in jets:
        out = j if out is None else out + j
    if out is None:
        if like is None:
            raise ValueError("empty jet sum needs a template")
        return ChartJet.zeros(like.n, 0, 1, like.is_exact, poly=True)
    return out

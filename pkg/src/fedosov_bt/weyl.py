"""Truncated formal Weyl algebra over chart jets.

A :class:`WeylElement` is a finite sum of monomials ``hbar^r y^A ybar^B`` with
:class:`~fedosov_bt.jets.ChartJet` coefficients.  ``A`` and ``B`` are exponent
tuples (the sorted symmetric multi-index convention), and the coefficient of a
key is the coefficient of that monomial, so no symmetrisation factors are
hidden anywhere.

Truncation is tracked through two validity caps.  ``w_cap`` bounds the
polarized weight ``r + |B|`` and ``d_cap`` bounds the y-degree ``|A|``.  Every
stored term lies inside the caps, and every term inside the caps is correct.
A cap of ``None`` means the element is complete in that grading, i.e. it is a
genuine polynomial.  Each operation computes the caps of its result from the
caps of its inputs, so terms beyond them are dropped and never misplaced.

Level-k elements (``level = k``) are the evaluation ``hbar = sqrt(-1)/k`` of
finite-weight elements; they carry no hbar powers.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Union

from sympy.polys.domains import QQ_I

from .jets import ChartJet, exact, imag_unit, to_complex

Key = tuple  # (r, A, B)
Cap = Union[int, None]


class WeylError(ValueError):
    """Malformed Weyl-algebra input (dimension/cap mismatch, non-finite weight, ...)."""


def _cmin(*caps: Cap) -> Cap:
    vals = [c for c in caps if c is not None]
    return min(vals) if vals else None


def _cadd(cap: Cap, delta: int) -> Cap:
    return None if cap is None else cap + delta


def key_weight(key: Key) -> int:
    return key[0] + sum(key[2])


def _unit_tuple(n: int, i: int, val: int = 1) -> tuple[int, ...]:
    t = [0] * n
    t[i] = val
    return tuple(t)


def _add_tuples(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


def hbar_value(k: int, is_exact: bool):
    """The level-k value sqrt(-1)/k of hbar, exact or floating."""
    if is_exact:
        return QQ_I(0, 1) * exact(Fraction(1, k))
    return 1j / k


class WeylElement:
    """Immutable truncated element of the (complexified) Weyl algebra bundle."""

    __slots__ = ("n", "terms", "w_cap", "d_cap", "truncated", "level")

    def __init__(
        self,
        n: int,
        terms: dict | None = None,
        w_cap: Cap = None,
        d_cap: Cap = None,
        truncated: bool = False,
        level: int | None = None,
    ):
        self.n = n
        self.w_cap = w_cap
        self.d_cap = d_cap
        self.level = level
        self.truncated = truncated
        kept: dict = {}
        for key, c in (terms or {}).items():
            if len(key[1]) != n or len(key[2]) != n:
                raise WeylError(f"multi-index length mismatch for n={n}: {key}")
            if level is not None and key[0] != 0:
                raise WeylError("level-k elements cannot carry hbar powers")
            if (w_cap is not None and key_weight(key) > w_cap) or (d_cap is not None and sum(key[1]) > d_cap):
                self.truncated = True
                continue
            kept[key] = c
        self.terms = kept

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int, w_cap: Cap = None, d_cap: Cap = None, level: int | None = None) -> "WeylElement":
        return cls(n, {}, w_cap, d_cap, level=level)

    @classmethod
    def from_jet(cls, jet: ChartJet, level: int | None = None) -> "WeylElement":
        z = (0,) * jet.n
        return cls(jet.n, {(0, z, z): jet}, level=level)

    @classmethod
    def monomial(
        cls,
        n: int,
        r: int = 0,
        a: tuple[int, ...] | None = None,
        b: tuple[int, ...] | None = None,
        coeff=None,
        exact_mode: bool = False,
        level: int | None = None,
    ) -> "WeylElement":
        z = (0,) * n
        a = tuple(a) if a is not None else z
        b = tuple(b) if b is not None else z
        if coeff is None:
            coeff = 1
        if not isinstance(coeff, ChartJet):
            coeff = ChartJet.constant(n, coeff, exact_mode)
        return cls(n, {(r, a, b): coeff}, level=level)

    @classmethod
    def y(cls, n: int, i: int, exact_mode: bool = False) -> "WeylElement":
        return cls.monomial(n, a=_unit_tuple(n, i), exact_mode=exact_mode)

    @classmethod
    def ybar(cls, n: int, j: int, exact_mode: bool = False) -> "WeylElement":
        return cls.monomial(n, b=_unit_tuple(n, j), exact_mode=exact_mode)

    @classmethod
    def hbar(cls, n: int, exact_mode: bool = False) -> "WeylElement":
        return cls.monomial(n, r=1, exact_mode=exact_mode)

    # -- structure ---------------------------------------------------------
    def _like(self, terms: dict, w_cap: Cap, d_cap: Cap, truncated: bool = False) -> "WeylElement":
        return WeylElement(self.n, terms, w_cap, d_cap, self.truncated or truncated, self.level)

    def with_caps(self, w_cap: Cap = None, d_cap: Cap = None) -> "WeylElement":
        """Restrict to tighter caps (the tighter of old and new caps is kept)."""
        return self._like(dict(self.terms), _cmin(self.w_cap, w_cap), _cmin(self.d_cap, d_cap))

    def declare_complete(self) -> "WeylElement":
        """Mark the stored terms as the complete element (finite weight and y-degree)."""
        return WeylElement(self.n, dict(self.terms), None, None, False, self.level)

    def weight_component(self, m: int) -> "WeylElement":
        if self.w_cap is not None and m > self.w_cap:
            raise WeylError(f"weight {m} exceeds the weight cap {self.w_cap}")
        return self._like({k: c for k, c in self.terms.items() if key_weight(k) == m}, self.w_cap, self.d_cap)

    def weight_at_most(self, m: int) -> "WeylElement":
        if self.w_cap is not None and m > self.w_cap:
            raise WeylError(f"weight {m} exceeds the weight cap {self.w_cap}")
        return self._like({k: c for k, c in self.terms.items() if key_weight(k) <= m}, self.w_cap, self.d_cap)

    def max_weight(self) -> int:
        return max((key_weight(k) for k in self.terms), default=0)

    def max_ybar_degree(self) -> int:
        return max((sum(k[2]) for k in self.terms), default=0)

    def max_y_degree(self) -> int:
        return max((sum(k[1]) for k in self.terms), default=0)

    @property
    def is_exact(self) -> bool:
        return any(c.is_exact for c in self.terms.values())

    def filter(self, pred) -> "WeylElement":
        return self._like({k: c for k, c in self.terms.items() if pred(k)}, self.w_cap, self.d_cap)

    def map_coeffs(self, fn) -> "WeylElement":
        return self._like({k: fn(c) for k, c in self.terms.items()}, self.w_cap, self.d_cap)

    def coeff(self, r: int, a: tuple[int, ...], b: tuple[int, ...]) -> ChartJet | None:
        return self.terms.get((r, tuple(a), tuple(b)))

    # -- linear structure ----------------------------------------------------
    def __add__(self, other: "WeylElement") -> "WeylElement":
        if not isinstance(other, WeylElement):
            return NotImplemented
        _check_compatible(self, other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms[k] + c if k in terms else c
        return WeylElement(
            self.n,
            terms,
            _cmin(self.w_cap, other.w_cap),
            _cmin(self.d_cap, other.d_cap),
            self.truncated or other.truncated,
            self.level,
        )

    def __neg__(self) -> "WeylElement":
        return self.map_coeffs(lambda c: -c)

    def __sub__(self, other: "WeylElement") -> "WeylElement":
        return self + (-other)

    def scale(self, factor) -> "WeylElement":
        """Multiply every coefficient by a scalar or by a jet."""
        return self.map_coeffs(lambda c: c * factor)

    def __mul__(self, factor) -> "WeylElement":
        return self.scale(factor)

    __rmul__ = __mul__

    def shift_hbar(self, s: int) -> "WeylElement":
        """Multiply by hbar^s (s may be negative when every term allows it)."""
        if self.level is not None:
            raise WeylError("hbar shift on a level-k element")
        terms = {}
        for (r, a, b), c in self.terms.items():
            if r + s < 0:
                raise WeylError("negative hbar power produced")
            terms[(r + s, a, b)] = c
        return self._like(terms, _cadd(self.w_cap, s), self.d_cap)

    def multiply_commutative(self, other: "WeylElement") -> "WeylElement":
        """Plain commutative product of polynomials (no contractions)."""
        _check_compatible(self, other)
        w_cap = _cmin(self.w_cap, other.w_cap)
        d_cap = _cmin(self.d_cap, other.d_cap)
        terms: dict = {}
        for (r1, a1, b1), c1 in self.terms.items():
            for (r2, a2, b2), c2 in other.terms.items():
                key = (r1 + r2, _add_tuples(a1, a2), _add_tuples(b1, b2))
                if (w_cap is not None and key_weight(key) > w_cap) or (d_cap is not None and sum(key[1]) > d_cap):
                    continue
                _acc(terms, key, c1 * c2)
        return WeylElement(self.n, terms, w_cap, d_cap, self.truncated or other.truncated, self.level)

    # -- derivatives in the fibre --------------------------------------------
    def d_y(self, i: int) -> "WeylElement":
        terms: dict = {}
        for (r, a, b), c in self.terms.items():
            if a[i] == 0:
                continue
            _acc(terms, (r, _add_tuples(a, _unit_tuple(self.n, i, -1)), b), c * a[i])
        return self._like(terms, self.w_cap, _cadd(self.d_cap, -1))

    def d_ybar(self, j: int) -> "WeylElement":
        terms: dict = {}
        for (r, a, b), c in self.terms.items():
            if b[j] == 0:
                continue
            _acc(terms, (r, a, _add_tuples(b, _unit_tuple(self.n, j, -1))), c * b[j])
        return self._like(terms, _cadd(self.w_cap, -1), self.d_cap)

    def times_y(self, i: int) -> "WeylElement":
        terms = {(r, _add_tuples(a, _unit_tuple(self.n, i)), b): c for (r, a, b), c in self.terms.items()}
        return self._like(terms, self.w_cap, _cadd(self.d_cap, 1))

    def times_ybar(self, j: int) -> "WeylElement":
        terms = {(r, a, _add_tuples(b, _unit_tuple(self.n, j))): c for (r, a, b), c in self.terms.items()}
        return self._like(terms, _cadd(self.w_cap, 1), self.d_cap)

    # -- diagnostics ---------------------------------------------------------
    def max_abs(self) -> float:
        return max((c.max_abs() for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(c.is_zero(tol) for c in self.terms.values())

    def __repr__(self) -> str:
        return (
            f"WeylElement(n={self.n}, terms={len(self.terms)}, w_cap={self.w_cap}, "
            f"d_cap={self.d_cap}, level={self.level}, truncated={self.truncated})"
        )


def _acc(terms: dict, key: Key, jet: ChartJet) -> None:
    if key in terms:
        terms[key] = terms[key] + jet
    else:
        terms[key] = jet


def _check_compatible(a: WeylElement, b: WeylElement) -> None:
    if a.n != b.n:
        raise WeylError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.level != b.level:
        raise WeylError(f"level mismatch: {a.level} vs {b.level}")


# ---------------------------------------------------------------------------
# fibre metric and the Wick product


class FiberMetric:
    """Inverse Kähler form ``omega^{i jbar}`` used by fibrewise contractions.

    ``up[i][j]`` is the jet of ``omega^{i jbar}``; ``ubar[j][i]`` is the jet of
    ``omega^{jbar i} = -omega^{i jbar}``.
    """

    __slots__ = ("n", "up", "is_exact", "_powers")

    def __init__(self, n: int, up: list[list[ChartJet]]):
        self.n = n
        self.up = up
        self.is_exact = up[0][0].is_exact
        self._powers: dict = {}

    @classmethod
    def flat(cls, n: int, exact_mode: bool = False) -> "FiberMetric":
        """Standard form ``omega = sqrt(-1) sum dz^i ^ dzbar^i``: omega^{i ibar} = sqrt(-1)."""
        i_unit = imag_unit(exact_mode)
        zero = 0
        up = [[ChartJet.constant(n, i_unit if i == j else zero, exact_mode) for j in range(n)] for i in range(n)]
        return cls(n, up)

    def ubar(self, j: int, i: int) -> ChartJet:
        return -self.up[i][j]

    def power_product(self, kmat: tuple[tuple[int, ...], ...]) -> ChartJet:
        """``prod_{ij} (omega^{i jbar})^{K_ij} / K_ij!`` for a contraction matrix K."""
        if kmat not in self._powers:
            out = None
            for i in range(self.n):
                for j in range(self.n):
                    kij = kmat[i][j]
                    if kij == 0:
                        continue
                    term = self.up[i][j] ** kij
                    term = term * _scalar(Fraction(1, math.factorial(kij)), self.is_exact)
                    out = term if out is None else out * term
            if out is None:
                out = ChartJet.constant(self.n, 1, self.is_exact)
            self._powers[kmat] = out
        return self._powers[kmat]


def _scalar(x, is_exact: bool):
    if is_exact:
        return exact(x)
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, QQ_I.dtype):
        return to_complex(x)
    return x


def _contraction_matrices(n: int, rows: tuple[int, ...], cols: tuple[int, ...]):
    """All non-negative integer n-by-n matrices with row sums <= rows and column sums <= cols."""
    cells = [(i, j) for i in range(n) for j in range(n)]
    ranges = [range(min(rows[i], cols[j]) + 1) for i, j in cells]
    for vals in itertools.product(*ranges):
        rs = [0] * n
        cs = [0] * n
        ok = True
        for (i, j), v in zip(cells, vals):
            rs[i] += v
            cs[j] += v
            if rs[i] > rows[i] or cs[j] > cols[j]:
                ok = False
                break
        if ok:
            mat = tuple(tuple(vals[i * n + j] for j in range(n)) for i in range(n))
            yield mat, tuple(rs), tuple(cs), sum(vals)


def _falling(a: tuple[int, ...], s: tuple[int, ...]) -> int:
    out = 1
    for x, y in zip(a, s):
        out *= math.factorial(x) // math.factorial(x - y)
    return out


def product_caps(a: WeylElement, b: WeylElement) -> tuple[Cap, Cap]:
    """Validity caps of ``a * b`` from the caps and stored terms of the factors.

    A missing term of ``a`` (weight above ``a.w_cap``) only reaches output
    weights above ``a.w_cap + min weight of b``; a missing term of ``a`` with
    y-degree ``p > a.d_cap`` meets a stored term ``(p_b, q_b)`` of ``b`` in
    y-degree at least ``max(p - q_b, 0) + p_b``.  Missing terms of ``b`` only
    reach output weights above ``b.w_cap + min weight of a`` and y-degrees
    above ``b.d_cap``.
    """

    def min_weight(x: WeylElement) -> int | None:
        vals = [key_weight(k) for k in x.terms]
        if vals:
            return min(vals)
        return None if x.w_cap is None else x.w_cap + 1

    w_caps: list[Cap] = []
    if a.w_cap is not None:
        mb = min_weight(b)
        w_caps.append(a.w_cap + (mb if mb is not None else 10**9))
    if b.w_cap is not None:
        ma = min_weight(a)
        w_caps.append(b.w_cap + (ma if ma is not None else 10**9))
    d_caps: list[Cap] = []
    if a.d_cap is not None and b.terms:
        d_caps.append(min(max(a.d_cap + 1 - sum(kb[2]), 0) + sum(kb[1]) for kb in b.terms) - 1)
    if b.d_cap is not None:
        d_caps.append(b.d_cap)
    w_cap = _cmin(*w_caps)
    d_cap = _cmin(*d_caps)
    if w_cap is not None and w_cap >= 10**8:
        w_cap = None
    return w_cap, d_cap


def wick_product(
    a: WeylElement,
    b: WeylElement,
    metric: FiberMetric,
    min_contractions: int = 0,
    max_contractions: int | None = None,
) -> WeylElement:
    """Fibrewise Wick product ``a * b``.

    ``sum_K hbar^|K| prod (omega^{i jbar})^{K_ij}/K_ij! (d_y^rows a)(d_ybar^cols b)``;
    level-k operands use ``hbar = sqrt(-1)/k``.  ``min_contractions`` and
    ``max_contractions`` restrict the number of contractions ``|K|``: the
    commutative part alone is ``max_contractions=0``, and commutators use
    ``min_contractions=1`` because the commutative parts cancel exactly.
    """
    _check_compatible(a, b)
    if a.n != metric.n:
        raise WeylError("metric dimension mismatch")
    level = a.level
    if level is not None and (a.w_cap is not None or b.w_cap is not None):
        raise WeylError("level-k product needs finite-weight operands")
    n = a.n
    is_exact = a.is_exact or b.is_exact or metric.is_exact
    w_cap, d_cap = product_caps(a, b)
    if d_cap is not None and d_cap < 0:
        raise WeylError("y-degree cap exhausted in the Wick product")
    hv = hbar_value(level, is_exact) if level is not None else None
    terms: dict = {}
    for (r1, a1, b1), c1 in a.terms.items():
        for (r2, a2, b2), c2 in b.terms.items():
            base = None
            for kmat, rows, cols, ktot in _contraction_matrices(n, a1, b2):
                if ktot < min_contractions or (max_contractions is not None and ktot > max_contractions):
                    continue
                ya = tuple(x - y for x, y in zip(a1, rows))
                yb = tuple(x - y for x, y in zip(b2, cols))
                ynew = _add_tuples(ya, a2)
                bnew = _add_tuples(b1, yb)
                r = r1 + r2 + (ktot if level is None else 0)
                key = (r, ynew, bnew)
                if (w_cap is not None and key_weight(key) > w_cap) or (d_cap is not None and sum(ynew) > d_cap):
                    continue
                if base is None:
                    base = c1 * c2
                comb = _falling(a1, rows) * _falling(b2, cols)
                jet = base
                if ktot:
                    jet = jet * metric.power_product(kmat)
                    factor = comb if level is None else _scalar(comb, is_exact) * hv**ktot
                    jet = jet * _scalar(factor, is_exact)
                _acc(terms, key, jet)
    return WeylElement(n, terms, w_cap, d_cap, a.truncated or b.truncated, level)


def commutator(a: WeylElement, b: WeylElement, metric: FiberMetric) -> WeylElement:
    """``a * b - b * a``; the contraction-free parts cancel and are never formed."""
    return wick_product(a, b, metric, min_contractions=1) - wick_product(b, a, metric, min_contractions=1)


def evaluate_level(a: WeylElement, k: int) -> WeylElement:
    """Substitute ``hbar = sqrt(-1)/k`` into a finite-weight formal element."""
    if a.level is not None:
        raise WeylError("element is already at a fixed level")
    if a.w_cap is not None:
        raise WeylError("level-k evaluation needs a finite-weight element (w_cap=None)")
    is_exact = a.is_exact
    hv = hbar_value(k, is_exact)
    terms: dict = {}
    for (r, ya, yb), c in a.terms.items():
        _acc(terms, (0, ya, yb), c * _scalar(hv**r, is_exact) if r else c)
    return WeylElement(a.n, terms, None, a.d_cap, a.truncated, level=k)


def level_k_wick(a: WeylElement, b: WeylElement, k: int, metric: FiberMetric) -> WeylElement:
    """Level-k product: the Wick product followed by ``hbar -> sqrt(-1)/k``."""
    if a.level is None:
        a = evaluate_level(a, k)
    if b.level is None:
        b = evaluate_level(b, k)
    if a.level != k or b.level != k:
        raise WeylError("operands at a different level")
    return wick_product(a, b, metric)


# ---------------------------------------------------------------------------
# symbol map


def symbol(a: WeylElement, k: int | None = None):
    """Set y = ybar = 0.

    Formal input without ``k`` returns ``{r: jet}`` (the hbar-expansion).  With
    ``k`` (or for a level-k element) the hbar-polynomial is evaluated at
    ``sqrt(-1)/k`` and a single jet is returned.
    """
    z = (0,) * a.n
    parts = {r: c for (r, ya, yb), c in a.terms.items() if ya == z and yb == z}
    if a.level is not None:
        return parts.get(0, _zero_like(a))
    if k is None:
        return parts
    if a.w_cap is not None:
        raise WeylError("level-k symbol of an hbar power series (declare the element finite-weight first)")
    is_exact = a.is_exact
    hv = hbar_value(k, is_exact)
    out = None
    for r, c in parts.items():
        term = c * _scalar(hv**r, is_exact) if r else c
        out = term if out is None else out + term
    return out if out is not None else _zero_like(a)


def _zero_like(a: WeylElement) -> ChartJet:
    return ChartJet.constant(a.n, 0, a.is_exact)


# ---------------------------------------------------------------------------
# Weyl-valued differential forms


def _wedge_sign(g: int, form: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    """Left-multiply the sorted basis form ``form`` by generator ``g``."""
    if g in form:
        return None
    pos = sum(1 for x in form if x < g)
    new = tuple(sorted(form + (g,)))
    return (-1) ** pos, new


def _contract_sign(g: int, form: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    """Left interior product of the sorted basis form with the dual of generator ``g``."""
    if g not in form:
        return None
    pos = form.index(g)
    return (-1) ** pos, form[:pos] + form[pos + 1 :]


class WeylForm:
    """Weyl-valued differential form in the chart coframe.

    Form generators are numbered ``0..n-1`` for ``dz^i`` and ``n..2n-1`` for
    ``dzbar^j``; ``comps`` maps sorted generator tuples to coefficients.
    """

    __slots__ = ("n", "comps")

    def __init__(self, n: int, comps: dict | None = None):
        self.n = n
        self.comps = {tuple(k): v for k, v in (comps or {}).items()}

    @classmethod
    def from_element(cls, a: WeylElement) -> "WeylForm":
        return cls(a.n, {(): a})

    @classmethod
    def basis(cls, a: WeylElement, gens: Iterable[int]) -> "WeylForm":
        """``a`` times the wedge of the listed generators in the given order."""
        form: tuple[int, ...] = ()
        sign = 1
        for g in reversed(list(gens)):
            res = _wedge_sign(g, form)
            if res is None:
                return cls(a.n, {})
            s, form = res
            sign *= s
        return cls(a.n, {form: a if sign == 1 else -a})

    def degree(self) -> int:
        return max((len(k) for k in self.comps), default=0)

    def component(self, gens: tuple[int, ...]) -> WeylElement:
        gens = tuple(gens)
        if gens in self.comps:
            return self.comps[gens]
        return WeylElement.zero(self.n)

    def as_element(self) -> WeylElement:
        if any(len(k) for k in self.comps):
            raise WeylError("form has positive degree")
        return self.comps.get((), WeylElement.zero(self.n))

    def __add__(self, other: "WeylForm") -> "WeylForm":
        comps = dict(self.comps)
        for k, v in other.comps.items():
            comps[k] = comps[k] + v if k in comps else v
        return WeylForm(self.n, comps)

    def __neg__(self) -> "WeylForm":
        return WeylForm(self.n, {k: -v for k, v in self.comps.items()})

    def __sub__(self, other: "WeylForm") -> "WeylForm":
        return self + (-other)

    def map(self, fn) -> "WeylForm":
        return WeylForm(self.n, {k: fn(v) for k, v in self.comps.items()})

    def wedge_left(self, g: int, elem_op=None) -> "WeylForm":
        """``e(g) o op`` where ``op`` acts on coefficients (identity if None)."""
        out: dict = {}
        for form, v in self.comps.items():
            res = _wedge_sign(g, form)
            if res is None:
                continue
            s, new = res
            w = elem_op(v) if elem_op is not None else v
            w = w if s == 1 else -w
            out[new] = out[new] + w if new in out else w
        return WeylForm(self.n, out)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(v.is_zero(tol) for v in self.comps.values())

    def max_abs(self) -> float:
        return max((v.max_abs() for v in self.comps.values()), default=0.0)

    def caps(self) -> tuple[Cap, Cap]:
        return (
            _cmin(*[v.w_cap for v in self.comps.values()]),
            _cmin(*[v.d_cap for v in self.comps.values()]),
        )

    def __repr__(self) -> str:
        return f"WeylForm(n={self.n}, components={sorted(self.comps)})"


def as_form(x: Union[WeylElement, WeylForm]) -> WeylForm:
    return x if isinstance(x, WeylForm) else WeylForm.from_element(x)


def apply_componentwise(x: Union[WeylElement, WeylForm], ops: dict[int, callable]) -> WeylForm:
    """``sum_g e(g) o ops[g]`` applied to a Weyl-valued form."""
    f = as_form(x)
    out = WeylForm(f.n, {})
    for g, op in ops.items():
        out = out + f.wedge_left(g, op)
    return out


# ---------------------------------------------------------------------------
# Koszul operators


def delta10(x: Union[WeylElement, WeylForm]) -> WeylForm:
    """``delta^{1,0} = sum_i dz^i ^ d/dy^i``."""
    n = x.n
    return apply_componentwise(x, {i: (lambda v, i=i: v.d_y(i)) for i in range(n)})


def delta01(x: Union[WeylElement, WeylForm]) -> WeylForm:
    """``delta^{0,1} = sum_j dzbar^j ^ d/dybar^j``."""
    n = x.n
    return apply_componentwise(x, {n + j: (lambda v, j=j: v.d_ybar(j)) for j in range(n)})


def delta(x: Union[WeylElement, WeylForm]) -> WeylForm:
    return delta10(x) + delta01(x)


def _delta_inv(phi: WeylForm, holomorphic: bool) -> Union[WeylElement, WeylForm]:
    n = phi.n
    out: dict = {}
    for form, v in phi.comps.items():
        gens = [g for g in form if (g < n) == holomorphic]
        q = len(gens)
        for g in gens:
            s, new = _contract_sign(g, form)
            idx = g if holomorphic else g - n
            terms: dict = {}
            for (r, a, b), c in v.terms.items():
                p = sum(a) if holomorphic else sum(b)
                if p + q == 0:
                    continue
                if holomorphic:
                    key = (r, _add_tuples(a, _unit_tuple(n, idx)), b)
                else:
                    key = (r, a, _add_tuples(b, _unit_tuple(n, idx)))
                _acc(terms, key, c * _scalar(Fraction(s, p + q), c.is_exact))
            w_cap = v.w_cap if holomorphic else _cadd(v.w_cap, 1)
            d_cap = _cadd(v.d_cap, 1) if holomorphic else v.d_cap
            elem = WeylElement(n, terms, w_cap, d_cap, v.truncated, v.level)
            out[new] = out[new] + elem if new in out else elem
    res = WeylForm(n, out)
    if all(len(k) == 0 for k in res.comps):
        return res.comps.get((), WeylElement.zero(n))
    return res


def delta_inv10(phi: Union[WeylForm, WeylElement]) -> Union[WeylElement, WeylForm]:
    """Contracting homotopy ``(1/(p+q)) sum_i y^i iota(d/dz^i)``; a 1-form maps to an element."""
    return _delta_inv(as_form(phi), True)


def delta_inv01(phi: Union[WeylForm, WeylElement]) -> Union[WeylElement, WeylForm]:
    """Contracting homotopy ``(1/(pbar+qbar)) sum_j ybar^j iota(d/dzbar^j)``."""
    return _delta_inv(as_form(phi), False)


def pi10(x: Union[WeylElement, WeylForm]) -> WeylForm:
    """Projection setting every y^i and dz^i to zero."""
    f = as_form(x)
    n = f.n
    out = {}
    for form, v in f.comps.items():
        if any(g < n for g in form):
            continue
        out[form] = v.filter(lambda k: sum(k[1]) == 0)
    return WeylForm(n, out)


def pi01(x: Union[WeylElement, WeylForm]) -> WeylForm:
    """Projection setting every ybar^j and dzbar^j to zero."""
    f = as_form(x)
    n = f.n
    out = {}
    for form, v in f.comps.items():
        if any(g >= n for g in form):
            continue
        out[form] = v.filter(lambda k: sum(k[2]) == 0)
    return WeylForm(n, out)


def weight_component(a: WeylElement, m: int) -> WeylElement:
    return a.weight_component(m)


def form_weight_component(phi: WeylForm, m: int) -> WeylForm:
    return phi.map(lambda v: v.weight_component(m))

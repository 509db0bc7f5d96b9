"""The Berezin–Toeplitz Fedosov connection and its flat sections.

``D_BT = nabla - delta + (1/hbar)[I_BT, -]`` with ``I_BT = I + J``, where
``I = sum_{m>=2} I_m`` lifts the higher curvature terms ``R_m^*`` and ``J`` is
the Ricci correction built from a local Ricci potential.  Flat sections of
smooth functions are solved weight by weight and flat sections of holomorphic
line-bundle sections by iterated holomorphic completion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .geometry import (
    GeometryModel,
    LineSectionJet,
    nabla,
    nabla01,
    nabla10,
)
from .jets import ChartJet
from .weyl import (
    WeylElement,
    WeylError,
    WeylForm,
    _unit_tuple,
    as_form,
    delta,
    delta01,
    delta_inv01,
    delta_inv10,
    evaluate_level,
    hbar_value,
    symbol,
    wick_product,
)

DEFAULT_W_MAX = 4


class FedosovError(ValueError):
    """Inconsistent truncation grades or malformed Fedosov data."""


def default_d_max(w_max: int) -> int:
    return 2 * w_max + 2


def default_jet_order(w_max: int, d_max: int | None = None) -> int:
    d_max = default_d_max(w_max) if d_max is None else d_max
    return 2 * w_max + d_max + 2


def required_m_cut(w_max: int, d_cap: int) -> int:
    """Curvature depth needed so that weight ``w_max`` data is exact up to y-degree ``d_cap``."""
    return max(w_max + 2, d_cap + w_max - 1)


# ---------------------------------------------------------------------------
# curvature terms


def _scalar(x, geom: GeometryModel):
    from .weyl import _scalar as conv

    return conv(x, geom.exact)


def build_R_star(geom: GeometryModel, m_max: int) -> dict[int, list[WeylForm]]:
    """``R_m^*`` for ``2 <= m <= m_max`` as tangent-valued (0,1)-forms.

    The value for ``m`` is a list indexed by the tangent slot ``p`` of Weyl
    forms in the ``dzbar`` generators: ``R_m^* = sum_p R_m^{*p} (x) d/dz^p``.
    """
    n = geom.n
    if m_max < 2:
        return {}
    half = _scalar(Fraction(1, 2), geom)
    base: list[WeylForm] = []
    for p in range(n):
        comps = {}
        for j in range(n):
            terms: dict = {}
            for i in range(n):
                for k in range(n):
                    key = (0, _add(_unit_tuple(n, i), _unit_tuple(n, k)), (0,) * n)
                    c = geom.curvature[i][j][k][p] * half
                    terms[key] = terms[key] + c if key in terms else c
            comps[(n + j,)] = WeylElement(n, terms)
        base.append(WeylForm(n, comps))
    out = {2: base}
    for m in range(3, m_max + 1):
        prev = out[m - 1]
        nxt = []
        for p in range(n):
            form = nabla10(geom, prev[p])
            for q in range(n):
                for i in range(n):
                    gam = geom.christoffel[p][i][q]
                    form = form + prev[q].wedge_left(i, lambda v, g=gam: v.scale(g))
            nxt.append(as_form(delta_inv10(form)))
        out[m] = nxt
    return out


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def lower_index(geom: GeometryModel, rstar: list[WeylForm]) -> WeylForm:
    """The operator ``L``: ``sum_p V^p d_p  ->  sum_{p,k} omega_{p kbar} V^p ybar^k``."""
    n = geom.n
    out = WeylForm(n, {})
    for p in range(n):
        for k in range(n):
            w = geom.metric[p][k]
            out = out + rstar[p].map(lambda v, w=w, k=k: v.times_ybar(k).scale(w))
    return out


def raise_index(geom: GeometryModel, form: WeylForm) -> list[WeylForm]:
    """Inverse of :func:`lower_index` on forms linear in ``ybar``."""
    n = geom.n
    out = []
    for p in range(n):
        acc = WeylForm(n, {})
        for k in range(n):
            w = geom.inverse[k][p]
            acc = acc + form.map(lambda v, w=w, k=k: v.filter(lambda key, k=k: key[2][k] >= 1).d_ybar(k).scale(w))
        out.append(acc)
    return out


def build_I(geom: GeometryModel, m: int, rstar: dict | None = None) -> WeylForm:
    """``I_m = L(R_m^*)``: y-degree ``m``, ybar-degree one, a (0,1)-form."""
    rstar = rstar if rstar is not None else build_R_star(geom, m)
    return lower_index(geom, rstar[m])


def build_J_ric(geom: GeometryModel, depth: int, potential: ChartJet | None = None) -> WeylForm:
    """``J = hbar sum_{k>=1} ((delta^{1,0})^{-1} nabla^{1,0})^k (dbar g)`` up to y-degree ``depth``.

    ``g`` defaults to :func:`ricci_potential_for_j`.
    """
    n = geom.n
    g = ricci_potential_for_j(geom) if potential is None else potential
    form = WeylForm(n, {(n + j,): WeylElement.from_jet(g.dbar(j)) for j in range(n)})
    total = WeylForm(n, {})
    term = form
    for _ in range(depth):
        term = as_form(delta_inv10(nabla10(geom, term)))
        total = total + term
    return total.map(lambda v: v.shift_hbar(1))


def ricci_potential_for_j(geom: GeometryModel) -> ChartJet:
    """Local potential ``g`` entering ``J``: the Ricci potential ``psi = -log det(omega / sqrt(-1))``.

    With ``Ric = sqrt(-1) d dbar psi`` this is the normalization for which the
    Karabegov form of ``D_BT`` is ``-(1/hbar) omega + Ric`` (checked by the
    finite weight of the quantum moment map on the sphere).
    """
    return geom.ricci_potential


@dataclass
class FedosovData:
    """Fedosov data at a batch of points: ``I_m``, ``J``, ``I_BT`` and the truncation grades."""

    geom: GeometryModel
    m_cut: int
    I_parts: dict
    J: WeylForm
    I_BT: WeylForm
    R_star: dict = field(repr=False)
    level: int | None = None

    @property
    def n(self) -> int:
        return self.geom.n

    def at_level(self, k: int) -> "FedosovData":
        """The data with ``hbar = sqrt(-1)/k`` substituted (finite in every ybar-degree)."""
        ibt = self.I_BT.map(lambda v: evaluate_level(v, k))
        return FedosovData(self.geom, self.m_cut, self.I_parts, self.J, ibt, self.R_star, level=k)

    def gamma_delta(self) -> WeylForm:
        """``omega_{i jbar}(y^i dzbar^j - ybar^j dz^i)``: ``(1/hbar)[gamma_delta, -] = -delta``."""
        return gamma_delta(self.geom)

    def gamma_bt(self) -> WeylForm:
        """``gamma_BT = gamma_delta + I_BT`` so that ``D_BT = nabla + (1/hbar)[gamma_BT, -]``."""
        return self.gamma_delta() + self.I_BT


def gamma_delta(geom: GeometryModel) -> WeylForm:
    n = geom.n
    out = WeylForm(n, {})
    for i in range(n):
        for j in range(n):
            w = geom.metric[i][j]
            out = out + WeylForm.basis(WeylElement.monomial(n, a=_unit_tuple(n, i), coeff=w), [n + j])
            out = out + WeylForm.basis(WeylElement.monomial(n, b=_unit_tuple(n, j), coeff=-w), [i])
    return out


def assemble_I_BT(
    geom: GeometryModel,
    m_cut: int,
    w_max: int | None = None,
    include_ricci: bool = True,
    ricci_potential: ChartJet | None = None,
) -> FedosovData:
    """Assemble ``I_BT = sum_{m=2}^{m_cut} I_m + J`` (valid up to y-degree ``m_cut``)."""
    if w_max is not None and m_cut < w_max + 2:
        raise FedosovError(f"m_cut={m_cut} is too small for w_max={w_max} (need at least w_max + 2)")
    n = geom.n
    rstar = build_R_star(geom, m_cut)
    parts = {m: lower_index(geom, rstar[m]) for m in range(2, m_cut + 1)}
    total = WeylForm(n, {(n + j,): WeylElement.zero(n) for j in range(n)})
    for m in range(2, m_cut + 1):
        total = total + parts[m]
    if geom.is_flat:
        empty = WeylForm(n, {(n + j,): WeylElement.zero(n) for j in range(n)})
        return FedosovData(geom, m_cut, {}, WeylForm(n, {}), empty, {})
    if include_ricci:
        J = build_J_ric(geom, m_cut, ricci_potential)
    else:
        J = WeylForm(n, {})
    total = total + J
    total = total.map(lambda v: v.with_caps(None, m_cut))
    J = J.map(lambda v: v.with_caps(None, m_cut))
    return FedosovData(geom, m_cut, parts, J, total, rstar)


# ---------------------------------------------------------------------------
# the connection


def _bracket_component(F: FedosovData, v: WeylElement, ielem: WeylElement) -> WeylElement:
    """``(1/hbar)[I_l, v]`` (formal) or ``(k/sqrt(-1))[I_l, v]_k`` (level k)."""
    metric = F.geom.fiber
    if F.level is None:
        if v.level is not None:
            raise WeylError("level-k element passed to the formal connection")
        c = wick_product(ielem, v, metric, min_contractions=1) - wick_product(v, ielem, metric, min_contractions=1)
        return c.shift_hbar(-1)
    if v.level is None:
        v = evaluate_level(v, F.level)
    c = wick_product(ielem, v, metric, min_contractions=1) - wick_product(v, ielem, metric, min_contractions=1)
    return c.scale(1 / hbar_value(F.level, False) if not F.geom.exact else _inv_hbar_exact(F.level))


def _inv_hbar_exact(k: int):
    from sympy.polys.domains import QQ_I

    return QQ_I(0, -k)


def bracket_I(F: FedosovData, x) -> WeylForm:
    """``(1/hbar)[I_BT, x]`` on a Weyl-valued form."""
    n = F.n
    f = as_form(x)
    out = WeylForm(n, {})
    for l in range(n):
        il = F.I_BT.component((n + l,))
        if not il.terms:
            continue
        out = out + f.wedge_left(n + l, lambda v, il=il: _bracket_component(F, v, il))
    return out


def apply_D_BT(F: FedosovData, x, types: str = "all") -> WeylForm:
    """``D_BT x = nabla x - delta x + (1/hbar)[I_BT, x]``.

    ``types`` selects ``"all"``, the ``"10"`` part ``nabla^{1,0} - delta^{1,0}``
    or the ``"01"`` part ``nabla^{0,1} - delta^{0,1} + (1/hbar)[I_BT, -]``.
    """
    geom = F.geom
    f = as_form(x)
    if types == "10":
        from .weyl import delta10

        return nabla10(geom, f) - delta10(f)
    if types == "01":
        return nabla01(geom, f) - delta01(f) + bracket_I(F, f)
    return nabla(geom, f) - delta(f) + bracket_I(F, f)


def apply_D_BT_level_k(F: FedosovData, x, k: int) -> WeylForm:
    """The non-formal connection ``nabla - delta + (k/sqrt(-1))[I_BT|_k, -]_k`` on finite-weight data."""
    Fk = F if F.level == k else F.at_level(k)
    f = as_form(x).map(lambda v: v if v.level == k else evaluate_level(v, k))
    return nabla(F.geom, f) - delta(f) + bracket_I(Fk, f)


# ---------------------------------------------------------------------------
# flat sections


@dataclass
class FlatSection:
    """A flat section with its provenance: per-weight components and residual record."""

    element: WeylElement
    components: list
    source: str
    w_max: int
    d_cap: int | None
    residuals: dict = field(default_factory=dict)

    def weight(self, m: int) -> WeylElement:
        if m >= len(self.components):
            raise FedosovError(f"weight {m} was not computed (w_max={self.w_max})")
        return self.components[m]

    def weight_at_most(self, m: int) -> WeylElement:
        out = self.components[0]
        for i in range(1, m + 1):
            out = out + self.weight(i)
        return out


def holomorphic_completion(geom: GeometryModel, a: WeylElement, d_cap: int, k: int | None = None) -> WeylElement:
    """``sum_{p>=0} ((delta^{1,0})^{-1} nabla^{1,0})^p a`` up to ``p = d_cap`` (twisted by ``L^k`` if given)."""
    total = a
    term = a
    for _ in range(d_cap):
        term = delta_inv10(nabla10(geom, term, k))
        if isinstance(term, WeylForm):
            raise FedosovError("holomorphic completion produced a form of positive degree")
        total = total + term
    return total.with_caps(None, d_cap)


def flat_section_of_function(
    f: ChartJet,
    F: FedosovData,
    w_max: int,
    d_cap: int | None = None,
) -> FlatSection:
    """Weight-by-weight solution of ``D_BT O_f = 0`` with ``sigma(O_f) = f``.

    Weight 0 is the holomorphic completion of ``f``.  Weight ``w`` is
    ``(delta^{0,1})^{-1}`` of ``(nabla^{0,1} + (1/hbar)[I_BT, -])((O_f)_{w-1})``,
    which is the weight ``w-1`` part of ``D_BT((O_f)_{<=w-1})``.
    """
    if F.level is not None:
        raise FedosovError("flat sections of functions are solved with the formal connection")
    geom = F.geom
    d_cap = w_max if d_cap is None else d_cap
    if F.m_cut < required_m_cut(w_max, d_cap) and not geom.is_flat:
        raise FedosovError(
            f"m_cut={F.m_cut} too small for weight {w_max} at y-degree cap {d_cap} "
            f"(need {required_m_cut(w_max, d_cap)})"
        )
    comps = [holomorphic_completion(geom, WeylElement.from_jet(f), d_cap)]
    for w in range(1, w_max + 1):
        prev = comps[-1]
        src = nabla01(geom, prev) + bracket_I(F, prev)
        nxt = delta_inv01(src)
        if isinstance(nxt, WeylForm):
            nxt = nxt.as_element()
        nxt = nxt.with_caps(None, d_cap)
        if nxt.d_cap is not None and nxt.d_cap < d_cap:
            raise FedosovError(f"y-degree cap fell to {nxt.d_cap} at weight {w}; increase m_cut or the jet order")
        comps.append(nxt)
    element = comps[0]
    for c in comps[1:]:
        element = element + c
    element = WeylElement(element.n, element.terms, w_max, element.d_cap, element.truncated)
    return FlatSection(element, comps, "function", w_max, element.d_cap)


def flat_section_of_section(s: LineSectionJet, geom: GeometryModel, d_cap: int) -> FlatSection:
    """``O_s = sum_m (tilde nabla^{1,0})^m s`` up to y-degree ``d_cap``."""
    if not s.holomorphic:
        raise FedosovError("flat sections of the Bargmann–Fock sheaf need a holomorphic section")
    elem = holomorphic_completion(geom, WeylElement.from_jet(s.g), d_cap, s.k)
    return FlatSection(elem, [elem], "section", 0, d_cap)


def flat_section_residual(F: FedosovData, O: FlatSection) -> float:
    """Largest coefficient of ``D_BT O`` inside the validity caps (weights below ``w_max``)."""
    res = apply_D_BT(F, O.element)
    return res.max_abs()


def star_product(f: ChartJet, g: ChartJet, F: FedosovData, order: int) -> list[ChartJet]:
    """``C_0, ..., C_order`` with ``sigma(O_f * O_g) = sum_l hbar^l C_l(f, g)``."""
    of = flat_section_of_function(f, F, order, d_cap=order)
    og = flat_section_of_function(g, F, order, d_cap=order)
    prod = wick_product(of.element, og.element, F.geom.fiber)
    if prod.w_cap is not None and prod.w_cap < order:
        raise FedosovError("insufficient weight for the requested star-product order")
    parts = symbol(prod)
    zero = f * 0
    return [parts.get(l, zero) for l in range(order + 1)]

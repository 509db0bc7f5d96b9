"""The level-k Bargmann–Fock action and the differential operators built from it.

A finite-weight Weyl element ``alpha`` acts on the fibrewise Fock space
(polynomials in ``y``) by Wick ordering: the monomial ``hbar^r y^I ybar^J``
becomes ``(sqrt(-1)/k)^(r+|J|) omega^{jbar p} ... d/dy^p ... o m_{y^I}``.
Composing with the symbol map gives the operators ``P_{alpha,k}`` and the
higher Kostant–Souriau operators ``P_{f,k,m}``.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .fedosov import (
    FedosovData,
    FedosovError,
    FlatSection,
    apply_D_BT_level_k,
    flat_section_of_function,
    flat_section_of_section,
)
from .geometry import (
    GeometryModel,
    LineSectionJet,
    TensorField,
    hamiltonian_field,
    hamiltonian_field_01,
    higher_cov_derivative,
    laplacian,
    nabla_section,
    nabla_vector,
)
from .jets import ChartJet, imag_unit
from .weyl import (
    FiberMetric,
    WeylElement,
    WeylError,
    _scalar,
    evaluate_level,
    hbar_value,
    symbol,
)


class BargmannFockError(ValueError):
    """Invalid input to the Bargmann–Fock action (infinite weight, non-flat section, ...)."""


def _at_level(alpha: WeylElement, k: int) -> WeylElement:
    if alpha.level is None:
        if alpha.w_cap is not None:
            raise BargmannFockError("the Bargmann–Fock action needs a finite-weight element (w_cap=None)")
        return evaluate_level(alpha, k)
    if alpha.level != k:
        raise BargmannFockError(f"element is at level {alpha.level}, not {k}")
    return alpha


def _fock_derivative(v: WeylElement, j: int, k: int, metric: FiberMetric) -> WeylElement:
    """``(sqrt(-1)/k) omega^{jbar p} d/dy^p`` on a pure-y element."""
    hv = _scalar(hbar_value(k, metric.is_exact), metric.is_exact)
    out = None
    for p in range(v.n):
        term = v.d_y(p).map_coeffs(lambda c, p=p: c * metric.ubar(j, p) * hv)
        out = term if out is None else out + term
    return out


def bf_action(alpha: WeylElement, beta: WeylElement, k: int, metric: FiberMetric) -> WeylElement:
    """``alpha (*)_k beta`` for finite-weight ``alpha`` and a Fock element ``beta`` (pure in ``y``)."""
    alpha = _at_level(alpha, k)
    if any(any(b) or r for (r, _, b) in beta.terms):
        raise BargmannFockError("the Fock operand must be a polynomial in y only")
    beta = beta if beta.level == k else WeylElement(beta.n, beta.terms, None, beta.d_cap, beta.truncated, k)
    n = alpha.n
    out = WeylElement.zero(n, level=k)
    for (_, ya, yb), c in alpha.terms.items():
        v = beta.map_coeffs(lambda x, c=c: x * c)
        for i in range(n):
            for _ in range(ya[i]):
                v = v.times_y(i)
        for j in range(n):
            for _ in range(yb[j]):
                v = _fock_derivative(v, j, k, metric)
        out = out + v
    return out


def fock_symbol(beta: WeylElement) -> ChartJet:
    """``sigma_{L^k}``: the ``y = 0`` coefficient of a Fock element."""
    return symbol(beta)


def _section_element(geom: GeometryModel, s, d_cap: int) -> WeylElement:
    if isinstance(s, WeylElement):
        return s
    if isinstance(s, FlatSection):
        return s.element
    return flat_section_of_section(s, geom, d_cap).element


def p_alpha(alpha: WeylElement, k: int, s, geom: GeometryModel, d_cap: int | None = None) -> ChartJet:
    """``P_{alpha,k}(s) = sigma_{L^k}(alpha (*)_k O_s)``."""
    d_cap = _needed_degree(alpha) if d_cap is None else d_cap
    os_ = _section_element(geom, s, d_cap)
    return fock_symbol(bf_action(alpha, os_, k, geom.fiber))


def _needed_degree(alpha: WeylElement) -> int:
    return max((sum(b) for (_, _, b) in alpha.terms), default=0)


def _finite_component(O_f: FlatSection, m: int) -> WeylElement:
    comp = O_f.weight(m)
    return WeylElement(comp.n, comp.terms, None, comp.d_cap, comp.truncated)


def ks_operator(O_f: FlatSection, k: int, m: int, s, geom: GeometryModel) -> ChartJet:
    """``P_{f,k,m}(s) = sigma_{L^k}((O_f)_m (*)_k O_s)``."""
    if O_f.d_cap is not None and O_f.d_cap < m:
        raise FedosovError(f"(O_f)_{m} is only known to y-degree {O_f.d_cap}; need {m}")
    return p_alpha(_finite_component(O_f, m), k, s, geom, d_cap=m)


def ks_partial_sum(O_f: FlatSection, k: int, m: int, s, geom: GeometryModel) -> ChartJet:
    """``P_{f,k,<=m}(s) = sum_{l<=m} P_{f,k,l}(s)``."""
    os_ = _section_element(geom, s, m)
    out = None
    for l in range(m + 1):
        term = ks_operator(O_f, k, l, os_, geom)
        out = term if out is None else out + term
    return out


def kostant_souriau_prequantum(geom: GeometryModel, f: ChartJet, s: LineSectionJet) -> ChartJet:
    """``H_k(f) s = f s + (sqrt(-1)/k) nabla_{X_f} s`` for any smooth section jet ``s``."""
    iu = imag_unit(geom.exact)
    x10 = hamiltonian_field(geom, f)
    x01 = hamiltonian_field_01(geom, f)
    deriv = nabla_vector(geom, x10, s).g
    for j in range(geom.n):
        deriv = deriv + nabla_section(geom, s, geom.n + j).g * x01[j]
    return f * s.g + deriv * (iu * _scalar(Fraction(1, s.k), geom.exact))


# ---------------------------------------------------------------------------
# closed forms for small weight


def weight1_oracle(geom: GeometryModel, f: ChartJet, s: LineSectionJet) -> ChartJet:
    """``(sqrt(-1)/k) nabla_{X_f^{1,0}} s + (1/k) (Delta f) s``."""
    inv_k = _scalar(Fraction(1, s.k), geom.exact)
    iu = imag_unit(geom.exact)
    return nabla_vector(geom, hamiltonian_field(geom, f), s).g * (iu * inv_k) + laplacian(geom, f) * s.g * inv_k


def antiholomorphic_hessian(geom: GeometryModel, f: ChartJet) -> list:
    """``nabla_{jbar} nabla_{lbar} f = dbar_j dbar_l f - conj(Gamma)^q_{jl} dbar_q f``."""
    n = geom.n
    out = [[None] * n for _ in range(n)]
    for j in range(n):
        for l in range(n):
            acc = f.dbar(l).dbar(j)
            for q in range(n):
                acc = acc - geom.christoffel_bar(q, j, l) * f.dbar(q)
            out[j][l] = acc
    return out


def raise_antiholomorphic(geom: GeometryModel, coeffs: dict) -> TensorField:
    """Raise every index of a symmetric ``ybar``-tensor with ``omega^{jbar p}``.

    ``coeffs`` maps ordered index tuples ``(j_1, ..., j_l)`` to components; the
    result has components ``omega^{j_1bar p_1} ... omega^{j_lbar p_l} c_{j_1..j_l}``.
    """
    comps: dict = {}
    for idx, c in coeffs.items():
        partial = {(): c}
        for j in idx:
            nxt = {}
            for key, val in partial.items():
                for p in range(geom.n):
                    nk = key + (p,)
                    term = val * geom.inverse[j][p]
                    nxt[nk] = nxt[nk] + term if nk in nxt else term
            partial = nxt
        for key, val in partial.items():
            comps[key] = comps[key] + val if key in comps else val
    degree = len(next(iter(coeffs))) if coeffs else 0
    return TensorField(degree, comps)


def G_tensor(geom: GeometryModel, f: ChartJet) -> TensorField:
    """``G_f``: ``(tilde nabla^{0,1})^2 f = (1/2) nabla_{jbar} nabla_{lbar} f ybar^j ybar^l`` raised by ``omega^{-1}``."""
    hess = antiholomorphic_hessian(geom, f)
    n = geom.n
    half = _scalar(Fraction(1, 2), geom.exact)
    return raise_antiholomorphic(geom, {(j, l): hess[j][l] * half for j in range(n) for l in range(n)})


def ricci_hessian_pairing(geom: GeometryModel, f: ChartJet) -> ChartJet:
    """``(sqrt(-1)/2) omega^{jbar i} omega^{lbar p} Ric_{p jbar} d_i dbar_l f``.

    On a curve with ``Ric = rho omega`` this is ``(rho/2) Delta f``; it vanishes on flat space.
    """
    n = geom.n
    iu = imag_unit(geom.exact)
    half = _scalar(Fraction(1, 2), geom.exact)
    ric = geom.ricci_form()
    acc = None
    for i in range(n):
        for j in range(n):
            for l in range(n):
                for p in range(n):
                    term = geom.inverse[j][i] * geom.inverse[l][p] * ric[p][j] * f.d(i).dbar(l)
                    acc = term if acc is None else acc + term
    return acc * (iu * half)


def weight2_oracle(geom: GeometryModel, f: ChartJet, s: LineSectionJet, curvature_term: bool = True) -> ChartJet:
    """``(1/k^2)(-nabla_{G_f} s + sqrt(-1) nabla_{X^{1,0}_{Delta f}} s + (1/2)(Delta^2 f) s - c_Ric(f) s)``.

    ``c_Ric`` is :func:`ricci_hessian_pairing`; ``curvature_term=False`` gives
    the flat-space formula, which differs from the weight-2 operator by
    ``-(1/k^2)(rho/2)(Delta f) s`` on a curve of curvature ``Ric = rho omega``.
    """
    iu = imag_unit(geom.exact)
    inv_k2 = _scalar(Fraction(1, s.k * s.k), geom.exact)
    half = _scalar(Fraction(1, 2), geom.exact)
    lap = laplacian(geom, f)
    term_g = higher_cov_derivative(geom, G_tensor(geom, f), s).g
    term_x = nabla_vector(geom, hamiltonian_field(geom, lap), s).g * iu
    term_l = laplacian(geom, lap) * s.g * half
    out = term_x + term_l - term_g
    if curvature_term and not geom.is_flat:
        out = out - ricci_hessian_pairing(geom, f) * s.g
    return out * inv_k2


def ybar_monomial_tensor(geom: GeometryModel, coeff: ChartJet, m: int) -> TensorField:
    """For ``n = 1``: the tensor ``G = coeff (omega^{1bar 1})^m d^{(x) m}`` of the monomial ``coeff ybar^m``."""
    if geom.n != 1:
        raise BargmannFockError("ybar_monomial_tensor is provided for n = 1")
    return raise_antiholomorphic(geom, {(0,) * m: coeff})


# ---------------------------------------------------------------------------
# the alternative operator and the dbar image


def _dbar_hbar_component(O_f: FlatSection, m: int, j: int, normalized: bool = False) -> WeylElement:
    """``hbar d/dybar^j (O_f)_m``: the ``dzbar^j`` component of ``delta^{0,1}(hbar O_f)_{m+1}``.

    With ``normalized=True`` every ybar-degree ``l`` term is divided by ``l``
    (``d/dybar`` is replaced by the Euler-normalized contraction).
    """
    comp = _finite_component(O_f, m)
    if normalized:
        comp = _euler_normalize(comp)
    return comp.d_ybar(j).shift_hbar(1).declare_complete()


def _euler_normalize(a: WeylElement) -> WeylElement:
    terms = {}
    for key, c in a.terms.items():
        l = sum(key[2])
        if l:
            terms[key] = c * _scalar(Fraction(1, l), c.is_exact)
    return WeylElement(a.n, terms, a.w_cap, a.d_cap, a.truncated, a.level)


def tilde_ks_operator(O_f: FlatSection, k: int, m: int, s, geom: GeometryModel, normalized: bool = False) -> ChartJet:
    """``Ptilde_{f,k,m}(s)`` for ``n = 1``: ``omega^{1bar 1} nabla_1 sigma(delta^{0,1}(hbar O_f)_{m+1} (*)_k O_s)``.

    The literal operator weighs the ybar-degree ``l`` part of ``(O_f)_m`` by
    ``l`` relative to ``P_{f,k,m}``; ``normalized=True`` removes that weight,
    and then ``Ptilde_{f,k,m} = P_{f,k,m}`` for every ``m``.
    """
    if geom.n != 1:
        raise BargmannFockError("the alternative operator is implemented for n = 1")
    if m < 1:
        raise BargmannFockError("the alternative operator is defined for m >= 1")
    alpha = _dbar_hbar_component(O_f, m, 0, normalized)
    k_s = s.k if isinstance(s, LineSectionJet) else k
    tau = LineSectionJet(k_s, p_alpha(alpha, k, s, geom, d_cap=m))
    return nabla_section(geom, tau, 0).g * geom.inverse[0][0]


def dbar_of_partial_sum(O_f: FlatSection, k: int, m: int, s, geom: GeometryModel) -> list:
    """``dbar(P_{f,k,<=m} s) = sigma_{L^k}(delta^{0,1}(O_f)_{m+1} (*)_k O_s)``, one jet per ``dzbar^j``."""
    out = []
    for j in range(geom.n):
        alpha = _finite_component(O_f, m + 1).d_ybar(j).declare_complete()
        out.append(p_alpha(alpha, k, s, geom, d_cap=m + 1))
    return out


# ---------------------------------------------------------------------------
# quantizable elements


def quantum_moment_map_section(f0: ChartJet, F: FedosovData, w_max: int, d_cap: int | None = None) -> WeylElement:
    """The flat section of ``f0 - hbar (Delta f0)/sqrt(-1)``, cut to its finite-weight part.

    For a moment map of a holomorphic Killing field this section has weight at
    most one; the higher weight components are checked to vanish.
    """
    geom = F.geom
    iu = imag_unit(geom.exact)
    O0 = flat_section_of_function(f0, F, w_max, d_cap)
    O1 = flat_section_of_function(laplacian(geom, f0), F, w_max, d_cap)
    total = O0.element - O1.element.shift_hbar(1).map_coeffs(lambda c: c / iu if not geom.exact else c * (-iu))
    high = total.filter(lambda key: key[0] + sum(key[2]) >= 2)
    scale = max(total.max_abs(), 1.0)
    if high.max_abs() > 1e-8 * scale:
        raise BargmannFockError(f"section is not of finite weight (residual {high.max_abs():.3e})")
    low = total.filter(lambda key: key[0] + sum(key[2]) <= 1)
    return WeylElement(low.n, low.terms, None, low.d_cap, low.truncated)


def level_k_flatness_residual(F: FedosovData, alpha: WeylElement, k: int) -> float:
    """Largest coefficient of ``D_{BT,k} alpha`` below the y-degree cap of ``alpha``."""
    res = apply_D_BT_level_k(F, alpha, k)
    cap = alpha.d_cap
    worst = 0.0
    for v in res.comps.values():
        for key, c in v.terms.items():
            if cap is not None and sum(key[1]) >= cap:
                continue
            worst = max(worst, c.max_abs())
    return worst


def p_alpha_of_quantizable(
    F: FedosovData,
    alpha: WeylElement,
    k: int,
    s,
    tol: float = 1e-8,
) -> ChartJet:
    """``P_{alpha,k}(s)`` for a ``D_{BT,k}``-flat finite-weight ``alpha``; refuses non-flat input."""
    alpha_k = _at_level(alpha, k)
    res = level_k_flatness_residual(F, alpha_k, k)
    scale = max(alpha_k.max_abs(), 1.0)
    if res > tol * scale:
        raise BargmannFockError(f"alpha is not flat under the level-{k} connection (residual {res:.3e})")
    return p_alpha(alpha_k, k, s, F.geom)


# ---------------------------------------------------------------------------
# flat-space lemma


def flat_lemma_operators(
    alpha: WeylElement, beta: WeylElement, k: int, metric: FiberMetric, normalized: bool = False
) -> tuple:
    """``(T_{alpha,k}(beta), Ttilde_{alpha,k}(beta))`` on flat ``C^1`` with the standard form.

    ``Ttilde`` is ``-sqrt(-1) d/dz (delta^{0,1}(hbar alpha) (*)_k beta)`` with ``d/dz``
    acting on the coefficient jets of the trivialized bundle.  For ``alpha``
    homogeneous of ybar-degree ``l`` one finds ``Ttilde = l T``; with
    ``normalized=True`` the ybar-degree ``l`` part is divided by ``l`` first.
    """
    if alpha.n != 1:
        raise BargmannFockError("the flat-space lemma check is implemented for n = 1")
    is_exact = metric.is_exact
    iu = imag_unit(is_exact)
    T = bf_action(alpha, beta, k, metric)
    src = _euler_normalize(alpha) if normalized else alpha
    d_alpha = src.d_ybar(0).shift_hbar(1).declare_complete()
    inner = bf_action(d_alpha, beta, k, metric)
    Tt = inner.map_coeffs(lambda c: c.d(0) * (-iu))
    return T, Tt


def sampled(jet: ChartJet) -> np.ndarray:
    """Point values of a jet as a complex array."""
    val = jet.value()
    if val.dtype == object:
        from .jets import to_complex

        return np.array([to_complex(x) for x in val], dtype=complex)
    return np.asarray(val, dtype=complex)


__all__ = [
    "BargmannFockError",
    "G_tensor",
    "antiholomorphic_hessian",
    "bf_action",
    "dbar_of_partial_sum",
    "flat_lemma_operators",
    "fock_symbol",
    "kostant_souriau_prequantum",
    "ks_operator",
    "ks_partial_sum",
    "level_k_flatness_residual",
    "p_alpha",
    "p_alpha_of_quantizable",
    "quantum_moment_map_section",
    "raise_antiholomorphic",
    "ricci_hessian_pairing",
    "sampled",
    "tilde_ks_operator",
    "weight1_oracle",
    "weight2_oracle",
    "ybar_monomial_tensor",
    "WeylError",
]

"""Model Kähler geometries and their jets at a batch of chart points.

Conventions (validated by the test-suite rather than assumed):

* ``phi`` is a real Kähler potential and the hermitian metric of the chart
  frame of the prequantum bundle is ``h(e_L, e_L) = exp(-phi)``.
* ``omega = omega_{i jbar} dz^i ^ dzbar^j`` with
  ``omega_{i jbar} = sqrt(-1) d_i dbar_j phi``; the flat model has
  ``omega = sqrt(-1) sum dz^i ^ dzbar^i``.
* ``omega^{jbar i}`` is the matrix inverse of ``omega_{i jbar}`` and
  ``omega^{i jbar} = -omega^{jbar i}``.
* Christoffel symbols ``Gamma^k_{ij} = omega^{lbar k} d_i omega_{j lbar}``,
  curvature ``R_{i jbar k}^q = dbar_j Gamma^q_{ik}``.
* The Chern connection of ``L^k`` in the chart frame is
  ``nabla_i = d_i - k phi_i`` and ``nabla_jbar = dbar_j``, so that
  ``sqrt(-1) F = k omega``.

Only two geometries ship: flat ``C^n`` and ``CP^1`` with the Fubini–Study
form in the affine chart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .jets import ChartJet, JetOrderError, imag_unit
from .weyl import FiberMetric, WeylElement, WeylForm, apply_componentwise, _add_tuples, _unit_tuple, _acc

GEOMETRIES = ("flat", "cp1")


class GeometryError(ValueError):
    """Unknown geometry, bad chart point, or inconsistent jet data."""


def _as_points(n: int, points, exact_mode: bool) -> np.ndarray:
    arr = np.asarray(points, dtype=object if exact_mode else np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if n == 1 else arr.reshape(n, 1)
    if arr.shape[0] != n:
        raise GeometryError(f"points must have leading dimension n={n}, got shape {arr.shape}")
    if not exact_mode and not np.all(np.isfinite(arr)):
        raise GeometryError("chart point outside the affine chart (non-finite coordinate)")
    return arr


@dataclass
class GeometryModel:
    """Jets of the Kähler data at every point of a batch.

    ``metric[i][j]`` is ``omega_{i jbar}``; ``inverse[j][i]`` is
    ``omega^{jbar i}``; ``christoffel[k][i][j]`` is ``Gamma^k_{ij}``;
    ``curvature[i][j][k][q]`` is ``R_{i jbar k}^q``; ``ricci_potential`` is
    ``psi = -log det(omega_{i jbar}/sqrt(-1))`` so that ``Ric = sqrt(-1) d dbar psi``.
    """

    name: str
    n: int
    order: int
    points: np.ndarray
    exact: bool
    phi: ChartJet
    metric: list
    inverse: list
    christoffel: list
    curvature: list
    ricci_potential: ChartJet
    fiber: FiberMetric = field(init=False)

    def __post_init__(self):
        up = [[-self.inverse[j][i] for j in range(self.n)] for i in range(self.n)]
        self.fiber = FiberMetric(self.n, up)

    @property
    def npts(self) -> int:
        return self.points.shape[1]

    @property
    def is_flat(self) -> bool:
        return self.name == "flat"

    def coordinate(self, i: int, conj: bool = False) -> ChartJet:
        return ChartJet.coordinate(self.n, self.points, i, conj, self.exact)

    def constant(self, value) -> ChartJet:
        return ChartJet.constant(self.n, value, self.exact)

    def christoffel_bar(self, k: int, i: int, j: int) -> ChartJet:
        """``Gamma^{kbar}_{ibar jbar}``, the conjugate Christoffel symbol."""
        return self.christoffel[k][i][j].conj()

    def ricci_form(self) -> list:
        """Components ``Ric_{i jbar} = sqrt(-1) d_i dbar_j psi``."""
        iu = imag_unit(self.exact)
        return [[self.ricci_potential.d(i).dbar(j) * iu for j in range(self.n)] for i in range(self.n)]

    def chern_curvature(self, k: int) -> list:
        """``F_{i jbar}`` of the Chern connection on ``L^k``: ``[nabla_i, nabla_jbar] = F_{i jbar}``."""
        return [[self.phi.d(i).dbar(j) * k for j in range(self.n)] for i in range(self.n)]

    def volume_density(self) -> ChartJet:
        """Density of ``omega^n / n!`` against the Lebesgue measure ``prod dx dy`` (n = 1: ``2 omega_{1 1bar}/sqrt(-1)``)."""
        if self.n != 1:
            raise GeometryError("volume density is only provided for n = 1")
        iu = imag_unit(self.exact)
        return self.metric[0][0] * (2 / iu if not self.exact else -2 * iu)


def geometry_at(name: str, points, order: int, exact_mode: bool = False, n: int | None = None) -> GeometryModel:
    """Build the jets of a model geometry to jet order ``order`` at the given points."""
    if name == "flat":
        n = n or 1
        pts = _as_points(n, points, exact_mode)
        return _flat(n, pts, order, exact_mode)
    if name == "cp1":
        if n not in (None, 1):
            raise GeometryError("cp1 is one-dimensional")
        pts = _as_points(1, points, exact_mode)
        return _cp1(pts, order, exact_mode)
    raise GeometryError(f"unknown geometry {name!r}; expected one of {GEOMETRIES}")


def _flat(n: int, pts: np.ndarray, order: int, exact_mode: bool) -> GeometryModel:
    phi = None
    for i in range(n):
        zi = ChartJet.coordinate(n, pts, i, False, exact_mode)
        term = zi * zi.conj()
        phi = term if phi is None else phi + term
    iu = imag_unit(exact_mode)
    metric = [[ChartJet.constant(n, iu if i == j else 0, exact_mode) for j in range(n)] for i in range(n)]
    inverse = [[ChartJet.constant(n, -iu if i == j else 0, exact_mode) for i in range(n)] for j in range(n)]
    zero = ChartJet.constant(n, 0, exact_mode)
    chris = [[[zero for _ in range(n)] for _ in range(n)] for _ in range(n)]
    curv = [[[[zero for _ in range(n)] for _ in range(n)] for _ in range(n)] for _ in range(n)]
    return GeometryModel("flat", n, order, pts, exact_mode, phi, metric, inverse, chris, curv, zero)


def _cp1(pts: np.ndarray, order: int, exact_mode: bool) -> GeometryModel:
    z = ChartJet.coordinate(1, pts, 0, False, exact_mode)
    w = ChartJet.constant(1, 1, exact_mode) + z * z.conj()  # 1 + |z|^2, exact polynomial
    wt = w.truncate(order)
    q = wt.reciprocal()
    phi = wt.log(with_constant=not exact_mode)
    iu = imag_unit(exact_mode)
    metric = [[q * q * iu]]
    inverse = [[w * w * (-iu)]]
    gamma = q * z.conj() * (-2)
    curv = [[[[gamma.dbar(0)]]]]
    return GeometryModel("cp1", 1, order, pts, exact_mode, phi, metric, inverse, [[[gamma]]], curv, phi * 2)


def derived_from_potential(phi: ChartJet, exact_mode: bool = False) -> dict:
    """Metric, inverse, Christoffel and curvature jets computed directly from a potential (n = 1).

    Used as an independent cross-check of the closed forms shipped with the models.
    """
    if phi.n != 1:
        raise GeometryError("generic derivation is implemented for n = 1")
    iu = imag_unit(exact_mode)
    m = phi.d(0).dbar(0) * iu
    inv = m.reciprocal()
    gamma = inv * m.d(0)
    return {"metric": m, "inverse": inv, "christoffel": gamma, "curvature": gamma.dbar(0)}


# ---------------------------------------------------------------------------
# tensors and sections


@dataclass
class TensorField:
    """Tensor ``G = sum G^{i_1..i_l} d_{i_1} (x) ... (x) d_{i_l}`` with (1,0) slots."""

    degree: int
    components: dict

    def __post_init__(self):
        for idx in self.components:
            if len(idx) != self.degree:
                raise GeometryError(f"component index {idx} does not match degree {self.degree}")

    def component(self, idx: tuple[int, ...]) -> ChartJet | None:
        return self.components.get(tuple(idx))

    def scale(self, f) -> "TensorField":
        return TensorField(self.degree, {k: v * f for k, v in self.components.items()})

    def __add__(self, other: "TensorField") -> "TensorField":
        if other.degree != self.degree:
            raise GeometryError("degree mismatch in tensor sum")
        comps = dict(self.components)
        for k, v in other.components.items():
            comps[k] = comps[k] + v if k in comps else v
        return TensorField(self.degree, comps)


@dataclass
class LineSectionJet:
    """Local representative ``g`` of a section ``s = g e_L^k`` of ``L^k``."""

    k: int
    g: ChartJet
    holomorphic: bool = False

    def __post_init__(self):
        if self.holomorphic and self.g.order > 0:
            n = self.g.n
            for e in _mixed_exponents(n, self.g.order):
                c = self.g.coefficient(e[:n], e[n:])
                if not _all_zero(c):
                    raise GeometryError("section flagged holomorphic has antiholomorphic Taylor coefficients")


def _mixed_exponents(n: int, order: int) -> Iterable[tuple[int, ...]]:
    from .jets import monomials

    for e in monomials(n, order):
        if any(e[n:]):
            yield e


def _all_zero(c: np.ndarray, tol: float = 1e-12) -> bool:
    if c.dtype == object:
        return not any(bool(x) for x in c)
    return bool(np.all(np.abs(c) <= tol))


def holomorphic_section(k: int, n: int, expo: tuple[int, ...], like: GeometryModel) -> LineSectionJet:
    """The section ``(z - z0)^expo e_L^k`` at every base point (an exact polynomial jet)."""
    g = ChartJet.displacement_monomial(n, tuple(expo) + (0,) * n, like.exact)
    return LineSectionJet(k, g, holomorphic=True)


def nabla_section(geom: GeometryModel, s: LineSectionJet, var: int) -> LineSectionJet:
    """Chern covariant derivative of ``s`` along ``d/dz^var`` (var < n) or ``d/dzbar^(var-n)``."""
    n = geom.n
    if var < n:
        g = s.g.d(var) - geom.phi.d(var) * s.g * s.k
    else:
        g = s.g.dbar(var - n)
    return LineSectionJet(s.k, g, False)


def nabla_vector(geom: GeometryModel, x: TensorField, s: LineSectionJet) -> LineSectionJet:
    """``nabla_X s`` for a (1,0) vector field ``X``."""
    if x.degree != 1:
        raise GeometryError("nabla_vector needs a degree-1 tensor")
    out = None
    for (i,), xi in x.components.items():
        term = nabla_section(geom, s, i).g * xi
        out = term if out is None else out + term
    if out is None:
        out = s.g * 0
    return LineSectionJet(s.k, out, False)


def covariant_derivative_tensor(geom: GeometryModel, tensor: TensorField, i: int) -> TensorField:
    """``nabla_{d/dz^i}`` of a (1,0)-tensor: ``d_i G^J + sum_slots Gamma^{j_a}_{i p} G^{..p..}``."""
    n = geom.n
    comps: dict = {}
    for idx, c in tensor.components.items():
        _tacc(comps, idx, c.d(i))
        for slot in range(tensor.degree):
            p = idx[slot]
            for ja in range(n):
                new = idx[:slot] + (ja,) + idx[slot + 1 :]
                _tacc(comps, new, c * geom.christoffel[ja][i][p])
    return TensorField(tensor.degree, comps)


def _tacc(comps: dict, key, jet: ChartJet) -> None:
    comps[key] = comps[key] + jet if key in comps else jet


def higher_cov_derivative(geom: GeometryModel, tensor: TensorField, s: LineSectionJet) -> LineSectionJet:
    """Degree-l covariant derivative ``nabla_G s`` by the defining recursion.

    ``nabla_G s = G s`` for l = 0 and, writing ``G = sum_i d_i (x) G_i``,
    ``nabla_G s = sum_i nabla_i(nabla_{G_i} s) - nabla_{nabla_i G_i} s``.
    """
    if tensor.degree == 0:
        c = tensor.components.get((), None)
        if c is None:
            return LineSectionJet(s.k, s.g * 0, False)
        return LineSectionJet(s.k, s.g * c, False)
    out = None
    heads = sorted({idx[0] for idx in tensor.components})
    for i in heads:
        tail = TensorField(tensor.degree - 1, {idx[1:]: c for idx, c in tensor.components.items() if idx[0] == i})
        inner = higher_cov_derivative(geom, tail, s)
        first = nabla_section(geom, inner, i).g
        second = higher_cov_derivative(geom, covariant_derivative_tensor(geom, tail, i), s).g
        term = first - second
        out = term if out is None else out + term
    if out is None:
        out = s.g * 0
    return LineSectionJet(s.k, out, False)


def hamiltonian_field(geom: GeometryModel, f: ChartJet) -> TensorField:
    """``X_f^{1,0} = omega^{jbar i} (dbar_j f) d_i``."""
    n = geom.n
    comps = {}
    for i in range(n):
        acc = None
        for j in range(n):
            term = geom.inverse[j][i] * f.dbar(j)
            acc = term if acc is None else acc + term
        comps[(i,)] = acc
    return TensorField(1, comps)


def hamiltonian_field_01(geom: GeometryModel, f: ChartJet) -> list:
    """Components of ``X_f^{0,1} = -omega^{jbar i} (d_i f) dbar_j``."""
    n = geom.n
    out = []
    for j in range(n):
        acc = None
        for i in range(n):
            term = -(geom.inverse[j][i] * f.d(i))
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def laplacian(geom: GeometryModel, f: ChartJet) -> ChartJet:
    """Dolbeault Laplacian ``sqrt(-1) omega^{jbar i} d_i dbar_j f``."""
    if f.order < 2 and not f.poly:
        raise JetOrderError("the Laplacian needs a jet of order at least 2")
    iu = imag_unit(geom.exact)
    acc = None
    for i in range(geom.n):
        for j in range(geom.n):
            term = geom.inverse[j][i] * f.d(i).dbar(j)
            acc = term if acc is None else acc + term
    return acc * iu


def poisson_bracket(geom: GeometryModel, f: ChartJet, g: ChartJet) -> ChartJet:
    """``{f, g} = X_f(g) = omega^{i jbar}(d_i f dbar_j g - d_i g dbar_j f)``."""
    acc = None
    for i in range(geom.n):
        for j in range(geom.n):
            up = geom.fiber.up[i][j]
            term = up * (f.d(i) * g.dbar(j) - g.d(i) * f.dbar(j))
            acc = term if acc is None else acc + term
    return acc


# ---------------------------------------------------------------------------
# connections on Weyl-valued data


def nabla_weyl_component(geom: GeometryModel, a: WeylElement, var: int, k: int | None = None) -> WeylElement:
    """``nabla_var`` of a Weyl element, twisted by the Chern connection of ``L^k`` when ``k`` is given.

    Holomorphic directions act by ``d_i - Gamma^q_{ij} y^j d/dy^q``;
    antiholomorphic ones by ``dbar_i - Gammabar^q_{ij} ybar^j d/dybar^q``.
    """
    n = geom.n
    terms: dict = {}
    hol = var < n
    i = var if hol else var - n
    flat = geom.is_flat
    for (r, ya, yb), c in a.terms.items():
        _acc(terms, (r, ya, yb), c.deriv(var))
        if k is not None and hol:
            _acc(terms, (r, ya, yb), c * geom.phi.d(i) * (-k))
        if flat:
            continue
        expo = ya if hol else yb
        for q in range(n):
            if expo[q] == 0:
                continue
            lowered = _add_tuples(expo, _unit_tuple(n, q, -1))
            for j in range(n):
                gam = geom.christoffel[q][i][j] if hol else geom.christoffel_bar(q, i, j)
                raised = _add_tuples(lowered, _unit_tuple(n, j))
                key = (r, raised, yb) if hol else (r, ya, raised)
                _acc(terms, key, c * gam * (-expo[q]))
    return WeylElement(n, terms, a.w_cap, a.d_cap, a.truncated, a.level)


def nabla(geom: GeometryModel, x, k: int | None = None, holomorphic: bool = True, antiholomorphic: bool = True) -> WeylForm:
    """Covariant exterior derivative of a Weyl-valued form (optionally only one type)."""
    n = geom.n
    ops = {}
    if holomorphic:
        for i in range(n):
            ops[i] = lambda v, i=i: nabla_weyl_component(geom, v, i, k)
    if antiholomorphic:
        for j in range(n):
            ops[n + j] = lambda v, j=j: nabla_weyl_component(geom, v, n + j, k)
    return apply_componentwise(x, ops)


def nabla10(geom: GeometryModel, x, k: int | None = None) -> WeylForm:
    return nabla(geom, x, k, True, False)


def nabla01(geom: GeometryModel, x, k: int | None = None) -> WeylForm:
    return nabla(geom, x, k, False, True)

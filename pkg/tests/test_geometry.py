from __future__ import annotations

import math

import numpy as np
import pytest
import sympy as sp

from fedosov_bt.catalog import CatalogError, get_function
from fedosov_bt.geometry import (
    GeometryError,
    LineSectionJet,
    TensorField,
    derived_from_potential,
    geometry_at,
    hamiltonian_field,
    hamiltonian_field_01,
    higher_cov_derivative,
    holomorphic_section,
    laplacian,
    nabla_vector,
    poisson_bracket,
)
from fedosov_bt.jets import ChartJet

from conftest import SAMPLE_POINTS

Z, W = sp.symbols("z w")


def _assert_jet_equals(jet: ChartJet, expr, tol: float = 1e-10) -> None:
    """Compare every Taylor coefficient of ``jet`` with the sympy expression ``expr(z, w = zbar)``."""
    for p, z0 in enumerate(SAMPLE_POINTS):
        subs = {Z: complex(z0), W: complex(np.conj(z0))}
        for a in range(jet.order + 1):
            for b in range(jet.order + 1 - a):
                d = sp.diff(expr, Z, a, W, b) if a or b else expr
                ref = complex(d.subs(subs).evalf(25)) / (math.factorial(a) * math.factorial(b))
                got = complex(jet.coefficient((a,), (b,))[p])
                assert abs(got - ref) <= tol * max(1.0, abs(ref)), ((a, b), p, got, ref)


@pytest.fixture(scope="module")
def cp1_low():
    return geometry_at("cp1", SAMPLE_POINTS[None, :], 5)


def test_cp1_metric_christoffel_and_curvature_match_sympy(cp1_low) -> None:
    g = cp1_low
    phi = sp.log(1 + Z * W)
    metric = sp.I * sp.diff(phi, Z, W)
    gamma = sp.diff(metric, Z) / metric
    _assert_jet_equals(g.phi, phi)
    _assert_jet_equals(g.metric[0][0], metric)
    _assert_jet_equals(g.christoffel[0][0][0].truncate(3), gamma)
    _assert_jet_equals(g.curvature[0][0][0][0].truncate(2), sp.diff(gamma, W))
    # omega^{1bar 1} = -sqrt(-1) (1 + |z|^2)^2 is the inverse of omega_{1 1bar}
    _assert_jet_equals(g.inverse[0][0].truncate(4), -sp.I * (1 + Z * W) ** 2)


def test_closed_forms_agree_with_generic_derivation(cp1_low) -> None:
    derived = derived_from_potential(cp1_low.phi)
    for got, ref in [
        (cp1_low.metric[0][0], derived["metric"]),
        (cp1_low.christoffel[0][0][0], derived["christoffel"]),
        (cp1_low.curvature[0][0][0][0], derived["curvature"]),
    ]:
        order = min(got.order, ref.order)
        np.testing.assert_allclose(got.truncate(order).coeffs, ref.truncate(order).coeffs, atol=1e-11)


def test_ricci_form_is_twice_the_kaehler_form(cp1) -> None:
    ric = cp1.ricci_form()[0][0]
    order = ric.order
    np.testing.assert_allclose(ric.coeffs, (cp1.metric[0][0] * 2).truncate(order).coeffs, atol=1e-11)


def test_flat_geometry_has_vanishing_curvature(flat1) -> None:
    assert flat1.is_flat
    assert np.all(flat1.curvature[0][0][0][0].coeffs == 0)
    assert np.all(flat1.ricci_potential.coeffs == 0)
    flat2 = geometry_at("flat", np.zeros((2, 3)), 4, n=2)
    assert flat2.n == 2 and flat2.npts == 3


def test_x3_is_a_laplace_eigenfunction(cp1) -> None:
    x3 = get_function("x3").jet(cp1)
    lap = laplacian(cp1, x3)
    order = lap.order
    np.testing.assert_allclose(lap.coeffs, (x3 * -2).truncate(order).coeffs, atol=1e-10)


def test_catalog_values_match_jets(cp1) -> None:
    for name in ("x1", "x2", "x3", "x1x2", "x3sq", "generic"):
        f = get_function(name)
        np.testing.assert_allclose(f.jet(cp1).value(), f.values(SAMPLE_POINTS), atol=1e-13)
    x1, x2, x3 = (get_function(n).values(SAMPLE_POINTS) for n in ("x1", "x2", "x3"))
    np.testing.assert_allclose(x1**2 + x2**2 + x3**2, 1.0, atol=1e-13)
    with pytest.raises(CatalogError):
        get_function("x4")


def test_poisson_bracket_is_antisymmetric_and_satisfies_jacobi(cp1) -> None:
    f, g, h = (get_function(n).jet(cp1) for n in ("x1", "generic", "x3sq"))
    fg = poisson_bracket(cp1, f, g)
    gf = poisson_bracket(cp1, g, f)
    np.testing.assert_allclose(fg.coeffs, -gf.coeffs, atol=1e-12)
    jac = (
        poisson_bracket(cp1, f, poisson_bracket(cp1, g, h))
        + poisson_bracket(cp1, g, poisson_bracket(cp1, h, f))
        + poisson_bracket(cp1, h, poisson_bracket(cp1, f, g))
    )
    assert np.abs(jac.coeffs).max() < 1e-10
    # Leibniz rule in the second slot
    lhs = poisson_bracket(cp1, f, g * h)
    rhs = poisson_bracket(cp1, f, g) * h + g * poisson_bracket(cp1, f, h)
    order = min(lhs.order, rhs.order)
    np.testing.assert_allclose(lhs.truncate(order).coeffs, rhs.truncate(order).coeffs, atol=1e-11)


def test_hamiltonian_field_generates_the_bracket(cp1) -> None:
    f, g = (get_function(n).jet(cp1) for n in ("x2", "generic"))
    x10 = hamiltonian_field(cp1, f).component((0,))
    x01 = hamiltonian_field_01(cp1, f)[0]
    lhs = x10 * g.d(0) + x01 * g.dbar(0)
    rhs = poisson_bracket(cp1, f, g)
    order = min(lhs.order, rhs.order)
    np.testing.assert_allclose(lhs.truncate(order).coeffs, rhs.truncate(order).coeffs, atol=1e-11)


def test_degree_one_covariant_derivative_is_nabla_along_the_field(cp1) -> None:
    s = holomorphic_section(7, 1, (2,), cp1)
    x = hamiltonian_field(cp1, get_function("x1").jet(cp1))
    a = higher_cov_derivative(cp1, x, s).g
    b = nabla_vector(cp1, x, s).g
    order = min(a.order, b.order)
    np.testing.assert_allclose(a.truncate(order).coeffs, b.truncate(order).coeffs, atol=1e-11)
    zero = higher_cov_derivative(cp1, TensorField(0, {}), s).g
    assert np.all(zero.coeffs == 0)


def test_geometry_and_tensor_errors() -> None:
    with pytest.raises(GeometryError):
        geometry_at("torus", SAMPLE_POINTS[None, :], 4)
    with pytest.raises(GeometryError):
        geometry_at("cp1", np.zeros((2, 1)), 4, n=2)
    with pytest.raises(GeometryError):
        TensorField(2, {(0,): ChartJet.constant(1, 1.0)})
    zb = ChartJet.coordinate(1, SAMPLE_POINTS[None, :], 0, conj=True)
    with pytest.raises(GeometryError):
        LineSectionJet(3, zb.truncate(2), holomorphic=True)

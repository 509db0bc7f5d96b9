from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from fedosov_bt.jets import ChartJet, JetOrderError, exact, gaussian, index_of, monomials, n_coeffs, to_complex
from fedosov_bt.kernels import available_backends, jet_mul
from fedosov_bt.jets import product_table

Z0 = np.array([[0.4 - 0.3j, -1.1 + 0.6j]])
ORDER = 6


def _sympy_coefficients(expr, z, w, z0: complex, order: int) -> dict[tuple[int, int], complex]:
    """Taylor coefficients of ``expr(z, w)`` at ``(z0, conj z0)`` with ``z``, ``w`` independent."""
    out = {}
    for a in range(order + 1):
        for b in range(order + 1 - a):
            d = sp.diff(expr, z, a, w, b) if a or b else expr
            val = complex(d.subs({z: z0, w: np.conj(z0)}).evalf(30))
            out[(a, b)] = val / (math.factorial(a) * math.factorial(b))
    return out


def _jet_matches(jet: ChartJet, expr, tol: float = 1e-11) -> None:
    z, w = sp.symbols("z w")
    for p, z0 in enumerate(Z0[0]):
        ref = _sympy_coefficients(expr(z, w), z, w, complex(z0), jet.order)
        for (a, b), val in ref.items():
            got = complex(jet.coefficient((a,), (b,))[p])
            assert abs(got - val) <= tol * max(1.0, abs(val)), ((a, b), got, val)


def test_monomial_count_matches_binomial() -> None:
    for n in (1, 2, 3):
        for order in range(5):
            assert n_coeffs(n, order) == math.comb(2 * n + order, order)
            assert len(monomials(n, order)) == n_coeffs(n, order)
            assert len(index_of(n, order)) == n_coeffs(n, order)


def test_coordinate_jets_are_exact_polynomials() -> None:
    z = ChartJet.coordinate(1, Z0, 0)
    zb = ChartJet.coordinate(1, Z0, 0, conj=True)
    assert z.poly and zb.poly
    np.testing.assert_allclose(z.value(), Z0[0])
    np.testing.assert_allclose(zb.value(), np.conj(Z0[0]))
    assert np.all(z.coefficient((1,), (0,)) == 1)
    assert np.all(zb.coefficient((0,), (1,)) == 1)
    assert np.all((z * zb).coefficient((1,), (1,)) == 1)


def test_product_reciprocal_and_log_match_sympy_taylor_coefficients() -> None:
    z = ChartJet.coordinate(1, Z0, 0)
    zb = ChartJet.coordinate(1, Z0, 0, conj=True)
    w = (z * zb + 1).truncate(ORDER)
    _jet_matches(w.reciprocal(), lambda a, b: 1 / (1 + a * b))
    _jet_matches(w.log(), lambda a, b: sp.log(1 + a * b))
    _jet_matches((z * zb * z + zb).truncate(ORDER).exp(), lambda a, b: sp.exp(a * a * b + b))
    _jet_matches(w.reciprocal() * (z * 2 - zb * zb), lambda a, b: (2 * a - b * b) / (1 + a * b))


def test_derivatives_lower_the_order_and_match_sympy() -> None:
    z = ChartJet.coordinate(1, Z0, 0)
    zb = ChartJet.coordinate(1, Z0, 0, conj=True)
    q = (z * zb + 1).truncate(ORDER).reciprocal()
    dq = q.d(0)
    assert dq.order == ORDER - 1
    _jet_matches(dq, lambda a, b: sp.diff(1 / (1 + a * b), a))
    _jet_matches(q.dbar(0).d(0), lambda a, b: sp.diff(1 / (1 + a * b), a, b))


def test_conjugation_swaps_holomorphic_and_antiholomorphic_parts() -> None:
    z = ChartJet.coordinate(1, Z0, 0)
    zb = ChartJet.coordinate(1, Z0, 0, conj=True)
    f = (z * z * (1 + 2j) + zb * 3).truncate(4)
    g = f.conj()
    expected = (zb * zb * (1 - 2j) + z * 3).truncate(4)
    np.testing.assert_allclose(g.coeffs, expected.coeffs, atol=1e-15)


def test_truncated_jet_refuses_higher_order_requests() -> None:
    z = ChartJet.coordinate(1, Z0, 0)
    q = (z + 1).truncate(3).reciprocal()
    with pytest.raises(JetOrderError):
        q.coefficient((4,), (0,))
    with pytest.raises(JetOrderError):
        q.truncate(5)
    with pytest.raises(JetOrderError):
        (z * z).reciprocal()


def test_exact_mode_is_exact() -> None:
    base = [[gaussian(Fraction(1, 3), Fraction(-1, 2))]]
    z = ChartJet.coordinate(1, base, 0, exact_mode=True)
    zb = ChartJet.coordinate(1, base, 0, conj=True, exact_mode=True)
    w = (z * zb + 1).truncate(5)
    one = w * w.reciprocal()
    assert one.is_exact
    assert to_complex(one.value()[0]) == 1
    assert (one - ChartJet.constant(1, 1, True)).is_zero()
    assert exact(Fraction(2, 3)) * 3 == exact(2)
    with pytest.raises(ValueError):
        w.log()
    with pytest.raises(ValueError):
        exact(0.5 + 0.25j)


def test_backends_agree_on_batched_products() -> None:
    rng = np.random.default_rng(1)
    m = n_coeffs(2, 4)
    a = rng.normal(size=(m, 7)) + 1j * rng.normal(size=(m, 7))
    b = rng.normal(size=(m, 7)) + 1j * rng.normal(size=(m, 7))
    table = product_table(2, 4, 4, 4)
    outs = [jet_mul(a, b, table, backend) for backend in available_backends()]
    for out in outs[1:]:
        np.testing.assert_allclose(out, outs[0], atol=1e-13)

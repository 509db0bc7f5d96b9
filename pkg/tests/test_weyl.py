from __future__ import annotations

from fractions import Fraction

import pytest

from fedosov_bt.checks import run_check
from fedosov_bt.jets import ChartJet, exact, gaussian, imag_unit, to_complex
from fedosov_bt.weyl import (
    FiberMetric,
    WeylElement,
    WeylError,
    WeylForm,
    commutator,
    delta01,
    delta10,
    delta_inv01,
    delta_inv10,
    evaluate_level,
    key_weight,
    level_k_wick,
    symbol,
    wick_product,
)

FLAT = FiberMetric.flat(1, exact_mode=True)
I = imag_unit(True)


def _const(x) -> ChartJet:
    return ChartJet.constant(1, x, True)


def _coeff(a: WeylElement, r: int, ya: int, yb: int):
    c = a.coeff(r, (ya,), (yb,))
    return None if c is None else c.value()[0]


def test_basic_wick_products_of_generators() -> None:
    y = WeylElement.y(1, 0, exact_mode=True)
    yb = WeylElement.ybar(1, 0, exact_mode=True)
    left = wick_product(y, yb, FLAT)
    right = wick_product(yb, y, FLAT)
    assert _coeff(left, 0, 1, 1) == exact(1)
    assert _coeff(left, 1, 0, 0) == I  # hbar omega^{1 1bar}
    assert _coeff(right, 1, 0, 0) is None
    comm = commutator(y, yb, FLAT)
    assert set(comm.terms) == {(1, (0,), (0,))}


def test_wick_product_of_powers_counts_contractions() -> None:
    y2 = WeylElement.monomial(1, a=(2,), exact_mode=True)
    yb2 = WeylElement.monomial(1, b=(2,), exact_mode=True)
    prod = wick_product(y2, yb2, FLAT)
    # y^2 * ybar^2 = y^2 ybar^2 + 4 hbar w y ybar + 2 hbar^2 w^2
    assert _coeff(prod, 0, 2, 2) == exact(1)
    assert _coeff(prod, 1, 1, 1) == I * 4
    assert _coeff(prod, 2, 0, 0) == I * I * 2


def test_polarized_weight_and_caps() -> None:
    assert key_weight((2, (3,), (1,))) == 3
    a = WeylElement.monomial(1, r=1, b=(1,), exact_mode=True).with_caps(w_cap=3, d_cap=2)
    b = WeylElement.monomial(1, a=(1,), b=(2,), exact_mode=True).with_caps(w_cap=4, d_cap=5)
    prod = wick_product(a, b, FLAT)
    # unknown terms of either factor (weight > cap) meet the other factor's lowest weight 2
    assert prod.w_cap == 5
    assert all(key_weight(k) <= prod.w_cap and sum(k[1]) <= prod.d_cap for k in prod.terms)
    with pytest.raises(WeylError):
        a.weight_component(4)


def test_level_evaluation_and_symbol() -> None:
    a = WeylElement.monomial(1, r=2, coeff=gaussian(3), exact_mode=True) + WeylElement.monomial(
        1, coeff=gaussian(1), exact_mode=True
    )
    at5 = evaluate_level(a, 5)
    assert at5.level == 5
    assert symbol(at5) .value()[0] == exact(1) + exact(3) * (I * exact(Fraction(1, 5))) ** 2
    assert symbol(a, 5).value()[0] == symbol(at5).value()[0]
    with pytest.raises(WeylError):
        evaluate_level(a.with_caps(w_cap=3), 5)


def test_level_k_product_is_the_evaluated_formal_product() -> None:
    y = WeylElement.monomial(1, a=(2,), b=(1,), coeff=gaussian(2, 1), exact_mode=True)
    yb = WeylElement.monomial(1, r=1, a=(1,), b=(2,), coeff=gaussian(-1, 3), exact_mode=True)
    formal = evaluate_level(wick_product(y, yb, FLAT), 7)
    direct = level_k_wick(y, yb, 7, FLAT)
    assert (formal - direct).is_zero()


def test_koszul_operators_on_monomials() -> None:
    a = WeylElement.monomial(1, a=(2,), b=(1,), exact_mode=True)
    d10 = delta10(a)
    assert set(d10.comps) == {(0,)}
    assert _coeff(d10.component((0,)), 0, 1, 1) == exact(2)
    back = delta_inv10(d10)
    assert (back - a).is_zero()
    d01 = delta01(a)
    assert (delta_inv01(d01) - a).is_zero()
    form = WeylForm.basis(WeylElement.monomial(1, b=(1,), exact_mode=True), [1])
    assert delta01(form).is_zero()


@pytest.mark.parametrize("name", ["wick_associativity", "delta_homotopy", "module_property"])
@pytest.mark.parametrize("geometry,n", [("cp1", 1), ("flat", 2)])
def test_exact_identities_on_random_instances(name: str, geometry: str, n: int) -> None:
    result = run_check(name, geometry, instances=6, seed=11, w_max=3, n=n)
    assert result.exact_zero, result


def test_incompatible_operands_are_rejected() -> None:
    a = WeylElement.y(1, 0, exact_mode=True)
    b = WeylElement.y(2, 0, exact_mode=True)
    with pytest.raises(WeylError):
        wick_product(a, b, FLAT)
    with pytest.raises(WeylError):
        wick_product(evaluate_level(a, 3), evaluate_level(a, 4), FLAT)


def test_floating_metric_gives_floating_products() -> None:
    metric = FiberMetric.flat(1)
    y = WeylElement.y(1, 0)
    yb = WeylElement.ybar(1, 0)
    c = wick_product(y, yb, metric).coeff(1, (0,), (0,))
    assert to_complex(c.value()[0]) == 1j

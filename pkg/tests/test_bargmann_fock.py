from __future__ import annotations

import numpy as np
import pytest

from fedosov_bt.bargmann_fock import (
    BargmannFockError,
    bf_action,
    kostant_souriau_prequantum,
    ks_operator,
    ks_partial_sum,
    level_k_flatness_residual,
    p_alpha,
    p_alpha_of_quantizable,
    quantum_moment_map_section,
    sampled,
    tilde_ks_operator,
    weight1_oracle,
    weight2_oracle,
    ybar_monomial_tensor,
)
from fedosov_bt.catalog import get_function
from fedosov_bt.fedosov import flat_section_of_function
from fedosov_bt.geometry import higher_cov_derivative, holomorphic_section, laplacian
from fedosov_bt.suites import Tolerances, flat_lemma_rows
from fedosov_bt.weyl import WeylElement, evaluate_level

KS = (3, 10)
SECTION_DEGREES = (0, 1, 3)


def _close(a, b, rtol: float = 1e-9) -> None:
    a, b = sampled(a), sampled(b)
    assert np.abs(a - b).max() <= rtol * max(1.0, np.abs(b).max()), np.abs(a - b).max()


@pytest.fixture(scope="module")
def generic_section(cp1, cp1_data):
    f = get_function("generic").jet(cp1)
    return f, flat_section_of_function(f, cp1_data, 3, d_cap=3)


def test_weight_zero_and_one_match_closed_forms(cp1, generic_section) -> None:
    f, O = generic_section
    for k in KS:
        for e in SECTION_DEGREES:
            s = holomorphic_section(k, 1, (e,), cp1)
            _close(ks_operator(O, k, 0, s, cp1), f * s.g)
            _close(ks_operator(O, k, 1, s, cp1), weight1_oracle(cp1, f, s))


def test_first_order_sum_is_prequantum_plus_laplacian(cp1, generic_section) -> None:
    f, O = generic_section
    k = 6
    s = holomorphic_section(k, 1, (2,), cp1)
    ref = kostant_souriau_prequantum(cp1, f, s) + laplacian(cp1, f) * s.g * (1 / k)
    _close(ks_partial_sum(O, k, 1, s, cp1), ref)


def test_weight_two_needs_the_curvature_term_on_the_sphere(cp1, generic_section) -> None:
    f, O = generic_section
    lap = laplacian(cp1, f)
    for k in KS:
        for e in SECTION_DEGREES:
            s = holomorphic_section(k, 1, (e,), cp1)
            p2 = ks_operator(O, k, 2, s, cp1)
            _close(p2, weight2_oracle(cp1, f, s))
            # the flat-space formula is off by -(1/k^2) (Delta f) s since Ric = 2 omega
            literal = weight2_oracle(cp1, f, s, curvature_term=False)
            _close(p2 - literal, lap * s.g * (-1 / k**2))


def test_weight_two_flat_formula_on_the_plane(flat1, flat1_data) -> None:
    z = flat1.coordinate(0)
    zb = flat1.coordinate(0, conj=True)
    f = (z * zb * zb * zb * 0.3 + zb * zb * (1 + 0.5j) + z * z * zb).truncate(flat1.order)
    O = flat_section_of_function(f, flat1_data, 3, d_cap=3)
    for k in KS:
        s = holomorphic_section(k, 1, (2,), flat1)
        _close(ks_operator(O, k, 2, s, flat1), weight2_oracle(flat1, f, s, curvature_term=False))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_ybar_monomials_act_by_higher_covariant_derivatives(cp1, m: int) -> None:
    c = get_function("generic").jet(cp1)
    alpha = WeylElement.monomial(1, 0, (0,), (m,), c)
    for k in (3, 7):
        s = holomorphic_section(k, 1, (1,), cp1)
        ref = higher_cov_derivative(cp1, ybar_monomial_tensor(cp1, c, m), s).g * (1j / k) ** m
        _close(p_alpha(alpha, k, s, cp1), ref)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_normalized_alternative_operator_equals_the_weight_operator(cp1, generic_section, m: int) -> None:
    _, O = generic_section
    for k in KS:
        s = holomorphic_section(k, 1, (1,), cp1)
        _close(tilde_ks_operator(O, k, m, s, cp1, normalized=True), ks_operator(O, k, m, s, cp1))


def test_literal_alternative_operator_weighs_by_ybar_degree(flat1, flat1_data) -> None:
    zb = flat1.coordinate(0, conj=True)
    f = (zb * zb * zb * 0.7 + zb * zb * 0.2).truncate(flat1.order)
    O = flat_section_of_function(f, flat1_data, 3, d_cap=3)
    s = holomorphic_section(5, 1, (2,), flat1)
    for m in (1, 2, 3):
        _close(tilde_ks_operator(O, 5, m, s, flat1), ks_operator(O, 5, m, s, flat1) * m)
    with pytest.raises(BargmannFockError):
        tilde_ks_operator(O, 5, 0, s, flat1)


def test_flat_space_lemma_in_exact_arithmetic() -> None:
    rows = flat_lemma_rows(Tolerances(), degrees=(1, 2, 3))
    normalized = [r for r in rows if r.metric.endswith("normalized")]
    literal = {r.m: r.value for r in rows if r.metric.endswith("literal")}
    assert all(r.value == 0 for r in normalized)
    # Ttilde = l T for ybar-degree l
    assert literal == {1: 0, 2: 1, 3: 2}


def test_quantum_moment_map_is_flat_at_every_level(cp1, cp1_data) -> None:
    x3 = get_function("x3").jet(cp1)
    alpha = quantum_moment_map_section(x3, cp1_data, 3, d_cap=3)
    assert max(key[0] + sum(key[2]) for key in alpha.terms) <= 1
    for k in (2, 5, 11):
        assert level_k_flatness_residual(cp1_data, evaluate_level(alpha, k), k) < 1e-9
        s = holomorphic_section(k, 1, (1,), cp1)
        O = flat_section_of_function(x3, cp1_data, 3, d_cap=3)
        _close(p_alpha_of_quantizable(cp1_data, alpha, k, s), ks_partial_sum(O, k, 1, s, cp1))
    generic = get_function("generic").jet(cp1)
    with pytest.raises(BargmannFockError):
        quantum_moment_map_section(generic, cp1_data, 3, d_cap=3)
    not_flat = WeylElement.monomial(1, 0, (0,), (1,), generic)
    with pytest.raises(BargmannFockError):
        p_alpha_of_quantizable(cp1_data, not_flat, 4, holomorphic_section(4, 1, (0,), cp1))


def test_bf_action_rejects_bad_operands(cp1) -> None:
    metric = cp1.fiber
    fock = WeylElement.y(1, 0)
    with pytest.raises(BargmannFockError):
        bf_action(WeylElement.ybar(1, 0).with_caps(w_cap=3), fock, 4, metric)
    with pytest.raises(BargmannFockError):
        bf_action(WeylElement.y(1, 0), WeylElement.ybar(1, 0), 4, metric)
    with pytest.raises(BargmannFockError):
        bf_action(evaluate_level(WeylElement.y(1, 0), 3), fock, 4, metric)
    # ybar lowers y by one with weight sqrt(-1)/k omega^{1bar 1}
    out = bf_action(WeylElement.ybar(1, 0), fock, 4, metric)
    _close(out.coeff(0, (0,), (0,)), metric.ubar(0, 0) * (1j / 4))

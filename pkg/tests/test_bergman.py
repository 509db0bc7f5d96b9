from __future__ import annotations

import math

import numpy as np
import pytest

from fedosov_bt.bergman import (
    BergmanError,
    basis_fields,
    build_basis,
    composition_norm,
    cov_derivative_norm,
    fit_slope,
    gram,
    grid_for,
    ks_norm,
    lift_local_operator,
    main_asymptotic_norms,
    monomial_norm2,
    op_norm,
    orthogonality_residual,
    quadrature_check,
    quadrature_grid,
    quantizable_exactness,
    reference_tensors,
    tilde_residual,
    toeplitz_images,
    toeplitz_matrix,
    tuynman_residual,
)
from fedosov_bt.catalog import get_function


def test_monomial_norms_match_the_beta_integral() -> None:
    # ||z^a||^2 = 2 pi int_0^1 t^a (1 - t)^(k - a) dt
    for k, a in [(1, 0), (5, 2), (12, 12)]:
        assert math.isclose(monomial_norm2(k, a), 2 * math.pi * math.factorial(a) * math.factorial(k - a) / math.factorial(k + 1))
    with pytest.raises(BergmanError):
        build_basis(0)


@pytest.mark.parametrize("k", [1, 7, 20])
def test_sampled_basis_is_orthonormal(k: int) -> None:
    grid = grid_for(20, 2)
    assert quadrature_check(k, grid) < 1e-10
    assert quadrature_check(k, grid.refined(2)) < 1e-10
    with pytest.raises(BergmanError):
        quadrature_grid(0, 4)


def test_operator_norm_of_identity_and_multiplication() -> None:
    grid = grid_for(20, 2)
    basis = build_basis(10)
    e = basis_fields(basis, grid)
    assert math.isclose(op_norm(e, grid), 1.0, rel_tol=1e-10)
    x3 = get_function("x3").values(grid.z)
    assert op_norm(e * x3, grid) <= 1.0 + 1e-10


def test_toeplitz_operators_are_hermitian_with_spectrum_in_the_range() -> None:
    grid = grid_for(20, 2)
    basis = build_basis(12)
    f = get_function("generic").values(grid.z)
    T = toeplitz_matrix(f, basis, grid)
    np.testing.assert_allclose(T, T.conj().T, atol=1e-12)
    vals = np.linalg.eigvalsh(T)
    assert f.real.min() - 1e-10 <= vals.min() and vals.max() <= f.real.max() + 1e-10
    one = toeplitz_matrix(np.ones(grid.size), basis, grid)
    np.testing.assert_allclose(one, np.eye(13), atol=1e-10)
    # Toeplitz images are the projections of f e_a
    e = basis_fields(basis, grid)
    imgs = toeplitz_images(T, basis, grid)
    proj = gram(e * f, e, grid) @ e
    np.testing.assert_allclose(imgs, proj, atol=1e-10)


def test_lifting_a_local_operator_reproduces_multiplication_by_z() -> None:
    grid = grid_for(20, 2)
    basis = build_basis(6)
    # A = multiplication by z: A((z - z0)^0)(z0) = z0, A((z - z0)^1)(z0) = 0
    local = [grid.z.copy(), np.zeros(grid.size, dtype=complex)]
    lifted = lift_local_operator(local, basis, grid)
    direct = basis_fields(basis, grid) * grid.z * np.sqrt(1.0 - grid.t)
    # lifted images carry the weight (1 - t)^(k/2) of level k, direct ones that of level k + 1
    np.testing.assert_allclose(lifted * np.sqrt(1.0 - grid.t), direct, atol=1e-12)


def test_tuynman_relation(small_pipe) -> None:
    for name in ("x1", "generic"):
        assert tuynman_residual(small_pipe, name, 10) < 1e-10


def test_positive_weight_operators_are_orthogonal_to_holomorphic_sections(small_pipe) -> None:
    for m in (1, 2):
        assert orthogonality_residual(small_pipe, "generic", 12, m) < 1e-8


def test_quantizable_function_is_quantized_exactly(small_pipe) -> None:
    for k in (5, 12):
        err, dbar_res = quantizable_exactness(small_pipe, k, "x3")
        assert err < 1e-10 and dbar_res < 1e-10


def test_asymptotic_norms_decrease_with_the_level(small_pipe) -> None:
    a = main_asymptotic_norms(small_pipe, "generic", 8, 1)
    b = main_asymptotic_norms(small_pipe, "generic", 16, 1)
    assert b[0] < a[0] and b[1] < a[1]
    assert ks_norm(small_pipe, "generic", 16, 2) < ks_norm(small_pipe, "generic", 8, 2)
    assert composition_norm(small_pipe, "x1", "x2", 16, 2) < composition_norm(small_pipe, "x1", "x2", 8, 2)
    t1 = reference_tensors(small_pipe)[1]
    assert cov_derivative_norm(small_pipe, t1, 16) > cov_derivative_norm(small_pipe, t1, 8)


def test_alternative_operator_residuals(small_pipe) -> None:
    assert tilde_residual(small_pipe, "generic", 10, 2, normalized=True) < 1e-9
    assert tilde_residual(small_pipe, "generic", 10, 1) < 1e-9
    assert tilde_residual(small_pipe, "generic", 10, 2) > 0.1


def test_fit_slope() -> None:
    ks = np.arange(4, 44, 4)
    assert math.isclose(fit_slope(ks, 3.0 * ks**-1.5), -1.5, rel_tol=1e-12)
    assert math.isclose(fit_slope(ks, ks**0.5, window=None), 0.5, rel_tol=1e-12)
    with pytest.raises(BergmanError):
        fit_slope([4, 8], [1.0, 0.5])

"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The rows come from the same suite functions the ``quantize`` runner uses, on
the default configuration.  Criteria whose literal reference formula
disagrees with the computed operators are judged on the literal formula and
the line also reports the corrected comparison.
"""

from __future__ import annotations

import pytest

from fedosov_bt.bergman import StudyRow
from fedosov_bt.cli import (
    ExperimentConfig,
    cmd_check_quantizable,
    cmd_study_asymptotics,
    cmd_study_composition,
    cmd_verify_algebra,
    cmd_verify_oracles,
    cmd_verify_orthogonality,
)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def cfg() -> ExperimentConfig:
    return ExperimentConfig.from_dict({})


@pytest.fixture(scope="module")
def algebra(cfg) -> list[StudyRow]:
    return cmd_verify_algebra(cfg)


@pytest.fixture(scope="module")
def oracles(cfg) -> list[StudyRow]:
    return cmd_verify_oracles(cfg)


@pytest.fixture(scope="module")
def orthogonality(cfg) -> list[StudyRow]:
    return cmd_verify_orthogonality(cfg)


@pytest.fixture(scope="module")
def asymptotics(cfg) -> list[StudyRow]:
    return cmd_study_asymptotics(cfg)


def _report(capsys, n: int, passed: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if passed else 'FAIL'} {detail}")


def _worst(rows, **match) -> float:
    vals = [r.value for r in rows if all(getattr(r, k) == v for k, v in match.items())]
    assert vals, match
    return max(vals)


def _slopes(rows, study: str) -> list[StudyRow]:
    return [r for r in rows if r.study == study and r.metric == "slope"]


def _slope_text(rows) -> str:
    return ", ".join(f"{r.f} m={r.m}: {r.value:.3f} (bound {r.oracle + r.tolerance:.2f})" for r in rows)


def test_criterion_1_algebraic_exactness(cfg, algebra, capsys) -> None:
    rows = [r for r in algebra if r.study == "verify_algebra"]
    passed = cfg.algebra_instances >= 50 and cfg.algebra_w_max == 3 and all(r.value == 0 for r in rows)
    detail = f"{len(rows)} identity/geometry pairs x {cfg.algebra_instances} instances, max residual {max(r.value for r in rows):.1e}"
    _report(capsys, 1, passed, detail)
    assert passed


def test_criterion_2_closed_form_oracles(cfg, oracles, capsys) -> None:
    rows = [r for r in oracles if r.study == "oracle" and r.geometry == "cp1"]
    tol = cfg.tol.oracle
    p0 = _worst(rows, metric="P0_vs_multiplication")
    p1 = _worst(rows, metric="P1_vs_weight1")
    p2 = _worst(rows, metric="P2_vs_weight2_literal")
    p2c = _worst(rows, metric="P2_vs_weight2_corrected")
    passed = max(p0, p1, p2) <= tol
    detail = (
        f"rel. error m=0 {p0:.1e}, m=1 {p1:.1e}, m=2 literal {p2:.1e} "
        f"(with scalar-curvature term {p2c:.1e}), tol {tol:.0e}"
    )
    _report(capsys, 2, passed, detail)
    assert passed


def test_criterion_3_tuynman(orthogonality, capsys) -> None:
    rows = [r for r in orthogonality if r.study == "tuynman"]
    worst = max(r.value for r in rows)
    passed = worst <= 1e-8 and {r.k for r in rows} == {5, 10, 20, 40}
    _report(capsys, 3, passed, f"max residual {worst:.1e} over {len(rows)} (f, k) pairs, tol 1e-8")
    assert passed


def test_criterion_4_orthogonality(orthogonality, capsys) -> None:
    rows = [r for r in orthogonality if r.study == "orthogonality"]
    quad = [r for r in orthogonality if r.study == "quadrature"]
    worst = max(r.value for r in rows)
    passed = worst <= 1e-7 and {r.m for r in rows} == {1, 2} and all(r.passed for r in quad)
    _report(capsys, 4, passed, f"max normalized inner product {worst:.1e} over {len(rows)} (f, k, m), tol 1e-7")
    assert passed


def test_criterion_5_main_asymptotic_slope(asymptotics, capsys) -> None:
    rows = _slopes(asymptotics, "main_asymptotic")
    passed = len(rows) == 6 and all(r.passed for r in rows)
    _report(capsys, 5, passed, _slope_text(rows))
    assert passed


def test_criterion_6_norm_decay(asymptotics, capsys) -> None:
    rows = _slopes(asymptotics, "ks_norm_decay")
    passed = {r.m for r in rows} == {1, 2} and all(r.passed for r in rows)
    _report(capsys, 6, passed, _slope_text(rows))
    assert passed


def test_criterion_7_quantizable_exactness(cfg, capsys) -> None:
    rows = cmd_check_quantizable(cfg)
    err = _worst(rows, metric="toeplitz_vs_P_alpha")
    dbar = _worst(rows, metric="dbar_residual")
    passed = err <= 1e-8 and dbar <= cfg.tol.quadrature and {r.k for r in rows} == {5, 10, 20}
    _report(capsys, 7, passed, f"||T - P_alpha|| {err:.1e}, dbar residual {dbar:.1e}")
    assert passed


def test_criterion_8_alternative_operator_and_flat_lemma(cfg, oracles, algebra, capsys) -> None:
    pt = [r for r in oracles if r.study == "ptilde"]
    lemma = [r for r in algebra if r.study == "flat_lemma"]
    lit = {m: _worst(pt, metric=f"P{m}_vs_Ptilde_literal") for m in (1, 2)}
    norm = {m: _worst(pt, metric=f"P{m}_vs_Ptilde_normalized") for m in (1, 2)}
    lemma_lit = _worst(lemma, metric="T_vs_Ttilde_literal")
    lemma_norm = _worst(lemma, metric="T_vs_Ttilde_normalized")
    passed = max(lit.values()) <= cfg.tol.oracle and lemma_lit == 0
    detail = (
        f"literal m=1 {lit[1]:.1e}, m=2 {lit[2]:.1e}, flat lemma {lemma_lit:.1e}; "
        f"degree-normalized m=1 {norm[1]:.1e}, m=2 {norm[2]:.1e}, flat lemma {lemma_norm:.1e}"
    )
    _report(capsys, 8, passed, detail)
    assert passed


def test_criterion_9_star_product(cfg, algebra, capsys) -> None:
    poisson = [r for r in algebra if r.metric == "star_poisson"]
    comp = cmd_study_composition(cfg)
    slopes = _slopes(comp, "composition")
    passed = all(r.value == 0 for r in poisson) and {r.m for r in slopes} == {1, 2} and all(r.passed for r in slopes)
    detail = f"Poisson identity residual {max(r.value for r in poisson):.1e}; " + _slope_text(slopes)
    _report(capsys, 9, passed, detail)
    assert passed


def test_criterion_10_covariant_derivative_growth(asymptotics, capsys) -> None:
    rows = _slopes(asymptotics, "cov_derivative")
    passed = {r.m for r in rows} == {1, 2} and all(r.passed for r in rows)
    _report(capsys, 10, passed, _slope_text(rows))
    assert passed

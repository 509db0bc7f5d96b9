"""Verification suites and asymptotic studies that emit :class:`StudyRow` records.

Every function here returns plain rows so that the command-line runner, the
acceptance tests and interactive use all share one implementation.  Per-level
studies are split into independent ``(study, k)`` tasks so a runner can farm
them out to worker processes; :func:`run_task` executes one task against a
process-local pipeline cache.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .bargmann_fock import (
    flat_lemma_operators,
    ks_operator,
    sampled,
    tilde_ks_operator,
    weight1_oracle,
    weight2_oracle,
)
from .bergman import (
    GridPipeline,
    StudyRow,
    build_basis,
    composition_norm,
    cov_derivative_norm,
    fit_slope,
    grid_for,
    main_asymptotic_norms,
    ks_norm,
    orthogonality_residual,
    quadrature_check,
    quantizable_exactness,
    reference_tensors,
    toeplitz_matrix,
    tuynman_residual,
)
from .catalog import get_function
from .checks import CHECKS, run_check
from .fedosov import assemble_I_BT, flat_section_of_function, holomorphic_completion, required_m_cut
from .geometry import geometry_at, holomorphic_section
from .jets import ChartJet, gaussian
from .weyl import WeylElement

# expected exponent of each per-level series: exponent(m) where m is the row's m column
SERIES_EXPONENTS = {
    "main_asymptotic": lambda m: -(m + 1) / 2,
    "ks_norm_decay": lambda m: -m / 2,
    "composition": lambda m: -float(m),
    "cov_derivative": lambda m: m / 2,
}
SERIES_METRIC = "op_norm"
SLOPE_METRIC = "slope"


@dataclass(frozen=True)
class Tolerances:
    """Thresholds recorded in every row."""

    algebraic: float = 1e-12
    quadrature: float = 1e-8
    slope: float = 0.3
    orthogonality: float = 1e-7
    oracle: float = 1e-9
    composition_n2: float = 0.4

    def slope_tolerance(self, study: str, m: int) -> float:
        if study == "composition" and m >= 2:
            return self.composition_n2
        return self.slope


def _row(study, f, k, m, metric, value, oracle, tol, passed, geometry="cp1") -> StudyRow:
    return StudyRow(study, f, k, m, metric, float(value), oracle, tol, bool(passed), geometry)


# ---------------------------------------------------------------------------
# exact algebra


def algebra_rows(instances: int, seed: int, w_max: int, tol: Tolerances) -> list[StudyRow]:
    """Exact-mode identities on CP^1 and flat C^2; every residual must vanish."""
    rows = []
    for name in CHECKS:
        for geometry, n in (("cp1", 1), ("flat", 2)):
            res = run_check(name, geometry, instances, seed, w_max=w_max, n=n)
            rows.append(
                _row(
                    "verify_algebra", "", "", w_max, name, res.max_residual, 0.0, tol.algebraic,
                    res.max_residual <= tol.algebraic, res.geometry,
                )
            )
    return rows


def flat_lemma_rows(tol: Tolerances, degrees: Sequence[int] = (1, 2, 3), k: int = 5) -> list[StudyRow]:
    """``T_{alpha,k}(beta)`` against ``Ttilde_{alpha,k}(beta)`` on flat ``C^1`` in exact arithmetic.

    ``alpha`` and ``beta`` are the holomorphic Taylor completions of polynomial
    data (``(d - delta^{1,0}) alpha = (d - delta^{1,0}) beta = 0``).  The
    literal comparison is reported next to the degree-normalized one.
    """
    geom = geometry_at("flat", [[gaussian(Fraction(1, 3), Fraction(-1, 2))]], 12, exact_mode=True)
    z = geom.coordinate(0)
    zb = geom.coordinate(0, conj=True)

    def const(x):
        return ChartJet.constant(1, x, True)

    coeff = const(gaussian(2, 1)) + z * zb * const(gaussian(1, -3)) + z * z * const(gaussian(0, 1))
    g = const(gaussian(1, 1)) + z * const(3) + z * z * z * const(gaussian(-1, 2))
    beta = holomorphic_completion(geom, WeylElement.from_jet(g), 6).declare_complete()
    rows = []
    for l in degrees:
        alpha = holomorphic_completion(geom, WeylElement.monomial(1, 0, (0,), (l,), coeff), 6).declare_complete()
        T, Tt = flat_lemma_operators(alpha, beta, k, geom.fiber)
        _, Tn = flat_lemma_operators(alpha, beta, k, geom.fiber, normalized=True)
        scale = max(T.max_abs(), 1e-300)
        lit = (Tt - T).max_abs() / scale
        norm = (Tn - T).max_abs() / scale
        rows.append(_row("flat_lemma", f"ybar^{l}", k, l, "T_vs_Ttilde_literal", lit, 0.0, tol.algebraic, lit <= tol.algebraic, "flat"))
        rows.append(_row("flat_lemma", f"ybar^{l}", k, l, "T_vs_Ttilde_normalized", norm, 0.0, tol.algebraic, norm <= tol.algebraic, "flat"))
    return rows


# ---------------------------------------------------------------------------
# pointwise oracles at random chart points


FLAT_TEST_FUNCTION = "0.3 z^2 zbar^3 + (1 + 0.5i) z zbar^2 + 0.7 zbar^3 + z^2 zbar"


def _flat_test_function(geom):
    z = geom.coordinate(0)
    zb = geom.coordinate(0, conj=True)
    f = z * z * zb * zb * zb * 0.3 + z * zb * zb * (1 + 0.5j) + zb * zb * zb * 0.7 + z * z * zb
    return f.truncate(geom.order)


def random_points(n_points: int, seed: int, scale: float = 0.7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.normal(size=n_points) + 1j * rng.normal(size=n_points)) * scale


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    """Relative error of ``a`` against the reference ``b`` (absolute when ``b`` vanishes)."""
    ref = np.abs(b).max()
    err = np.abs(a - b).max()
    return float(err / ref) if ref > 0 else float(err)


def oracle_rows(
    functions: Sequence[str],
    ks: Sequence[int],
    n_points: int,
    seed: int,
    tol: Tolerances,
    max_section_degree: int = 3,
) -> list[StudyRow]:
    """Generic-pipeline ``P_{f,k,m}`` (m = 0, 1, 2) and ``Ptilde_{f,k,m}`` against closed forms.

    Rows for ``m = 2`` are emitted for the literal closed form and for the form
    with the scalar-curvature term.  ``Ptilde`` rows likewise come literal and
    degree-normalized.  The worst error over the points and the test sections
    ``(z - z0)^e e_L^k`` (``e <= max_section_degree``) is reported.
    """
    w, order = 3, 14
    pts = random_points(n_points, seed)
    rows = []
    for geometry in ("cp1", "flat"):
        geom = geometry_at(geometry, pts[None, :], order)
        F = assemble_I_BT(geom, required_m_cut(w, w), w_max=w)
        if geometry == "cp1":
            fjets = {name: get_function(name).jet(geom) for name in functions}
        else:
            fjets = {"poly": _flat_test_function(geom)}
        for name, f in fjets.items():
            O = flat_section_of_function(f, F, w, d_cap=w)
            for k in ks:
                worst: dict[str, float] = {}

                def note(metric, value):
                    worst[metric] = max(worst.get(metric, 0.0), value)

                for e in range(max_section_degree + 1):
                    s = holomorphic_section(k, 1, (e,), geom)
                    P = [sampled(ks_operator(O, k, m, s, geom)) for m in range(3)]
                    note("P0_vs_multiplication", _relative(P[0], sampled(f * s.g)))
                    note("P1_vs_weight1", _relative(P[1], sampled(weight1_oracle(geom, f, s))))
                    note("P2_vs_weight2_literal", _relative(P[2], sampled(weight2_oracle(geom, f, s, curvature_term=False))))
                    note("P2_vs_weight2_corrected", _relative(P[2], sampled(weight2_oracle(geom, f, s))))
                    for m in (1, 2):
                        note(f"P{m}_vs_Ptilde_literal", _relative(sampled(tilde_ks_operator(O, k, m, s, geom)), P[m]))
                        note(
                            f"P{m}_vs_Ptilde_normalized",
                            _relative(sampled(tilde_ks_operator(O, k, m, s, geom, normalized=True)), P[m]),
                        )
                for metric, value in worst.items():
                    study = "ptilde" if "Ptilde" in metric else "oracle"
                    m = int(metric[1])
                    rows.append(_row(study, name, k, m, metric, value, 0.0, tol.oracle, value <= tol.oracle, geometry))
    return rows


# ---------------------------------------------------------------------------
# Bergman-space studies as independent per-level tasks


@dataclass(frozen=True)
class PipelineSpec:
    """Everything needed to rebuild a :class:`GridPipeline` in a worker process."""

    k_max: int
    w_max: int
    jet_order: int
    grid_order: int = 2
    refine: int = 1

    def build(self) -> GridPipeline:
        grid = grid_for(self.k_max, self.grid_order, self.refine)
        return GridPipeline.build(grid, self.w_max, self.jet_order)


_PIPELINES: dict[PipelineSpec, GridPipeline] = {}


def pipeline_for(spec: PipelineSpec) -> GridPipeline:
    """Process-local cache of grid pipelines."""
    if spec not in _PIPELINES:
        _PIPELINES[spec] = spec.build()
    return _PIPELINES[spec]


@dataclass(frozen=True)
class Task:
    """One ``(study, k)`` unit of work."""

    kind: str
    k: int
    params: tuple = ()


def run_task(spec: PipelineSpec, task: Task, tol: Tolerances) -> list[StudyRow]:
    """Execute one task; results depend only on ``(spec, task, tol)``."""
    pipe = pipeline_for(spec)
    k = task.k
    p = dict(task.params)
    if task.kind == "quadrature":
        res = quadrature_check(k, pipe.grid)
        rows = [_row("quadrature", "", k, None, "gram_identity", res, 0.0, tol.quadrature, res <= tol.quadrature)]
        fine = pipe.grid.refined(2)
        vals = get_function("generic")
        a = toeplitz_matrix(vals.values(pipe.grid.z), build_basis(k), pipe.grid)
        b = toeplitz_matrix(vals.values(fine.z), build_basis(k), fine)
        ref = _relative(a, b)
        rows.append(_row("quadrature", "generic", k, None, "refinement_change", ref, 0.0, 1e-10, ref <= 1e-10))
        return rows
    if task.kind == "tuynman":
        res = tuynman_residual(pipe, p["f"], k)
        return [_row("tuynman", p["f"], k, 1, "residual", res, 0.0, tol.quadrature, res <= tol.quadrature)]
    if task.kind == "orthogonality":
        res = orthogonality_residual(pipe, p["f"], k, p["m"])
        return [_row("orthogonality", p["f"], k, p["m"], "residual", res, 0.0, tol.orthogonality, res <= tol.orthogonality)]
    if task.kind == "main_asymptotic":
        rows = []
        for m in p["weights"]:
            diff, comm = main_asymptotic_norms(pipe, p["f"], k, m)
            rows.append(_row("main_asymptotic", p["f"], k, m, SERIES_METRIC, diff, None, 0.0, np.isfinite(diff)))
            agree = abs(diff - comm) / max(diff, 1e-300)
            rows.append(_row("main_asymptotic", p["f"], k, m, "commutator_form_mismatch", agree, 0.0, tol.quadrature, agree <= tol.quadrature))
        return rows
    if task.kind == "ks_norm_decay":
        return [
            _row("ks_norm_decay", p["f"], k, m, SERIES_METRIC, v, None, 0.0, np.isfinite(v))
            for m in p["weights"]
            for v in [ks_norm(pipe, p["f"], k, m)]
        ]
    if task.kind == "cov_derivative":
        tensors = reference_tensors(pipe)
        return [
            _row("cov_derivative", "generic", k, deg, SERIES_METRIC, v, None, 0.0, np.isfinite(v))
            for deg in sorted(tensors)
            for v in [cov_derivative_norm(pipe, tensors[deg], k)]
        ]
    if task.kind == "composition":
        f, g = p["f"], p["g"]
        return [
            _row("composition", f"{f}|{g}", k, N, SERIES_METRIC, v, None, 0.0, np.isfinite(v))
            for N in p["orders"]
            for v in [composition_norm(pipe, f, g, k, N)]
        ]
    if task.kind == "quantizable":
        err, dbar = quantizable_exactness(pipe, k, p["f"])
        return [
            _row("quantizable", p["f"], k, 1, "toeplitz_vs_P_alpha", err, 0.0, tol.quadrature, err <= tol.quadrature),
            _row("quantizable", p["f"], k, 1, "dbar_residual", dbar, 0.0, tol.quadrature, dbar <= tol.quadrature),
        ]
    raise ValueError(f"unknown task kind {task.kind!r}")


# ---------------------------------------------------------------------------
# slope fits over per-level rows


def series_key(row: StudyRow) -> tuple:
    return (row.study, row.geometry, row.f, row.m)


def slope_rows(
    rows: Iterable[StudyRow],
    tol: Tolerances,
    window: tuple[float, float] | None = (8, 40),
) -> list[StudyRow]:
    """Fit ``log value ~ slope log k`` for every per-level series and compare with its exponent bound."""
    series: dict[tuple, list[tuple[int, float]]] = {}
    for row in rows:
        if row.study in SERIES_EXPONENTS and row.metric == SERIES_METRIC:
            series.setdefault(series_key(row), []).append((int(row.k), float(row.value)))
    out = []
    for (study, geometry, f, m), data in sorted(series.items(), key=lambda kv: tuple(str(x) for x in kv[0])):
        data.sort()
        ks = [k for k, _ in data]
        vals = [v for _, v in data]
        m = int(m)
        bound = SERIES_EXPONENTS[study](m)
        slack = tol.slope_tolerance(study, m)
        slope = fit_slope(ks, vals, window)
        out.append(_row(study, f, "", m, SLOPE_METRIC, slope, bound, slack, slope <= bound + slack, geometry))
    return out


def count_increases(ks: Sequence[int], values: Sequence[float]) -> int:
    """Number of steps where a decaying series grows (flags truncation or quadrature trouble)."""
    order = np.argsort(ks)
    v = np.asarray(values, dtype=float)[order]
    return int(np.sum(np.diff(v) > 0))

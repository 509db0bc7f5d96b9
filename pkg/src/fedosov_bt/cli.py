"""``quantize``: batch runner for the verification suites and asymptotic studies.

Usage::

    quantize <subcommand> [--config path] [--out dir] [--workers n] [--seed n]

Each subcommand writes its rows into ``<out>/rows.csv`` (replacing earlier
rows of the same studies), a ``summary_<subcommand>.json`` with fitted slopes
and timing, and the fully resolved ``effective_config.json``.  The exit code
is 0 exactly when every emitted acceptance row passes.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import __version__
from .bergman import StudyRow
from .catalog import CATALOG
from .fedosov import default_d_max, default_jet_order
from .geometry import GEOMETRIES
from .suites import (
    SERIES_METRIC,
    PipelineSpec,
    Task,
    Tolerances,
    algebra_rows,
    count_increases,
    flat_lemma_rows,
    oracle_rows,
    run_task,
    series_key,
    slope_rows,
)

log = logging.getLogger("fedosov_bt.cli")

CSV_COLUMNS = ("study", "geometry", "f", "k", "m", "metric", "value", "oracle", "tolerance", "pass")
ROWS_FILE = "rows.csv"
CONFIG_FILE = "effective_config.json"

SUBCOMMAND_STUDIES = {
    "verify-algebra": ("verify_algebra", "flat_lemma"),
    "verify-oracles": ("oracle", "ptilde"),
    "verify-orthogonality": ("quadrature", "tuynman", "orthogonality"),
    "study-asymptotics": ("main_asymptotic", "ks_norm_decay", "cov_derivative"),
    "study-composition": ("composition",),
    "check-quantizable": ("quantizable",),
}
SUBCOMMANDS = (*SUBCOMMAND_STUDIES, "fit-report")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass
class ExperimentConfig:
    """Resolved configuration of a run (the JSON schema is exactly these fields)."""

    geometry: str = "cp1"
    functions: list = field(default_factory=lambda: ["x3", "generic"])
    k_range: list = field(default_factory=lambda: [4, 40, 4])
    weights: list = field(default_factory=lambda: [0, 1, 2])
    W_max: int = 4
    D_max: int | None = None
    N_jet: int | None = None
    study_jet_order: int | None = None
    quadrature_refine: int = 1
    tolerances: dict = field(default_factory=lambda: asdict(Tolerances()))
    fit_window: list | None = field(default_factory=lambda: [8, 40])
    algebra_instances: int = 50
    algebra_w_max: int = 3
    oracle_points: int = 20
    oracle_functions: list = field(default_factory=lambda: sorted(CATALOG))
    oracle_k: list = field(default_factory=lambda: [5, 10, 20])
    tuynman_functions: list = field(default_factory=lambda: sorted(CATALOG))
    tuynman_k: list = field(default_factory=lambda: [5, 10, 20, 40])
    orthogonality_functions: list = field(default_factory=lambda: sorted(CATALOG))
    orthogonality_k: list = field(default_factory=lambda: [5, 10, 20])
    orthogonality_m: list = field(default_factory=lambda: [1, 2])
    ks_norm_m: list = field(default_factory=lambda: [1, 2])
    composition_pairs: list = field(default_factory=lambda: [["x1", "x2"], ["generic", "x3"], ["x1", "generic"]])
    composition_orders: list = field(default_factory=lambda: [1, 2])
    quantizable_f: str = "x3"
    quantizable_k: list = field(default_factory=lambda: [5, 10, 20])
    seed: int = 0
    workers: int = 1

    # -- construction and validation ---------------------------------------
    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        cfg = cls(**data)
        cfg.resolve()
        return cfg

    def resolve(self) -> None:
        if self.D_max is None:
            self.D_max = default_d_max(self.W_max)
        if self.N_jet is None:
            self.N_jet = default_jet_order(self.W_max, self.D_max)
        w = self.pipeline_weight
        if self.study_jet_order is None:
            self.study_jet_order = 2 * w + 6
        tol = asdict(Tolerances())
        for key in self.tolerances:
            if key not in tol:
                raise ConfigError(f"unknown config key 'tolerances.{key}'")
        tol.update(self.tolerances)
        self.tolerances = tol
        self.validate()

    @property
    def pipeline_weight(self) -> int:
        return max([*self.weights, *self.ks_norm_m, *self.orthogonality_m, 2])

    def validate(self) -> None:
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"geometry: unknown geometry {self.geometry!r}; expected one of {GEOMETRIES}")
        if self.geometry != "cp1":
            raise ConfigError("geometry: the Bergman-space studies are implemented for 'cp1' only")
        for key in ("functions", "oracle_functions", "tuynman_functions", "orthogonality_functions"):
            for name in getattr(self, key):
                if name not in CATALOG:
                    raise ConfigError(f"{key}: unknown catalog function {name!r}; catalog has {sorted(CATALOG)}")
        for i, pair in enumerate(self.composition_pairs):
            if len(pair) != 2 or any(name not in CATALOG for name in pair):
                raise ConfigError(f"composition_pairs[{i}]: expected two catalog function names, got {pair!r}")
        if self.quantizable_f not in CATALOG:
            raise ConfigError(f"quantizable_f: unknown catalog function {self.quantizable_f!r}")
        if len(self.k_range) != 3:
            raise ConfigError("k_range: expected [min, max, step]")
        kmin, kmax, step = self.k_range
        if step <= 0 or kmin < 1 or kmax < kmin:
            raise ConfigError(f"k_range: empty or invalid range {self.k_range!r}")
        if self.W_max < 0 or self.D_max < 0:
            raise ConfigError("W_max/D_max: caps must be non-negative")
        if self.N_jet < 2 * self.W_max + self.D_max + 2:
            raise ConfigError(
                f"N_jet: must be at least 2*W_max + D_max + 2 = {2 * self.W_max + self.D_max + 2}, got {self.N_jet}"
            )
        if self.pipeline_weight > self.W_max:
            raise ConfigError(f"weights: largest requested weight {self.pipeline_weight} exceeds W_max={self.W_max}")
        for key, value in self.tolerances.items():
            if not value > 0:
                raise ConfigError(f"tolerances.{key}: must be positive, got {value!r}")
        if self.workers < 1:
            raise ConfigError("workers: must be at least 1")
        if self.fit_window is not None and len(self.fit_window) != 2:
            raise ConfigError("fit_window: expected [k_low, k_high] or null")

    # -- derived -------------------------------------------------------------
    @property
    def ks(self) -> list[int]:
        kmin, kmax, step = self.k_range
        return list(range(kmin, kmax + 1, step))

    @property
    def tol(self) -> Tolerances:
        return Tolerances(**self.tolerances)

    def pipeline_spec(self, k_max: int) -> PipelineSpec:
        return PipelineSpec(k_max, self.pipeline_weight, self.study_jet_order, refine=self.quadrature_refine)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig.from_dict({})
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------------------
# row i/o


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def write_rows(out: Path, studies: Sequence[str], rows: Sequence[StudyRow]) -> Path:
    """Replace the rows of ``studies`` in ``rows.csv`` by ``rows``; other studies are kept."""
    path = out / ROWS_FILE
    kept = [r for r in read_rows(path) if r["study"] not in studies] if path.exists() else []
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in kept:
            writer.writerow(r)
        for r in rows:
            writer.writerow({k: _format(v) for k, v in r.as_dict().items()})
    return path


def read_rows(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return list(reader)


def row_from_dict(d: dict) -> StudyRow:
    def num(x, cast):
        return None if x == "" else cast(x)

    return StudyRow(
        d["study"], d["f"], num(d["k"], int) if d["k"] != "" else "", num(d["m"], int), d["metric"],
        float(d["value"]), num(d["oracle"], float), float(d["tolerance"]), d["pass"] == "true", d["geometry"],
    )


# ---------------------------------------------------------------------------
# subcommands


def _run_tasks(cfg: ExperimentConfig, tasks: list[Task], k_max: int) -> list[StudyRow]:
    spec = cfg.pipeline_spec(k_max)
    tol = cfg.tol
    if cfg.workers == 1 or len(tasks) == 1:
        out = []
        for t in tasks:
            log.info("task %s k=%d", t.kind, t.k)
            out.extend(run_task(spec, t, tol))
        return out
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        results = pool.map(run_task, [spec] * len(tasks), tasks, [tol] * len(tasks))
        return [row for rows in results for row in rows]


def _params(**kw) -> tuple:
    return tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in kw.items()))


def cmd_verify_algebra(cfg: ExperimentConfig) -> list[StudyRow]:
    return algebra_rows(cfg.algebra_instances, cfg.seed, cfg.algebra_w_max, cfg.tol) + flat_lemma_rows(cfg.tol)


def cmd_verify_oracles(cfg: ExperimentConfig) -> list[StudyRow]:
    return oracle_rows(cfg.oracle_functions, cfg.oracle_k, cfg.oracle_points, cfg.seed, cfg.tol)


def cmd_verify_orthogonality(cfg: ExperimentConfig) -> list[StudyRow]:
    ks = sorted({*cfg.tuynman_k, *cfg.orthogonality_k})
    tasks = [Task("quadrature", k) for k in ks]
    tasks += [Task("tuynman", k, _params(f=f)) for f in cfg.tuynman_functions for k in cfg.tuynman_k]
    tasks += [
        Task("orthogonality", k, _params(f=f, m=m))
        for f in cfg.orthogonality_functions
        for m in cfg.orthogonality_m
        for k in cfg.orthogonality_k
    ]
    return _run_tasks(cfg, tasks, max(ks))


def cmd_study_asymptotics(cfg: ExperimentConfig) -> list[StudyRow]:
    ks = cfg.ks
    tasks = [Task("main_asymptotic", k, _params(f=f, weights=cfg.weights)) for f in cfg.functions for k in ks]
    tasks += [Task("ks_norm_decay", k, _params(f=f, weights=cfg.ks_norm_m)) for f in cfg.functions for k in ks]
    tasks += [Task("cov_derivative", k) for k in ks]
    rows = _run_tasks(cfg, tasks, max(ks))
    return rows + slope_rows(rows, cfg.tol, _window(cfg))


def cmd_study_composition(cfg: ExperimentConfig) -> list[StudyRow]:
    ks = cfg.ks
    tasks = [
        Task("composition", k, _params(f=f, g=g, orders=cfg.composition_orders))
        for f, g in cfg.composition_pairs
        for k in ks
    ]
    rows = _run_tasks(cfg, tasks, max(ks))
    return rows + slope_rows(rows, cfg.tol, _window(cfg))


def cmd_check_quantizable(cfg: ExperimentConfig) -> list[StudyRow]:
    tasks = [Task("quantizable", k, _params(f=cfg.quantizable_f)) for k in cfg.quantizable_k]
    return _run_tasks(cfg, tasks, max(cfg.quantizable_k))


def _window(cfg: ExperimentConfig):
    return None if cfg.fit_window is None else tuple(cfg.fit_window)


COMMANDS = {
    "verify-algebra": cmd_verify_algebra,
    "verify-oracles": cmd_verify_oracles,
    "verify-orthogonality": cmd_verify_orthogonality,
    "study-asymptotics": cmd_study_asymptotics,
    "study-composition": cmd_study_composition,
    "check-quantizable": cmd_check_quantizable,
}


def cmd_fit_report(cfg: ExperimentConfig, out: Path) -> list[StudyRow]:
    """Recompute slope rows from the per-level rows already in ``rows.csv``."""
    path = out / ROWS_FILE
    if not path.exists():
        raise ConfigError(f"fit-report: no prior rows ({path} does not exist); run a study first")
    rows = [row_from_dict(d) for d in read_rows(path)]
    series = [r for r in rows if r.metric == SERIES_METRIC]
    if not series:
        raise ConfigError(f"fit-report: {path} holds no per-level series rows; run study-asymptotics or study-composition")
    return slope_rows(series, cfg.tol, _window(cfg))


# ---------------------------------------------------------------------------
# summary


def summarize(subcommand: str, cfg: ExperimentConfig, rows: Sequence[StudyRow], seconds: float) -> dict:
    slopes = [
        {"study": r.study, "geometry": r.geometry, "f": r.f, "m": r.m, "slope": r.value, "bound": r.oracle,
         "tolerance": r.tolerance, "pass": r.passed}
        for r in rows
        if r.metric == "slope"
    ]
    series: dict[tuple, tuple[list, list]] = {}
    for r in rows:
        if r.metric == SERIES_METRIC:
            ks, vals = series.setdefault(series_key(r), ([], []))
            ks.append(int(r.k))
            vals.append(r.value)
    flags = [
        {"study": key[0], "f": key[2], "m": key[3], "increases": count_increases(*data)}
        for key, data in sorted(series.items(), key=lambda kv: tuple(str(x) for x in kv[0]))
        if key[0] != "cov_derivative" and count_increases(*data) > 0
    ]
    failed = [r.as_dict() for r in rows if not r.passed]
    return {
        "subcommand": subcommand,
        "version": __version__,
        "rows": len(rows),
        "failed_rows": failed,
        "all_pass": not failed,
        "slopes": slopes,
        "non_monotone_series": flags,
        "fit_window": cfg.fit_window,
        "provenance": {
            "geometry": cfg.geometry,
            "pipeline_weight": cfg.pipeline_weight,
            "study_jet_order": cfg.study_jet_order,
            "caps": {"W_max": cfg.W_max, "D_max": cfg.D_max, "N_jet": cfg.N_jet},
            "quadrature_refine": cfg.quadrature_refine,
            "seed": cfg.seed,
        },
        "wall_clock_seconds": round(seconds, 3),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantize", description=__doc__.split("\n\n")[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON config file (defaults apply to missing keys)")
    parser.add_argument("--out", default="quantize-out", help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes for per-level tasks")
    parser.add_argument("--seed", type=int, help="seed for the random property instances and sample points")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg.workers = args.workers
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
    except (ConfigError, TypeError) as exc:
        print(f"quantize: config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(cfg.to_json() + "\n")
    start = time.perf_counter()
    try:
        if args.subcommand == "fit-report":
            rows = cmd_fit_report(cfg, out)
            path = out / "fit_report.csv"
            with path.open("w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
                writer.writeheader()
                for r in rows:
                    writer.writerow({k: _format(v) for k, v in r.as_dict().items()})
        else:
            rows = COMMANDS[args.subcommand](cfg)
            write_rows(out, SUBCOMMAND_STUDIES[args.subcommand], rows)
    except ConfigError as exc:
        print(f"quantize: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surface module errors with the study context
        print(f"quantize: {args.subcommand} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    summary = summarize(args.subcommand, cfg, rows, time.perf_counter() - start)
    (out / f"summary_{args.subcommand}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    n_fail = len(summary["failed_rows"])
    print(f"{args.subcommand}: {len(rows)} rows, {n_fail} failing -> {out}")
    return 0 if n_fail == 0 else 1


if __name__ == "__main__":
    sys.exit(main())

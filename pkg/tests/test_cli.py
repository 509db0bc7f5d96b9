from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from fedosov_bt.cli import CSV_COLUMNS, ConfigError, ExperimentConfig, load_config, main, read_rows

SMALL = {
    "k_range": [4, 12, 4],
    "weights": [0, 1],
    "ks_norm_m": [1],
    "orthogonality_m": [1],
    "functions": ["x3"],
    "algebra_instances": 1,
    "algebra_w_max": 2,
    "oracle_points": 2,
    "oracle_functions": ["x3"],
    "oracle_k": [5],
    "tuynman_functions": ["x3"],
    "tuynman_k": [5],
    "orthogonality_functions": ["x3"],
    "orthogonality_k": [5],
    "composition_pairs": [["x1", "x2"]],
    "quantizable_k": [5],
    "fit_window": None,
}


def _config(tmp_path: Path, **overrides) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**SMALL, **overrides}))
    return str(path)


def _rows(out: Path) -> list[dict]:
    return read_rows(out / "rows.csv")


@pytest.mark.parametrize(
    "bad,key",
    [
        ({"colour": 1}, "colour"),
        ({"geometry": "torus"}, "geometry"),
        ({"functions": ["x9"]}, "functions"),
        ({"k_range": [10, 4, 2]}, "k_range"),
        ({"N_jet": 3}, "N_jet"),
        ({"weights": [0, 5]}, "weights"),
        ({"tolerances": {"slope": 0}}, "tolerances.slope"),
        ({"tolerances": {"speed": 1}}, "tolerances.speed"),
        ({"composition_pairs": [["x1"]]}, "composition_pairs"),
    ],
)
def test_config_errors_name_the_key(tmp_path: Path, capsys, bad: dict, key: str) -> None:
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        ExperimentConfig.from_dict(bad)
    code = main(["check-quantizable", "--config", _config(tmp_path, **bad), "--out", str(tmp_path / "o")])
    assert code == 2
    assert key in capsys.readouterr().err


def test_defaults_resolve_the_caps() -> None:
    cfg = load_config(None)
    assert (cfg.D_max, cfg.N_jet) == (10, 20)
    assert cfg.pipeline_weight == 2 and cfg.study_jet_order == 10
    assert cfg.ks == list(range(4, 41, 4))
    assert ExperimentConfig.from_dict(json.loads(cfg.to_json())) == cfg


def test_quantizable_run_writes_rows_summary_and_config(tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert main(["check-quantizable", "--config", _config(tmp_path), "--out", str(out)]) == 0
    with (out / "rows.csv").open() as fh:
        assert tuple(next(csv.reader(fh))) == CSV_COLUMNS
    rows = _rows(out)
    assert {r["metric"] for r in rows} == {"toeplitz_vs_P_alpha", "dbar_residual"}
    assert all(r["pass"] == "true" for r in rows)
    summary = json.loads((out / "summary_check-quantizable.json").read_text())
    assert summary["all_pass"] and summary["provenance"]["caps"]["W_max"] == 4
    effective = json.loads((out / "effective_config.json").read_text())
    assert effective["quantizable_k"] == [5] and effective["N_jet"] == 20


def test_algebra_run_reports_the_literal_lemma_failures(tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert main(["verify-algebra", "--config", _config(tmp_path), "--out", str(out)]) == 1
    rows = _rows(out)
    failing = {(r["metric"], r["m"]) for r in rows if r["pass"] == "false"}
    assert failing == {("T_vs_Ttilde_literal", "2"), ("T_vs_Ttilde_literal", "3")}
    assert all(r["pass"] == "true" for r in rows if r["study"] == "verify_algebra")


def test_reruns_are_deterministic_and_replace_rows(tmp_path: Path) -> None:
    cfg = _config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["verify-orthogonality", "--config", cfg, "--out", str(out)]) == 0
    assert (a / "rows.csv").read_bytes() == (b / "rows.csv").read_bytes()
    n = len(_rows(a))
    main(["verify-orthogonality", "--config", cfg, "--out", str(a)])
    assert len(_rows(a)) == n


def test_studies_and_fit_report(tmp_path: Path) -> None:
    out = tmp_path / "out"
    cfg = _config(tmp_path)
    assert main(["fit-report", "--config", cfg, "--out", str(out)]) == 2
    main(["study-asymptotics", "--config", cfg, "--out", str(out)])
    rows = _rows(out)
    series = [r for r in rows if r["metric"] == "op_norm"]
    assert {r["study"] for r in series} == {"main_asymptotic", "ks_norm_decay", "cov_derivative"}
    assert {r["k"] for r in series} == {"4", "8", "12"}
    main(["fit-report", "--config", cfg, "--out", str(out)])
    report = read_rows(out / "fit_report.csv")
    assert report and all(r["metric"] == "slope" and r["k"] == "" for r in report)
    main_rows = [r for r in report if r["study"] == "main_asymptotic"]
    assert {r["m"] for r in main_rows} == {"0", "1"}

import json
from pathlib import Path

import pytest

from toeplitz_spectra.cli import main


def write_config(tmp_path: Path, **overrides) -> Path:
    config = {
        "partition": {"k": [1, 2], "lambda": 0.0},
        "degree_cap": 4,
        "quasi_radial": {"kind": "expression", "text": "1 - r1^2*r2^2"},
        "symbols": [{"group": 2, "kind": "quasi_homogeneous", "p": [1, -1]}],
        "berezin": {"group": 2, "w": [0.3, 0.4], "degrees": [10, 20, 40]},
        "radical": {
            "group": 2,
            "level": 1,
            "gamma": {"kind": "geometric_decay", "rate": 0.5},
        },
        "hull": {"resolution": 256, "ess_samples": 2048},
        "output_dir": str(tmp_path / "out"),
    }
    config.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def read_report(tmp_path: Path, command: str) -> dict:
    return json.loads((tmp_path / "out" / f"report_{command}.json").read_text())


def test_info_runs(capsys):
    assert main(["info"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tool"] == "toeplitz-spectra"
    assert "assemble" in out["commands"]


def test_missing_config_is_config_error(capsys):
    assert main(["assemble"]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"]["type"] == "ConfigError"


def test_unreadable_config(tmp_path, capsys):
    assert main(["assemble", "--config", str(tmp_path / "nope.json")]) == 1


def test_schema_rejects_bad_partition(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"partition": {"k": [2, 1]}}))
    assert main(["assemble", "--config", str(path)]) == 1


def test_schema_rejects_duplicate_group(tmp_path):
    path = write_config(
        tmp_path,
        symbols=[
            {"group": 2, "kind": "constant", "value": 1.0},
            {"group": 2, "kind": "constant", "value": 2.0},
        ],
    )
    assert main(["assemble", "--config", str(path)]) == 1


def test_assemble_report(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["assemble", "--config", str(path)]) == 0
    report = read_report(tmp_path, "assemble")
    assert report["command"] == "assemble"
    assert report["payload"]["global_dim"] > 0
    assert report["payload"]["blocks"]
    assert report["config"]["degree_cap"] == 4
    assert report["tool_version"]


def test_assemble_trivial_identity(tmp_path):
    path = write_config(tmp_path, quasi_radial={"kind": "one"}, symbols=[])
    assert main(["assemble", "--config", str(path)]) == 0
    report = read_report(tmp_path, "assemble")
    assert report["payload"]["identity_deviation_fro"] < 1e-12


def test_warm_cache_reproduces_payload(tmp_path):
    path = write_config(tmp_path)
    assert main(["assemble", "--config", str(path)]) == 0
    first = read_report(tmp_path, "assemble")
    assert main(["assemble", "--config", str(path)]) == 0
    second = read_report(tmp_path, "assemble")
    assert first["payload_sha256"] == second["payload_sha256"]
    assert second["cache_hit"] is True
    assert first["cache_hit"] is False


def test_cache_env_override(tmp_path, monkeypatch):
    alt = tmp_path / "altcache"
    monkeypatch.setenv("TOEPLITZ_SPECTRA_CACHE", str(alt))
    path = write_config(tmp_path)
    assert main(["assemble", "--config", str(path)]) == 0
    assert alt.exists() and any(alt.iterdir())


def test_spectrum_and_side_file(tmp_path):
    path = write_config(tmp_path)
    assert main(["spectrum", "--config", str(path)]) == 0
    report = read_report(tmp_path, "spectrum")
    groups = report["payload"]["groups"]
    assert groups["2"]["by_degree"]["1"]["distinct"] == [[0.0, 0.0]]
    assert (tmp_path / "out" / "spectra.csv").exists()


def test_hull_command(tmp_path):
    path = write_config(tmp_path)
    assert main(["hull", "--config", str(path)]) == 0
    report = read_report(tmp_path, "hull")
    assert "inverse_closed" in report["payload"]
    assert (tmp_path / "out" / "hull_2.svg").exists()
    assert (tmp_path / "out" / "region_sp_2.json").exists()


def test_berezin_command(tmp_path):
    path = write_config(
        tmp_path,
        symbols=[{"group": 2, "kind": "profile", "text": "s1^2"}],
        berezin={
            "group": 2,
            "w": [0.3, 0.4],
            "degrees": [20, 50],
            "radial_expression": "r1^2",
        },
    )
    assert main(["berezin", "--config", str(path)]) == 0
    report = read_report(tmp_path, "berezin")
    assert report["payload"]["boundary_value"] == pytest.approx([0.36, 0.0])
    assert report["payload"]["abs_errors"][1] < 0.05


def test_berezin_numerical_failure_exit_2(tmp_path, capsys):
    path = write_config(
        tmp_path, berezin={"group": 2, "w": [1.5, 0.0], "degrees": [5]}
    )
    assert main(["berezin", "--config", str(path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"]["type"] == "SpectraError"


def test_semisimple_command(tmp_path):
    path = write_config(tmp_path)
    assert main(["semisimple", "--config", str(path)]) == 0
    report = read_report(tmp_path, "semisimple")
    assert report["payload"]["semisimple"] is False
    assert report["payload"]["witness"] == [2, 1]
    assert report["payload"]["stable_under_tolerance_halving"] is True


def test_radical_command(tmp_path):
    path = write_config(tmp_path)
    assert main(["radical", "--config", str(path)]) == 0
    report = read_report(tmp_path, "radical")
    payload = report["payload"]
    assert payload["generator"]["fro"] > 1e-6
    assert payload["generator"]["gelfand_sup"] < 1e-8
    norms = payload["generator"]["power_norms"]
    assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))
    assert max(payload["reconstruction_residuals"]) < 1e-9


def test_gelfand_command(tmp_path):
    path = write_config(tmp_path, gelfand={"budget": 80, "zeta_per_region": 4})
    assert main(["gelfand", "--config", str(path)]) == 0
    report = read_report(tmp_path, "gelfand")
    payload = report["payload"]
    assert payload["n_points"] == payload["n_exact"] + payload["n_surrogate"]
    assert payload["invalid_points"] == 0
    points = json.loads((tmp_path / "out" / "gelfand_points.json").read_text())
    assert len(points) == payload["n_points"]
    assert all("value" in p for p in points)


def test_verify_passes_and_negative_control(tmp_path, capsys):
    path = write_config(tmp_path, degree_cap=3)
    assert main(["verify", "--config", str(path)]) == 0
    report = read_report(tmp_path, "verify")
    assert report["payload"]["all_passed"]
    # deliberately lowered quadrature order breaks the Dirichlet cross-check
    bad = write_config(
        tmp_path,
        degree_cap=3,
        quadrature={"block_order": 2, "gamma_order": 2, "torus_grid": 8},
    )
    assert main(["verify", "--config", str(bad), "--no-cache"]) == 3
    report = read_report(tmp_path, "verify")
    names = {c["name"]: c["passed"] for c in report["payload"]["checks"]}
    assert names["dirichlet-vs-simplex"] is False

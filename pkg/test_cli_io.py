"""
Tests for config parsing, artifact files, the run registry and the command line.
"""
import importlib.util
import json
import warnings

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from degenfront import database
from degenfront.commands import run_subcommand
from degenfront.constants.defaults import ExitCode
from degenfront.database import database_url, registry_session
from degenfront.db.crud.run import count_by_status, create_run, finish_run, get_runs
from degenfront.exceptions import ArtifactError, ConfigError
from degenfront.io_utils import (
    ArtifactSet,
    csv_text,
    json_text,
    read_json,
    read_profile_csv,
    report_digest,
    sidecar_path,
    write_json,
    write_profile_csv,
)
from degenfront.main import main
from degenfront.schemas.config import RunConfig, parse_config
from degenfront.services.checks import CHECK_NAMES


def test_auto_reaction_resolves_balanced_alpha():
    cfg = parse_config('{"diffusion":{"quadratic":{"b":1}},"reaction":"auto"}')
    assert cfg.reaction.alpha == pytest.approx(0.625, abs=1e-12)
    assert cfg.inline_kinetics


def test_missing_sections_get_defaults():
    cfg = parse_config("{}")
    assert cfg.grid.n_nodes == 4001
    assert cfg.grid.left_tol == 1e-8
    assert cfg.grid.right_pad == 1.0
    assert cfg.reaction.alpha == pytest.approx(0.625)
    assert not cfg.inline_kinetics


def test_alpha_out_of_range_is_rejected():
    with pytest.raises(ConfigError, match=r"alpha out of \(0,1\)") as exc_info:
        parse_config('{"reaction":{"cubic":{"alpha":1.5}}}')
    assert exc_info.value.key == "reaction"
    assert exc_info.value.exit_code == ExitCode.CONFIG_ERROR


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as exc_info:
        parse_config('{"grid":{"nodes":5}}')
    assert exc_info.value.key == "grid.nodes"


@pytest.mark.parametrize("text", ['{"grid":', "[1, 2]"])
def test_malformed_config_text(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_hash_tracks_content():
    a, b = parse_config('{"seed": 1}'), parse_config('{"seed": 1}')
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != parse_config('{"seed": 2}').config_hash()


def test_profile_csv_round_trip(coarse_profile, tmp_path):
    paths = write_profile_csv(coarse_profile, tmp_path / "profile.csv")
    assert [p.name for p in paths] == ["profile.csv", "profile.json"]
    loaded = read_profile_csv(tmp_path / "profile.csv")
    assert_array_equal(loaded.x_nodes, coarse_profile.x_nodes)
    assert_array_equal(loaded.phi, coarse_profile.phi)
    assert_array_equal(loaded.phi_x, coarse_profile.phi_x)
    assert_array_equal(loaded.phi_xx, coarse_profile.phi_xx)
    assert loaded.omega0 == coarse_profile.omega0
    assert loaded.kinetics == coarse_profile.kinetics
    assert loaded.warnings == ()


def test_profile_csv_missing_column(coarse_profile, tmp_path):
    path = tmp_path / "profile.csv"
    write_profile_csv(coarse_profile, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(",".join(line.split(",")[:3]) for line in lines) + "\n")
    with pytest.raises(ArtifactError, match="schema v1 requires 4 columns") as exc_info:
        read_profile_csv(path)
    assert exc_info.value.line == 1


def test_profile_csv_short_row_reports_line(coarse_profile, tmp_path):
    path = tmp_path / "profile.csv"
    write_profile_csv(coarse_profile, path)
    lines = path.read_text().splitlines()
    lines[5] = ",".join(lines[5].split(",")[:3])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ArtifactError, match="requires 4 columns") as exc_info:
        read_profile_csv(path)
    assert exc_info.value.line == 6


def test_profile_sidecar_omega0_inconsistency_warns(coarse_profile, tmp_path):
    path = tmp_path / "profile.csv"
    write_profile_csv(coarse_profile, path)
    meta = read_json(sidecar_path(path))
    meta["omega0"] += 1.0
    write_json(sidecar_path(path), meta)
    loaded = read_profile_csv(path)
    assert loaded.omega0 == pytest.approx(coarse_profile.omega0 + 1.0)
    assert any("inconsistent" in warning for warning in loaded.warnings)


def test_read_json_reports_bad_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "a": \n')
    with pytest.raises(ArtifactError) as exc_info:
        read_json(path)
    assert exc_info.value.line is not None


def test_json_and_csv_text():
    payload = json.loads(json_text({"b": float("nan"), "a": np.float64(1.5), "flag": np.bool_(True)}))
    assert payload == {"a": 1.5, "b": None, "flag": True}
    assert csv_text(["x", "ok"], [[0.1], [True]]) == "x,ok\n0.10000000000000001,1\n"


def test_report_digest_ignores_provenance_and_timings():
    base = {"checks": [{"name": "zero_mode", "value": 1e-5, "runtime_s": 0.1}], "provenance": {"host": "a"}}
    other = {"checks": [{"name": "zero_mode", "value": 1e-5, "runtime_s": 9.0}], "provenance": {"host": "b"}}
    assert report_digest(base) == report_digest(other)
    changed = {"checks": [{"name": "zero_mode", "value": 2e-5}], "provenance": {"host": "a"}}
    assert report_digest(base) != report_digest(changed)


def test_artifact_set_discard(tmp_path):
    artifacts = ArtifactSet()
    for name in ("a.json", "b.csv"):
        path = tmp_path / name
        path.write_text("x")
        artifacts.add(path)
    artifacts.add(tmp_path / "never-written.txt")
    artifacts.discard()
    assert list(tmp_path.iterdir()) == []
    assert artifacts.names() == []


def test_registry_records_runs(tmp_path):
    url = database_url(str(tmp_path))
    with registry_session(url) as db:
        run = create_run(db, "front", "abc", 3)
        finish_run(db, run.id, 0, ["profile.csv"])
        failed = create_run(db, "spectrum", "abc", 3)
        finish_run(db, failed.id, 2, detail="missing profile input")
    with registry_session(url) as db:
        runs = get_runs(db)
        assert [r.subcommand for r in runs] == ["front", "spectrum"]
        assert runs[0].artifacts == ["profile.csv"]
        assert runs[1].status == "failed"
        assert count_by_status(db) == {"ok": 1, "failed": 1}


def test_database_url_override(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGENFRONT_DATABASE_URL", f"sqlite:///{tmp_path / 'shared.db'}")
    assert database_url(str(tmp_path / "out")) == f"sqlite:///{tmp_path / 'shared.db'}"


def test_registry_module_imports_without_warnings():
    found = importlib.util.spec_from_file_location("_registry_copy", database.__file__)
    module = importlib.util.module_from_spec(found)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        found.loader.exec_module(module)
    assert module.Base.metadata is not database.Base.metadata


def test_unknown_subcommand_is_a_config_error(tmp_path):
    result = run_subcommand("plot", RunConfig(output_dir=str(tmp_path)))
    assert result.exit_code == ExitCode.CONFIG_ERROR


def test_spectrum_without_profile_input(tmp_path, capsys):
    code = main(["spectrum", "--out", str(tmp_path)])
    assert code == ExitCode.CONFIG_ERROR
    assert "missing profile input" in capsys.readouterr().err
    assert not (tmp_path / "spectrum.json").exists()


def test_negative_seed_is_rejected(tmp_path):
    assert main(["front", "--out", str(tmp_path), "--seed", "-1"]) == ExitCode.CONFIG_ERROR


def test_front_command_writes_profile_and_registers_run(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"diffusion": {"quadratic": {"b": 1}}, "grid": {"n_nodes": 201}}))
    out = tmp_path / "out"
    assert main(["front", "--config", str(config), "--out", str(out)]) == ExitCode.OK

    meta = read_json(out / "profile.json")
    assert abs(meta["omega0"] - 3.0310673) <= 1e-6
    assert meta["grid"]["n_nodes"] == 201
    diagnostics = read_json(out / "front_diagnostics.json")
    assert diagnostics["rates"]["a0_measured"] > 0.0
    assert read_profile_csv(out / "profile.csv").n_nodes == 201

    with registry_session(database_url(str(out))) as db:
        (run,) = get_runs(db)
        assert run.subcommand == "front"
        assert run.exit_code == 0
        assert any(name.endswith("profile.csv") for name in run.artifacts)


FAST_CHECKS = ["balance_formula", "arrival_point"]


def _pipeline_config(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "diffusion": {"quadratic": {"b": 1}},
        "grid": {"n_nodes": 201},
        "evolution": {"nonlinear_t_end": 1.0, "snapshot_every": 10, "initial": {"kind": "bump", "amplitude": 0.02}},
        "check": {"spectrum_nodes": 201, "skip": [name for name in CHECK_NAMES if name not in FAST_CHECKS]},
    }))
    return config


def test_pipeline_on_a_small_grid(tmp_path):
    config, out = _pipeline_config(tmp_path), tmp_path / "out"
    common = ["--config", str(config), "--out", str(out)]
    for command in ("front", "spectrum", "evolve", "check", "report"):
        assert main([command, *common]) == ExitCode.OK, command

    spectrum = read_json(out / "spectrum.json")
    assert spectrum["summary"]["n"] == 199
    assert (out / "eigenvalues.csv").read_text().startswith("re,im,")
    evolve = read_json(out / "evolve.json")
    assert evolve["linear_decay"]["rate"] > 0.0
    assert (out / "snapshots.csv").exists()

    checks = read_json(out / "checks.json")
    assert checks["tally"] == {"pass": 2, "fail": 0, "skipped": 9}
    report = read_json(out / "report.json")
    assert report["digest"] == report_digest({k: v for k, v in report.items() if k != "digest"})
    assert [c["name"] for c in report["checks"]] == [c["name"] for c in checks["checks"]]
    assert "[PASS   ] balance_formula" in (out / "report.txt").read_text()
    assert report["provenance"]["sources"] == {"spectrum": "artifact", "decay": "artifact"}

    # without the spectrum and evolve artifacts the same sections are recomputed
    (out / "spectrum.json").unlink()
    (out / "evolve.json").unlink()
    assert main(["report", *common]) == ExitCode.OK
    recomputed = read_json(out / "report.json")
    assert recomputed["provenance"]["sources"] == {"spectrum": "computed", "decay": "computed"}
    assert recomputed["digest"] == report["digest"]

    with registry_session(database_url(str(out))) as db:
        assert count_by_status(db) == {"ok": 6}


def test_unknown_skip_name_is_a_config_error(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"check": {"skip": ["no_such_check"]}}))
    assert main(["check", "--config", str(config), "--out", str(tmp_path / "out")]) == ExitCode.CONFIG_ERROR


def test_sweep_command_writes_one_report_per_epsilon(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGENFRONT_THREADS", "2")
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "diffusion": {"quadratic": {"b": 1}},
        "grid": {"n_nodes": 201},
        "spectral": {"epsilons": [0.1, 0.01]},
    }))
    out = tmp_path / "out"
    common = ["--config", str(config), "--out", str(out)]
    assert main(["front", *common]) == ExitCode.OK
    assert main(["sweep", *common]) == ExitCode.OK

    summary = read_json(out / "sweep.json")
    assert [entry["epsilon"] for entry in summary["entries"]] == [0.1, 0.01, 0.0]
    assert summary["entries"][-1]["lambda1_shift"] == 0.0
    assert all(entry["unstable_count"] == 0 for entry in summary["entries"])
    for name in ("eps_1e-01.json", "eps_1e-02.json", "eps_0e+00.json"):
        assert read_json(out / "sweep" / name)["n"] == 199

    with registry_session(database_url(str(out))) as db:
        runs = get_runs(db)
        assert [r.subcommand for r in runs] == ["front", "sweep"]
        assert len(runs[1].artifacts) == 4

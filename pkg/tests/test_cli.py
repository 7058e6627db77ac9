"""End-to-end tests for the command-line interface."""

import json
from pathlib import Path

import pytest

from coblim.cli import PRESETS, SUBCOMMANDS, main


def run_cli(*args):
    return main(list(args))


def read_json(path: Path):
    return json.loads(path.read_text())


# ---------------------------------------------------------------------------
# exit codes on the documented examples
# ---------------------------------------------------------------------------

def test_validate_preset_exits_zero(tmp_path, capsys):
    code = run_cli("validate", "--preset", "windows-iplil", "--out", str(tmp_path))
    out = capsys.readouterr().out
    assert code == 0
    assert "0.333333" in out and "0.4" in out
    report = read_json(tmp_path / "report.json")
    assert report["all_passed"] is True


def test_maximal_resource_guard_exits_two(tmp_path, capsys):
    config = tmp_path / "big.json"
    config.write_text(json.dumps({"system": {"bits": 21}, "preset": "maximal-smoke"}))
    code = run_cli("maximal", "--config", str(config), "--out", str(tmp_path / "run"))
    err = capsys.readouterr().err
    assert code == 2
    assert "config error" in err
    assert "resource guard: B=21 exceeds 20" in err


def test_series_preset_exits_zero_with_three_verdicts(tmp_path, capsys):
    code = run_cli("series", "--preset", "series-327", "--out", str(tmp_path))
    out = capsys.readouterr().out
    assert code == 0
    assert "converges" in out
    assert "tends to 0" in out
    assert "inconclusive at this range" in out


def test_validate_failing_window_exits_one(tmp_path):
    config = tmp_path / "w.json"
    config.write_text(json.dumps({
        "preset": "windows-iplil",
        "system": {"theorems": ["2.1", "2.10"]},
    }))
    code = run_cli("validate", "--config", str(config), "--out", str(tmp_path / "run"))
    assert code == 1  # the 2.1 window is degenerate-empty at (1.2, 4)


# ---------------------------------------------------------------------------
# config loading and line-anchored errors
# ---------------------------------------------------------------------------

def test_malformed_json_reports_line(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text('{\n  "system": {\n  "oops"\n}\n')
    code = run_cli("series", "--config", str(config), "--out", str(tmp_path / "run"))
    err = capsys.readouterr().err
    assert code == 2
    assert "bad.json" in err
    assert "bad.json:4:" in err or "bad.json:3:" in err


def test_unknown_top_level_key_anchored(tmp_path, capsys):
    config = tmp_path / "extra.json"
    config.write_text('{\n  "preset": "series-327",\n  "horizon": 12\n}\n')
    code = run_cli("series", "--config", str(config), "--out", str(tmp_path / "run"))
    err = capsys.readouterr().err
    assert code == 2
    assert "horizon" in err
    assert "extra.json:3:" in err


def test_wrong_type_anchored(tmp_path, capsys):
    config = tmp_path / "type.json"
    config.write_text(json.dumps({
        "preset": "series-327",
        "exponents": {"p": "one-point-five"},
    }, indent=1))
    code = run_cli("series", "--config", str(config), "--out", str(tmp_path / "run"))
    err = capsys.readouterr().err
    assert code == 2
    assert '"p"' in err or "exponents.p" in err


def test_unknown_preset_rejected(tmp_path, capsys):
    code = run_cli("series", "--preset", "mystery", "--out", str(tmp_path))
    err = capsys.readouterr().err
    assert code == 2
    assert "preset" in err


def test_bad_seed_rejected(tmp_path, capsys):
    code = run_cli("series", "--preset", "series-327", "--seed", "-3",
                   "--out", str(tmp_path))
    err = capsys.readouterr().err
    assert code == 2
    assert "seed" in err


def test_every_subcommand_has_a_default_preset():
    assert set(SUBCOMMANDS) == {
        "counterexample", "conditions", "clt", "maximal", "criteria",
        "series", "validate",
    }
    for name, preset in PRESETS.items():
        assert isinstance(preset, dict), name


# ---------------------------------------------------------------------------
# artifacts and the run manifest
# ---------------------------------------------------------------------------

def test_maximal_run_artifacts(tmp_path):
    out = tmp_path / "run"
    code = run_cli("maximal", "--preset", "maximal-smoke", "--out", str(out))
    assert code == 0
    manifest = read_json(out / "manifest.json")
    for name in manifest["outputs"]:
        assert (out / name).exists(), f"manifest lists missing file {name}"
    assert "manifest.json" in manifest["outputs"]
    assert manifest["config_sha256"]
    report = read_json(out / "report.json")
    assert report["config_sha256"] == manifest["config_sha256"]
    # plain two-column plot data
    lines = (out / "mstar_tail_stream0.dat").read_text().strip().splitlines()
    rows = [ln.split() for ln in lines if not ln.startswith("#")]
    assert all(len(r) == 2 for r in rows)


def test_series_csv_shape(tmp_path):
    out = tmp_path / "run"
    assert run_cli("series", "--preset", "series-327", "--out", str(out)) == 0
    lines = (out / "series.csv").read_text().strip().splitlines()
    assert lines[0] == "condition,K,value"
    assert len(lines) > 4


def test_default_outdir_is_hash_stamped(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code = run_cli("validate", "--preset", "windows-slln")
    assert code == 0
    runs = list((tmp_path / "runs").iterdir())
    assert len(runs) == 1
    name = runs[0].name
    manifest = read_json(runs[0] / "manifest.json")
    assert name == f"validate-{manifest['config_sha256'][:12]}"


# ---------------------------------------------------------------------------
# determinism across worker counts and repeat runs
# ---------------------------------------------------------------------------

def artifact_bytes(out: Path):
    blobs = {}
    for p in sorted(out.iterdir()):
        if p.name == "manifest.json":
            continue  # wall-clock stamps live only here
        blobs[p.name] = p.read_bytes()
    return blobs


def test_counterexample_byte_identical_across_workers(tmp_path):
    config = tmp_path / "cex.json"
    config.write_text(json.dumps({
        "preset": "tower-iplil",
        "system": {"i_max": 14, "bits": 16},
        "horizons": {"n": [64, 256]},
    }))
    out1, out2 = tmp_path / "w1", tmp_path / "w4"
    assert run_cli("counterexample", "--config", str(config), "--out", str(out1),
                   "--workers", "1") == 0
    assert run_cli("counterexample", "--config", str(config), "--out", str(out2),
                   "--workers", "4") == 0
    a, b = artifact_bytes(out1), artifact_bytes(out2)
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], f"{name} differs between worker counts"


def test_conditions_repeat_runs_identical(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({
        "preset": "tower-iplil",
        "system": {"i_max": 12, "bits": 14},
        "horizons": {"n": [64, 256]},
        "paths": {"count": 400},
        "epsilons": {"values": [0.5, 2.0]},
    }))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli("conditions", "--config", str(config), "--out", str(out1)) == 0
    assert run_cli("conditions", "--config", str(config), "--out", str(out2)) == 0
    assert artifact_bytes(out1) == artifact_bytes(out2)
    # the three probe reports share one experiment-config hash; the
    # cross-check report carries the CLI-level hash from the manifest
    shas = {
        read_json(out1 / name)["config_sha256"]
        for name in ("condition16.json", "condition17.json", "strong_law.json")
    }
    assert len(shas) == 1
    manifest_sha = read_json(out1 / "manifest.json")["config_sha256"]
    assert read_json(out1 / "mc_vs_exact.json")["config_sha256"] == manifest_sha


def test_seed_flag_changes_estimates_but_not_exact_values(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({
        "preset": "tower-iplil",
        "system": {"i_max": 12, "bits": 14},
        "horizons": {"n": [64, 256]},
        "paths": {"count": 400},
        "epsilons": {"values": [4.0]},
    }))
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert run_cli("conditions", "--config", str(config), "--out", str(out1),
                   "--seed", "1") == 0
    assert run_cli("conditions", "--config", str(config), "--out", str(out2),
                   "--seed", "2") == 0
    r1 = read_json(out1 / "condition16.json")
    r2 = read_json(out2 / "condition16.json")
    exact_fields = ("n", "epsilon", "threshold", "exact_prob", "tower_bound")
    for a, b in zip(r1["exact_rows"], r2["exact_rows"]):
        for key in exact_fields:
            assert a[key] == b[key]
    assert r1["rows"] != r2["rows"]


# ---------------------------------------------------------------------------
# the remaining subcommands smoke through their presets
# ---------------------------------------------------------------------------

def test_clt_preset_runs(tmp_path, capsys):
    config = tmp_path / "clt.json"
    config.write_text(json.dumps({
        "preset": "clt-rademacher",
        "horizons": {"n": [128, 512]},
        "paths": {"count": 400},
    }))
    code = run_cli("clt", "--config", str(config), "--out", str(tmp_path / "run"))
    out = capsys.readouterr().out
    assert code == 0
    assert "ks" in out.lower()
    rows = read_json(tmp_path / "run" / "clt.json")["rows"]
    assert [r["n"] for r in rows] == [128, 512]


def test_criteria_preset_runs(tmp_path):
    out = tmp_path / "run"
    code = run_cli("criteria", "--preset", "criteria-affine", "--out", str(out))
    assert code == 0
    report = read_json(out / "report.json")
    assert report["all_passed"] is True
    names = [c["name"] for c in report["checks"]]
    assert any(name.startswith("[moment_integral]") for name in names)
    assert any(name.startswith("[corollary_2_2]") for name in names)

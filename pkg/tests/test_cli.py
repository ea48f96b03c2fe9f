import csv
import json
import subprocess
import sys

import pytest

from curvlab import MatrixMultiplier
from curvlab.cli import CONFIG_SCHEMA, run_command
from curvlab.multiplier import z

Z = z()
A = MatrixMultiplier.from_rows([[1], [Z]]).to_json()
B = MatrixMultiplier.from_rows([[1], [Z**2]]).to_json()
SWAP = MatrixMultiplier.from_rows([[Z], [1]]).to_json()
C = MatrixMultiplier.from_rows([[Z], [1 - Z]]).to_json()
GRID = {"r_max": 0.7, "n_radial": 5, "n_angular": 8}


@pytest.fixture
def write(tmp_path):
    def _write(cfg, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
        return str(p)

    return _write


def run(args, tmp_path):
    out = tmp_path / "report.json"
    code = run_command(args + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


class TestCommands:
    @pytest.mark.parametrize(
        "command, cfg",
        [
            ("curvature", {"kernel": {"family": "szego"}, "points": [[0, 0], [0.3, 0]]}),
            ("quotient-curvature", {"kernel": {"family": "bergman"}, "multiplier": A, "grid": GRID}),
            ("verify-additivity", {"kernel": {"family": "weighted_bergman", "alpha": 1}, "multiplier": C, "grid": GRID}),
            ("iso-test", {"multipliers": [A, SWAP], "grid": GRID}),
            ("cross-kernel", {"kernels": [{"family": "szego"}, {"family": "bergman"}], "multipliers": [A, B], "grid": GRID}),
            ("corona", {"multiplier": C, "grid": GRID}),
            ("similarity", {"multiplier": C, "grid": GRID}),
            ("carleson", {"multiplier": A, "levels": 3, "grid": {"r_max": 0.9}}),
            ("oracle", {"multiplier": C, "oracle": {"N": [24, 48], "w": [[0.3, 0]]}}),
        ],
    )
    def test_success(self, command, cfg, write, tmp_path):
        code, rep = run([command, "--config", write({"schema": 1, **cfg})], tmp_path)
        assert code == 0
        assert rep["verdict"] is True
        assert rep["command"] == command
        assert {"schema", "tool", "version", "config_hash", "wall_clock_s"} <= set(rep)

    def test_curvature_value(self, write, tmp_path):
        cfg = {"schema": 1, "kernel": {"family": "bergman"}, "points": [[0.6, 0]]}
        _, rep = run(["curvature", "--config", write(cfg)], tmp_path)
        (pt, val), = rep["curvature"]
        assert val[0] == pytest.approx(-2 / 0.64**2, rel=1e-6)


class TestVerdicts:
    def test_iso_without_expect_passes(self, write, tmp_path):
        code, rep = run(["iso-test", "--config", write({"schema": 1, "multipliers": [A, B], "grid": GRID})], tmp_path)
        assert code == 0 and rep["verdict"] is False

    def test_iso_expect_mismatch(self, write, tmp_path):
        cfg = write({"schema": 1, "multipliers": [A, B], "grid": GRID})
        code, _ = run(["iso-test", "--config", cfg, "--expect", "isomorphic"], tmp_path)
        assert code == 2
        code, _ = run(["iso-test", "--config", cfg, "--expect", "non-isomorphic"], tmp_path)
        assert code == 0

    def test_iso_report_fields(self, write, tmp_path):
        _, rep = run(["iso-test", "--config", write({"schema": 1, "multipliers": [A, B], "grid": GRID})], tmp_path)
        assert rep["max_deviation"] == pytest.approx(1.0)
        assert rep["witness"] == [0.0, 0.0]
        assert rep["grid"]["r_max"] == 0.7

    def test_corona_failure(self, write, tmp_path):
        cfg = {"schema": 1, "multiplier": MatrixMultiplier.from_rows([[Z], [Z**2]]).to_json(), "grid": GRID}
        code, rep = run(["corona", "--config", write(cfg)], tmp_path)
        assert code == 2 and rep["bound"] == 0.0

    def test_additivity_tolerance_override(self, write, tmp_path):
        cfg = write({"schema": 1, "kernel": {"family": "szego"}, "multiplier": A, "grid": GRID})
        code, _ = run(["verify-additivity", "--config", cfg, "--tol", "0"], tmp_path)
        assert code == 2


class TestInputErrors:
    def test_malformed_json(self, write, tmp_path, capsys):
        code = run_command(["curvature", "--config", write('{"schema": 1,\n  "kernel": }')])
        assert code == 1
        assert "line 2" in capsys.readouterr().err

    def test_unknown_key(self, write, capsys):
        code = run_command(["curvature", "--config", write({"schema": 1, "kernal": {"family": "szego"}})])
        assert code == 1
        assert "kernal" in capsys.readouterr().err

    def test_wrong_schema_version(self, write):
        assert run_command(["curvature", "--config", write({"schema": 2, "kernel": {"family": "szego"}})]) == 1

    def test_boundary_point(self, write, capsys):
        cfg = {"schema": 1, "kernel": {"family": "szego"}, "points": [[0.99, 0]]}
        assert run_command(["curvature", "--config", write(cfg)]) == 1
        assert "0.99" in capsys.readouterr().err

    def test_missing_section(self, write):
        assert run_command(["iso-test", "--config", write({"schema": 1})]) == 1

    def test_bad_alpha(self, write):
        cfg = {"schema": 1, "kernel": {"family": "weighted_bergman", "alpha": -3}, "points": [[0, 0]]}
        assert run_command(["curvature", "--config", write(cfg)]) == 1

    def test_missing_file(self, tmp_path):
        assert run_command(["curvature", "--config", str(tmp_path / "nope.json")]) == 1

    def test_unknown_command(self, write):
        assert run_command(["frobnicate", "--config", write({"schema": 1})]) == 1


class TestOutput:
    def test_deterministic(self, write, tmp_path):
        cfg = write({"schema": 1, "multiplier": C, "grid": GRID})
        _, r1 = run(["similarity", "--config", cfg], tmp_path)
        _, r2 = run(["similarity", "--config", cfg], tmp_path)
        r1.pop("wall_clock_s"), r2.pop("wall_clock_s")
        assert r1 == r2

    def test_config_hash_tracks_overrides(self, write, tmp_path):
        cfg = write({"schema": 1, "multiplier": C, "grid": GRID})
        _, r1 = run(["corona", "--config", cfg], tmp_path)
        _, r2 = run(["corona", "--config", cfg, "--grid-r", "0.5"], tmp_path)
        assert r1["config_hash"] != r2["config_hash"]

    def test_csv(self, write, tmp_path):
        out = tmp_path / "pts.csv"
        cfg = write({"schema": 1, "kernel": {"family": "szego"}, "multiplier": A, "grid": GRID})
        assert run_command(["verify-additivity", "--config", cfg, "--format", "csv", "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["re", "im", "value"]
        assert len(rows) == 1 + 1 + 4 * 8

    def test_no_partial_file_on_error(self, write, tmp_path):
        out = tmp_path / "r.json"
        run_command(["curvature", "--config", write({"schema": 1, "kernel": {"family": "szego"}, "points": [[2, 0]]}), "--out", str(out)])
        assert not out.exists()
        assert not list(tmp_path.glob(".curvlab-*"))

    def test_threads_env(self, write, tmp_path, monkeypatch):
        cfg = write({"schema": 1, "multiplier": C, "oracle": {"N": [24, 48], "w": [[0.3, 0], [0, 0.2]]}})
        _, r1 = run(["oracle", "--config", cfg], tmp_path)
        monkeypatch.setenv("CURVLAB_THREADS", "3")
        _, r2 = run(["oracle", "--config", cfg], tmp_path)
        r1.pop("wall_clock_s"), r2.pop("wall_clock_s")
        assert r1 == r2


def test_schema_is_closed():
    assert CONFIG_SCHEMA["additionalProperties"] is False


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema": 1, "kernel": {"family": "szego"}, "points": [[0, 0]]}))
    proc = subprocess.run([sys.executable, "-m", "curvlab", "curvature", "--config", str(cfg)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tool"] == "curvlab"


def test_grid_round_trip(tmp_path):
    from curvlab import GridSpec

    g = GridSpec("unit_ball", 2, r_max=0.5, per_axis=3)
    cfg = tmp_path / "g.json"
    spec = {"schema": 1, "kernel": {"family": "drury_arveson", "dim": 2, "domain": "unit_ball"}, "grid": g.to_json()}
    cfg.write_text(json.dumps(spec))
    out = tmp_path / "r.json"
    assert run_command(["curvature", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["grid"] == g.to_json()


def test_documented_schema_in_sync():
    from pathlib import Path

    doc = Path(__file__).resolve().parents[1] / "docs" / "config.schema.json"
    assert json.loads(doc.read_text()) == json.loads(json.dumps(CONFIG_SCHEMA))

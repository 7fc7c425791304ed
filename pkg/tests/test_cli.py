import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gaussian_teleport import cli, reproduce
from gaussian_teleport.core import (
    EXAMPLE1_PARAMS,
    MeasurementSpec,
    ThreeModeState,
    build_example_channel,
    dump_state,
    squeezed_cm,
)
from gaussian_teleport.reproduce import Verdict


@pytest.fixture
def example1_file(tmp_path):
    path = tmp_path / "ch.json"
    dump_state(build_example_channel(*EXAMPLE1_PARAMS), path)
    return str(path)


def test_check_example(example1_file, capsys):
    assert cli.run(["check", "--state", example1_file]) == 0
    assert "genuine: true, reduced separable: true" in capsys.readouterr().out


def test_check_non_genuine(tmp_path, capsys):
    path = tmp_path / "bad.json"
    blocks = {k: (0.1 * np.eye(2) if k in "ABC" else np.zeros((2, 2))).tolist() for k in "ABCDEF"}
    path.write_text(json.dumps({"blocks": blocks}))
    assert cli.run(["check", "--state", str(path)]) == 1
    assert "genuine: false" in capsys.readouterr().out
    assert cli.run(["optimize", "--state", str(path)]) == 1


def test_optimize_example(example1_file, capsys, tmp_path):
    out = tmp_path / "r.json"
    assert cli.run(["optimize", "--state", example1_file, "--input", "coherent", "--out", str(out)]) == 0
    data = json.loads(out.read_text())["outputs"]
    assert data["phi"] == 0.0
    assert data["xi"] == pytest.approx(0.087, abs=0.002)
    assert data["fidelity"] == pytest.approx(0.62, abs=0.005)
    assert data["classification"] == "squeezed-heterodyne"
    assert "xi_bar = 0.0868" in capsys.readouterr().out


def test_optimize_example2_names_quadrature(capsys):
    assert cli.run(["optimize", "--state", "example2"]) == 0
    out = capsys.readouterr().out
    assert "homodyne-X(phi+pi/2)" in out
    assert "homodyne quadrature angle: 1.5707963" in out


def test_fidelity_without_correlations_equals_trace(tmp_path, capsys):
    V = 0.5 * np.eye(6)
    V[0:4, 0:4] += 0.2 * np.eye(4)
    path = tmp_path / "free.json"
    blocks = {"A": V[0:2, 0:2], "B": V[2:4, 2:4], "C": V[4:6, 4:6], "D": np.zeros((2, 2)), "E": np.zeros((2, 2)),
              "F": np.zeros((2, 2))}
    path.write_text(json.dumps({"blocks": {k: v.tolist() for k, v in blocks.items()}}))
    out = tmp_path / "f.json"
    assert cli.run(["fidelity", "--state", str(path), "--xi", "1", "--phi", "0", "--out", str(out)]) == 0
    data = json.loads(out.read_text())["outputs"]
    assert data["fidelity"] == data["fidelity_tr"]


def test_fidelity_accepts_homodyne_limits(capsys):
    assert cli.run(["fidelity", "--state", "example2", "--xi", "0", "--phi", "0"]) == 0
    assert "0.5265" in capsys.readouterr().out
    assert cli.run(["fidelity", "--state", "example2", "--xi", "inf", "--phi", "0"]) == 0


def test_squeezed_and_file_inputs_agree(tmp_path, capsys):
    path = tmp_path / "in.json"
    path.write_text(json.dumps({"V_in": squeezed_cm(MeasurementSpec(3.0, 0.5)).tolist(), "amplitude": [1.0, -2.0]}))
    outs = []
    for spec in ("squeezed:3,0.5", str(path)):
        assert cli.run(["fidelity", "--state", "example1", "--input", spec, "--xi", "2", "--phi", "1"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


@pytest.mark.parametrize("argv", [
    ["fidelity", "--state", "example1", "--xi", "1", "--phi", "30deg"],
    ["fidelity", "--state", "example1", "--xi", "1", "--phi", "45°"],
    ["fidelity", "--state", "example1", "--xi", "-1", "--phi", "0"],
    ["fidelity", "--state", "example1", "--xi", "abc", "--phi", "0"],
    ["fidelity", "--state", "example1", "--input", "squeezed:3", "--xi", "1", "--phi", "0"],
    ["optimize", "--state", "/nonexistent/file.json"],
    ["sweep-q", "--q-min", "0.3"],
    ["check", "--state", "symmetric:q=oops"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.run(argv) == 2
    assert "gto" in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "blocks": {\n    "A": [[1, 0], [0, 1]],,\n  }\n}\n')
    assert cli.run(["check", "--state", str(path)]) == 2
    err = capsys.readouterr().err
    assert "line 3" in err and "column" in err


def test_structurally_wrong_state_exit_2(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps({"blocks": {"A": [[1, 0], [0, 1]]}}))
    assert cli.run(["check", "--state", str(path)]) == 2


def test_sweep_q_csv(tmp_path):
    path = tmp_path / "q.csv"
    assert cli.run(["sweep-q", "--q-min", "0.5", "--q-max", "50", "--n", "12", "--csv", str(path)]) == 0
    raw = path.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(raw.decode().splitlines()))
    assert list(rows[0]) == ["q", "gamma", "F_tr", "F_assisted"]
    assert len(rows) == 12
    assert float(rows[0]["q"]) == 0.5
    assert float(rows[0]["F_tr"]) == pytest.approx(0.4444, abs=1e-4)
    assert float(rows[0]["F_assisted"]) == pytest.approx(0.4545, abs=1e-4)
    for row in rows:
        assert float(row["gamma"]) < 0
        assert float(row["F_assisted"]) >= float(row["F_tr"])


def test_sweep_phi_example2(tmp_path):
    path = tmp_path / "phi.csv"
    assert cli.run(["sweep-phi", "--state", "example2", "--n", "360", "--csv", str(path)]) == 0
    rows = list(csv.DictReader(path.read_text().splitlines()))
    assert list(rows[0]) == ["phi", "gamma", "gamma_shift", "p", "xi_bar", "F_tilde", "F_zero"]
    b = 0.339
    for row in rows:
        phi = float(row["phi"])
        near_border = min(abs(phi - x) for x in (b, math.pi / 2 - b, math.pi / 2 + b, math.pi - b)) < 2e-3
        inside = b < phi < math.pi / 2 - b or math.pi / 2 + b < phi < math.pi - b
        if not near_border:
            assert row["p"] == ("1" if inside else "0")
        if row["p"] == "0":
            assert row["xi_bar"] in ("0", "inf")


def test_sweep_phi_example1_peaks_at_quarter_turns(capsys):
    assert cli.run(["sweep-phi", "--state", "example1", "--n", "64"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    f = np.array([float(r["F_tilde"]) for r in rows])
    assert set(np.flatnonzero(f >= f.max() - 1e-12)) == {0, 32}


@pytest.fixture
def fast_suites(monkeypatch):
    """Replace the seeded random suites by passing stubs so only the example targets run."""
    def stub(name):
        return lambda *a, **k: Verdict(name, 0, 0, 0, True)

    monkeypatch.setattr(reproduce, "symmetric_targets", lambda: [])
    for name in ("outcome_dominance_target", "thermal_dominance_target", "phase_optimality_target", "quadrature_target",
                 "grid_target"):
        monkeypatch.setattr(reproduce, name, stub(name))


def test_reproduce_negative_control(tmp_path, fast_suites, capsys):
    V = build_example_channel(*EXAMPLE1_PARAMS).cm.copy()
    V[0, 0] = V[1, 1] = 1.0
    path = tmp_path / "corrupt.json"
    dump_state(ThreeModeState.from_cm(V), path)
    out = tmp_path / "report.json"
    assert cli.run(["reproduce", "--example1", str(path), "--out", str(out)]) == 1
    assert "[FAIL] example1: genuine" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert report["passed"] is False
    assert report["outputs"]["failures"] == 1


def test_reproduce_examples_pass(tmp_path, fast_suites):
    out = tmp_path / "report.json"
    assert cli.run(["reproduce", "--out", str(out)]) == 0
    text = out.read_text()
    assert "wall_time" not in text
    assert json.loads(text)["passed"] is True


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gaussian_teleport", "check", "--state", "example2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("genuine: true, reduced separable: true")

"""Command-line interface: exit codes, report contents, determinism, and
config-file handling."""

import json
import os

import pytest

from conftest import two_level_space
from hasts import meshio, samples
from hasts.basis import GlobalKnots
from hasts.cli import main

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "samples")


def sample(name):
    return os.path.join(SAMPLES, name)


def read(path):
    with open(path) as f:
        return f.read()


# -- validate ------------------------------------------------------------------


def test_validate_suitable_mesh_exits_zero(tmp_path, capsys):
    rc = main(["validate", "--mesh", sample("tensor_4x4_p2.mesh"), "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "analysis-suitable yes" in out
    report = read(tmp_path / "validate_report.txt")
    assert report == out
    assert "violation" not in report


def test_validate_unsuitable_mesh_exits_one(tmp_path, capsys):
    rc = main(["validate", "--mesh", sample("extension_unsuitable.mesh"), "--out", str(tmp_path)])
    assert rc == 1
    out = capsys.readouterr().out
    assert "analysis-suitable no" in out
    assert "offending-pair" in out


def test_validate_unreadable_input_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.mesh"
    bad.write_text("not a mesh file\n")
    rc = main(["validate", "--mesh", str(bad), "--out", str(tmp_path)])
    assert rc == 2
    assert "parse error" in capsys.readouterr().err
    rc = main(["validate", "--mesh", str(tmp_path / "missing.mesh"), "--out", str(tmp_path)])
    assert rc == 2


def test_validate_requires_mesh(tmp_path, capsys):
    rc = main(["validate", "--out", str(tmp_path)])
    assert rc == 2


# -- extract -------------------------------------------------------------------


def test_extract_mesh_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        rc = main(["extract", "--mesh", sample("index_vector_a.mesh"), "--out", str(out)])
        assert rc == 0
    assert read(out1 / "extraction.txt") == read(out2 / "extraction.txt")
    assert read(out1 / "extraction.txt").startswith("hasts-extraction 1\n")


def test_extract_hierarchy_file(tmp_path, capsys):
    space = two_level_space(4, 2)
    hier = tmp_path / "two_level.hier"
    hier.write_text(meshio.dump_hierarchy(space.levels))
    rc = main(["extract", "--mesh", str(hier), "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert f"n_f {space.n_f} n_e {space.n_e}" in out
    text = read(tmp_path / "extraction.txt")
    assert text.count("element ") == space.n_e


def test_extract_rejects_unsuitable_mesh(tmp_path, capsys):
    rc = main(["extract", "--mesh", sample("extension_unsuitable.mesh"), "--out", str(tmp_path)])
    assert rc == 1
    assert "not analysis-suitable" in capsys.readouterr().out
    assert not (tmp_path / "extraction.txt").exists()


# -- solve ---------------------------------------------------------------------


def solve_args(tmp_path, *extra):
    return [
        "solve", "--benchmark", "manufactured", "--p", "2", "--elements", "4",
        "--tol", "1e-2", "--iterations", "2", "--out", str(tmp_path), *extra,
    ]


def test_solve_writes_history_and_fields(tmp_path, capsys):
    rc = main(solve_args(tmp_path))
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("iterations ")
    history = read(tmp_path / "history.txt").strip().splitlines()
    assert history[0] == "# iteration n_f n_e total_estimate marked"
    n_iter = len(history) - 1
    for k in range(1, n_iter + 1):
        assert (tmp_path / f"field_{k:03d}.txt").exists()
        assert (tmp_path / f"elements_{k:03d}.txt").exists()
        assert (tmp_path / f"greville_{k:03d}.txt").exists()


def test_solve_deterministic_across_runs(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(solve_args(out)) == 0
    for name in os.listdir(out1):
        assert read(out1 / name) == read(out2 / name)


def test_solve_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "benchmark": "manufactured", "p": 2, "elements": 4,
        "tol": 1e-2, "iterations": 2,
    }))
    outa = tmp_path / "a"
    rc = main(["solve", "--config", str(cfg), "--out", str(outa)])
    assert rc == 0
    hist_a = read(outa / "history.txt")
    # the flag overrides the config entry: a huge tol stops after one iteration
    outb = tmp_path / "b"
    rc = main(["solve", "--config", str(cfg), "--tol", "10", "--out", str(outb)])
    assert rc == 0
    hist_b = read(outb / "history.txt").strip().splitlines()
    assert len(hist_b) == 2  # header + single iteration
    assert hist_a != "\n".join(hist_b)


def test_solve_rejects_bad_parameters(tmp_path, capsys):
    assert main(solve_args(tmp_path, "--tol", "-1")) == 1
    assert main(solve_args(tmp_path, "--max-levels", "0")) == 1
    assert main(["solve", "--benchmark", "none", "--out", str(tmp_path)]) == 1


def test_config_unknown_key_exits_two(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"benchmark": "manufactured", "typo": 1}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text("{not json")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_solve_on_mesh_file_start(tmp_path, capsys):
    rc = main([
        "solve", "--mesh", sample("tensor_4x4_p2.mesh"), "--benchmark", "manufactured",
        "--tol", "1e-2", "--iterations", "1", "--out", str(tmp_path),
    ])
    assert rc == 0
    assert (tmp_path / "history.txt").exists()

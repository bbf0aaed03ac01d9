"""Mesh export formats and the command-line contract (exit codes, reports)."""

import json

import numpy as np
import pytest

from besselcmc import RunConfig, SurfaceMesh, export_mesh, mesh_from_grid
from besselcmc.cli import cmd_verify, main

REPORT_KEYS = {"check", "residuals", "thresholds", "config", "pass"}


def single_quad_mesh():
    verts = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
                      [[0.0, 1.0, 0.0], [1.0, 1.0, 0.25]]])
    faces = np.array([[0, 1, 3, 2]])
    return SurfaceMesh(verts, faces, np.zeros_like(verts), {}, {}, {})


# ------------------------------------------------------------------- export


def test_obj_single_quad(tmp_path):
    path = tmp_path / "quad.obj"
    export_mesh(single_quad_mesh(), "obj", path)
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert sum(1 for l in lines if l.startswith("v ")) == 4
    assert lines[-1] == "f 1 2 4 3"            # 1-based indices


def test_ply_single_quad(tmp_path):
    path = tmp_path / "quad.ply"
    export_mesh(single_quad_mesh(), "ply", path)
    lines = path.read_text().splitlines()
    assert lines[0] == "ply"
    assert lines[1] == "format ascii 1.0"
    assert "element vertex 4" in lines
    assert "element face 1" in lines
    assert lines[-1] == "4 0 1 3 2"            # 0-based indices
    assert len(lines) == 9 + 4 + 1


def test_welded_grid_counts(tmp_path):
    rng = np.random.default_rng(3)
    mesh = mesh_from_grid(rng.normal(size=(6, 8, 3)))
    path = tmp_path / "grid.obj"
    export_mesh(mesh, "obj", path)
    lines = path.read_text().splitlines()
    assert sum(1 for l in lines if l.startswith("v ")) == 6 * 8
    assert sum(1 for l in lines if l.startswith("f ")) == 5 * 8


def test_export_byte_stable(tmp_path):
    mesh = mesh_from_grid(np.random.default_rng(4).normal(size=(5, 8, 3)))
    for fmt in ("obj", "ply"):
        p1 = tmp_path / f"a.{fmt}"
        p2 = tmp_path / f"b.{fmt}"
        export_mesh(mesh, fmt, p1)
        export_mesh(mesh, fmt, p2)
        assert p1.read_bytes() == p2.read_bytes()


def test_export_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        export_mesh(single_quad_mesh(), "stl", tmp_path / "x.stl")


# ----------------------------------------------------------------- verify


def test_verify_prints_report_to_stdout(capsys):
    code = main(["verify", "mu-alpha", "--r", "0.5"])
    out = capsys.readouterr().out
    report = json.loads(out)
    assert code == 0
    assert set(report) == REPORT_KEYS
    assert report["check"] == "mu-alpha"
    assert report["pass"] is True
    assert report["residuals"]["mu_alpha_residual"] <= 1e-12


def test_verify_monodromy_passes(capsys):
    code = main(["verify", "monodromy", "--r", "-0.25",
                 "--degree", "16", "--lambda-samples", "64"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["pass"] is True
    assert report["residuals"]["unitarity_error"] <= 1e-6


def test_verify_writes_report_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["verify", "gauge", "--r", "0.5", "--out", str(out)])
    stdout = capsys.readouterr().out
    assert code == 0
    assert f"wrote {out}" in stdout
    assert "gauge: pass" in stdout
    report = json.loads(out.read_text())
    assert set(report) == REPORT_KEYS


def test_sabotaged_gauge_check_fails(capsys):
    code = main(["verify", "gauge", "--r", "0.5", "--sabotage", "0.1"])
    report = json.loads(capsys.readouterr().out)
    assert code == 1
    assert report["pass"] is False
    assert report["residuals"]["reduced_form"] > 1e-10


def test_symmetry_and_trace_law_checks(capsys):
    assert main(["verify", "symmetry", "--r", "-0.25"]) == 0
    code = main(["verify", "trace-law", "--r", "0.3333333333333333",
                 "--degree", "16", "--lambda-samples", "64"])
    assert code == 0
    capsys.readouterr()


# --------------------------------------------------------------- exit codes


@pytest.mark.parametrize("r", ["0", "1", "1.5"])
def test_out_of_range_r_is_bad_input(r, capsys):
    assert main(["verify", "mu-alpha", "--r", r]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_check_is_bad_input(capsys):
    assert main(["verify", "bogus", "--r", "0.5"]) == 2


def test_missing_r_is_bad_input(capsys):
    assert main(["verify", "mu-alpha"]) == 2
    assert "r" in capsys.readouterr().err


def test_unwritable_out_is_bad_input(capsys):
    code = main(["verify", "mu-alpha", "--r", "0.5",
                 "--out", "/nonexistent-dir/zz/report.json"])
    assert code == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()


# ----------------------------------------------------------------- generate


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("gen")
    out = tmp / "surf.obj"
    argv = ["generate", "--r", "0.3333333333333333",
            "--degree", "16", "--lambda-samples", "64",
            "--annulus", "0.5:2.0", "--grid", "12:8", "--out", str(out)]
    code = main(argv)
    return tmp, out, argv, code


def test_generate_writes_three_files(generated, capsys):
    tmp, out, _, code = generated
    assert code == 0
    assert out.exists()
    assert (tmp / "surf-reference.obj").exists()
    assert (tmp / "surf-report.json").exists()
    report = json.loads((tmp / "surf-report.json").read_text())
    assert set(report) == REPORT_KEYS
    assert report["check"] == "generate"
    assert report["pass"] is True
    assert report["residuals"]["seam_residual"] <= 1e-5
    assert "mean_curvature" in report["residuals"]
    assert "symmetry" in report["residuals"]


def test_generate_deterministic(generated):
    tmp, out, argv, _ = generated
    mesh_bytes = out.read_bytes()
    report_bytes = (tmp / "surf-report.json").read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == mesh_bytes
    assert (tmp / "surf-report.json").read_bytes() == report_bytes


def test_generate_requires_out(capsys):
    assert main(["generate", "--r", "0.5"]) == 2
    assert "out" in capsys.readouterr().err


def test_generate_ply_format(tmp_path):
    out = tmp_path / "surf.ply"
    code = main(["generate", "--r", "0.5", "--degree", "16",
                 "--lambda-samples", "64", "--annulus", "0.5:2.0",
                 "--grid", "12:8", "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[0] == "ply"
    assert (tmp_path / "surf-reference.ply").exists()


# ------------------------------------------------------------- config files


def test_config_file_with_flag_precedence(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "# sample config\n"
        "r = 0.3333333333333333\n"
        "degree = 16\n"
        "lambda_samples = 64\n"
        "annulus = 0.5:2.0\n"
        "grid = 24:16\n")
    out = tmp_path / "c.obj"
    code = main(["generate", "--config", str(cfgfile),
                 "--grid", "12:8", "--out", str(out)])
    assert code == 0
    report = json.loads((tmp_path / "c-report.json").read_text())
    assert report["config"]["grid"] == [12, 8]          # flag wins
    assert report["config"]["annulus"] == [0.5, 2.0]    # file fills the rest
    capsys.readouterr()


def test_config_file_unknown_key(tmp_path, capsys):
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("r = 0.5\nwavelength = 3\n")
    assert main(["verify", "mu-alpha", "--config", str(cfgfile)]) == 2
    assert "wavelength" in capsys.readouterr().err


def test_config_file_bad_line(tmp_path, capsys):
    cfgfile = tmp_path / "bad2.cfg"
    cfgfile.write_text("r 0.5\n")
    assert main(["verify", "mu-alpha", "--config", str(cfgfile)]) == 2
    capsys.readouterr()


def test_cmd_verify_rejects_unknown_check():
    with pytest.raises(ValueError):
        cmd_verify(RunConfig(r=0.5), "nonsense")

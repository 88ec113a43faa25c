"""Command-line front ends: small runs, file outputs and error exits."""

import shutil
import subprocess

import pytest

from vectrans.cli import swe_main, transport_main
from vectrans.harness.output import read_csv


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("VECTRANS_OUTPUT_ROOT", str(tmp_path))
    return tmp_path


def test_transport_small_run(out_root, capsys):
    rc = transport_main(["--case", "cylinder", "--scheme", "recovered", "--n", "4", "--dt", "5",
                         "--out", "cyl"])
    assert rc == 0
    d = out_root / "cyl"
    meta, cols, rows = read_csv(d / "cylinder_recovered_n4.csv")
    assert cols[-2:] == ["l2_error", "normalised_l2_error"]
    assert meta["steps"] == "20" and meta["scheme"] == "recovered"
    assert "runtime" not in " ".join(meta)
    assert float(rows[0][-1]) > 0
    assert (d / "cylinder_recovered_n4.timing.txt").exists()
    for t in ("0", "50", "100"):
        vtk = d / f"cylinder_recovered_n4_t{t}.vtk"
        assert vtk.read_text().startswith("# vtk DataFile Version 3.0\n")
    assert "cylinder recovered n=4" in capsys.readouterr().out


def test_transport_config_file_and_ladder(out_root, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("case = cylinder\nscheme = benchmark\nladder = 3, 4, 5\ndt = 10\nvtk = off\n"
                   "out = ladder\n")
    assert transport_main(["--config", str(cfg)]) == 0
    meta, cols, rows = read_csv(out_root / "ladder" / "cylinder_benchmark_convergence.csv")
    assert cols == ["n", "mesh_size", "l2_error"] and len(rows) == 3
    assert "slope" in meta
    assert not list((out_root / "ladder").glob("*.vtk"))


def test_flags_override_config(out_root, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("case = cylinder\nscheme = benchmark\nn = 4\ndt = 10\nvtk = off\n")
    assert transport_main(["--config", str(cfg), "--n", "3", "--out", "o"]) == 0
    assert (out_root / "o" / "cylinder_benchmark_n3.csv").exists()


def test_bad_config_exits_2(out_root, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("case = cylinder\nscheme = recovered\n\nspeed = 3\n")
    assert transport_main(["--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert f"{cfg}:4: unknown key 'speed'" in err
    assert swe_main(["--case", "williamson2"]) == 2
    assert "missing required setting(s): scheme" in capsys.readouterr().err
    assert transport_main(["--case", "cylinder", "--scheme", "benchmark", "--dt", "0.3",
                           "--n", "3"]) == 2
    assert "does not divide" in capsys.readouterr().err


def test_swe_small_run(out_root):
    rc = swe_main(["--case", "williamson2", "--scheme", "benchmark", "--n", "2", "--dt", "3600",
                   "--days", "0.25", "--out", "w2", "--diag-every", "2"])
    assert rc == 0
    d = out_root / "w2"
    meta, cols, rows = read_csv(d / "williamson2_benchmark_n2_series.csv")
    assert cols == ["t", "energy", "enstrophy", "mass"]
    assert [float(r[0]) for r in rows] == [0.0, 7200.0, 14400.0, 21600.0]
    _, cols, rows = read_csv(d / "williamson2_benchmark_n2.csv")
    assert float(rows[0][cols.index("u_error")]) > 0
    assert abs(float(rows[0][cols.index("mass_change")])) < 1e-12
    assert (d / "williamson2_benchmark_n2_day0.25.vtk").exists()


@pytest.mark.skipif(shutil.which("transport") is None, reason="console scripts not installed")
def test_console_script(out_root):
    res = subprocess.run(["transport", "--case", "sphere", "--scheme", "benchmark", "--n", "2",
                          "--dt", "100", "--vtk", "off", "--out", "s"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (out_root / "s" / "sphere_benchmark_n2.csv").exists()

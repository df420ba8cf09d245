import json
import math

import numpy as np
import pytest

from heatns import config as cfgmod
from heatns.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_RUNTIME, main
from heatns.diagnostics import CSV_HEADER, read_csv


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def rest_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("rest")
    assert main(["run", "--scenario.name=rest", f"--output.dir={d}", "--time.t_end=0.2",
                 "--time.dt_max=0.02"]) == EXIT_OK
    return d


def test_rest_run_rows_are_constant(rest_run):
    lines = (rest_run / "diagnostics.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 12
    data = read_csv(rest_run / "diagnostics.csv")
    for name, col in data.items():
        if name != "t":
            assert np.allclose(col, col[0], rtol=1e-12, atol=1e-14), name
    m = json.loads((rest_run / "manifest.json").read_text())
    assert m["steps"] == 10 and m["t_final"] == pytest.approx(0.2)
    assert m["config"]["scenario.name"] == "rest"
    assert set(m["vacuum_condition"]) == {"c0", "threshold", "holds", "margin"}
    for key in ("sigma1", "sigma2", "E0", "theta_star"):
        assert math.isfinite(m["constants"][key])
    assert (rest_run / "snapshots" / "init_rho.txt").exists()
    assert (rest_run / "snapshots" / "final_theta.txt").exists()


def test_rest_run_verifies(rest_run, capsys):
    code, out, _ = run_cli(capsys, "verify", str(rest_run / "diagnostics.csv"))
    assert code == EXIT_OK
    assert "not applicable" in out and "FAIL" not in out


def test_bad_exponent_rejected(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--scenario.k1=3", f"--output.dir={tmp_path}")
    assert code == EXIT_CONFIG
    assert "scenario.k1" in err and "k1 ∉ (0,2)" in err
    assert not (tmp_path / "diagnostics.csv").exists()


@pytest.mark.parametrize("arg,key", [("--grid.nx=64", "grid.nx"), ("--time.cfl=1.5", "time.cfl"),
                                     ("--bogus.key=1", "bogus.key"), ("--grid.nx=abc", "grid.nx"),
                                     ("--scenario.name=nope", "scenario.name")])
def test_config_errors_name_the_key(capsys, arg, key):
    code, _, err = run_cli(capsys, "run", arg)
    assert code == EXIT_CONFIG and key in err


def test_config_file_and_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# rest run\nscenario.name = rest\ngrid.nx = 8\ngrid.ny=8\ntime.t_end=0.5\n")
    cfg = cfgmod.load(path, {"grid.nx": "16"})
    assert (cfg.scenario.nx, cfg.scenario.ny, cfg.t_end) == (16, 8, 0.5)
    assert cfgmod.build_config(cfg.to_flat()) == cfg
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_text("grid.nx 8")


def test_runtime_error_exit(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--scenario.name=uniform", "--grid.nx=16", "--grid.ny=16",
                           "--solver.max_iters=1", f"--output.dir={tmp_path}", "--time.t_end=0.1")
    assert code == EXIT_RUNTIME
    assert "runtime error at t=" in err


def test_identical_runs_identical_csv(tmp_path):
    args = ["run", "--scenario.name=uniform", "--grid.nx=16", "--grid.ny=16", "--time.t_end=0.1"]
    assert main(args + [f"--output.dir={tmp_path / 'a'}"]) == EXIT_OK
    assert main(args + [f"--output.dir={tmp_path / 'b'}"]) == EXIT_OK
    assert (tmp_path / "a/diagnostics.csv").read_bytes() == (tmp_path / "b/diagnostics.csv").read_bytes()


def _write_synthetic(d, sigma1, mass_drift=0.0):
    t = np.linspace(0, 2, 101)
    cols = {"t": t, "mass": 1 + mass_drift * t / 2, "E_total": np.ones_like(t),
            "KE": np.exp(-2 * sigma1 * t), "grad_u_sq": 0 * t, "min_rho": 0 * t, "max_rho": 1 + 0 * t,
            "min_theta": 1 + 0 * t, "theta_dist": np.exp(-t), "div_residual": 0 * t,
            "energy_residual": 0 * t, "vacuum_measure": 0 * t}
    rows = [",".join(format(cols[k][i], ".17g") for k in CSV_HEADER.split(",")) for i in range(t.size)]
    (d / "diagnostics.csv").write_text(CSV_HEADER + "\n" + "\n".join(rows) + "\n")


def test_verify_synthetic(rest_run, tmp_path, capsys):
    m = json.loads((rest_run / "manifest.json").read_text())
    (tmp_path / "manifest.json").write_text(json.dumps(m))
    s1 = m["constants"]["sigma1"]
    _write_synthetic(tmp_path, s1)
    code, out, _ = run_cli(capsys, "verify", str(tmp_path / "diagnostics.csv"))
    assert code == EXIT_OK and out.strip().endswith("verification PASS")
    _write_synthetic(tmp_path, s1, mass_drift=0.01)
    code, out, _ = run_cli(capsys, "verify", str(tmp_path / "diagnostics.csv"))
    assert code == EXIT_FAIL
    assert any(line.startswith("FAIL mass drift") for line in out.splitlines())


def test_verify_schema_mismatch(rest_run, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,mass\n0,1\n")
    code, _, err = run_cli(capsys, "verify", str(bad), str(rest_run / "manifest.json"))
    assert code == EXIT_CONFIG and "header" in err


def test_scenarios_list(capsys):
    code, out, _ = run_cli(capsys, "scenarios")
    assert code == EXIT_OK
    assert [line.split()[0] for line in out.splitlines()] == ["vacuum", "uniform", "rest"]


def test_check_condition(capsys):
    code, out, _ = run_cli(capsys, "check-condition", "--measure", "0.3", "--c0", "1.0")
    assert code == EXIT_CONFIG
    code, out, _ = run_cli(capsys, "check-condition", "--measure", "0.001", "--c0", "0.5")
    assert code == EXIT_OK and "holds=True" in out
    code, out, _ = run_cli(capsys, "check-condition", "--c0", "0.5", "--nx", "128")
    assert code == EXIT_OK and "holds=False" in out
    code, _, err = run_cli(capsys, "check-condition", "--c0", "0.5", "--nx", "32")
    assert code == EXIT_CONFIG and "cells" in err


def test_ineq(tmp_path, capsys):
    t = np.linspace(0, 1, 101)
    (tmp_path / "one.csv").write_text("t,value\n" + "".join(f"{x:.17g},1\n" for x in t))
    code, out, _ = run_cli(capsys, "ineq", "gronwall", "--f2", str(tmp_path / "one.csv"),
                           "--c", str(tmp_path / "one.csv"))
    assert code == EXIT_OK
    vals = np.loadtxt(out.splitlines()[1:], delimiter=",")
    assert np.max(np.abs(vals[:, 1] / np.exp(vals[:, 0]) - 1)) <= 1e-8
    code, _, _ = run_cli(capsys, "ineq", "bihari", "--h", str(tmp_path / "one.csv"), "--w", "linear",
                         "--out", str(tmp_path / "b.csv"))
    assert code == EXIT_OK
    b = np.loadtxt(tmp_path / "b.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(b[:, 1] / vals[:, 1] - 1)) <= 1e-8
    code, _, err = run_cli(capsys, "ineq", "bihari")
    assert code == EXIT_CONFIG and "--h" in err

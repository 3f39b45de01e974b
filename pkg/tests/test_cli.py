import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from spheredyn import __version__
from spheredyn.cli import EXIT_CONFIG, EXIT_GATE, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, OUTPUT_ENV, main
from spheredyn.geometry import Rep
from spheredyn.integrate import IntegratorSpec, integrate
from spheredyn.library import chain_pendulum, ChainPendulumParams
from spheredyn.trajectory_io import csv_header, read_table, read_trajectory, write_trajectory

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def short_config(tmp_path, name="double_pendulum.yaml", **run):
    """A shipped config cut down to a quick horizon."""
    data = yaml.safe_load((CONFIGS / name).read_text())
    data["run"].update({"horizon": 0.2, "step": 1e-2, **run})
    data["check"] = {"samples": 5, "curves": 2, "horizon": 0.1, "fine_step": 1e-3, "fine_horizon": 0.1}
    path = tmp_path / f"short_{name}"
    path.write_text(yaml.safe_dump(data))
    return path, data


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_run_writes_csv_and_summary(tmp_path, capsys):
    path, data = short_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", str(path), "--output-dir", str(out)]) == EXIT_OK
    header, rows = read_table(out / "double_pendulum.csv")
    assert len(header) == 16 == 1 + 6 * 2 + 3
    assert rows.shape == (21, 16)
    summary = json.loads((out / "double_pendulum.json").read_text())
    assert summary["final_state"]["t"] == pytest.approx(0.2)
    assert summary["diagnostics"]["max_norm_error"] <= 1e-9
    assert {"wall_time_s", "diagnostics", "final_state"} <= set(summary)
    assert "wrote" in capsys.readouterr().out


def test_quiet_prints_nothing(tmp_path, capsys):
    path, _ = short_config(tmp_path)
    assert main(["run", str(path), "--output-dir", str(tmp_path), "--quiet"]) == EXIT_OK
    assert capsys.readouterr().out == ""


def test_output_dir_from_environment(tmp_path, monkeypatch):
    path, _ = short_config(tmp_path)
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["run", str(path), "--quiet"]) == EXIT_OK
    assert (tmp_path / "env" / "double_pendulum.csv").exists()
    # the flag wins over the environment
    assert main(["run", str(path), "--quiet", "--output-dir", str(tmp_path / "flag")]) == EXIT_OK
    assert (tmp_path / "flag" / "double_pendulum.csv").exists()


@pytest.mark.parametrize("formulation", ["qdot", "omega", "mu", "pi"])
def test_csv_round_trip_is_exact(formulation, tmp_path):
    path, _ = short_config(tmp_path, formulation=formulation)
    assert main(["run", str(path), "--output-dir", str(tmp_path), "--quiet"]) == EXIT_OK
    rep = Rep(formulation)
    back = read_trajectory(tmp_path / "double_pendulum.csv", rep)
    from spheredyn.config import load_scenario
    from spheredyn.variational import initial_states

    sc = load_scenario(path)
    model = chain_pendulum(sc.model)
    traj = integrate(model, initial_states(model, sc.initial)[rep], sc.integrator)
    for field in ("t", "q", "v", "energy", "norm_error", "tangency_error"):
        assert np.array_equal(getattr(back, field), getattr(traj, field)), field


def test_trajectory_header():
    assert csv_header(1) == ["t", "q1_x", "q1_y", "q1_z", "w1_x", "w1_y", "w1_z", "energy", "max_norm_err", "max_tan_err"]


def test_compare_outputs(tmp_path):
    path, _ = short_config(tmp_path)
    assert main(["compare", str(path), "--output-dir", str(tmp_path), "--quiet"]) == EXIT_OK
    for rep in ("qdot", "omega", "mu", "pi"):
        assert read_table(tmp_path / f"double_pendulum_{rep}.csv")[1].shape == (21, 16)
    header, div = read_table(tmp_path / "divergence.csv")
    assert header == ["t", "divergence"] and div.shape == (21, 2)
    summary = json.loads((tmp_path / "compare_double_pendulum.json").read_text())
    assert summary["max_divergence"] == pytest.approx(div[:, 1].max())


def test_compare_loose_step_fails_tight_bound(tmp_path, capsys):
    path, data = short_config(tmp_path, step=0.1, horizon=1.0)
    data["compare"] = {"bound": 1e-9}
    path.write_text(yaml.safe_dump(data))
    assert main(["compare", str(path), "--output-dir", str(tmp_path)]) == EXIT_GATE
    assert "exceeds bound" in capsys.readouterr().err


def test_compare_equilibrium_zero(tmp_path):
    path, _ = short_config(tmp_path, "equilibrium.yaml")
    assert main(["compare", str(path), "--output-dir", str(tmp_path), "--quiet"]) == EXIT_OK
    assert read_table(tmp_path / "divergence.csv")[1][:, 1].max() == 0.0


@pytest.mark.parametrize("name", ["double_pendulum.yaml", "equilibrium.yaml", "forced_chain.yaml"])
def test_check_passes(name, tmp_path, capsys):
    path, _ = short_config(tmp_path, name)
    assert main(["check", str(path), "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all checks passed" in out and "dalembert_residual" in out


def test_check_corrupted_tolerance(tmp_path, capsys):
    path, data = short_config(tmp_path)
    data["tolerances"] = {"legendre": 1e-30}
    path.write_text(yaml.safe_dump(data))
    assert main(["check", str(path)]) == EXIT_GATE
    assert "legendre_roundtrip" in capsys.readouterr().err


def test_bad_norm_exit_code(tmp_path, capsys):
    path, data = short_config(tmp_path)
    data["initial"]["q"][0] = [0.0, 0.0, -1.2]
    path.write_text(yaml.safe_dump(data))
    assert main(["run", str(path), "--output-dir", str(tmp_path)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "initial.q[1]" in err and "link 1" in err
    assert not list(tmp_path.glob("*.csv"))


def test_step_larger_than_horizon(tmp_path):
    path, _ = short_config(tmp_path, step=1.0, horizon=0.5)
    assert main(["run", str(path), "--output-dir", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "absent.yaml")]) == EXIT_IO


def test_unwritable_output(tmp_path):
    path, _ = short_config(tmp_path)
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(path), "--output-dir", str(blocker / "sub"), "--quiet"]) == EXIT_IO


def test_numerical_failure_exit(tmp_path, capsys, monkeypatch):
    import spheredyn.cli as cli
    from spheredyn.errors import SingularInertia

    def singular(*args, **kwargs):
        raise SingularInertia("inertia operator is singular", time=0.25)

    monkeypatch.setattr(cli, "integrate", singular)
    path, _ = short_config(tmp_path)
    assert main(["run", str(path), "--output-dir", str(tmp_path)]) == EXIT_NUMERICAL
    assert "0.25" in capsys.readouterr().err
    assert not list(tmp_path.glob("*.csv"))


def test_no_partial_output_on_failure(tmp_path, monkeypatch):
    import spheredyn.trajectory_io as tio

    traj = integrate(chain_pendulum(ChainPendulumParams((1.0,), (1.0,))),
                     read_config_state(), IntegratorSpec(step=0.1, horizon=0.3))
    target = tmp_path / "t.csv"

    def boom(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(tio.np, "savetxt", boom)
    with pytest.raises(OSError):
        write_trajectory(target, traj)
    assert list(tmp_path.iterdir()) == []


def read_config_state():
    from spheredyn.geometry import SystemState

    return SystemState(np.array([[0.6, 0, -0.8]]), np.zeros((1, 3)), Rep.OMEGA)


def test_module_entry_point(tmp_path):
    path, _ = short_config(tmp_path, "equilibrium.yaml")
    proc = subprocess.run([sys.executable, "-m", "spheredyn", "run", str(path), "--output-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr

import textwrap

import numpy as np
import pytest

from ringpump.cli import ConfigError, load_run_config, main


BASE_CONFIG = textwrap.dedent("""\
    [geometry]
    ring_length = 4
    flux = 0.0

    [model]
    u = 0.0
    p0 = 30.0
    omega = 0.05
    band = +1

    [particles]
    n = 1

    [evolution]
    dt = 0.05
    record_stride = 100
""")


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(BASE_CONFIG)
    return path


def test_load_and_validate(config_file):
    cfg = load_run_config(str(config_file))
    assert cfg.ring_length == 4
    assert cfg.band == "+1"
    assert cfg.t_end is None
    assert cfg.resolved_t_end() == pytest.approx(4 / 3 * 2 * np.pi / 0.05)


def test_set_overrides(config_file):
    cfg = load_run_config(str(config_file), ["geometry.flux=0.5", "model.u=1.5"])
    assert cfg.flux == 0.5
    assert cfg.U == 1.5


def test_validation_names_the_field(config_file):
    with pytest.raises(ConfigError, match="model.band / model.phi0"):
        load_run_config(str(config_file), ["model.phi0=0.0"])
    with pytest.raises(ConfigError, match="geometry.ring_length"):
        load_run_config(str(config_file), ["geometry.ring_length=5"])
    with pytest.raises(ConfigError, match="particles.n"):
        load_run_config(str(config_file), ["particles.n=0"])
    with pytest.raises(ConfigError, match="evolution.dt"):
        load_run_config(str(config_file), ["evolution.dt=-1"])
    with pytest.raises(ConfigError, match="sweep.axis"):
        load_run_config(str(config_file),
                        ["sweep.axis=temperature", "sweep.grid=1,2"])


def test_missing_config_file_is_config_error(tmp_path, capsys):
    rc = main(["simulate", "--config", str(tmp_path / "nope.ini"),
               "--out", str(tmp_path)])
    assert rc == 1
    assert "config error" in capsys.readouterr().err


def test_phi0_without_band_needs_t_end(config_file):
    with pytest.raises(ConfigError, match="evolution.t_end"):
        cfg = load_run_config(
            str(config_file),
            ["model.band=", "model.phi0=0.0"])


def test_simulate_writes_record(tmp_path, config_file, capsys):
    rc = main(["simulate", "--config", str(config_file),
               "--out", str(tmp_path / "out")])
    assert rc == 0
    run_dir = tmp_path / "out" / "run"
    assert (run_dir / "config.ini").exists()
    assert (run_dir / "densities.csv").exists()
    summary = (run_dir / "summary.txt").read_text()
    assert "transmitted = " in summary
    assert "norm_drift = " in summary


def test_simulate_deterministic_csv(tmp_path, config_file):
    for name in ("a", "b"):
        rc = main(["simulate", "--config", str(config_file),
                   "--out", str(tmp_path / name)])
        assert rc == 0
    csv_a = (tmp_path / "a" / "run" / "densities.csv").read_bytes()
    csv_b = (tmp_path / "b" / "run" / "densities.csv").read_bytes()
    assert csv_a == csv_b


def test_config_echo_reruns_identically(tmp_path, config_file):
    rc = main(["simulate", "--config", str(config_file),
               "--out", str(tmp_path / "first")])
    assert rc == 0
    echoed = tmp_path / "first" / "run" / "config.ini"
    rc = main(["simulate", "--config", str(echoed),
               "--out", str(tmp_path / "second")])
    assert rc == 0
    assert (tmp_path / "first" / "run" / "densities.csv").read_bytes() == \
        (tmp_path / "second" / "run" / "densities.csv").read_bytes()


def test_dt_override_flag(tmp_path, config_file):
    rc = main(["simulate", "--config", str(config_file), "--dt", "0.1",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    summary = (tmp_path / "out" / "run" / "summary.txt").read_text()
    assert "dt = 0.1\n" in summary


def test_sweep_aggregate_and_point_records(tmp_path, config_file):
    rc = main(["sweep", "--config", str(config_file),
               "--set", "sweep.axis=flux", "--set", "sweep.grid=0:0.5:3",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    sweep_dir = tmp_path / "out" / "sweep"
    lines = (sweep_dir / "aggregate.csv").read_text().splitlines()
    assert lines[0] == "point,flux,transmitted,status"
    assert len(lines) == 4
    assert [l.split(",")[1] for l in lines[1:]] == ["0", "0.25", "0.5"]
    assert all(l.endswith(",ok") for l in lines[1:])
    for k in range(3):
        assert (sweep_dir / f"point-{k:04d}" / "summary.txt").exists()


def test_sweep_marks_failed_points(tmp_path, config_file):
    # a negative particle number fails fast inside the worker; the sweep
    # must record the failure and keep the good point
    rc = main(["sweep", "--config", str(config_file),
               "--set", "sweep.axis=n", "--set", "sweep.grid=1,-1",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    lines = (tmp_path / "out" / "sweep" / "aggregate.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].endswith(",ok")
    assert lines[2].endswith(",nan,error")
    assert (tmp_path / "out" / "sweep" / "point-0001" / "error.txt").exists()


def test_spectrum_gap_mode(tmp_path):
    rc = main(["spectrum", "--out", str(tmp_path / "out"),
               "--set", "spectrum.mode=gap", "--set", "spectrum.model=two-site",
               "--set", "spectrum.n=4", "--set", "spectrum.u=10",
               "--set", "spectrum.branch=bottom"])
    assert rc == 0
    text = (tmp_path / "out" / "gap.txt").read_text()
    gap = float([l for l in text.splitlines() if l.startswith("min_gap")][0].split("=")[1])
    assert abs(gap - 4.0) / 4.0 < 0.05


def test_spectrum_flow_mode(tmp_path):
    rc = main(["spectrum", "--out", str(tmp_path / "out"),
               "--set", "spectrum.mode=flow", "--set", "spectrum.model=three-loop",
               "--set", "spectrum.n=1", "--set", "spectrum.p0=60",
               "--set", "spectrum.phi_points=121"])
    assert rc == 0
    lines = (tmp_path / "out" / "flow.csv").read_text().splitlines()
    assert lines[0] == "phi,E_0,E_1,E_2"
    gaps = (tmp_path / "out" / "gaps.csv").read_text().splitlines()
    lowest = float(gaps[1].split(",")[1])
    assert abs(lowest - 2.0) < 0.15


def test_spectrum_scaling_mode(tmp_path):
    rc = main(["spectrum", "--out", str(tmp_path / "out"),
               "--set", "spectrum.mode=scaling", "--set", "spectrum.branch=top",
               "--set", "spectrum.n_list=2", "--set", "spectrum.u_grid=6:30:5"])
    assert rc == 0
    lines = (tmp_path / "out" / "scaling.csv").read_text().splitlines()
    slope = float(lines[1].split(",")[1])
    assert abs(slope + 1.0) < 0.2


def test_junction_single_and_grid(tmp_path):
    rc = main(["junction", "--out", str(tmp_path / "noon"),
               "--set", "junction.experiment=noon",
               "--set", "junction.n=2", "--set", "junction.u=0.5"])
    assert rc == 0
    text = (tmp_path / "noon" / "junction.txt").read_text()
    assert float(text.splitlines()[1].split("=")[1]) > 0.9

    rc = main(["junction", "--out", str(tmp_path / "grid"),
               "--set", "junction.experiment=noon",
               "--set", "junction.n_list=1,2", "--set", "junction.u_list=0.5"])
    assert rc == 0
    lines = (tmp_path / "grid" / "fidelity_grid.csv").read_text().splitlines()
    assert len(lines) == 3


def test_reproduce_unknown_id_lists_presets(tmp_path, capsys):
    rc = main(["reproduce", "doesnotexist", "--out", str(tmp_path)])
    assert rc == 1
    err = capsys.readouterr().err
    assert "fig2" in err and "figD" in err


def test_reproduce_runs_a_cheap_preset(tmp_path, capsys):
    rc = main(["reproduce", "fig7b", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc in (0, 3)
    assert out.count("fig7b") == 5
    assert (tmp_path / "fig7b" / "comparison.txt").exists()
    assert (tmp_path / "fig7b" / "fig7b_gaps.csv").exists()

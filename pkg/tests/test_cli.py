"""Command-line interface: configs, artifacts, exit codes, determinism."""
import json
import subprocess
import sys

import pytest

from geotomo.cli import ConfigError, load_config, main, parse_config_text


BASE_CFG = """
# tiny flat run
metric.kind = euclidean
domain.kind = circle
domain.R = 1.0
grid.n = 16
grid.n_beta = 32
grid.n_alpha = 16
solver.iterations = 1
io.figures = false
"""


def write_cfg(tmp_path, text=BASE_CFG, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(args):
    """In-process invocation; returns the exit code."""
    return main(args)


def test_parse_config_text():
    cfg = parse_config_text("a.b = 1\n# comment\n\nc = x y\n")
    assert cfg == {"a.b": "1", "c": "x y"}
    with pytest.raises(ConfigError):
        parse_config_text("novalue\n")


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.cfg"))


def test_phantom_command(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert run_cli(["phantom", "--config", cfg, "--out-dir", str(out)]) == 0
    assert (out / "phantom.csv").exists()


def test_geodesics_command(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG + "rays.count = 5\nrays.alpha = 0.3\n")
    out = tmp_path / "g"
    assert run_cli(["geodesics", "--config", cfg, "--out-dir", str(out)]) == 0
    lines = (out / "geodesics.csv").read_text().splitlines()
    assert lines[0] == "ray,beta,alpha,t,x,y,theta"
    assert len({ln.split(",")[0] for ln in lines[1:]}) == 5


def test_forward_and_invert_commands(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "f"
    assert run_cli(["forward", "--transform", "i0", "--config", cfg,
                    "--out-dir", str(out)]) == 0
    assert (out / "fanbeam.csv").exists()

    out2 = tmp_path / "i"
    assert run_cli(["invert", "--formula", "frc", "--config", cfg,
                    "--out-dir", str(out2)]) == 0
    for name in ("phantom.csv", "fanbeam.csv", "reconstruction.csv",
                 "pointwise_error.csv", "metrics.json"):
        assert (out2 / name).exists(), name
    metrics = json.loads((out2 / "metrics.json").read_text())
    assert metrics["experiment"] == "invert-frc"
    assert len(metrics["iterations"]) == 2   # iterations+1 entries
    it0 = metrics["iterations"][0]
    assert set(it0) == {"iteration", "rel_l2_field", "rel_l2_data"}


def test_invert_hrc_zero_iterations(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "h"
    assert run_cli(["invert", "--formula", "hrc", "--iterations", "0",
                    "--config", cfg, "--out-dir", str(out)]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert len(metrics["iterations"]) == 1


def test_figures_emitted_when_enabled(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG.replace("io.figures = false",
                                               "io.figures = true"))
    out = tmp_path / "fig"
    assert run_cli(["invert", "--formula", "frc", "--config", cfg,
                    "--out-dir", str(out)]) == 0
    for name in ("phantom.png", "fanbeam.png", "reconstruction.png",
                 "convergence.png"):
        assert (out / name).exists(), name


def test_usage_errors_exit_2(capsys):
    assert run_cli(["invert"]) == 2            # missing --formula
    assert run_cli(["no-such-command"]) == 2
    err = capsys.readouterr().err
    assert "error[usage]:" in err


def test_config_errors_exit_2(tmp_path, capsys):
    bad = write_cfg(tmp_path, "metric.kind = lens\n")  # lens needs metric.k
    assert run_cli(["geodesics", "--config", bad,
                    "--out-dir", str(tmp_path / "x1")]) == 2
    tiny = write_cfg(tmp_path, "grid.n = 4\n", name="tiny.cfg")
    assert run_cli(["phantom", "--config", tiny,
                    "--out-dir", str(tmp_path / "x2")]) == 2
    err = capsys.readouterr().err
    assert "error[config]:" in err


def test_starved_budget_exits_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE_CFG + "solver.max_steps = 4\n")
    out = tmp_path / "t"
    code = run_cli(["forward", "--transform", "i0", "--config", cfg,
                    "--out-dir", str(out)])
    assert code == 3
    assert "error[trapped]:" in capsys.readouterr().err


def test_terminator_sweep_small(tmp_path):
    cfg = write_cfg(tmp_path, """
terminator.n_beta = 24
terminator.n_alpha = 12
terminator.dt = 0.01
terminator.beta_cap = 8
""")
    out = tmp_path / "sweep"
    assert run_cli(["terminator", "--k-min", "0.2", "--k-max", "1.2",
                    "--k-steps", "2", "--config", cfg,
                    "--out-dir", str(out)]) == 0
    rows = (out / "terminator.csv").read_text().splitlines()
    assert rows[0] == "k,beta_ter"
    ks = [float(r.split(",")[0]) for r in rows[1:]]
    bts = [float(r.split(",")[1]) for r in rows[1:]]
    assert ks == [0.2, 1.2]
    assert bts[0] > 1.0 > bts[1]


def test_simplicity_command(tmp_path):
    cfg = write_cfg(tmp_path, """
metric.kind = const_pos
metric.R = 2.0
terminator.n_beta = 24
terminator.n_alpha = 12
terminator.dt = 0.01
""")
    out = tmp_path / "s"
    assert run_cli(["simplicity", "--beta", "1.0", "--config", cfg,
                    "--out-dir", str(out)]) == 0
    payload = json.loads((out / "simplicity.json").read_text())
    assert payload["free"] is True
    assert run_cli(["simplicity", "--beta", "8.0", "--config", cfg,
                    "--out-dir", str(out)]) == 0
    payload = json.loads((out / "simplicity.json").read_text())
    assert payload["free"] is False


def test_reproduce_smoke(tmp_path):
    out = tmp_path / "rep"
    assert run_cli(["reproduce", "--experiment", "cpc", "--n", "16",
                    "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "cpc"
    assert "metrics.json" in manifest["files"]
    assert manifest["metrics"]["final_rel_l2_field"] is not None
    assert manifest["metrics"]["iterations"] == 0
    assert manifest["metrics"]["aborted"] is False


def test_reproduce_terminator_sweep(tmp_path):
    cfg = write_cfg(tmp_path, """
terminator.n_beta = 24
terminator.n_alpha = 12
terminator.dt = 0.01
terminator.beta_cap = 8
io.figures = false
""")
    out = tmp_path / "repsweep"
    assert run_cli(["reproduce", "--experiment", "terminator-sweep",
                    "--k-list", "0.2,1.23", "--config", cfg,
                    "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    sweep = manifest["metrics"]["sweep"]
    assert [row["k"] for row in sweep] == [0.2, 1.23]
    assert manifest["metrics"]["simplicity_crossing_k"] == [0.2, 1.23]
    assert (out / "terminator.csv").exists()


def test_byte_identical_reruns_and_threads(tmp_path):
    cfg1 = write_cfg(tmp_path, BASE_CFG + "threads = 1\n", name="t1.cfg")
    cfg4 = write_cfg(tmp_path, BASE_CFG + "threads = 4\n", name="t4.cfg")
    outs = []
    for tag, cfg in (("a", cfg1), ("b", cfg1), ("c", cfg4)):
        out = tmp_path / f"det-{tag}"
        assert run_cli(["invert", "--formula", "frc", "--config", cfg,
                        "--out-dir", str(out)]) == 0
        outs.append(out)
    for name in ("reconstruction.csv", "fanbeam.csv", "metrics.json"):
        blobs = [(o / name).read_bytes() for o in outs]
        assert blobs[0] == blobs[1] == blobs[2], name


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "sub"
    proc = subprocess.run(
        [sys.executable, "-m", "geotomo.cli", "phantom", "--config", cfg,
         "--out-dir", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert (out / "phantom.csv").exists()

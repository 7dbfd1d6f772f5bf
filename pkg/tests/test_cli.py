import math
import os

import numpy as np
import pytest

from contact_hj.artifacts import read_config, read_xy_csv, write_grid_csv
from contact_hj.cli import (EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, RunConfig, build_parser,
                            build_config, main)
from contact_hj.model import make_grid
from contact_hj.reference import IntervalFamily, build_critical_solution

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
SMALL = ["--n", "256", "--delta", "2e-3", "--gate", "0.1"]


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_golden_critical_profile(tmp_path):
    g = make_grid(64)
    f = build_critical_solution(IntervalFamily(((math.pi, 2 * math.pi),)), g)
    path = write_grid_csv(str(tmp_path / "u.csv"), f)
    assert _read(path) == _read(os.path.join(GOLDEN, "critical_pi_2pi_n64.csv"))


def test_solve_writes_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", "--c", "1", *SMALL, "--out", str(out)]) == EXIT_OK
    names = sorted(os.listdir(out))
    assert names == ["residuals.txt", "solve.svg", "u_bar_minus.csv", "u_minus.csv", "u_plus.csv"]
    raw = _read(out / "u_bar_minus.csv")
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "x,u" and len(lines) == 257
    for line in lines[1:]:
        for field in line.split(","):
            mantissa = field.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(mantissa) <= 12
    x, u = read_xy_csv(out / "u_bar_minus.csv")
    assert np.max(np.abs(u - np.sin(x))) <= 0.05
    rep = read_config(out / "residuals.txt")
    assert rep["u_minus.converged"] == "True"
    svg = _read(out / "solve.svg").decode()
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert "href" not in svg and "<script" not in svg


def test_solve_divergence_exit(tmp_path):
    assert main(["solve", "--c", "-0.5", *SMALL, "--out", str(tmp_path)]) == EXIT_DIVERGED


@pytest.mark.parametrize("argv", [
    ["solve", "--n", "4"],
    ["solve", "--delta", "0"],
    ["solve", "--model", "nope"],
    ["solve", "--seed-function", "banana"],
    ["solve", "--bogus"],
])
def test_config_errors(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main([*argv, "--out", str(tmp_path)]))
    assert exc.value.code == EXIT_CONFIG


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# defaults for this run\nn = 512\nc=2\nt-max = 30\n")
    parser = build_parser()
    cfg = build_config(parser.parse_args(["solve", "--config", str(cfg_file), "--c", "0.8"]))
    assert cfg.n == 512 and cfg.c == 0.8 and cfg.t_max == 30.0
    assert cfg.delta == RunConfig().delta
    cfg_file.write_text("colour = red\n")
    assert main(["solve", "--config", str(cfg_file)]) == EXIT_CONFIG


def test_seed_from_file(tmp_path):
    g = make_grid(256)
    seed = tmp_path / "seed.csv"
    write_grid_csv(str(seed), build_critical_solution(IntervalFamily(), g))
    out = tmp_path / "o"
    argv = ["solve", "--c", "1", *SMALL, "--seed-function", f"file:{seed}", "--out", str(out)]
    assert main(argv) == EXIT_OK
    assert main(["solve", "--seed-function", f"file:{tmp_path / 'missing.csv'}",
                 "--out", str(out)]) == EXIT_CONFIG


def test_reproduce_figure_empty_list(tmp_path):
    out = tmp_path / "fig"
    assert main(["reproduce-figure", "--c-list", "", "--out", str(out)]) == EXIT_OK
    assert not out.exists()


def test_reproduce_figure_deterministic(tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        argv = ["reproduce-figure", "--no-semigroup", "--n", "512", "--c-list", "1,2",
                "--out", str(out)]
        assert main(argv) == EXIT_OK
        runs.append(out)
    files = sorted(p.name for p in runs[0].iterdir())
    assert "u0_c1.csv" in files and "figure.svg" in files
    for name in files:
        assert _read(runs[0] / name) == _read(runs[1] / name)
    x, u = read_xy_csv(runs[0] / "u0_c1.csv")
    assert np.max(np.abs(u - np.sin(x))) <= 1e-3


def test_reproduce_figure_rejects_nonpositive_level(tmp_path):
    assert main(["reproduce-figure", "--c-list", "1,-2", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_compare_files(tmp_path, capsys):
    g = make_grid(64)
    a = write_grid_csv(str(tmp_path / "a.csv"), build_critical_solution(IntervalFamily(), g))
    b = os.path.join(GOLDEN, "critical_pi_2pi_n64.csv")
    assert main(["compare", a, b]) == EXIT_OK
    val = float(capsys.readouterr().out.strip().split("=")[1])
    assert val == pytest.approx(0.358885005523, abs=1e-12)
    assert main(["compare", a]) == EXIT_CONFIG


def test_flow(tmp_path):
    assert main(["flow", "--c", "1", "--t-end", "2", "--stride", "10", "--out", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "flow.csv", delimiter=",", skiprows=1)
    assert data.shape == (201, 5)
    assert np.max(np.abs(data[:, 4] - 1.0)) <= 1e-8
    assert main(["flow", "--x0", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_critical_unit_lambda(tmp_path, capsys):
    argv = ["critical", "--model", "unit-lambda", "--n", "128", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    text = (tmp_path / "critical.txt").read_text()
    assert "unbounded_below=True" in text

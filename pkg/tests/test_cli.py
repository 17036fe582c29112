import os
import re

import numpy as np
import pytest

from axda import cli
from axda.bounds import tv_bound_lipschitz
from axda.exceptions import ConfigError, FormatError
from axda.io import read_csv, read_pgm, write_csv, write_pgm

SMALL = {
    "bounds": ["d=1,100", "n_rho=6"],
    "gaussian": ["d=5", "n_rho=4", "n_mc=200"],
    "lasso": ["n_grid=50", "hpd_step=1e-2", "rho_table=0.1,1"],
    "inpaint": ["size=8", "iters=60", "burnin=20", "n_alpha=5"],
    "logistic": ["n=1,10", "rho=1e-2,1e-1", "iters=50", "d=3"],
    "optimize": ["n=6", "mcem_iters=6", "n_mc=10", "max_outer=50"],
}


def _run(experiment, out, extra=(), config=None):
    argv = [experiment, "--out", str(out)]
    if config:
        argv += ["--config", str(config)]
    for item in list(SMALL[experiment]) + list(extra):
        argv += ["--set", item]
    return cli.main(argv)


def _read_all(out):
    return {name: (out / name).read_bytes() for name in sorted(os.listdir(out))}


@pytest.mark.parametrize("experiment", sorted(SMALL))
def test_rerun_is_byte_identical(experiment, tmp_path):
    assert _run(experiment, tmp_path / "a") == 0
    assert _run(experiment, tmp_path / "b") == 0
    a, b = _read_all(tmp_path / "a"), _read_all(tmp_path / "b")
    assert a == b
    for name in a:
        assert name.startswith(experiment + "_")


@pytest.mark.parametrize("experiment", sorted(SMALL))
def test_csv_schema(experiment, tmp_path):
    assert _run(experiment, tmp_path) == 0
    for name in os.listdir(tmp_path):
        if not name.endswith(".csv"):
            continue
        lines = (tmp_path / name).read_text().splitlines()
        assert len(lines) >= 2
        header = lines[0].split(",")
        assert all(re.fullmatch(r"[a-z_][a-z0-9_]*", h) for h in header)
        for line in lines[1:]:
            assert len(line.split(",")) == len(header)


def test_floats_use_17_significant_digits(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(path, ["a", "b", "c"], [[0.1, 3, 1 / 3]])
    row = path.read_text().splitlines()[1].split(",")
    assert row == ["0.10000000000000001", "3", "0.33333333333333331"]
    assert float(row[2]) == 1 / 3


def test_bounds_single_row(tmp_path):
    assert cli.main(["bounds", "--out", str(tmp_path), "--set", "d=1", "--set", "rho=1e-3"]) == 0
    header, rows = read_csv(tmp_path / "bounds_table.csv")
    assert header == ["d", "rho", "thm1", "cor1", "thm2", "cor2", "wasserstein"]
    assert rows.shape == (1, 7)
    assert rows[0, 2] == tv_bound_lipschitz([(1.0, 1e-3)], 1)
    assert rows[0, 2] == pytest.approx(1.5958e-3, rel=1e-3)


def test_bounds_tiny_rho_near_zero(tmp_path):
    assert cli.main(["bounds", "--out", str(tmp_path), "--set", "d=1,10", "--set", "rho=1e-12"]) == 0
    _, rows = read_csv(tmp_path / "bounds_table.csv")
    assert np.all(np.abs(rows[:, 2:]) < 1e-10)


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# comment\nd = 3   # trailing\nrho = 0.5\n\n")
    out = tmp_path / "o"
    assert cli.main(["bounds", "--config", str(cfg), "--set", "d=7", "--out", str(out)]) == 0
    _, rows = read_csv(out / "bounds_table.csv")
    assert rows[:, 0].tolist() == [7.0]
    assert rows[:, 1].tolist() == [0.5]


@pytest.mark.parametrize("overrides", [
    ["bogus=1"],
    ["rho=0,1"],
    ["rho=-1"],
    ["n_rho=x"],
    ["rho_min=1", "rho_max=0.1"],
    ["kernel=Gumbel"],
    ["noequals"],
])
def test_config_errors_exit_2(overrides, tmp_path, capsys):
    argv = ["bounds", "--out", str(tmp_path)]
    for item in overrides:
        argv += ["--set", item]
    assert cli.main(argv) == 2
    assert "configuration error" in capsys.readouterr().err


def test_bad_config_file_exit_2(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("just words\n")
    assert cli.main(["lasso", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert cli.main(["lasso", "--config", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 2


def test_non_pgm_image_exit_2(tmp_path):
    bad = tmp_path / "img.png"
    bad.write_bytes(b"\x89PNG\r\n\x1a\n")
    assert _run("inpaint", tmp_path / "o", [f"image={bad}"]) == 2


def test_numeric_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(cfg, out):
        raise np.linalg.LinAlgError("singular")
    monkeypatch.setitem(cli.RUNNERS, "bounds", boom)
    assert cli.main(["bounds", "--out", str(tmp_path)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_unknown_experiment_rejected():
    with pytest.raises(SystemExit) as exc:
        cli.main(["nope", "--out", "x"])
    assert exc.value.code == 2
    with pytest.raises(ConfigError):
        cli.build_config("nope", {})


def test_pgm_round_trip(tmp_path):
    img = np.arange(12).reshape(3, 4) / 255.0
    path = tmp_path / "a.pgm"
    write_pgm(path, img)
    assert path.read_bytes().startswith(b"P5\n4 3\n255\n")
    assert np.array_equal(read_pgm(path), img)


def test_ascii_pgm_with_comments(tmp_path):
    path = tmp_path / "b.pgm"
    path.write_bytes(b"P2\n# made by hand\n2 2\n# max\n4\n0 1\n2 4\n")
    assert np.array_equal(read_pgm(path), np.array([[0, 0.25], [0.5, 1.0]]))


@pytest.mark.parametrize("payload", [b"P6\n1 1\n255\n\x00\x00\x00", b"P5\n4 4\n255\n\x00", b"P5\n0 2\n255\n"])
def test_malformed_pgm(payload, tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(payload)
    with pytest.raises(FormatError):
        read_pgm(path)


def test_inpaint_reads_pgm_input(tmp_path):
    img = np.zeros((6, 6))
    img[2:5, 1:4] = 1.0
    src = tmp_path / "in.pgm"
    write_pgm(src, img)
    out = tmp_path / "o"
    assert _run("inpaint", out, [f"image={src}"]) == 0
    assert np.array_equal(read_pgm(out / "inpaint_truth.pgm"), img)
    _, mmse = read_csv(out / "inpaint_mmse.csv")
    assert mmse.shape == (6, 6)
    # 36 pixels is within the dense-oracle size
    assert (out / "inpaint_bias.csv").exists()


def test_lasso_outputs_sandwich(tmp_path):
    assert _run("lasso", tmp_path) == 0
    header, rows = read_csv(tmp_path / "lasso_curves.csv")
    col = {h: i for i, h in enumerate(header)}
    assert np.all(rows[:, col["g_plus_lower"]] <= rows[:, col["g_rho"]] + 1e-12)
    assert np.all(rows[:, col["g_rho"]] <= rows[:, col["g_plus_upper"]] + 1e-12)
    assert sorted(set(rows[:, 0])) == [0.01, 0.1, 1.0]


def test_gaussian_rows_dominated(tmp_path):
    assert _run("gaussian", tmp_path, ["n_mc=2000"]) == 0
    header, rows = read_csv(tmp_path / "gaussian_bounds.csv")
    col = {h: i for i, h in enumerate(header)}
    assert np.all(rows[:, col["w2_exact"]] <= rows[:, col["w2_bound"]])
    assert np.all(rows[:, col["tv_mc"]] <= rows[:, col["tv_bound"]] + 3 * rows[:, col["tv_mc_se"]])


def test_seed_changes_output(tmp_path):
    assert _run("inpaint", tmp_path / "a", ["seed=1"]) == 0
    assert _run("inpaint", tmp_path / "b", ["seed=2"]) == 0
    a = (tmp_path / "a" / "inpaint_mmse.csv").read_bytes()
    b = (tmp_path / "b" / "inpaint_mmse.csv").read_bytes()
    assert a != b

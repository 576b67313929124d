import numpy as np
import pytest

from specpart.cli import main, run
from specpart.config import (PRESETS, config_echo, parse_config, validate_text)

SMALL_RUN = """\
[domain]
type = square
resolution = 6

[partition]
group_sizes = 1, 1

[functional]
outer = sum
inner = sum, sum

[solver]
scheme = fixed-point
beta0 = 400
beta_multiplier = 4
beta_stages = 4
max_iterations = 40
seed = 11

[output]
directory = {outdir}
"""

ARTIFACTS = [
    "mesh.vtk", "fields.vtk", "trace.csv", "final_state.npz",
    "eigenvalues_group0.csv", "eigenvalues_group1.csv",
    "report_eigenvalues.csv", "report_residuals.csv",
    "partition.pgm", "masks.npz", "partition.png", "fields.png",
    "trace.png", "manifest.txt",
]


def test_presets_parse():
    for name, text in PRESETS.items():
        cfg = parse_config(text)
        assert cfg.functional.m == len(cfg.functional.group_sizes)
        assert validate_text(text) == []


def test_validate_flags_bad_pnorm():
    text = PRESETS["figure-1"].replace("inner = sum, sum",
                                       "inner = pnorm:0, sum")
    issues = validate_text(text)
    assert any("positive" in i for i in issues)


def test_validate_flags_small_exponent():
    text = PRESETS["figure-1"].replace("scheme = fixed-point",
                                       "scheme = projected-gradient\nq = 0.4")
    issues = validate_text(text)
    assert any("1/2" in i for i in issues)


def test_validate_flags_group_count_mismatch():
    text = PRESETS["figure-1"].replace("group_sizes = 2, 2",
                                       "group_sizes = 2, 2, 2")
    issues = validate_text(text)
    assert issues


def test_validate_requires_seed_for_random_init():
    text = PRESETS["figure-1"].replace("seed = 7\n", "")
    issues = validate_text(text)
    assert any("seed" in i for i in issues)


def test_parse_error_is_actionable():
    with pytest.raises(ValueError, match="resolution"):
        parse_config("[domain]\ntype = disk\nresolution = tiny\n")


def test_config_echo_reparses():
    cfg = parse_config(PRESETS["figure-2"])
    again = parse_config(config_echo(cfg))
    assert again.functional == cfg.functional
    assert again.solver == cfg.solver
    assert again.resolution == cfg.resolution


def test_cli_validate_exit_codes(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(PRESETS["square-smoke"])
    assert main([str(good), "--validate"]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text(PRESETS["square-smoke"].replace("resolution = 8",
                                                   "resolution = 1"))
    assert main([str(bad), "--validate"]) == 2


def test_cli_requires_some_config():
    with pytest.raises(SystemExit):
        main([])


def test_cli_run_produces_artifacts(tmp_path, capsys):
    cfg_path = tmp_path / "run.ini"
    outdir = tmp_path / "out"
    cfg_path.write_text(SMALL_RUN.format(outdir=outdir))
    assert main([str(cfg_path)]) == 0
    for name in ARTIFACTS:
        assert (outdir / name).exists(), name
    assert (outdir / "checkpoint_stage_0.npz").exists()
    manifest = (outdir / "manifest.txt").read_text()
    assert "seed = 11" in manifest
    assert "wall_time_seconds" in manifest
    out = capsys.readouterr().out
    assert "stage" in out and "beta" in out  # per-stage log lines


def test_cli_seed_and_output_overrides(tmp_path):
    cfg_path = tmp_path / "run.ini"
    outdir = tmp_path / "somewhere_else"
    cfg_path.write_text(SMALL_RUN.format(outdir=tmp_path / "ignored"))
    assert main([str(cfg_path), "--seed", "5", "--output", str(outdir)]) == 0
    manifest = (outdir / "manifest.txt").read_text()
    assert "seed = 5" in manifest


def test_identical_runs_byte_identical_csvs(tmp_path):
    cfg_path = tmp_path / "run.ini"
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    cfg_path.write_text(SMALL_RUN.format(outdir=out1))
    assert main([str(cfg_path)]) == 0
    assert main([str(cfg_path), "--output", str(out2)]) == 0
    for name in ["trace.csv", "eigenvalues_group0.csv", "eigenvalues_group1.csv",
                 "report_eigenvalues.csv", "report_residuals.csv"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    assert (out1 / "partition.pgm").read_bytes() == (out2 / "partition.pgm").read_bytes()

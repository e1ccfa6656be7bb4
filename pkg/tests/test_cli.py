"""Subcommand behavior through run_command: outputs, artifacts, exit codes."""

import json
import os
import re

import numpy as np
import pytest

from minsurf.cli import run_command
from minsurf.slices import read_slice_csv
from minsurf.training import load_checkpoint

TINY_CFG = """\
d = 2
domain = unit
boundary = radial_sine_2d
w_bdry = 3
learning_rate = 0.003
epochs = 40
n_interior = 120
per_edge = 30
log_every = 10
"""


@pytest.fixture()
def run(capsys, monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("MINSURF_OUT", raising=False)

    def call(args):
        code = run_command(args)
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    call.dir = tmp_path
    return call


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """One tiny trained run shared by every checkpoint-consuming test."""
    work = tmp_path_factory.mktemp("trained")
    cfg = work / "tiny.cfg"
    cfg.write_text(TINY_CFG)
    cwd = os.getcwd()
    os.chdir(work)
    try:
        code = run_command(["train", "--config", "tiny.cfg", "--quiet"])
    finally:
        os.chdir(cwd)
    assert code == 0
    return work


def test_list_boundaries(run):
    code, out, err = run(["list-boundaries"])
    assert code == 0 and err == ""
    assert "scherk" in out and "radial_sine_4d" in out
    assert out.count("\n") >= 6


def test_eval_g(run):
    code, out, _ = run(["eval-g", "--boundary", "scherk", "--point", "1.5,0"])
    assert code == 0
    assert abs(float(out) - float(np.log(1 / np.cos(1.5)))) < 1e-12


def test_eval_g_bad_point(run):
    code, out, err = run(["eval-g", "--boundary", "scherk", "--point", "1.5"])
    assert code == 1
    assert "error[config]" in err


def test_corners_reports_mismatches(run):
    code, out, _ = run(["corners", "--boundary", "four_sided_2d"])
    assert code == 0
    assert "MISMATCH" in out and "2 of 4" in out


def test_corners_consistent(run):
    code, out, _ = run(["corners", "--boundary", "scherk"])
    assert code == 0 and "consistent" in out


def test_residual_check_analytic(run):
    code, out, _ = run(["residual-check", "--analytic", "scherk", "--n", "200"])
    assert code == 0
    maxline = [l for l in out.splitlines() if "max |r|" in l][0]
    assert float(maxline.split("=")[1]) < 1e-6


def test_grad_check_sampled(run):
    code, out, _ = run(["grad-check", "--points", "3", "--param-sample", "40"])
    assert code == 0
    assert "below tolerance" in out


def test_train_writes_artifacts(run):
    (run.dir / "t.cfg").write_text(TINY_CFG.replace("epochs = 40", "epochs = 20"))
    code, out, _ = run(["train", "--config", "t.cfg"])
    assert code == 0
    assert (run.dir / "t-checkpoint.txt").exists()
    assert (run.dir / "t-history.json").exists()
    assert re.search(r"epoch\s+20\b", out)  # progress lines on by default
    hist = json.loads((run.dir / "t-history.json").read_text())
    assert hist["schema_version"] == 1
    assert [r["epoch"] for r in hist["records"]] == [0, 10, 20]


def test_train_history_epochs(trained):
    hist = json.loads((trained / "tiny-history.json").read_text())
    assert [r["epoch"] for r in hist["records"]] == [0, 10, 20, 30, 40]
    assert all("seconds" in r for r in hist["records"])


def test_slice_and_svg(run, trained):
    ck = str(trained / "tiny-checkpoint.txt")
    code, out, _ = run(["slice", "--checkpoint", ck, "--svg", "tiny.svg"])
    assert code == 0
    csv_name = [l.split()[-1] for l in out.splitlines()
                if l.startswith("wrote") and l.endswith(".csv")][0]
    grid = read_slice_csv(run.dir / csv_name)
    assert grid.values.shape == (50, 50)
    assert grid.axes == ("x1", "x2")
    svg = (run.dir / "tiny.svg").read_text()
    assert svg.startswith("<svg") and "x1" in svg


def test_slice_fix_outside_domain(run, trained):
    ck = str(trained / "tiny-checkpoint.txt")
    code, _, err = run(["slice", "--checkpoint", ck, "--fix", "x1=3"])
    assert code == 1
    assert "outside" in err


def test_residual_check_on_checkpoint(run, trained):
    ck = str(trained / "tiny-checkpoint.txt")
    code, out, _ = run(["residual-check", "--checkpoint", ck, "--n", "100"])
    assert code == 0 and "max |r|" in out


def test_oracle_compare(run, trained):
    ck = str(trained / "tiny-checkpoint.txt")
    code, out, _ = run(["oracle-compare", "--checkpoint", ck, "--n", "17"])
    assert code == 0
    assert "max abs" in out


def test_resume_doubles_epochs(run, trained):
    cfg = run.dir / "tiny.cfg"
    cfg.write_text(TINY_CFG)
    ck = run.dir / "tiny-checkpoint.txt"
    ck.write_bytes((trained / "tiny-checkpoint.txt").read_bytes())
    code, _, _ = run(["train", "--config", "tiny.cfg", "--quiet",
                      "--resume", str(ck), "--epochs", "80"])
    assert code == 0
    hist = json.loads((run.dir / "tiny-history.json").read_text())
    assert hist["records"][-1]["epoch"] == 80
    assert load_checkpoint(ck).epoch == 80


def test_out_dir_flag(run, trained):
    (run.dir / "sub").mkdir()
    ck = str(trained / "tiny-checkpoint.txt")
    code, out, _ = run(["slice", "--checkpoint", ck, "--out", "sub"])
    assert code == 0
    assert any((run.dir / "sub").iterdir())


def test_out_dir_env(run, trained, monkeypatch):
    target = run.dir / "envout"
    target.mkdir()
    monkeypatch.setenv("MINSURF_OUT", str(target))
    ck = str(trained / "tiny-checkpoint.txt")
    code, _, _ = run(["slice", "--checkpoint", ck])
    assert code == 0
    assert any(target.iterdir())


@pytest.mark.parametrize("args,code", [
    (["train", "--preset", "nope"], 1),
    (["train"], 1),                                  # neither preset nor config
    (["slice", "--checkpoint", "missing.txt"], 1),
    (["bogus-command"], 1),
    (["grad-check", "--step", "0.5"], 2),            # structural misuse
])
def test_error_exit_codes(run, args, code):
    got, _, err = run(args)
    assert got == code, err
    assert err.startswith("error[")


def test_help_exits_zero(run):
    code, out, err = run(["--help"])
    assert code == 0
    assert "usage" in out or "usage" in err


def test_train_requires_exactly_one_source(run):
    (run.dir / "c.cfg").write_text(TINY_CFG)
    code, _, err = run(["train", "--config", "c.cfg", "--preset", "2d-2"])
    assert code == 1
    assert "error[config]" in err

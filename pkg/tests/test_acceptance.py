"""End-to-end checks of the guarantees the package advertises.

Each test prints one labeled PASS/FAIL line with the measured numbers, so a
full run doubles as an acceptance report (clearest with ``pytest -s``).  The
tests that train real networks take minutes each and are marked ``slow``;
``pytest -m "not slow"`` runs just the quick oracle and diagnostic checks.

Trained runs are shared through module-scoped fixtures: the ripple preset's
seed sweep also feeds the area-minimality comparison, and the straight-through
3-D run is reused by both determinism checks and the qualitative gate.
"""

import re
import time
from dataclasses import replace

import numpy as np
import pytest

from minsurf import pde
from minsurf.boundary import lookup_builtin
from minsurf.cli import run_command
from minsurf.fdm import compare_model_to_grid, solve_fdm
from minsurf.models import GraphFunctionModel, NetworkModel, scherk_solution
from minsurf.sampling import (BoxDomain, check_corner_consistency,
                              enumerate_edges, sample_boundary, sample_interior)
from minsurf.slices import (SliceSpec, evaluate_slice, export_history_json,
                            export_slice_csv, read_slice_csv)
from minsurf.training import load_preset, run_training, train


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n  {label}: {'PASS' if ok else 'FAIL'}  ({detail})")
        assert ok, f"{label}: {detail}"
    return emit


# -- shared training runs --------------------------------------------------


@pytest.fixture(scope="module")
def ripple_runs():
    cfg = load_preset("2d-2")
    return {seed: run_training(replace(cfg, seed=seed)) for seed in (0, 1, 2)}


@pytest.fixture(scope="module")
def scherk_run():
    return run_training(load_preset("2d-1"))


@pytest.fixture(scope="module")
def trig3d_run():
    return run_training(load_preset("3d-2"))


@pytest.fixture(scope="module")
def scherk_grid65():
    domain = BoxDomain.cube(-1.3, 1.3, 2)
    g = lookup_builtin("scherk", domain=domain)
    t0 = time.perf_counter()
    grid = solve_fdm(g, domain, 65)
    return grid, time.perf_counter() - t0


# -- oracle and diagnostic checks ------------------------------------------


def test_scherk_residual_vanishes(report, capsys):
    t0 = time.perf_counter()
    code = run_command(["residual-check", "--analytic", "scherk"])
    elapsed = time.perf_counter() - t0
    out = capsys.readouterr().out
    worst = float(re.search(r"max \|r\|\s*=\s*(\S+)", out).group(1))
    report("exact-solution residual, 1000 points",
           code == 0 and worst < 1e-6 and elapsed < 10,
           f"max |r| = {worst:.2e}, {elapsed:.1f}s")


def test_grid_oracle_accuracy_and_refinement(report, scherk_grid65):
    grid65, t65 = scherk_grid65
    domain = grid65.domain
    g = lookup_builtin("scherk", domain=domain)
    t0 = time.perf_counter()
    grid33 = solve_fdm(g, domain, 33)
    t33 = time.perf_counter() - t0
    exact = scherk_solution()
    e65 = compare_model_to_grid(exact, grid65).max_abs
    e33 = compare_model_to_grid(exact, grid33).max_abs
    ratio = e33 / e65
    # the 5-point scheme is second order: halving h should shrink the error
    # by about 4
    report("grid oracle accuracy and refinement",
           grid65.converged and grid33.converged and e65 < 5e-3
           and 3.0 <= ratio <= 5.0 and t65 + t33 < 30,
           f"err(65) = {e65:.2e}, err(33)/err(65) = {ratio:.2f}, "
           f"{t65 + t33:.1f}s")


def test_wireframe_point_totals(report):
    expected = {2: (4, 800), 3: (12, 2400), 4: (32, 6400)}
    observed = {}
    for d, (edges, total) in expected.items():
        domain = BoxDomain.unit(d)
        pts = sample_boundary(domain, "wireframe", 200)
        observed[d] = (len(enumerate_edges(domain)), pts.shape[0])
        assert pts.shape[1] == d
    report("wireframe edge and point totals", observed == expected,
           ", ".join(f"d={d}: {e} edges / {n} points"
                     for d, (e, n) in sorted(observed.items())))


def test_corner_mismatch_detection(report, capsys):
    boundary = lookup_builtin("four_sided_2d")
    rep = check_corner_consistency(boundary, boundary.domain)
    spread = {entry.corner: entry.mismatch for entry in rep.entries}
    magnitudes_right = (abs(spread[(0.0, 1.0)] - 1.0) < 1e-9
                        and abs(spread[(1.0, 0.0)] - 1.0) < 1e-9
                        and spread[(0.0, 0.0)] < 1e-9
                        and spread[(1.0, 1.0)] < 1e-9)
    code = run_command(["corners", "--boundary", "four_sided_2d"])
    out = capsys.readouterr().out
    report("corner mismatch detection",
           magnitudes_right and code == 0 and "2 of 4 corners mismatched" in out,
           "spread 1.0 at (0,1) and (1,0), clean at (0,0) and (1,1)")


def test_energy_estimate_error_scaling(report):
    u = scherk_solution()
    domain = BoxDomain.cube(-1.3, 1.3, 2)
    sizes = [100, 1_000, 10_000, 100_000]
    replicates = 40
    errors = []
    seed = 9000
    for n in sizes:
        draws = []
        for _ in range(replicates):
            draws.append(pde.energy(sample_interior(domain, n, seed), u, domain))
            seed += 1
        errors.append(np.std(draws, ddof=1))
    slope = float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])
    report("energy estimator error scaling",
           abs(slope + 0.5) <= 0.1,
           f"log-log slope {slope:.3f} over N = 1e2..1e5, {replicates} draws each")


@pytest.mark.slow
def test_derivatives_match_finite_differences(report, capsys):
    t0 = time.perf_counter()
    code = run_command(["grad-check"])  # 20 points, step 1e-4, every parameter
    elapsed = time.perf_counter() - t0
    out = capsys.readouterr().out
    grad = float(re.search(r"gradient max rel err = (\S+)", out).group(1))
    hess = float(re.search(r"hessian\s+max rel err = (\S+)", out).group(1))
    par = float(re.search(r"parameter gradient.*\n\s*max rel err = (\S+)", out).group(1))
    report("derivatives vs central differences",
           code == 0 and max(grad, hess, par) < 1e-4 and elapsed < 60,
           f"gradient {grad:.1e}, hessian {hess:.1e}, parameters {par:.1e}, "
           f"{elapsed:.0f}s")


# -- trained-model checks --------------------------------------------------


@pytest.mark.slow
def test_ripple_training_hits_loss_targets(report, ripple_runs):
    finals = {seed: run.history.final for seed, run in ripple_runs.items()}
    hits = [seed for seed, fin in finals.items()
            if fin.boundary < 0.04 and fin.interior < 0.10]
    detail = "; ".join(
        f"seed {seed}: boundary {fin.boundary:.3f}, interior {fin.interior:.3f}"
        for seed, fin in sorted(finals.items()))
    report("ripple preset loss targets", len(hits) >= 2,
           f"{len(hits)}/3 seeds under 0.04 / 0.10 -- {detail}")


@pytest.mark.slow
def test_trained_scherk_matches_both_oracles(report, scherk_run, scherk_grid65):
    model = NetworkModel(scherk_run.params)
    grid65, _ = scherk_grid65
    # both oracles live on the same square, well inside the log(cos) poles
    lo, hi = grid65.domain.lower[0], grid65.domain.upper[0]
    nodes = np.linspace(lo, hi, 52)[1:-1]
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel()])
    analytic_err = float(np.max(np.abs(
        model.values(points) - scherk_solution().values(points))))
    grid_err = compare_model_to_grid(model, grid65).max_abs
    report("trained scherk vs analytic and grid oracles",
           analytic_err < 0.05 and grid_err < 0.06,
           f"max err {analytic_err:.3f} analytic (50x50), "
           f"{grid_err:.3f} grid (65x65)")


@pytest.mark.slow
def test_scherk_training_drops_both_terms_tenfold(report, scherk_run):
    first = scherk_run.history.records[0]
    last = scherk_run.history.final
    ok = (last.interior < 0.1 * first.interior
          and last.boundary < 0.1 * first.boundary)
    report("scherk loss terms drop tenfold", ok,
           f"interior {first.interior:.4f} -> {last.interior:.4f}, "
           f"boundary {first.boundary:.4f} -> {last.boundary:.4f}")


@pytest.mark.slow
def test_same_seed_runs_have_identical_history(report, trig3d_run, tmp_path):
    _, second_history = train(load_preset("3d-2"))
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    export_history_json(trig3d_run.history, first, include_timing=False)
    export_history_json(second_history, second, include_timing=False)
    identical = first.read_bytes() == second.read_bytes()
    report("same-seed history determinism", identical,
           f"{len(trig3d_run.history.records)} records, byte-identical exports")


@pytest.mark.slow
def test_resume_matches_straight_run(report, trig3d_run):
    cfg = load_preset("3d-2")
    half = run_training(replace(cfg, epochs=1000))
    resumed = run_training(cfg, start=half.checkpoint())
    pa, pb = trig3d_run.params, resumed.params
    params_equal = (
        all(np.array_equal(a, b) for a, b in zip(pa.weights, pb.weights))
        and all(np.array_equal(a, b) for a, b in zip(pa.biases, pb.biases)))
    joined = half.history.records + resumed.history.records
    straight = trig3d_run.history.records
    history_equal = len(joined) == len(straight) and all(
        r.epoch == s.epoch and r.interior == s.interior
        and r.boundary == s.boundary and r.total == s.total
        for r, s in zip(joined, straight))
    report("checkpoint resume equivalence", params_equal and history_equal,
           "restart at epoch 1000 of 2000: parameters and history bitwise equal"
           if params_equal and history_equal else
           f"params_equal={params_equal}, history_equal={history_equal}")


@pytest.mark.slow
def test_trained_surface_beats_boundary_extension(report, ripple_runs):
    run = ripple_runs[0]
    points = run.samples.interior
    domain = run.config.domain
    trained = pde.energy(points, NetworkModel(run.params), domain)
    g = lookup_builtin("radial_sine_2d")
    extension = GraphFunctionModel(
        2, lambda xs: g.expr.to_tape(xs[0].tape, xs), name="boundary extension")
    foil = pde.energy(points, extension, domain)
    report("trained surface beats boundary extension",
           trained < foil,
           f"area {trained:.4f} < {foil:.4f} on the training sample set")


SLICE_SETTINGS = {
    "3d-1": [{0: 0.0}],
    "3d-2": [{0: 0.0}, {1: 0.0}, {2: 0.0}],
    "4d-1": [{0: 0.0, 3: 0.0}],
}


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["3d-1", "3d-2", "4d-1"])
def test_higher_dimensional_presets_train_and_slice(report, preset, trig3d_run,
                                                    tmp_path):
    run = trig3d_run if preset == "3d-2" else run_training(load_preset(preset))
    records = run.history.records
    assert records[0].epoch == 0
    finite = all(np.isfinite([r.interior, r.boundary, r.total]).all()
                 for r in records)
    halved = records[-1].total < 0.5 * records[0].total
    model = NetworkModel(run.params)
    slices_ok = True
    for fixed in SLICE_SETTINGS[preset]:
        grid = evaluate_slice(model, SliceSpec(domain=run.config.domain,
                                               fixed=fixed))
        path = tmp_path / ("-".join(f"x{axis + 1}" for axis in fixed) + ".csv")
        export_slice_csv(grid, path)
        back = read_slice_csv(path)
        slices_ok = (slices_ok and back.values.shape == (50, 50)
                     and bool(np.isfinite(back.values).all()))
    report(f"{preset} trains and slices", finite and halved and slices_ok,
           f"total {records[0].total:.3f} -> {records[-1].total:.3f}, "
           f"{len(SLICE_SETTINGS[preset])} slice export(s)")

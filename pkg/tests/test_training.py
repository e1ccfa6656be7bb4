"""Config parsing, presets, the training loop, checkpoints, and resume."""

import json
from dataclasses import replace

import numpy as np
import pytest

from minsurf.boundary import SourceTerm, lookup_builtin
from minsurf.errors import (CheckpointError, ConfigurationError,
                            TrainingDiverged)
from minsurf.sampling import BoxDomain
from minsurf.training import (Checkpoint, ExperimentConfig, TrainingHistory,
                              HistoryRecord, config_hash, load_checkpoint,
                              load_preset, parse_config, preset_names,
                              read_config, run_training, save_checkpoint,
                              serialize_config, train, write_config)

# small but real: every run below trains an actual canonical-width network
TINY_KW = dict(n_interior=50, per_edge=20, log_every=50, seed=3)


def tiny_config(**over):
    base = dict(d=2, boundary=lookup_builtin("radial_sine_2d"), w_bdry=1.0,
                learning_rate=0.01, epochs=200, **TINY_KW)
    base.update(over)
    return ExperimentConfig(**base)


# -- config ----------------------------------------------------------------


def test_preset_registry():
    assert preset_names() == ["2d-1", "2d-1-long", "2d-2", "2d-3",
                              "3d-1", "3d-2", "3d-3", "4d-1"]


@pytest.mark.parametrize("name", preset_names())
def test_presets_round_trip(name):
    cfg = load_preset(name)
    again = parse_config(serialize_config(cfg))
    assert serialize_config(again) == serialize_config(cfg)


def test_preset_values_spot_checks():
    c21 = load_preset("2d-1")
    assert c21.domain == BoxDomain.cube(-1.5, 1.5, 2)
    assert c21.boundary.name == "scherk"
    assert c21.w_bdry == 0.3 and c21.epochs == 5000
    assert load_preset("2d-1-long").epochs == 20000
    c22 = load_preset("2d-2")
    assert (c22.w_bdry, c22.learning_rate, c22.epochs) == (3.0, 0.003, 1000)
    assert c22.domain == BoxDomain.unit(2)
    assert load_preset("2d-3").w_bdry == 5.0
    assert load_preset("3d-1").boundary.name == "abs_cos_3d"
    assert load_preset("3d-2").w_bdry == 1.5
    assert load_preset("3d-3").learning_rate == 0.0001
    c41 = load_preset("4d-1")
    assert c41.d == 4 and c41.boundary.name == "radial_sine_4d"
    for name in preset_names():
        cfg = load_preset(name)
        assert cfg.n_interior == 1000 and cfg.per_edge == 200
        assert cfg.w_pde == 1.0 and cfg.f.value == 0.0
        assert cfg.boundary_mode == "wireframe"


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        load_preset("2d-9")


def test_piecewise_config_round_trip():
    text = """
d = 2
domain = unit
boundary[x1=0] = cos(2*pi*x1) + cos(2*pi*x2)
boundary[x1=1] = 1
boundary[x2=0] = x1
boundary[x2=1] = x1*x2
w_bdry = 5
learning_rate = 0.003
epochs = 10
"""
    cfg = parse_config(text)
    assert cfg.boundary.is_piecewise and len(cfg.boundary.pieces) == 4
    again = parse_config(serialize_config(cfg))
    assert serialize_config(again) == serialize_config(cfg)


def test_expression_boundary_defaults_to_unit_domain():
    cfg = parse_config("d = 3\nboundary = sin(x1) + x2*x3\n"
                       "w_bdry = 1\nlearning_rate = 0.01\nepochs = 5")
    assert cfg.domain == BoxDomain.unit(3)
    assert cfg.boundary.expr is not None


def test_config_comments_and_blank_lines():
    cfg = parse_config("# comment\n\nd = 2\nboundary = scherk # trailing\n"
                       "w_bdry = 1\nlearning_rate = 0.01\nepochs = 5\n")
    assert cfg.boundary.name == "scherk"


@pytest.mark.parametrize("bad", [
    "d = 5\nboundary = scherk\nw_bdry = 1\nlearning_rate = .1\nepochs = 1",
    "d = 2\nboundary = nope\nw_bdry = 1\nlearning_rate = .1\nepochs = 1",
    "d = 2\nboundary = scherk\nw_bdry = 1\nlearning_rate = .1\nepochs = 1\nbogus = 3",
    "d = 2\nboundary = scherk\nw_bdry = 1\nlearning_rate = .1",
    "d = 2\nboundary = scherk\nboundary[x1=-1.5] = 1\nw_bdry = 1\nlearning_rate = .1\nepochs = 1",
    "d = 2\nboundary = trig_sum_3d\nw_bdry = 1\nlearning_rate = .1\nepochs = 1",
    "d = 2\nboundary = sin(\nw_bdry = 1\nlearning_rate = .1\nepochs = 1",
    "d = 2\nd = 2\nboundary = scherk\nw_bdry = 1\nlearning_rate = .1\nepochs = 1",
    "d = 2\nboundary = scherk\nw_bdry = 1\nlearning_rate = .1\nepochs = 0",
    "d = 2\nboundary = scherk\nw_bdry = 1\nlearning_rate = .1\nepochs = 1\nresample = maybe",
])
def test_config_rejections(bad):
    with pytest.raises(ConfigurationError):
        parse_config(bad)


def test_resample_flag_round_trips():
    cfg = tiny_config(resample=True)
    assert "resample = true" in serialize_config(cfg)
    assert parse_config(serialize_config(cfg)).resample is True
    assert parse_config(serialize_config(tiny_config())).resample is False


def test_config_file_round_trip(tmp_path):
    cfg = tiny_config()
    path = tmp_path / "run.cfg"
    write_config(cfg, path)
    again = read_config(path)
    assert serialize_config(again) == serialize_config(cfg)


def test_config_hash_tracks_content():
    cfg = tiny_config()
    h = config_hash(cfg)
    assert len(h) == 12 and int(h, 16) >= 0
    assert config_hash(replace(cfg, seed=4)) != h
    assert config_hash(tiny_config()) == h


def test_experiment_config_validation():
    with pytest.raises(ConfigurationError):
        tiny_config(epochs=-1)
    with pytest.raises(ConfigurationError):
        tiny_config(learning_rate=0.0)
    with pytest.raises(ConfigurationError):
        tiny_config(w_bdry=-2.0)
    with pytest.raises(ConfigurationError):
        tiny_config(boundary_mode="shell")
    with pytest.raises(ConfigurationError):
        tiny_config(d=3)  # boundary is 2-d
    with pytest.raises(ConfigurationError):
        tiny_config(domain=BoxDomain.unit(3))


# -- the loop --------------------------------------------------------------


@pytest.fixture(scope="module")
def short_run():
    return run_training(tiny_config())


def test_constant_boundary_term_decreases():
    # flat frame, homogeneous equation: the boundary misfit must come down
    cfg = parse_config("d = 2\nboundary = 2\nw_bdry = 1\nlearning_rate = 0.01\n"
                       "epochs = 200\nn_interior = 50\nper_edge = 20\nlog_every = 200")
    _, history = train(cfg)
    assert history.records[-1].boundary < history.records[0].boundary


def test_history_schedule_and_identity(short_run):
    recs = short_run.history.records
    assert [r.epoch for r in recs] == [0, 50, 100, 150, 200]
    for r in recs:
        assert abs(r.total - (r.interior * 1.0 + r.boundary * 1.0)) \
            < 1e-12 * max(1.0, r.total)
    secs = [r.seconds for r in recs]
    assert all(b >= a for a, b in zip(secs, secs[1:]))
    assert short_run.history.final.epoch == 200


def test_training_determinism(short_run):
    again = run_training(tiny_config())
    assert short_run.params.equal(again.params)
    for a, b in zip(short_run.history.records, again.history.records):
        assert (a.epoch, a.interior, a.boundary, a.total) \
            == (b.epoch, b.interior, b.boundary, b.total)


def test_train_returns_params_and_history():
    params, history = train(tiny_config(epochs=3, log_every=1))
    assert params.input_dim == 2
    # epoch 1 never appears: its slot carries the pre-step epoch-0 baseline
    assert [r.epoch for r in history.records] == [0, 2, 3]


def test_log_raw_keeps_every_epoch():
    _, history = train(tiny_config(epochs=7, log_raw=True))
    # epoch 0 is the pre-step baseline; epoch 1 seeds the first mean window
    assert [r.epoch for r in history.records] == [0, 2, 3, 4, 5, 6, 7]


def test_on_log_callback_sees_records():
    seen = []
    run_training(tiny_config(epochs=4, log_every=2), on_log=seen.append)
    assert [r.epoch for r in seen] == [0, 2, 4]


def test_resampling_changes_the_draws_but_stays_deterministic(short_run):
    cfg = tiny_config(resample=True)
    fresh = run_training(cfg)
    # different collocation sets from the fixed-sample run, same everything
    # on a rerun
    assert not np.array_equal(fresh.samples.interior, short_run.samples.interior)
    assert not fresh.params.equal(short_run.params)
    again = run_training(cfg)
    assert fresh.params.equal(again.params)
    assert np.array_equal(fresh.samples.interior, again.samples.interior)
    for a, b in zip(fresh.history.records, again.history.records):
        assert (a.epoch, a.interior, a.boundary, a.total) \
            == (b.epoch, b.interior, b.boundary, b.total)


def test_resampling_resume_matches_straight_run():
    cfg = tiny_config(resample=True, epochs=120, log_every=30)
    straight = run_training(cfg)
    half = run_training(replace(cfg, epochs=60))
    resumed = run_training(cfg, start=half.checkpoint())
    # the loop stream is checkpointed, so the resumed half redraws the very
    # same per-epoch sample sets
    assert straight.params.equal(resumed.params)
    assert np.array_equal(straight.samples.interior, resumed.samples.interior)
    joined = half.history.records + resumed.history.records
    assert [(r.epoch, r.total) for r in joined] \
        == [(r.epoch, r.total) for r in straight.history.records]


def test_final_partial_window_logged():
    _, history = train(tiny_config(epochs=130, log_every=50))
    assert [r.epoch for r in history.records] == [0, 50, 100, 130]


def test_divergence_raises_with_prior_checkpoint():
    cfg = tiny_config(f=SourceTerm(1e200), epochs=10)
    with pytest.raises(TrainingDiverged) as exc:
        train(cfg)
    assert exc.value.epoch == 1
    ck = exc.value.checkpoint
    assert ck is not None and ck.epoch == 0
    assert ck.params.param_count == 18849


def test_history_append_validation():
    h = TrainingHistory()
    h.append(HistoryRecord(0, 1.0, 1.0, 2.0, 0.0))
    with pytest.raises(ConfigurationError):
        h.append(HistoryRecord(0, 1.0, 1.0, 2.0, 0.1))
    with pytest.raises(ConfigurationError):
        h.append(HistoryRecord(5, np.inf, 1.0, np.inf, 0.1))
    with pytest.raises(ConfigurationError):
        TrainingHistory().final


# -- checkpoints and resume ------------------------------------------------


@pytest.fixture(scope="module")
def saved_half(tmp_path_factory):
    path = tmp_path_factory.mktemp("ck") / "half.txt"
    run = run_training(tiny_config(epochs=100))
    save_checkpoint(path, run.checkpoint())
    return path, run


def test_checkpoint_round_trip_is_byte_stable(saved_half, tmp_path):
    path, run = saved_half
    loaded = load_checkpoint(path)
    again = tmp_path / "again.txt"
    save_checkpoint(again, loaded)
    assert path.read_bytes() == again.read_bytes()
    assert loaded.params.equal(run.params)
    assert loaded.epoch == 100
    assert loaded.adam.t == run.adam.t
    assert all(np.array_equal(a, b) for a, b in zip(loaded.adam.m, run.adam.m))
    assert all(np.array_equal(a, b) for a, b in zip(loaded.adam.v, run.adam.v))
    assert loaded.rng_state == run.rng.bit_generator.state


def test_resume_matches_straight_run(saved_half):
    path, _ = saved_half
    loaded = load_checkpoint(path)
    resumed = run_training(tiny_config(), start=loaded)
    straight = run_training(tiny_config())
    assert resumed.params.equal(straight.params)
    tail = [r for r in straight.history.records if r.epoch > 100]
    assert len(tail) == len(resumed.history.records)
    for a, b in zip(tail, resumed.history.records):
        assert (a.epoch, a.interior, a.boundary, a.total) \
            == (b.epoch, b.interior, b.boundary, b.total)


def test_resume_validates_config(saved_half):
    path, _ = saved_half
    loaded = load_checkpoint(path)
    with pytest.raises(ConfigurationError):
        run_training(tiny_config(epochs=50), start=loaded)  # behind the checkpoint
    with pytest.raises(ConfigurationError):
        run_training(tiny_config(epochs=100), start=loaded)  # nothing left to do
    with pytest.raises(ConfigurationError):
        run_training(tiny_config(learning_rate=0.5), start=loaded)
    with pytest.raises(ConfigurationError):
        run_training(tiny_config(seed=4), start=loaded)


def test_checkpoint_version_gate(saved_half, tmp_path):
    path, _ = saved_half
    body = path.read_text().replace("minsurf-checkpoint 1", "minsurf-checkpoint 9", 1)
    bad = tmp_path / "v9.txt"
    bad.write_text(body)
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(bad)


def test_checkpoint_missing_section(saved_half, tmp_path):
    path, _ = saved_half
    body = path.read_text().split("[adam]")[0]
    bad = tmp_path / "cut.txt"
    bad.write_text(body)
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)


def test_checkpoint_garbage(tmp_path):
    bad = tmp_path / "noise.txt"
    bad.write_text("not a checkpoint\n")
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.txt")

"""Experiment configuration, the training loop, checkpoints, presets.

One experiment = a box domain, Dirichlet frame data, loss weights, and
optimizer settings. Configurations live as plain key-value text so the
shipped presets are inspectable data:

    d = 2
    domain = -1.5 .. 1.5
    boundary = scherk
    w_bdry = 0.3
    learning_rate = 0.001
    epochs = 5000

A piecewise boundary is written with one key per face, e.g.
``boundary[x1=0] = cos(2*pi*x1) + cos(2*pi*x2)``.

The loop is Adam over the fixed collocation set: evaluate the weighted
loss and its parameter gradient, step, repeat. History records the mean
of the per-epoch loss terms over each logging window (set ``log_raw``
for unsmoothed per-epoch records).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import pde
from .adam import AdamState, adam_step, init_adam
from .boundary import BoundaryFn, SourceTerm, lookup_builtin, parse_expression
from .errors import (CheckpointError, ConfigurationError, EvaluationError,
                     NumericalError, ParseError, TrainingDiverged)
from .network import (ACTIVATIONS, LayerSpec, NetworkParams, canonical_layers,
                      init_network)
from .sampling import BOUNDARY_MODES, BoxDomain, SampleSet, build_sample_set

__all__ = [
    "ExperimentConfig",
    "HistoryRecord",
    "TrainingHistory",
    "TrainingRun",
    "Checkpoint",
    "parse_config",
    "read_config",
    "serialize_config",
    "write_config",
    "config_hash",
    "preset_names",
    "load_preset",
    "train",
    "run_training",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_MAGIC = "minsurf-checkpoint"
CHECKPOINT_VERSION = 1


# -- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    boundary: BoundaryFn
    w_bdry: float
    learning_rate: float
    epochs: int
    domain: BoxDomain = None  # filled from boundary when omitted
    f: SourceTerm = SourceTerm(0.0)
    w_pde: float = 1.0
    n_interior: int = 1000
    per_edge: int = 200
    boundary_mode: str = "wireframe"
    seed: int = 0
    log_every: int = 20
    activation: str = "tanh"
    log_raw: bool = False
    resample: bool = False

    def __post_init__(self):
        if self.d not in (2, 3, 4):
            raise ConfigurationError(f"d must be 2, 3, or 4, got {self.d}")
        if self.domain is None:
            object.__setattr__(self, "domain", self.boundary.domain)
        if self.domain.dim != self.d:
            raise ConfigurationError(
                f"domain dimension {self.domain.dim} does not match d={self.d}")
        if self.boundary.dim != self.d:
            raise ConfigurationError(
                f"boundary is {self.boundary.dim}-dimensional but d={self.d}")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be at least 1")
        if self.n_interior < 1 or self.per_edge < 1:
            raise ConfigurationError("sample counts must be at least 1")
        if self.log_every < 1:
            raise ConfigurationError("log_every must be at least 1")
        if self.w_pde < 0 or self.w_bdry < 0 or (self.w_pde == 0 and self.w_bdry == 0):
            raise ConfigurationError("loss weights must be nonnegative and not both zero")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning rate must be positive")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ConfigurationError(f"boundary mode must be one of {BOUNDARY_MODES}")
        if self.activation not in ("tanh", "relu"):
            raise ConfigurationError(
                f"activation override must be tanh or relu, got {self.activation!r}")

    def layer_specs(self) -> tuple[LayerSpec, ...]:
        return canonical_layers(self.activation)


_CONFIG_FIELDS = ("d", "domain", "boundary", "f", "w_pde", "w_bdry",
                  "learning_rate", "epochs", "n_interior", "per_edge",
                  "boundary_mode", "seed", "log_every", "activation", "log_raw",
                  "resample")
_REQUIRED = ("d", "boundary", "w_bdry", "learning_rate", "epochs")
_BOOL_WORDS = {"true": True, "false": False, "yes": True, "no": False,
               "1": True, "0": False}


def _parse_domain_value(text: str, d: int) -> BoxDomain:
    text = text.strip()
    if text == "unit":
        return BoxDomain.unit(d)
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        try:
            lo, hi = float(lo_s), float(hi_s)
        except ValueError:
            raise ConfigurationError(f"cannot parse domain bounds {text!r}") from None
        return BoxDomain.cube(lo, hi, d)
    raise ConfigurationError(
        f"domain must be 'unit' or 'LO .. HI', got {text!r}")


def _fmt_float(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _match_face(key: str, domain: BoxDomain) -> tuple[int, int]:
    if "=" not in key:
        raise ConfigurationError(f"boundary piece key {key!r} must look like x1=0")
    var, val = key.split("=", 1)
    if not (var.startswith("x") and var[1:].isdigit()):
        raise ConfigurationError(f"boundary piece key {key!r} must name an axis x1..x{domain.dim}")
    axis = int(var[1:]) - 1
    if not (0 <= axis < domain.dim):
        raise ConfigurationError(f"axis {var} outside the {domain.dim}-dimensional domain")
    try:
        v = float(val)
    except ValueError:
        raise ConfigurationError(f"cannot parse face position {val!r} in {key!r}") from None
    span = domain.upper[axis] - domain.lower[axis]
    if abs(v - domain.lower[axis]) <= 1e-12 * max(1.0, span):
        return axis, 0
    if abs(v - domain.upper[axis]) <= 1e-12 * max(1.0, span):
        return axis, 1
    raise ConfigurationError(
        f"face position {val} is neither bound of axis {var} "
        f"({domain.lower[axis]} or {domain.upper[axis]})")


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; unknown or missing keys are errors."""
    entries: dict[str, str] = {}
    pieces_raw: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key.startswith("boundary[") and key.endswith("]"):
            pieces_raw.append((key[len("boundary["):-1].strip(), value))
            continue
        # piece keys contain '=', so the first split above may cut them apart
        if key.startswith("boundary[") and "]" in value:
            face, rest = (key + "=" + value).split("]", 1)
            rest = rest.strip()
            if not rest.startswith("="):
                raise ConfigurationError(f"line {lineno}: malformed boundary piece key")
            pieces_raw.append((face[len("boundary["):].strip(), rest[1:].strip()))
            continue
        if key not in _CONFIG_FIELDS:
            raise ConfigurationError(f"line {lineno}: unknown configuration key {key!r}")
        if key in entries:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    boundary_given = "boundary" in entries or bool(pieces_raw)
    for req in _REQUIRED:
        if req == "boundary":
            if not boundary_given:
                raise ConfigurationError("missing required key 'boundary'")
        elif req not in entries:
            raise ConfigurationError(f"missing required key {req!r}")
    if "boundary" in entries and pieces_raw:
        raise ConfigurationError("give either 'boundary' or 'boundary[...]' keys, not both")

    def geti(key, default=None):
        if key not in entries:
            return default
        try:
            return int(entries[key])
        except ValueError:
            raise ConfigurationError(f"{key} must be an integer, got {entries[key]!r}") from None

    def getf(key, default=None):
        if key not in entries:
            return default
        try:
            return float(entries[key])
        except ValueError:
            raise ConfigurationError(f"{key} must be a number, got {entries[key]!r}") from None

    d = geti("d")
    builtin_name = None
    if "boundary" in entries:
        from . import boundary as _b
        if entries["boundary"] in _b.builtin_names():
            builtin_name = entries["boundary"]

    if "domain" in entries:
        domain = _parse_domain_value(entries["domain"], d)
    elif builtin_name is not None:
        domain = lookup_builtin(builtin_name).domain
    else:
        domain = BoxDomain.unit(d)

    def cfg_expr(text, context):
        try:
            return parse_expression(text)
        except ParseError as exc:
            raise ConfigurationError(f"{context}: {exc} (offset {exc.offset})") from None

    if builtin_name is not None:
        bfn = lookup_builtin(builtin_name, domain=domain)
    elif "boundary" in entries:
        bfn = BoundaryFn(domain, expr=cfg_expr(entries["boundary"], "boundary"))
    else:
        from .boundary import BoundaryPiece
        pieces = []
        for face_key, expr_text in pieces_raw:
            axis, side = _match_face(face_key, domain)
            pieces.append(BoundaryPiece(
                axis, side, cfg_expr(expr_text, f"boundary[{face_key}]")))
        bfn = BoundaryFn(domain, pieces=pieces)

    def getb(key):
        if key not in entries:
            return False
        word = entries[key].lower()
        if word not in _BOOL_WORDS:
            raise ConfigurationError(f"{key} must be true or false, got {entries[key]!r}")
        return _BOOL_WORDS[word]

    return ExperimentConfig(
        d=d,
        domain=domain,
        boundary=bfn,
        f=SourceTerm(getf("f", 0.0)),
        w_pde=getf("w_pde", 1.0),
        w_bdry=getf("w_bdry"),
        learning_rate=getf("learning_rate"),
        epochs=geti("epochs"),
        n_interior=geti("n_interior", 1000),
        per_edge=geti("per_edge", 200),
        boundary_mode=entries.get("boundary_mode", "wireframe"),
        seed=geti("seed", 0),
        log_every=geti("log_every", 20),
        activation=entries.get("activation", "tanh"),
        log_raw=getb("log_raw"),
        resample=getb("resample"),
    )


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form; parse(serialize(c)) reproduces c exactly."""
    lines = [f"d = {config.d}"]
    if config.domain == BoxDomain.unit(config.d):
        lines.append("domain = unit")
    else:
        lines.append(f"domain = {_fmt_float(config.domain.lower[0])} .. "
                     f"{_fmt_float(config.domain.upper[0])}")
    b = config.boundary
    if b.name is not None:
        lines.append(f"boundary = {b.name}")
    elif b.is_piecewise:
        for p in b.pieces:
            bound = b.domain.upper[p.axis] if p.side else b.domain.lower[p.axis]
            lines.append(f"boundary[x{p.axis + 1}={_fmt_float(bound)}] = {p.expr.unparse()}")
    else:
        lines.append(f"boundary = {b.expr.unparse()}")
    lines.append(f"f = {_fmt_float(config.f.value)}")
    lines.append(f"w_pde = {_fmt_float(config.w_pde)}")
    lines.append(f"w_bdry = {_fmt_float(config.w_bdry)}")
    lines.append(f"learning_rate = {_fmt_float(config.learning_rate)}")
    lines.append(f"epochs = {config.epochs}")
    lines.append(f"n_interior = {config.n_interior}")
    lines.append(f"per_edge = {config.per_edge}")
    lines.append(f"boundary_mode = {config.boundary_mode}")
    lines.append(f"seed = {config.seed}")
    lines.append(f"log_every = {config.log_every}")
    lines.append(f"activation = {config.activation}")
    lines.append(f"log_raw = {'true' if config.log_raw else 'false'}")
    lines.append(f"resample = {'true' if config.resample else 'false'}")
    return "\n".join(lines) + "\n"


def read_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
    return parse_config(text)


def write_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(config))


def config_hash(config: ExperimentConfig) -> str:
    """Short stable digest of the canonical text, for provenance fields."""
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()[:12]


# -- presets ---------------------------------------------------------------


def _preset_dir():
    return resources.files("minsurf") / "presets"


def preset_names() -> list[str]:
    names = [p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith(".cfg")]
    return sorted(names)


def load_preset(name: str) -> ExperimentConfig:
    candidate = _preset_dir() / f"{name}.cfg"
    if not candidate.is_file():
        known = ", ".join(preset_names())
        raise ConfigurationError(f"unknown preset {name!r}; available: {known}")
    return parse_config(candidate.read_text(encoding="utf-8"))


# -- history ---------------------------------------------------------------


@dataclass(frozen=True)
class HistoryRecord:
    epoch: int
    interior: float
    boundary: float
    total: float
    seconds: float


@dataclass
class TrainingHistory:
    records: list[HistoryRecord] = field(default_factory=list)

    def append(self, record: HistoryRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ConfigurationError("history epochs must be strictly increasing")
        for v in (record.interior, record.boundary, record.total, record.seconds):
            if not np.isfinite(v):
                raise ConfigurationError("history values must be finite")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def final(self) -> HistoryRecord:
        if not self.records:
            raise ConfigurationError("history is empty")
        return self.records[-1]


# -- checkpoints -----------------------------------------------------------


@dataclass
class Checkpoint:
    config: ExperimentConfig
    params: NetworkParams
    adam: AdamState
    epoch: int
    rng_state: dict
    version: int = CHECKPOINT_VERSION


def _fmt17(v: float) -> str:
    return format(float(v), ".17g")


def _array_line(a: np.ndarray) -> str:
    return " ".join(_fmt17(v) for v in np.asarray(a).ravel())


def _parse_array(text: str, shape) -> np.ndarray:
    vals = np.array([float(t) for t in text.split()])
    expected = int(np.prod(shape))
    if vals.size != expected:
        raise CheckpointError(f"expected {expected} values, found {vals.size}")
    return vals.reshape(shape)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    """Write the versioned text form; byte-stable under save/load/save."""
    lines = [f"{CHECKPOINT_MAGIC} {ckpt.version}", "", "[config]"]
    lines.append(serialize_config(ckpt.config).rstrip("\n"))
    lines.append("")
    lines.append("[state]")
    lines.append(f"epoch = {ckpt.epoch}")
    lines.append(f"rng = {json.dumps(ckpt.rng_state, sort_keys=True, separators=(',', ':'))}")
    lines.append("")
    lines.append("[network]")
    lines.append(f"input_dim = {ckpt.params.input_dim}")
    lines.append("layers = " + ",".join(
        f"{s.width}:{s.activation}" for s in ckpt.params.layer_specs))
    for name, arr in ckpt.params.arrays():
        lines.append(f"{name} = {_array_line(arr)}")
    lines.append("")
    lines.append("[adam]")
    lines.append(f"t = {ckpt.adam.t}")
    lines.append(f"learning_rate = {_fmt17(ckpt.adam.learning_rate)}")
    lines.append(f"beta1 = {_fmt17(ckpt.adam.beta1)}")
    lines.append(f"beta2 = {_fmt17(ckpt.adam.beta2)}")
    lines.append(f"eps = {_fmt17(ckpt.adam.eps)}")
    half = len(ckpt.adam.m) // 2
    for i in range(half):
        lines.append(f"mW{i + 1} = {_array_line(ckpt.adam.m[2 * i])}")
        lines.append(f"mb{i + 1} = {_array_line(ckpt.adam.m[2 * i + 1])}")
    for i in range(half):
        lines.append(f"vW{i + 1} = {_array_line(ckpt.adam.v[2 * i])}")
        lines.append(f"vb{i + 1} = {_array_line(ckpt.adam.v[2 * i + 1])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _split_sections(text: str) -> tuple[str, dict[str, list[str]]]:
    lines = text.splitlines()
    if not lines:
        raise CheckpointError("empty checkpoint file")
    header = lines[0]
    sections: dict[str, list[str]] = {}
    current = None
    for line in lines[1:]:
        if line.startswith("[") and line.endswith("]") and " " not in line:
            current = line[1:-1]
            if current in sections:
                raise CheckpointError(f"duplicate section [{current}]")
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    return header, sections


def _section_map(body: list[str], section: str) -> dict[str, str]:
    out = {}
    for line in body:
        if not line.strip():
            continue
        if "=" not in line:
            raise CheckpointError(f"malformed line in [{section}]: {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    header, sections = _split_sections(text)
    parts = header.split()
    if len(parts) != 2 or parts[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"not a checkpoint file (header {header!r})")
    try:
        version = int(parts[1])
    except ValueError:
        raise CheckpointError(f"malformed version {parts[1]!r}") from None
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (supported: {CHECKPOINT_VERSION})")
    for required in ("config", "state", "network", "adam"):
        if required not in sections:
            raise CheckpointError(f"checkpoint is missing section [{required}]")

    config = parse_config("\n".join(sections["config"]))

    state = _section_map(sections["state"], "state")
    try:
        epoch = int(state["epoch"])
        rng_state = json.loads(state["rng"])
    except KeyError as exc:
        raise CheckpointError(f"[state] is missing {exc}") from None
    except ValueError as exc:
        raise CheckpointError(f"malformed [state]: {exc}") from None

    net = _section_map(sections["network"], "network")
    try:
        input_dim = int(net["input_dim"])
        layer_specs = tuple(
            LayerSpec(int(w), act)
            for w, act in (part.split(":") for part in net["layers"].split(","))
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed [network] header: {exc}") from None
    weights, biases = [], []
    fan_in = input_dim
    try:
        for i, spec in enumerate(layer_specs, start=1):
            weights.append(_parse_array(net[f"W{i}"], (spec.width, fan_in)))
            biases.append(_parse_array(net[f"b{i}"], (spec.width,)))
            fan_in = spec.width
    except KeyError as exc:
        raise CheckpointError(f"[network] is missing array {exc}") from None
    params = NetworkParams(input_dim, layer_specs, weights, biases)

    ad = _section_map(sections["adam"], "adam")
    try:
        adam = AdamState(learning_rate=float(ad["learning_rate"]),
                         beta1=float(ad["beta1"]), beta2=float(ad["beta2"]),
                         eps=float(ad["eps"]), t=int(ad["t"]))
        for i, spec in enumerate(layer_specs, start=1):
            adam.m.append(_parse_array(ad[f"mW{i}"], weights[i - 1].shape))
            adam.m.append(_parse_array(ad[f"mb{i}"], biases[i - 1].shape))
        for i, spec in enumerate(layer_specs, start=1):
            adam.v.append(_parse_array(ad[f"vW{i}"], weights[i - 1].shape))
            adam.v.append(_parse_array(ad[f"vb{i}"], biases[i - 1].shape))
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed [adam]: {exc}") from None

    return Checkpoint(config=config, params=params, adam=adam, epoch=epoch,
                      rng_state=rng_state, version=version)


# -- the loop --------------------------------------------------------------


@dataclass
class TrainingRun:
    config: ExperimentConfig
    params: NetworkParams
    history: TrainingHistory
    adam: AdamState
    epoch: int
    samples: SampleSet
    rng: np.random.Generator

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(config=self.config, params=self.params, adam=self.adam,
                          epoch=self.epoch,
                          rng_state=self.rng.bit_generator.state)


def _spawn_streams(seed: int):
    net_ss, sample_ss, loop_ss = np.random.SeedSequence(seed).spawn(3)
    return net_ss, np.random.default_rng(sample_ss), np.random.default_rng(loop_ss)


def _interleave(ws, bs):
    out = []
    for w, b in zip(ws, bs):
        out.append(w)
        out.append(b)
    return out


def run_training(config: ExperimentConfig, start: Checkpoint | None = None,
                 on_log=None) -> TrainingRun:
    """Train to config.epochs, optionally continuing from a checkpoint.

    ``on_log`` receives each HistoryRecord as it is appended. On a
    non-finite loss the loop raises TrainingDiverged carrying a checkpoint
    of the last finite epoch.
    """
    net_ss, sample_rng, loop_rng = _spawn_streams(config.seed)
    samples = build_sample_set(config.domain, config.n_interior,
                               config.boundary_mode, config.per_edge, sample_rng)
    try:
        g_values = config.boundary.evaluate(samples.boundary)
    except EvaluationError as exc:
        raise EvaluationError(f"boundary data failed on the sample frame: {exc}") from exc

    if start is not None:
        if start.config.d != config.d:
            raise ConfigurationError("checkpoint dimension does not match configuration")
        if serialize_config(replace(start.config, epochs=config.epochs)) != serialize_config(config):
            raise ConfigurationError(
                "checkpoint configuration differs from the requested one (only epochs may change)")
        if start.epoch >= config.epochs:
            raise ConfigurationError(
                f"checkpoint is already at epoch {start.epoch}, nothing to train "
                f"(requested {config.epochs})")
        params = start.params
        adam = start.adam
        loop_rng.bit_generator.state = start.rng_state
        first_epoch = start.epoch + 1
    else:
        params = init_network(config.d, config.layer_specs(), seed=net_ss)
        adam = init_adam(_interleave(params.weights, params.biases), config.learning_rate)
        first_epoch = 1

    history = TrainingHistory()
    t0 = time.perf_counter()
    window: list[pde.LossBreakdown] = []
    # rolling snapshot of the last finite epoch, for the divergence checkpoint
    prev_params = params
    prev_adam_m = [m.copy() for m in adam.m]
    prev_adam_v = [v.copy() for v in adam.v]
    prev_t = adam.t

    def emit(epoch_index):
        k = len(window)
        rec = HistoryRecord(
            epoch=epoch_index,
            interior=sum(b.interior_term for b in window) / k,
            boundary=sum(b.boundary_term for b in window) / k,
            total=sum(b.total for b in window) / k,
            seconds=time.perf_counter() - t0,
        )
        history.append(rec)
        if on_log is not None:
            on_log(rec)
        window.clear()

    def diverged(message, epoch):
        last = Checkpoint(config=config, params=prev_params,
                          adam=AdamState(adam.learning_rate, adam.beta1,
                                         adam.beta2, adam.eps, prev_t,
                                         prev_adam_m, prev_adam_v),
                          epoch=epoch - 1,
                          rng_state=loop_rng.bit_generator.state)
        return TrainingDiverged(message, epoch=epoch, checkpoint=last)

    epoch = first_epoch - 1
    for epoch in range(first_epoch, config.epochs + 1):
        if config.resample:
            # fresh Monte Carlo draw per epoch, taken from the checkpointed
            # loop stream so a resumed run sees the same sequence of sets
            samples = build_sample_set(config.domain, config.n_interior,
                                       config.boundary_mode, config.per_edge,
                                       loop_rng)
            g_values = config.boundary.evaluate(samples.boundary)
        breakdown, dW, dB = pde.loss_and_parameter_gradients(
            params, samples.interior, samples.boundary, g_values,
            f=config.f, w_pde=config.w_pde, w_bdry=config.w_bdry)
        if not np.isfinite(breakdown.total):
            raise diverged(f"loss became non-finite at epoch {epoch}", epoch)
        window.append(breakdown)
        if epoch == first_epoch and start is None:
            emit(0)  # the untouched initialization, for convergence ratios
        elif config.log_raw or epoch % config.log_every == 0 or epoch == config.epochs:
            emit(epoch)

        prev_params = params
        prev_adam_m = [m.copy() for m in adam.m]
        prev_adam_v = [v.copy() for v in adam.v]
        prev_t = adam.t
        try:
            stepped = adam_step(adam, _interleave(params.weights, params.biases),
                                _interleave(dW, dB))
        except NumericalError:
            raise diverged(f"gradient became non-finite at epoch {epoch}", epoch) from None
        params = NetworkParams(config.d, config.layer_specs(),
                               stepped[0::2], stepped[1::2])

    if window:
        emit(epoch)
    return TrainingRun(config=config, params=params, history=history,
                       adam=adam, epoch=config.epochs, samples=samples,
                       rng=loop_rng)


def train(config: ExperimentConfig) -> tuple[NetworkParams, TrainingHistory]:
    """Run the configured experiment from scratch."""
    run = run_training(config)
    return run.params, run.history

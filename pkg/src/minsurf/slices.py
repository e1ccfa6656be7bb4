"""Slice extraction and file exports: CSV grids, history JSON, SVG heatmaps.

A slice pins all but two coordinates of a d-dimensional solution to
constants and evaluates the model on a tensor grid of the two free axes.
That grid is the portable artifact: CSV for data, SVG for a quick look.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EvaluationError
from .sampling import BoxDomain
from .training import HistoryRecord, TrainingHistory

__all__ = [
    "SliceSpec",
    "SliceGrid",
    "evaluate_slice",
    "export_slice_csv",
    "read_slice_csv",
    "export_history_json",
    "read_history_json",
    "export_slice_svg",
]


@dataclass(frozen=True)
class SliceSpec:
    """Which axes to pin, and where; the two unpinned axes span the grid."""

    domain: BoxDomain
    fixed: dict[int, float] = field(default_factory=dict)
    resolution: int = 50

    def __post_init__(self):
        d = self.domain.dim
        fixed = {int(a): float(v) for a, v in self.fixed.items()}
        object.__setattr__(self, "fixed", fixed)
        for axis, value in fixed.items():
            if not (0 <= axis < d):
                raise ConfigurationError(f"fixed axis x{axis + 1} outside dimension {d}")
            if not (self.domain.lower[axis] <= value <= self.domain.upper[axis]):
                raise ConfigurationError(
                    f"fixed value {value} for x{axis + 1} lies outside "
                    f"[{self.domain.lower[axis]}, {self.domain.upper[axis]}]")
        if d - len(fixed) != 2:
            raise ConfigurationError(
                f"a slice needs exactly 2 free axes; {len(fixed)} of {d} are fixed")
        if self.resolution < 2:
            raise ConfigurationError("slice resolution must be at least 2")

    @property
    def free(self) -> tuple[int, int]:
        a, b = sorted(set(range(self.domain.dim)) - set(self.fixed))
        return a, b


@dataclass
class SliceGrid:
    """values[i, j] = u at (coords[0][i], coords[1][j]) with fixed axes pinned."""

    axes: tuple[str, str]
    coords: tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    provenance: dict | None = None

    def __post_init__(self):
        expected = (len(self.coords[0]), len(self.coords[1]))
        if self.values.shape != expected:
            raise ConfigurationError(
                f"value array shape {self.values.shape} does not match coords {expected}")
        if not np.all(np.isfinite(self.values)):
            raise EvaluationError("slice contains non-finite values")


def evaluate_slice(model, spec: SliceSpec, provenance: dict | None = None) -> SliceGrid:
    """Evaluate the model on the spec's tensor grid."""
    d = spec.domain.dim
    if getattr(model, "dimension", d) != d:
        raise ConfigurationError(
            f"model dimension {model.dimension} does not match slice domain {d}")
    a, b = spec.free
    res = spec.resolution
    ca = np.linspace(spec.domain.lower[a], spec.domain.upper[a], res)
    cb = np.linspace(spec.domain.lower[b], spec.domain.upper[b], res)
    points = np.empty((res * res, d))
    for axis, value in spec.fixed.items():
        points[:, axis] = value
    ga, gb = np.meshgrid(ca, cb, indexing="ij")
    points[:, a] = ga.ravel()
    points[:, b] = gb.ravel()
    values = np.asarray(model.values(points)).reshape(res, res)
    return SliceGrid(axes=(f"x{a + 1}", f"x{b + 1}"), coords=(ca, cb),
                     values=values, provenance=provenance)


def export_slice_csv(grid: SliceGrid, path) -> None:
    """Three columns, outer axis first, full-precision decimal."""
    lines = [f"{grid.axes[0]},{grid.axes[1]},u"]
    ca, cb = grid.coords
    for i, va in enumerate(ca):
        for j, vb in enumerate(cb):
            lines.append(f"{float(va)!r},{float(vb)!r},{float(grid.values[i, j])!r}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from None


def read_slice_csv(path) -> SliceGrid:
    """Rebuild a SliceGrid from its CSV form (exact round trip)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln]
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise ConfigurationError(f"{path} is empty")
    header = lines[0].split(",")
    if len(header) != 3 or header[2] != "u":
        raise ConfigurationError(f"{path} is not a slice CSV (header {lines[0]!r})")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise ConfigurationError(f"malformed row {ln!r} in {path}")
        rows.append([float(p) for p in parts])
    data = np.array(rows)
    ca = np.unique(data[:, 0])
    cb = np.unique(data[:, 1])
    if len(ca) * len(cb) != len(rows):
        raise ConfigurationError(f"{path} does not contain a full tensor grid")
    values = data[:, 2].reshape(len(ca), len(cb))
    # rows are written axisA-outer in ascending coordinate order, which is
    # exactly what the unique() sort gives back
    return SliceGrid(axes=(header[0], header[1]), coords=(ca, cb), values=values)


HISTORY_SCHEMA_VERSION = 1


def export_history_json(history: TrainingHistory, path, include_timing: bool = True) -> None:
    """One record per logged epoch; timing can be dropped for byte-stable output."""
    if len(history) == 0:
        raise ConfigurationError("refusing to export an empty history")
    records = []
    for r in history:
        rec = {"epoch": r.epoch, "interior": r.interior, "boundary": r.boundary,
               "total": r.total}
        if include_timing:
            rec["seconds"] = r.seconds
        records.append(rec)
    payload = {"schema_version": HISTORY_SCHEMA_VERSION, "records": records}
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from None


def read_history_json(path) -> TrainingHistory:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from None
    if payload.get("schema_version") != HISTORY_SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported history schema {payload.get('schema_version')!r}")
    history = TrainingHistory()
    for rec in payload["records"]:
        history.append(HistoryRecord(epoch=rec["epoch"], interior=rec["interior"],
                                     boundary=rec["boundary"], total=rec["total"],
                                     seconds=rec.get("seconds", 0.0)))
    return history


def _gray(t: float) -> str:
    level = int(round(255 * min(1.0, max(0.0, t))))
    return f"#{level:02x}{level:02x}{level:02x}"


def export_slice_svg(grid: SliceGrid, path, cell_target: int = 420) -> None:
    """Linear grayscale heatmap with axis labels; black=min, white=max."""
    res_a, res_b = grid.values.shape
    cell = max(1, cell_target // max(res_a, res_b))
    pw, ph = res_a * cell, res_b * cell
    ml, mb, mt, mr = 54, 42, 16, 16  # margins: left, bottom, top, right
    width, height = ml + pw + mr, mt + ph + mb
    vmin = float(grid.values.min())
    vmax = float(grid.values.max())
    span = vmax - vmin
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i in range(res_a):
        for j in range(res_b):
            t = 0.5 if span == 0 else (float(grid.values[i, j]) - vmin) / span
            x = ml + i * cell
            y = mt + (res_b - 1 - j) * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{_gray(t)}"/>')
    font = 'font-family="sans-serif" font-size="11"'
    ca, cb = grid.coords
    out.append(f'<text x="{ml + pw / 2:.0f}" y="{height - 8}" text-anchor="middle" {font}>'
               f'{grid.axes[0]}</text>')
    out.append(f'<text x="{ml}" y="{height - 24}" text-anchor="middle" {font}>{ca[0]:g}</text>')
    out.append(f'<text x="{ml + pw}" y="{height - 24}" text-anchor="middle" {font}>'
               f'{ca[-1]:g}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.0f}" text-anchor="middle" {font} '
               f'transform="rotate(-90 14 {mt + ph / 2:.0f})">{grid.axes[1]}</text>')
    out.append(f'<text x="{ml - 6}" y="{mt + ph}" text-anchor="end" {font}>{cb[0]:g}</text>')
    out.append(f'<text x="{ml - 6}" y="{mt + 10}" text-anchor="end" {font}>{cb[-1]:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.0f}" y="{mt - 4}" text-anchor="middle" {font}>'
               f'u: {vmin:.4g} (black) to {vmax:.4g} (white)</text>')
    out.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from None

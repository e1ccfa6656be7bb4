"""Box domains, interior and frame sampling, corner diagnostics.

The boundary "frame" can be sampled two ways, mirroring the two readings of
the boundary in the source problem: ``wireframe`` places points on the
1-dimensional edges of the hypercube (4 edges in 2-D, 12 in 3-D, 32 in
4-D), ``faces`` places them on the full codimension-1 faces. In 2-D the
two coincide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EvaluationError

__all__ = [
    "BoxDomain",
    "EdgeDescriptor",
    "SampleSet",
    "enumerate_edges",
    "corner_points",
    "sample_interior",
    "sample_boundary",
    "build_sample_set",
    "CornerEntry",
    "CornerReport",
    "check_corner_consistency",
]

BOUNDARY_MODES = ("wireframe", "faces")


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box, the only domain shape supported."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise ConfigurationError("lower and upper bounds differ in length")
        if len(lo) not in (2, 3, 4):
            raise ConfigurationError(f"domain dimension must be 2, 3, or 4, got {len(lo)}")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ConfigurationError("domain bounds must be finite")
            if not a < b:
                raise ConfigurationError(f"lower bound {a} not below upper bound {b}")

    @classmethod
    def unit(cls, d: int) -> "BoxDomain":
        return cls((0.0,) * d, (1.0,) * d)

    @classmethod
    def cube(cls, lo: float, hi: float, d: int) -> "BoxDomain":
        return cls((lo,) * d, (hi,) * d)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    def lo_array(self) -> np.ndarray:
        return np.array(self.lower)

    def hi_array(self) -> np.ndarray:
        return np.array(self.upper)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo_array() - tol) and np.all(x <= self.hi_array() + tol))


@dataclass(frozen=True)
class EdgeDescriptor:
    """One hypercube edge: a single free axis, all others pinned to a corner."""

    free_axis: int
    fixed: tuple[tuple[int, int], ...]  # (axis, side) pairs, side 0=lower 1=upper

    def fixed_axes(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.fixed)


def enumerate_edges(domain: BoxDomain) -> list[EdgeDescriptor]:
    """All d * 2^(d-1) edges, ordered by (free_axis, fixed sides)."""
    d = domain.dim
    edges = []
    for free in range(d):
        others = [a for a in range(d) if a != free]
        for sides in itertools.product((0, 1), repeat=d - 1):
            edges.append(EdgeDescriptor(free, tuple(zip(others, sides))))
    return edges


def corner_points(domain: BoxDomain) -> np.ndarray:
    """The 2^d corners in lexicographic order (lower before upper per axis)."""
    axes = [(lo, hi) for lo, hi in zip(domain.lower, domain.upper)]
    return np.array(list(itertools.product(*axes)))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_interior(domain: BoxDomain, n: int, seed=0) -> np.ndarray:
    """n uniform points strictly inside the box."""
    if n < 1:
        raise ConfigurationError("interior sample count must be at least 1")
    rng = _as_rng(seed)
    lo, hi = domain.lo_array(), domain.hi_array()
    points = rng.uniform(lo, hi, size=(n, domain.dim))
    # uniform() is half-open; redraw the measure-zero hits so the open-box
    # invariant holds unconditionally
    while True:
        on_face = np.any((points <= lo) | (points >= hi), axis=1)
        if not on_face.any():
            return points
        points[on_face] = rng.uniform(lo, hi, size=(int(on_face.sum()), domain.dim))


def sample_boundary(domain: BoxDomain, mode: str, per_piece: int, seed=0) -> np.ndarray:
    """Uniform points on the frame: per_piece per edge (wireframe) or per face."""
    if mode not in BOUNDARY_MODES:
        raise ConfigurationError(f"boundary mode must be one of {BOUNDARY_MODES}, got {mode!r}")
    if per_piece < 1:
        raise ConfigurationError("per-piece sample count must be at least 1")
    rng = _as_rng(seed)
    d = domain.dim
    lo, hi = domain.lo_array(), domain.hi_array()
    chunks = []
    if mode == "wireframe":
        for edge in enumerate_edges(domain):
            pts = np.empty((per_piece, d))
            free = edge.free_axis
            t = rng.uniform(lo[free], hi[free], per_piece)
            while True:  # keep the free coordinate off the corners
                bad = (t <= lo[free]) | (t >= hi[free])
                if not bad.any():
                    break
                t[bad] = rng.uniform(lo[free], hi[free], int(bad.sum()))
            pts[:, free] = t
            for axis, side in edge.fixed:
                pts[:, axis] = hi[axis] if side else lo[axis]
            chunks.append(pts)
    else:
        for axis in range(d):
            for side in (0, 1):
                pts = rng.uniform(lo, hi, size=(per_piece, d))
                pts[:, axis] = hi[axis] if side else lo[axis]
                chunks.append(pts)
    return np.concatenate(chunks, axis=0)


@dataclass
class SampleSet:
    """Fixed collocation points for one training run."""

    interior: np.ndarray
    boundary: np.ndarray
    mode: str
    seed: int
    boundary_values: np.ndarray | None = None

    @property
    def n_interior(self) -> int:
        return self.interior.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary.shape[0]


def build_sample_set(domain: BoxDomain, n_interior: int, mode: str,
                     per_piece: int, seed=0) -> SampleSet:
    """Draw interior then boundary points from one seeded stream."""
    rng = _as_rng(seed)
    interior = sample_interior(domain, n_interior, rng)
    boundary = sample_boundary(domain, mode, per_piece, rng)
    return SampleSet(interior=interior, boundary=boundary, mode=mode,
                     seed=seed if isinstance(seed, int) else -1)


# -- corner diagnostics ----------------------------------------------------


@dataclass(frozen=True)
class CornerEntry:
    corner: tuple[float, ...]
    values: tuple[tuple[str, float], ...]  # (piece label, value) per governing piece
    mismatch: float  # max pairwise discrepancy


@dataclass
class CornerReport:
    tol: float
    entries: list[CornerEntry] = field(default_factory=list)

    @property
    def mismatched(self) -> list[CornerEntry]:
        return [e for e in self.entries if e.mismatch > self.tol]

    @property
    def max_mismatch(self) -> float:
        return max((e.mismatch for e in self.entries), default=0.0)

    @property
    def consistent(self) -> bool:
        return not self.mismatched


def check_corner_consistency(boundary, domain: BoxDomain, tol: float = 1e-9) -> CornerReport:
    """Evaluate every piece of ``boundary`` at every corner it touches.

    A mismatch means the frame is disconnected there: two declared pieces
    meet at that corner with different values. Single-formula boundaries
    trivially report no mismatches.
    """
    report = CornerReport(tol=tol)
    for corner in corner_points(domain):
        try:
            values = boundary.piece_values(corner)
        except EvaluationError as exc:
            raise EvaluationError(f"at corner {tuple(corner)}: {exc}") from exc
        vals = [v for _, v in values]
        mismatch = max(vals) - min(vals) if len(vals) > 1 else 0.0
        report.entries.append(CornerEntry(tuple(float(c) for c in corner),
                                          tuple(values), mismatch))
    return report

"""Domain types: interest points, model chains, scene blocks and parameters.

Node indices are 0-based throughout the package. The dummy assignment is
represented by the module constant :data:`EPS` (``-1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EPS = -1
"""Dummy assignment token: the model node is matched to nothing."""


class ChainMatchError(Exception):
    """Base class for all errors raised by this package."""


class EmptyPointSet(ChainMatchError, ValueError):
    pass


class DimensionMismatch(ChainMatchError, ValueError):
    pass


class InvalidAssignment(ChainMatchError, ValueError):
    pass


@dataclass(frozen=True)
class SpaceTimePoint:
    """One detected interest point.

    Attributes:
        frame: temporal coordinate in frames (integer, >= 0).
        x, y: spatial position in pixels.
        saliency: detector confidence.
        features: appearance descriptor.
    """

    frame: int
    x: float
    y: float
    saliency: float
    features: tuple[float, ...]

    def __post_init__(self):
        frame = self.frame
        if isinstance(frame, float):
            if not frame.is_integer():
                raise ValueError(f"frame must be an integer, got {frame!r}")
        frame = int(frame)
        if frame < 0:
            raise ValueError(f"frame must be >= 0, got {frame}")
        object.__setattr__(self, "frame", frame)
        for name in ("x", "y", "saliency"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        feats = tuple(float(v) for v in self.features)
        if len(feats) == 0:
            raise ValueError("features must have at least one component")
        if not all(math.isfinite(v) for v in feats):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", feats)

    @property
    def dim(self) -> int:
        return len(self.features)


def _check_points(points: Sequence[SpaceTimePoint]) -> int:
    if len(points) == 0:
        raise EmptyPointSet("point set is empty")
    dim = points[0].dim
    for p in points:
        if p.dim != dim:
            raise DimensionMismatch(
                f"mixed feature dimensions in point set ({dim} and {p.dim})")
    return dim


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class _PointArrays:
    points: tuple[SpaceTimePoint, ...]
    feature_dim: int
    frames: np.ndarray = field(init=False, repr=False)
    xy: np.ndarray = field(init=False, repr=False)
    features: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = self.points
        object.__setattr__(self, "frames", _readonly(
            np.array([p.frame for p in pts], dtype=np.int64)))
        object.__setattr__(self, "xy", _readonly(
            np.array([(p.x, p.y) for p in pts], dtype=np.float64).reshape(len(pts), 2)))
        object.__setattr__(self, "features", _readonly(
            np.array([p.features for p in pts], dtype=np.float64).reshape(len(pts), self.feature_dim)))

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, n: int) -> SpaceTimePoint:
        return self.points[n]

    def __eq__(self, other):
        return type(self) is type(other) and self.points == other.points \
            and self.feature_dim == other.feature_dim

    def __hash__(self):
        return hash((type(self).__name__, self.points))


class ModelChain(_PointArrays):
    """Single-point-per-frame model with implicit hyperedges (i, i-1, i-2)."""

    def __post_init__(self):
        if len(self.points) == 0:
            raise EmptyPointSet("model chain needs at least one node")
        super().__post_init__()
        if np.any(np.diff(self.frames) <= 0):
            raise ValueError("model chain frames must strictly increase")

    @property
    def M(self) -> int:
        return len(self.points)


class SceneBlock(_PointArrays):
    """Frame-sorted scene points with the frame -> first-node lookup table.

    ``minnode_table[f]`` is the smallest node index whose frame is >= f; the
    table covers frames ``0 .. last_frame + 1`` and the last entry equals
    ``S`` (past-the-end sentinel).
    """

    minnode_table: np.ndarray

    def __post_init__(self):
        if len(self.points) == 0:
            raise EmptyPointSet("scene block needs at least one point")
        super().__post_init__()
        if np.any(np.diff(self.frames) < 0):
            raise ValueError("scene points must be sorted by frame")
        last = int(self.frames[-1])
        table = np.searchsorted(self.frames, np.arange(last + 2), side="left")
        object.__setattr__(self, "minnode_table", _readonly(table.astype(np.int64)))

    @property
    def S(self) -> int:
        return len(self.points)

    def minnode(self, f: int) -> int:
        """Smallest node index n with frame(n) >= f, or ``S`` if none."""
        table = self.minnode_table
        if f <= 0:
            return int(table[0])
        if f >= len(table):
            return self.S
        return int(table[f])


def build_model_chain(points: Iterable[SpaceTimePoint]) -> ModelChain:
    """Keep the most salient point of every non-empty frame, ordered by frame.

    Saliency ties keep the earliest point in input order.
    """
    points = list(points)
    dim = _check_points(points)
    best: dict[int, SpaceTimePoint] = {}
    for p in points:
        cur = best.get(p.frame)
        if cur is None or p.saliency > cur.saliency:
            best[p.frame] = p
    nodes = tuple(best[f] for f in sorted(best))
    return ModelChain(nodes, dim)


def build_scene_block(points: Iterable[SpaceTimePoint]) -> SceneBlock:
    """Stable-sort scene points by frame and build the minnode table."""
    points = list(points)
    dim = _check_points(points)
    ordered = tuple(sorted(points, key=lambda p: p.frame))
    return SceneBlock(ordered, dim)


@dataclass(frozen=True)
class EnergyParams:
    """Weights of the matching energy.

    ``lambda1`` scales the appearance sum, ``lambda2`` the distortion sum and
    ``lambda3`` the spatial part inside each distortion term. ``T`` is the
    temporal closeness window in frames and ``Wd`` the dummy penalty.
    """

    lambda1: float = 0.6
    lambda2: float = 0.2
    lambda3: float = 5.0
    T: int = 10
    Wd: float = 1.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "Wd"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be an integer >= 1, got {self.T}")
        object.__setattr__(self, "T", int(self.T))

"""Matching energy: appearance, temporal and angular distortion terms.

The energy of an assignment ``z`` (one scene node or :data:`EPS` per model
node) is::

    E(z) = lambda1 * sum_i U(z_i) + lambda2 * sum_{i>=2} D(z_i, z_{i-1}, z_{i-2})

with ``D = Dt + lambda3 * Dg``. Any triple containing a dummy contributes no
distortion; the whole cost of a dummy is carried by ``U = Wd``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import (EPS, DimensionMismatch, EnergyParams, InvalidAssignment,
                   ModelChain, SceneBlock, SpaceTimePoint)


def _as_array(p: SpaceTimePoint) -> np.ndarray:
    return np.asarray(p.features, dtype=np.float64)


def unary_cost(model_node: SpaceTimePoint, scene_node: SpaceTimePoint | None,
               params: EnergyParams) -> float:
    """Euclidean feature distance, or ``Wd`` when ``scene_node`` is None."""
    if scene_node is None:
        return params.Wd
    if model_node.dim != scene_node.dim:
        raise DimensionMismatch(
            f"feature dimensions differ ({model_node.dim} vs {scene_node.dim})")
    return float(K.feature_distance(_as_array(model_node), _as_array(scene_node)))


def temporal_delta(ti: float, tj: float, tzi: float, tzj: float) -> float:
    return abs((ti - tj) - (tzi - tzj))


def spatial_angle(p: SpaceTimePoint, at_vertex: SpaceTimePoint,
                  q: SpaceTimePoint) -> float:
    """Angle in [0, pi] at ``at_vertex`` between the rays to ``p`` and ``q``.

    Returns 0 when either ray is degenerate (coincident points).
    """
    return float(K.spatial_angle(p.x, p.y, at_vertex.x, at_vertex.y, q.x, q.y))


def angle_difference_norm(model_angles: tuple[float, float],
                          scene_angles: tuple[float, float]) -> float:
    """L2 norm of two angle differences, each wrapped into [-pi, pi]."""
    return float(K.angle_pair_distance(model_angles[0], model_angles[1],
                                       scene_angles[0], scene_angles[1]))


def _triangle_angles(pi: SpaceTimePoint, pj: SpaceTimePoint,
                     pk: SpaceTimePoint) -> tuple[float, float]:
    # angle at j for (i, j, k), then angle at i for (j, i, k)
    return spatial_angle(pi, pj, pk), spatial_angle(pj, pi, pk)


def geometric_distortion(model_triple: tuple[int, int, int],
                         scene_triple: tuple[int, int, int],
                         model: ModelChain, scene: SceneBlock) -> float:
    i, j, k = model_triple
    zi, zj, zk = scene_triple
    m = _triangle_angles(model[i], model[j], model[k])
    s = _triangle_angles(scene[zi], scene[zj], scene[zk])
    return angle_difference_norm(m, s)


def ternary_cost(i: int, scene_triple: tuple[int, int, int],
                 model: ModelChain, scene: SceneBlock,
                 params: EnergyParams) -> float:
    """Distortion ``D`` of model hyperedge (i, i-1, i-2) under ``scene_triple``.

    ``scene_triple`` is ``(z_i, z_{i-1}, z_{i-2})``; a dummy anywhere gives 0.
    """
    if i < 2 or i >= model.M:
        raise IndexError(f"hyperedge index {i} outside 2..{model.M - 1}")
    c, a, b = scene_triple
    if EPS in (c, a, b):
        return 0.0
    mt = model.frames
    st, sxy = scene.frames, scene.xy
    m1, m2 = _triangle_angles(model[i], model[i - 1], model[i - 2])
    return float(K.distortion(
        float(mt[i] - mt[i - 1]), float(mt[i - 1] - mt[i - 2]), m1, m2,
        st[c], st[a], st[b],
        sxy[c, 0], sxy[c, 1], sxy[a, 0], sxy[a, 1], sxy[b, 0], sxy[b, 1],
        params.lambda3))


def is_feasible(z: Sequence[int], scene: SceneBlock, T: int | None) -> bool:
    """Local ordering and closeness over every pair at chain distance 1 or 2.

    Real assignments two or fewer nodes apart must have strictly increasing
    node indices and lie less than ``T`` frames apart (the latter skipped when
    ``T`` is None). Dummies impose nothing.
    """
    frames = scene.frames
    for i, zi in enumerate(z):
        if zi == EPS:
            continue
        for back in (1, 2):
            if i - back < 0:
                continue
            zj = z[i - back]
            if zj == EPS:
                continue
            if zj >= zi:
                return False
            if T is not None and frames[zi] >= frames[zj] + T:
                return False
    return True


def _validate(z: Sequence[int], model: ModelChain, scene: SceneBlock) -> None:
    if len(z) != model.M:
        raise InvalidAssignment(f"assignment has {len(z)} entries, model has {model.M}")
    for v in z:
        if v != EPS and not 0 <= v < scene.S:
            raise InvalidAssignment(f"scene node {v} outside 0..{scene.S - 1}")
    if model.feature_dim != scene.feature_dim:
        raise DimensionMismatch(
            f"model and scene feature dimensions differ "
            f"({model.feature_dim} vs {scene.feature_dim})")


def chain_energy(z: Sequence[int], model: ModelChain, scene: SceneBlock,
                 params: EnergyParams, check_feasible: bool = True) -> float:
    """Total matching energy of assignment ``z``.

    Raises InvalidAssignment for malformed assignments and, unless
    ``check_feasible`` is False, for ones violating the ordering/closeness
    constraints.
    """
    z = [int(v) for v in z]
    _validate(z, model, scene)
    if check_feasible and not is_feasible(z, scene, params.T):
        raise InvalidAssignment(f"assignment {z} violates ordering/closeness constraints")
    u = 0.0
    for i, zi in enumerate(z):
        u += unary_cost(model[i], None if zi == EPS else scene[zi], params)
    d = 0.0
    for i in range(2, model.M):
        d += ternary_cost(i, (z[i], z[i - 1], z[i - 2]), model, scene, params)
    return params.lambda1 * u + params.lambda2 * d


def appearance_sum(z: Sequence[int], model: ModelChain, scene: SceneBlock,
                   params: EnergyParams) -> float:
    """Unweighted sum of unary terms along ``z``."""
    total = 0.0
    for i, zi in enumerate(z):
        total += unary_cost(model[i], None if zi == EPS else scene[zi], params)
    return total


@dataclass(frozen=True, eq=False)
class UnaryTable:
    """S x M look-up table of feature distances (scene node, model node)."""

    values: np.ndarray
    evaluations: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __getitem__(self, idx):
        return self.values[idx]


def precompute_unary_table(model: ModelChain, scene: SceneBlock,
                           params: EnergyParams | None = None) -> UnaryTable:
    if model.feature_dim != scene.feature_dim:
        raise DimensionMismatch(
            f"model and scene feature dimensions differ "
            f"({model.feature_dim} vs {scene.feature_dim})")
    values = K.unary_table(model.features, scene.features)
    values.flags.writeable = False
    return UnaryTable(values, evaluations=scene.S * model.M)

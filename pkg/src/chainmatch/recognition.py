"""Nearest-prototype classification and scene stream blocking."""

from __future__ import annotations

from collections import Counter as _Tally
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (ChainMatchError, DimensionMismatch, EnergyParams,
                   ModelChain, SceneBlock, SpaceTimePoint, build_scene_block)
from .energy import appearance_sum
from .solver import MatchResult, SolverConfig, solve_parallel, solve_sequential


class EmptyDictionary(ChainMatchError, ValueError):
    pass


@dataclass(frozen=True)
class PrototypeSet:
    prototypes: tuple[tuple[str, ModelChain], ...]

    def __post_init__(self):
        protos = tuple((str(label), chain) for label, chain in self.prototypes)
        if not protos:
            raise EmptyDictionary("prototype dictionary is empty")
        dims = {chain.feature_dim for _, chain in protos}
        if len(dims) != 1:
            raise DimensionMismatch(f"prototypes have mixed feature dimensions {sorted(dims)}")
        for label, _ in protos:
            if not label:
                raise ValueError("prototype labels must be non-empty")
        object.__setattr__(self, "prototypes", protos)

    @property
    def feature_dim(self) -> int:
        return self.prototypes[0][1].feature_dim

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.prototypes]

    def __len__(self) -> int:
        return len(self.prototypes)


@dataclass(frozen=True)
class BlockingPolicy:
    block_frames: int = 60
    stride_frames: int = 30

    def __post_init__(self):
        if not 1 <= self.stride_frames <= self.block_frames:
            raise ValueError(
                f"need 1 <= stride ({self.stride_frames}) <= block ({self.block_frames})")


def appearance_distance(result: MatchResult, model: ModelChain, scene: SceneBlock,
                        params: EnergyParams) -> float:
    """Sum of raw unary terms along the matched assignment (no lambda1)."""
    return appearance_sum(result.assignment, model, scene, params)


def classify(scene: SceneBlock, prototypes: PrototypeSet,
             params: EnergyParams | None = None,
             config: SolverConfig | None = None,
             normalize: bool = False) -> tuple[str, list[tuple[str, float]]]:
    """Label of the prototype with the smallest appearance distance.

    Ties go to the earliest prototype. With ``normalize`` the distance is
    divided by the prototype length.
    """
    params = params or EnergyParams()
    config = config or SolverConfig()
    if len(prototypes.prototypes) == 0:
        raise EmptyDictionary("prototype dictionary is empty")
    if prototypes.feature_dim != scene.feature_dim:
        raise DimensionMismatch(
            f"dictionary features have {prototypes.feature_dim} components, "
            f"scene has {scene.feature_dim}")
    solve = solve_parallel if config.parallelism > 1 else solve_sequential
    scores = []
    for label, chain in prototypes.prototypes:
        result = solve(chain, scene, params, config)
        dist = appearance_distance(result, chain, scene, params)
        if normalize:
            dist /= chain.M
        scores.append((label, dist))
    best = min(range(len(scores)), key=lambda k: (scores[k][1], k))
    return scores[best][0], scores


def block_starts(first: int, last: int, policy: BlockingPolicy) -> list[int]:
    """Start frames of the windows covering ``first .. last``.

    Windows advance by the stride and stop at the first one reaching ``last``.
    """
    starts = [first]
    while starts[-1] + policy.block_frames - 1 < last:
        starts.append(starts[-1] + policy.stride_frames)
    return starts


def split_blocks(points: Iterable[SpaceTimePoint],
                 policy: BlockingPolicy | None = None) -> list[SceneBlock]:
    """Cut a point stream into (possibly overlapping) blocks of frames.

    Frames inside each block are shifted so the block starts at frame 0.
    Windows without any point are dropped.
    """
    policy = policy or BlockingPolicy()
    return [block for _, block in split_blocks_with_starts(points, policy)]


def split_blocks_with_starts(points: Iterable[SpaceTimePoint],
                             policy: BlockingPolicy) -> list[tuple[int, SceneBlock]]:
    points = list(points)
    if not points:
        return []
    frames = [p.frame for p in points]
    out = []
    for start in block_starts(min(frames), max(frames), policy):
        stop = start + policy.block_frames
        inside = [SpaceTimePoint(p.frame - start, p.x, p.y, p.saliency, p.features)
                  for p in points if start <= p.frame < stop]
        if inside:
            out.append((start, build_scene_block(inside)))
    return out


def majority_label(labels: Sequence[str], order: Sequence[str]) -> str:
    """Most frequent label; ties go to the label listed first in ``order``."""
    tally = _Tally(labels)
    rank = {label: k for k, label in reversed(list(enumerate(order)))}
    return min(tally, key=lambda label: (-tally[label], rank.get(label, len(rank))))

"""Seeded generators for planted matching instances.

Randomness comes from :class:`PortableRNG`, which draws raw 64-bit words from
the Philox4x64-10 counter-based generator (key = seed, counter starting at
zero) and converts them with fixed, documented formulas:

* uniform in [0, 1):  ``(word >> 11) * 2**-53``
* integer in [lo, hi]: ``lo + floor(uniform * (hi - lo + 1))``
* standard normal:     Box-Muller on two consecutive uniforms ``u1, u2``:
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``

so any implementation of Philox4x64-10 reproduces the same instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (ChainMatchError, ModelChain, SceneBlock, SpaceTimePoint,
                   build_model_chain, build_scene_block)

_TWO_M53 = 2.0 ** -53


class InvalidSpec(ChainMatchError, ValueError):
    pass


class PortableRNG:
    def __init__(self, seed: int):
        self._bits = np.random.Philox(key=int(seed) & (2 ** 64 - 1))

    def uniform(self, n: int) -> np.ndarray:
        if n == 0:
            return np.empty(0)
        raw = self._bits.random_raw(n).astype(np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def integers(self, lo: int, hi: int, n: int) -> np.ndarray:
        u = self.uniform(n)
        return lo + np.floor(u * (hi - lo + 1)).astype(np.int64)

    def normal(self, n: int) -> np.ndarray:
        u = self.uniform(2 * n).reshape(n, 2) if n else np.empty((0, 2))
        return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * math.pi * u[:, 1])


@dataclass(frozen=True)
class PerturbSpec:
    """How a planted copy of a model is distorted and hidden in clutter."""

    time_shift: int = 0
    max_warp_per_step: int = 0
    spatial_noise_sigma: float = 0.0
    feature_noise_sigma: float = 0.0
    clutter_points: int = 0
    clutter_feature_scale: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.max_warp_per_step < 0:
            raise InvalidSpec("max_warp_per_step must be >= 0")
        if self.spatial_noise_sigma < 0 or self.feature_noise_sigma < 0:
            raise InvalidSpec("noise sigmas must be >= 0")
        if self.clutter_points < 0:
            raise InvalidSpec("clutter_points must be >= 0")


def _planted_frames(model: ModelChain, spec: PerturbSpec, T: int,
                    warps: np.ndarray) -> list[int]:
    """Shifted, warped planted frames.

    A step's warp is kept only if the warped gap stays >= 1 and both two-step
    spans through it stay below ``T``; otherwise the model gap is used, which
    is always valid once the model itself fits the window.
    """
    first = int(model.frames[0]) + spec.time_shift
    if first < 0:
        raise InvalidSpec(f"time shift {spec.time_shift} moves frames below 0")
    gaps = [int(g) for g in np.diff(model.frames)]
    for k, g in enumerate(gaps):
        span = g + (gaps[k - 1] if k else 0)
        if span >= T:
            raise InvalidSpec(f"model frames around node {k + 1} span {span} >= T = {T}")
    warped: list[int] = []
    for k, g in enumerate(gaps):
        h = g + int(warps[k])
        prev = warped[k - 1] if k else 0
        nxt = gaps[k + 1] if k + 1 < len(gaps) else 0
        warped.append(h if h >= 1 and h + prev < T and h + nxt < T else g)
    return [first + int(v) for v in np.concatenate([[0], np.cumsum(warped, dtype=np.int64)])]


def gen_instance(model: ModelChain, spec: PerturbSpec,
                 T: int = 10) -> tuple[SceneBlock, tuple[int, ...]]:
    """Plant a perturbed copy of ``model`` in a cluttered scene.

    Draw order: ``M-1`` warp integers, ``2M`` spatial normals, ``M*F``
    feature normals, then for the clutter ``K`` frames, ``2K`` position
    uniforms, ``K`` saliencies and ``K*F`` feature normals. Planted points come
    first in the point list, so they precede clutter of the same frame after
    the stable frame sort. Returns the scene and the scene node planted for
    every model node.
    """
    if spec.max_warp_per_step >= T:
        raise InvalidSpec(f"max_warp_per_step {spec.max_warp_per_step} >= T = {T}")
    rng = PortableRNG(spec.seed)
    M, F = model.M, model.feature_dim
    w = spec.max_warp_per_step
    warps = rng.integers(-w, w, M - 1)
    frames = _planted_frames(model, spec, T, warps)
    xy = model.xy + spec.spatial_noise_sigma * rng.normal(2 * M).reshape(M, 2)
    feats = model.features + spec.feature_noise_sigma * rng.normal(M * F).reshape(M, F)
    points = [SpaceTimePoint(frames[i], xy[i, 0], xy[i, 1], model[i].saliency, feats[i])
              for i in range(M)]

    K = spec.clutter_points
    if K:
        cf = rng.integers(frames[0], frames[-1], K)
        lo, hi = model.xy.min(axis=0), model.xy.max(axis=0)
        span = np.maximum(hi - lo, 1.0)
        cxy = lo + span * rng.uniform(2 * K).reshape(K, 2)
        sal = rng.uniform(K)
        cfeat = spec.clutter_feature_scale * rng.normal(K * F).reshape(K, F)
        points += [SpaceTimePoint(int(cf[k]), cxy[k, 0], cxy[k, 1], sal[k], cfeat[k])
                   for k in range(K)]

    order = sorted(range(len(points)), key=lambda n: points[n].frame)
    position = {n: pos for pos, n in enumerate(order)}
    scene = build_scene_block(points)
    truth = tuple(position[i] for i in range(M))
    return scene, truth


def random_model(M: int, F: int, seed: int, max_gap: int = 1,
                 width: float = 160.0, height: float = 120.0,
                 first_frame: int = 0) -> ModelChain:
    """Random single-point-per-frame chain with frame gaps in 1..max_gap.

    Positions are uniform in the image, features standard normal.
    """
    rng = PortableRNG(seed)
    gaps = rng.integers(1, max_gap, M - 1) if M > 1 else np.empty(0, dtype=np.int64)
    frames = first_frame + np.concatenate([[0], np.cumsum(gaps)]).astype(np.int64)
    pos = rng.uniform(2 * M).reshape(M, 2) * (width, height)
    sal = rng.uniform(M)
    feats = rng.normal(M * F).reshape(M, F)
    return build_model_chain(
        SpaceTimePoint(int(frames[i]), pos[i, 0], pos[i, 1], sal[i], feats[i])
        for i in range(M))


def random_scene(S: int, n_frames: int, F: int, seed: int,
                 width: float = 160.0, height: float = 120.0,
                 feature_scale: float = 1.0) -> SceneBlock:
    """``S`` random points over frames ``0 .. n_frames-1``.

    When ``S >= n_frames`` every frame receives at least one point.
    """
    rng = PortableRNG(seed)
    if S >= n_frames:
        frames = np.concatenate([np.arange(n_frames), rng.integers(0, n_frames - 1, S - n_frames)])
    else:
        frames = rng.integers(0, n_frames - 1, S)
    pos = rng.uniform(2 * S).reshape(S, 2) * (width, height)
    sal = rng.uniform(S)
    feats = feature_scale * rng.normal(S * F).reshape(S, F)
    return build_scene_block(
        SpaceTimePoint(int(frames[n]), pos[n, 0], pos[n, 1], sal[n], feats[n])
        for n in range(S))


def bench_instance(M: int, S: int, F: int, seed: int,
                   n_frames: int | None = None) -> tuple[ModelChain, SceneBlock]:
    """Model of M consecutive frames and a scene of S points over ``n_frames``
    frames (default S) carrying a noisy planted copy when S >= M."""
    n_frames = S if n_frames is None else n_frames
    model = random_model(M, F, seed)
    background = random_scene(S, n_frames, F, seed + 1, feature_scale=10.0)
    if S < M or n_frames < M:
        return model, background
    rng = PortableRNG(seed + 2)
    offset = int(rng.integers(0, n_frames - M, 1)[0])
    noise = rng.normal(M * F).reshape(M, F) * 0.05
    pts = list(background.points)
    # overwrite the first node of each planted frame
    for i in range(M):
        n = background.minnode(offset + i)
        src = model[i]
        pts[n] = SpaceTimePoint(offset + i, src.x, src.y, src.saliency,
                                np.asarray(src.features) + noise[i])
    return model, build_scene_block(pts)

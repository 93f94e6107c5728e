"""Exhaustive verification oracle.

Enumerates every assignment of the feasible set level by level with numpy,
scores all of them with a vectorised energy written independently of the
trellis kernels, and returns the lexicographically first minimiser (real
nodes ascending, then the dummy).
"""

from __future__ import annotations

import time

import numpy as np

from .core import (EPS, ChainMatchError, DimensionMismatch, EnergyParams,
                   ModelChain, SceneBlock)
from .solver import Counters, MatchResult

ORACLE_LIMIT = 10 ** 7
_CHUNK = 1 << 20


class OracleSizeExceeded(ChainMatchError):
    pass


def _feasible_assignments(S: int, M: int, frames: np.ndarray,
                          T: int | None) -> np.ndarray:
    """All feasible assignments as an (N, M) array, dummy encoded as S."""
    values = np.arange(S + 1)
    Z = values[:, None].copy()
    for i in range(1, M):
        n = Z.shape[0]
        prefix = np.repeat(Z, S + 1, axis=0)
        new = np.tile(values, n)
        ok = np.ones(prefix.shape[0], dtype=bool)
        real = new < S
        for back in (1, 2):
            if i - back < 0:
                continue
            old = prefix[:, i - back]
            both = real & (old < S)
            bad = both & (old >= new)
            if T is not None:
                ft_new = frames[np.minimum(new, S - 1)]
                ft_old = frames[np.minimum(old, S - 1)]
                bad |= both & (ft_new >= ft_old + T)
            ok &= ~bad
        Z = np.column_stack([prefix[ok], new[ok]])
    return Z


def _all_assignments(S: int, M: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, M), dtype=np.int64)
    for i in range(M - 1, -1, -1):
        out[:, i] = idx % (S + 1)
        idx //= S + 1
    return out


def _angles(px, py, vx, vy, qx, qy):
    ux, uy = px - vx, py - vy
    wx, wy = qx - vx, qy - vy
    degenerate = ((ux == 0) & (uy == 0)) | ((wx == 0) & (wy == 0))
    ang = np.arctan2(np.abs(ux * wy - uy * wx), ux * wx + uy * wy)
    return np.where(degenerate, 0.0, ang)


def _wrap(d):
    return np.where(d > np.pi, d - 2 * np.pi, np.where(d < -np.pi, d + 2 * np.pi, d))


class _Scorer:
    def __init__(self, model: ModelChain, scene: SceneBlock, params: EnergyParams):
        self.p = params
        diff = scene.features[:, None, :] - model.features[None, :, :]
        u = np.sqrt((diff ** 2).sum(axis=2))
        self.U = np.vstack([u, np.full((1, model.M), params.Wd)])
        self.t = scene.frames.astype(np.float64)
        self.xy = scene.xy
        self.mt = model.frames.astype(np.float64)
        self.mxy = model.xy
        self.S = scene.S

    def energies(self, Z: np.ndarray) -> np.ndarray:
        p, S = self.p, self.S
        M = Z.shape[1]
        cols = np.arange(M)
        unary = self.U[Z, cols].sum(axis=1)
        dist = np.zeros(Z.shape[0])
        mxy, mt = self.mxy, self.mt
        for i in range(2, M):
            c, a, b = Z[:, i], Z[:, i - 1], Z[:, i - 2]
            real = (c < S) & (a < S) & (b < S)
            if not real.any():
                continue
            c, a, b = c[real], a[real], b[real]
            t, xy = self.t, self.xy
            dt = (np.abs((mt[i] - mt[i - 1]) - (t[c] - t[a]))
                  + np.abs((mt[i - 1] - mt[i - 2]) - (t[a] - t[b])))
            m1 = _angles(mxy[i, 0], mxy[i, 1], mxy[i - 1, 0], mxy[i - 1, 1],
                         mxy[i - 2, 0], mxy[i - 2, 1])
            m2 = _angles(mxy[i - 1, 0], mxy[i - 1, 1], mxy[i, 0], mxy[i, 1],
                         mxy[i - 2, 0], mxy[i - 2, 1])
            s1 = _angles(xy[c, 0], xy[c, 1], xy[a, 0], xy[a, 1], xy[b, 0], xy[b, 1])
            s2 = _angles(xy[a, 0], xy[a, 1], xy[c, 0], xy[c, 1], xy[b, 0], xy[b, 1])
            dg = np.hypot(_wrap(m1 - s1), _wrap(m2 - s2))
            dist[real] += dt + p.lambda3 * dg
        return p.lambda1 * unary + p.lambda2 * dist


def solve_bruteforce(model: ModelChain, scene: SceneBlock,
                     params: EnergyParams | None = None,
                     constraints: str = "full",
                     limit: int = ORACLE_LIMIT) -> MatchResult:
    """Exact minimum of the chain energy by exhaustive enumeration.

    ``constraints`` selects the feasible set: ``"full"`` (ordering and the
    closeness window ``T``), ``"order"`` (ordering only) or ``"none"`` (every
    assignment, the set explored by the unpruned trellis).
    """
    params = params or EnergyParams()
    if constraints not in ("full", "order", "none"):
        raise ValueError(f"unknown constraint set {constraints!r}")
    if model.feature_dim != scene.feature_dim:
        raise DimensionMismatch("model and scene feature dimensions differ")
    S, M = scene.S, model.M
    if (S + 1) ** M > limit:
        raise OracleSizeExceeded(f"(S+1)^M = {(S + 1) ** M} exceeds {limit}")
    t0 = time.perf_counter()
    scorer = _Scorer(model, scene, params)
    best_e, best_z, n_seen = np.inf, None, 0
    if constraints == "none":
        total = (S + 1) ** M
        for start in range(0, total, _CHUNK):
            Z = _all_assignments(S, M, start, min(total, start + _CHUNK))
            e = scorer.energies(Z)
            k = int(np.argmin(e))
            if e[k] < best_e:
                best_e, best_z = float(e[k]), Z[k]
            n_seen += Z.shape[0]
    else:
        T = params.T if constraints == "full" else None
        Z = _feasible_assignments(S, M, scene.frames, T)
        e = scorer.energies(Z)
        k = int(np.argmin(e))
        best_e, best_z, n_seen = float(e[k]), Z[k], Z.shape[0]
    z = tuple(EPS if v == S else int(v) for v in best_z)
    counters = Counters(init_evaluations=n_seen)
    return MatchResult(z, best_e, counters, time.perf_counter() - t0)


def enumerate_energies(model: ModelChain, scene: SceneBlock,
                       params: EnergyParams | None = None,
                       constraints: str = "full",
                       limit: int = ORACLE_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Every assignment of the chosen feasible set with its energy.

    Rows come in lexicographic order with the dummy encoded as ``EPS``.
    """
    params = params or EnergyParams()
    S, M = scene.S, model.M
    if (S + 1) ** M > limit:
        raise OracleSizeExceeded(f"(S+1)^M = {(S + 1) ** M} exceeds {limit}")
    if constraints == "none":
        Z = _all_assignments(S, M, 0, (S + 1) ** M)
    elif constraints in ("full", "order"):
        Z = _feasible_assignments(S, M, scene.frames, params.T if constraints == "full" else None)
    else:
        raise ValueError(f"unknown constraint set {constraints!r}")
    e = _Scorer(model, scene, params).energies(Z)
    return np.where(Z == S, EPS, Z), e


def feasible_count(model: ModelChain, scene: SceneBlock,
                   params: EnergyParams, constraints: str = "full") -> int:
    if constraints == "none":
        return (scene.S + 1) ** model.M
    T = params.T if constraints == "full" else None
    return _feasible_assignments(scene.S, model.M, scene.frames, T).shape[0]

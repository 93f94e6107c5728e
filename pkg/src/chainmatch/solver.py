"""Exact second-order trellis solver with pruning and layer-parallel filling.

The trellis holds, for every model node ``i >= 2``, a table
``alpha_i(z_{i-1}, z_{i-2})`` of partial minima and the matching argmin table
``beta_i``. With pruning enabled only the admissible band of each row is
stored: for a real ``z_{i-1} = a`` the admissible real ``z_{i-2}`` form the
contiguous range ``[lo[a], a)``, plus one dummy slot. The row ``z_{i-1} = EPS``
is kept densely. Without pruning the band spans every scene node, which is
exactly the dense ``S' x S'`` layout (``S' = S + 1``).
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import (EPS, DimensionMismatch, EnergyParams, ModelChain,
                   SceneBlock)
from .energy import UnaryTable, precompute_unary_table


@dataclass(frozen=True)
class SolverConfig:
    parallelism: int = 1
    use_pruning: bool = True
    use_unary_table: bool = True
    instrumentation: bool = True

    def __post_init__(self):
        if int(self.parallelism) < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")


@dataclass
class Counters:
    """Work counters for one solve.

    ``cells_computed`` counts trellis cells whose minimisation ran (dummy
    cells included), ``real_cells`` the subset with both predecessors real.
    ``min_iterations`` counts candidate evaluations inside those cells and
    ``init_evaluations`` the candidate pairs of the initial (z_0, z_1) search.
    ``unary_evaluations`` counts feature-distance computations.
    """

    cells_computed: int = 0
    real_cells: int = 0
    min_iterations: int = 0
    unary_evaluations: int = 0
    init_evaluations: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "cellsComputed": self.cells_computed,
            "realCells": self.real_cells,
            "minIterations": self.min_iterations,
            "unaryEvaluations": self.unary_evaluations,
            "initEvaluations": self.init_evaluations,
        }


@dataclass(eq=False)
class Trellis:
    """Banded storage of all alpha/beta layers of one solve.

    ``alpha_band[l]`` / ``beta_band[l]`` belong to model node ``l + 2``.
    Internally the dummy is index ``S``; :meth:`dense_alpha` and
    :meth:`dense_beta` expose ordinary ``S' x S'`` views indexed
    ``[z_{i-1}, z_{i-2}]`` with the dummy in the last row/column.
    """

    S: int
    M: int
    lo: np.ndarray
    width: np.ndarray
    W: int
    alpha_band: np.ndarray
    alpha_eps: np.ndarray
    beta_band: np.ndarray
    beta_eps: np.ndarray

    @classmethod
    def allocate(cls, model: ModelChain, scene: SceneBlock,
                 params: EnergyParams, pruned: bool) -> "Trellis":
        S, M = scene.S, model.M
        if pruned:
            nodes = np.arange(S)
            lo = np.array([scene.minnode(int(t) - params.T + 1) for t in scene.frames],
                          dtype=np.int64)
            width = nodes - lo
        else:
            lo = np.zeros(S, dtype=np.int64)
            width = np.full(S, S, dtype=np.int64)
        W = int(width.max()) + 1 if S else 1
        L = max(M - 2, 0)
        return cls(
            S=S, M=M, lo=lo, width=width, W=W,
            alpha_band=np.empty((L, S, W)),
            alpha_eps=np.empty((L, S + 1)),
            beta_band=np.empty((L, S, W), dtype=np.int64),
            beta_eps=np.empty((L, S + 1), dtype=np.int64),
        )

    @property
    def stored_cells(self) -> int:
        return self.alpha_band.size + self.alpha_eps.size

    def _slot(self, i: int) -> int:
        if not 2 <= i < self.M:
            raise IndexError(f"no trellis layer for model node {i}")
        return i - 2

    def _internal(self, z: int) -> int:
        return self.S if z == EPS else z

    def value(self, i: int, z_prev: int, z_prev_prev: int) -> float:
        l = self._slot(i)
        return float(K.band_lookup(self.alpha_band[l], self.alpha_eps[l], self.lo,
                                   self.width, self.S, self.W,
                                   self._internal(z_prev), self._internal(z_prev_prev)))

    def argmin(self, i: int, z_prev: int, z_prev_prev: int) -> int:
        """Stored best z_i for the cell, EPS for the dummy."""
        l = self._slot(i)
        a, b = self._internal(z_prev), self._internal(z_prev_prev)
        if a == self.S:
            c = self.beta_eps[l, b]
        elif b == self.S:
            c = self.beta_band[l, a, self.W - 1]
        else:
            k = b - self.lo[a]
            if not 0 <= k < self.width[a]:
                raise KeyError(f"cell ({z_prev}, {z_prev_prev}) is not admissible")
            c = self.beta_band[l, a, k]
        return EPS if c == self.S else int(c)

    def admissible_mask(self) -> np.ndarray:
        """Boolean S' x S' mask of stored cells (identical for every layer)."""
        S = self.S
        mask = np.zeros((S + 1, S + 1), dtype=bool)
        for a in range(S):
            mask[a, self.lo[a]:self.lo[a] + self.width[a]] = True
        mask[:, S] = True
        mask[S, :] = True
        return mask

    def dense_alpha(self, i: int) -> np.ndarray:
        l = self._slot(i)
        S = self.S
        out = np.full((S + 1, S + 1), np.inf)
        for a in range(S):
            w, lo = self.width[a], self.lo[a]
            out[a, lo:lo + w] = self.alpha_band[l, a, :w]
            out[a, S] = self.alpha_band[l, a, self.W - 1]
        out[S, :] = self.alpha_eps[l]
        return out

    def dense_beta(self, i: int) -> np.ndarray:
        """S' x S' argmin table with -1 outside the admissible cells and the
        dummy encoded as ``S``."""
        l = self._slot(i)
        S = self.S
        out = np.full((S + 1, S + 1), -1, dtype=np.int64)
        for a in range(S):
            w, lo = self.width[a], self.lo[a]
            out[a, lo:lo + w] = self.beta_band[l, a, :w]
            out[a, S] = self.beta_band[l, a, self.W - 1]
        out[S, :] = self.beta_eps[l]
        return out


@dataclass
class MatchResult:
    assignment: tuple[int, ...]
    energy: float
    counters: Counters = field(default_factory=Counters)
    wall_time: float = field(default=0.0, compare=False)
    trellis: Trellis | None = field(default=None, compare=False, repr=False)


def admissible_pair(z_prev: int, z_prev_prev: int, scene: SceneBlock,
                    params: EnergyParams) -> bool:
    """Whether (z_{i-1}, z_{i-2}) can occur in a feasible assignment."""
    if z_prev == EPS or z_prev_prev == EPS:
        return True
    t = scene.frames
    return z_prev_prev < z_prev and t[z_prev] < t[z_prev_prev] + params.T


def zi_loop_bounds(z_prev: int, z_prev_prev: int, scene: SceneBlock,
                   params: EnergyParams) -> list[int]:
    """Candidate z_i values for predecessors (z_{i-1}, z_{i-2}), dummy last.

    Real candidates form one contiguous node range obtained from the minnode
    table: above the nearest real predecessor and before frame
    ``t'(z_{i-2}) + T`` (``t'(z_{i-1}) + T`` when z_{i-2} is the dummy).
    """
    S = scene.S
    t = scene.frames
    if z_prev != EPS and z_prev_prev != EPS:
        lo = max(scene.minnode(int(t[z_prev])), z_prev + 1)
        hi = scene.minnode(int(t[z_prev_prev]) + params.T)
    elif z_prev_prev != EPS:
        lo = z_prev_prev + 1
        hi = scene.minnode(int(t[z_prev_prev]) + params.T)
    elif z_prev != EPS:
        lo = z_prev + 1
        hi = scene.minnode(int(t[z_prev]) + params.T)
    else:
        lo, hi = 0, S
    return list(range(max(lo, 0), min(hi, S))) + [EPS]


@dataclass(eq=False)
class _Problem:
    """Flat arrays handed to the kernels, prepared once per solve."""

    model: ModelChain
    scene: SceneBlock
    params: EnergyParams
    config: SolverConfig
    utab: np.ndarray
    dt1: np.ndarray
    dt2: np.ndarray
    ang1: np.ndarray
    ang2: np.ndarray
    trellis: Trellis
    counters: Counters

    @classmethod
    def prepare(cls, model, scene, params, config, table: UnaryTable | None = None):
        if model.feature_dim != scene.feature_dim:
            raise DimensionMismatch(
                f"model and scene feature dimensions differ "
                f"({model.feature_dim} vs {scene.feature_dim})")
        counters = Counters()
        if config.use_unary_table:
            if table is None:
                table = precompute_unary_table(model, scene, params)
            utab = table.values
            counters.unary_evaluations += table.evaluations
        else:
            utab = np.empty((0, 0))
        dt1, dt2, ang1, ang2 = K.model_layer_constants(model.frames, model.xy)
        trellis = Trellis.allocate(model, scene, params, config.use_pruning)
        return cls(model, scene, params, config, utab, dt1, dt2, ang1, ang2,
                   trellis, counters)

    def run_rows(self, i: int, start: int, stop: int, eps_row: bool) -> np.ndarray:
        p, s, tr = self.params, self.scene, self.trellis
        return K.compute_rows(
            i, i - 2, self.model.M, start, stop, eps_row,
            s.S, s.frames, s.xy, s.minnode_table,
            self.model.features, s.features, self.utab, self.config.use_unary_table,
            p.lambda1, p.lambda2, p.lambda3, p.Wd, p.T, self.config.use_pruning,
            self.dt1[i], self.dt2[i], self.ang1[i], self.ang2[i],
            tr.alpha_band, tr.alpha_eps, tr.beta_band, tr.beta_eps,
            tr.lo, tr.width, tr.W)

    def add(self, c: np.ndarray) -> None:
        self.counters.cells_computed += int(c[0])
        self.counters.real_cells += int(c[1])
        self.counters.min_iterations += int(c[2])
        self.counters.unary_evaluations += int(c[3])


def compute_layer(problem: _Problem, i: int, executor: ThreadPoolExecutor | None = None,
                  workers: int = 1) -> None:
    """Fill layer ``i`` of the problem's trellis.

    Rows (fixed z_{i-1}) are split into contiguous blocks handed to
    ``executor``; the call returns only once every block is written, which is
    the barrier between consecutive layers. Each cell is computed by the same
    code in the same order whatever the partition.
    """
    S = problem.scene.S
    if executor is None or workers <= 1:
        problem.add(problem.run_rows(i, 0, S, True))
        return
    n_blocks = min(S, 4 * workers) or 1
    edges = np.linspace(0, S, n_blocks + 1).astype(int)
    futures = [executor.submit(problem.run_rows, i, int(lo), int(hi), False)
               for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    futures.append(executor.submit(problem.run_rows, i, 0, 0, True))
    for f in futures:
        problem.add(f.result())


def backtrack(problem: _Problem) -> tuple[tuple[int, ...], float]:
    """Initial (z_0, z_1) search followed by argmin lookups along the chain."""
    model, scene, p, cfg = problem.model, problem.scene, problem.params, problem.config
    S, M = scene.S, model.M
    tr = problem.trellis
    if M == 1:
        return _solve_single(problem)
    best, z0, z1, evals, uevals = K.init_search(
        M, S, scene.frames, scene.minnode_table, p.T, cfg.use_pruning,
        model.features, scene.features, problem.utab, cfg.use_unary_table,
        p.lambda1, p.Wd, tr.alpha_band, tr.alpha_eps, tr.lo, tr.width, tr.W)
    problem.counters.init_evaluations += int(evals)
    problem.counters.unary_evaluations += int(uevals)
    z = [int(z0), int(z1)]
    for i in range(2, M):
        a, b = z[i - 1], z[i - 2]
        k = b - tr.lo[a] if (a < S and b < S) else None
        if a == S:
            c = tr.beta_eps[i - 2, b]
        elif b == S:
            c = tr.beta_band[i - 2, a, tr.W - 1]
        else:
            c = tr.beta_band[i - 2, a, k]
        z.append(int(c))
    return tuple(EPS if v == S else v for v in z), float(best)


def _solve_single(problem: _Problem) -> tuple[tuple[int, ...], float]:
    p, scene = problem.params, problem.scene
    best, arg = np.inf, EPS
    for c in range(scene.S):
        if problem.config.use_unary_table:
            u = problem.utab[c, 0]
        else:
            u = K.feature_distance(problem.model.features[0], scene.features[c])
            problem.counters.unary_evaluations += 1
        v = p.lambda1 * u
        if v < best:
            best, arg = v, c
    if p.lambda1 * p.Wd < best:
        best, arg = p.lambda1 * p.Wd, EPS
    problem.counters.init_evaluations += scene.S + 1
    return (arg,), float(best)


def _solve(model, scene, params, config, workers: int) -> MatchResult:
    t0 = time.perf_counter()
    problem = _Problem.prepare(model, scene, params, config)
    M = model.M
    if workers > 1 and M > 2:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for i in range(M - 1, 1, -1):
                compute_layer(problem, i, ex, workers)
    else:
        for i in range(M - 1, 1, -1):
            compute_layer(problem, i)
    z, energy = backtrack(problem)
    wall = time.perf_counter() - t0
    counters = problem.counters if config.instrumentation else Counters()
    return MatchResult(z, energy, counters, wall, problem.trellis)


def solve_sequential(model: ModelChain, scene: SceneBlock,
                     params: EnergyParams | None = None,
                     config: SolverConfig | None = None) -> MatchResult:
    """Fill layers M-1 down to 2 on the calling thread, then backtrack."""
    params = params or EnergyParams()
    config = config or SolverConfig()
    return _solve(model, scene, params, config, workers=1)


def solve_parallel(model: ModelChain, scene: SceneBlock,
                   params: EnergyParams | None = None,
                   config: SolverConfig | None = None) -> MatchResult:
    """Layer-parallel solve with ``config.parallelism`` worker threads.

    Results are bit-identical to :func:`solve_sequential`.
    """
    params = params or EnergyParams()
    config = config or SolverConfig(parallelism=default_parallelism())
    return _solve(model, scene, params, config, workers=config.parallelism)


def default_parallelism() -> int:
    env = os.environ.get("CHAINMATCH_PARALLELISM")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1

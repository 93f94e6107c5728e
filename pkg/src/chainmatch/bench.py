"""Instrumented benchmark harness producing CSV reports."""

from __future__ import annotations

import csv
import io
import logging
import statistics
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

from .core import EnergyParams
from .oracle import ORACLE_LIMIT, solve_bruteforce
from .solver import MatchResult, SolverConfig, solve_parallel, solve_sequential
from .synth import bench_instance

log = logging.getLogger(__name__)

UNPRUNED_LIMIT = 2 * 10 ** 8
"""Largest (M-2)*(S+1)^3 candidate count attempted without pruning."""


@dataclass
class BenchRow:
    implementation: str
    usePruning: bool
    useUnaryTable: bool
    M: int
    S: int
    T: int
    F: int
    parallelism: int
    cellsComputed: int
    minIterations: int
    unaryEvaluations: int
    wallTimeMs: float
    energy: float


COLUMNS = [f.name for f in fields(BenchRow)]


def _row(impl, cfg: SolverConfig, M, S, T, F, times, result: MatchResult) -> BenchRow:
    c = result.counters
    return BenchRow(impl, cfg.use_pruning, cfg.use_unary_table, M, S, T, F,
                    cfg.parallelism, c.cells_computed, c.min_iterations,
                    c.unary_evaluations, statistics.median(times) * 1e3, result.energy)


def _timed(fn, repetitions):
    times, result = [], None
    for _ in range(max(1, repetitions)):
        result = fn()
        times.append(result.wall_time)
    return times, result


def run_suite(Ms: Sequence[int], Ss: Sequence[int], Ts: Sequence[int],
              Fs: Sequence[int] = (162,), parallelisms: Sequence[int] = (1,),
              repetitions: int = 1, seed: int = 0,
              implementations: Iterable[str] = ("sequential", "parallel", "bruteforce"),
              unpruned_limit: int = UNPRUNED_LIMIT,
              oracle_limit: int = ORACLE_LIMIT) -> list[BenchRow]:
    """One row per (instance, configuration).

    Sequential rows cover the four pruning/table combinations, parallel rows
    the pruned+table solver at every worker count, and a brute-force row is
    added when the instance fits the oracle guard. Configurations beyond a
    resource guard are skipped with a warning.
    """
    impls = set(implementations)
    rows: list[BenchRow] = []
    for M in Ms:
        for S in Ss:
            for F in Fs:
                model, scene = bench_instance(M, S, F, seed)
                for T in Ts:
                    params = EnergyParams(T=T)
                    if "sequential" in impls:
                        for pruning in (True, False):
                            if not pruning and (M - 2) * (S + 1) ** 3 > unpruned_limit:
                                log.warning("skipping unpruned M=%d S=%d: above resource guard", M, S)
                                continue
                            for table in (True, False):
                                cfg = SolverConfig(1, pruning, table)
                                times, res = _timed(
                                    lambda: solve_sequential(model, scene, params, cfg), repetitions)
                                rows.append(_row("sequential", cfg, M, S, T, F, times, res))
                    if "parallel" in impls:
                        for q in parallelisms:
                            cfg = SolverConfig(q, True, True)
                            times, res = _timed(
                                lambda: solve_parallel(model, scene, params, cfg), repetitions)
                            rows.append(_row("parallel", cfg, M, S, T, F, times, res))
                    if "bruteforce" in impls:
                        if (S + 1) ** M > oracle_limit:
                            log.warning("skipping bruteforce M=%d S=%d: above oracle guard", M, S)
                        else:
                            cfg = SolverConfig(1, True, False)
                            times, res = _timed(
                                lambda: solve_bruteforce(model, scene, params, limit=oracle_limit),
                                repetitions)
                            res.counters.unary_evaluations = S * M
                            rows.append(_row("bruteforce", cfg, M, S, T, F, times, res))
    return rows


def write_csv(rows: Sequence[BenchRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        d = asdict(r)
        writer.writerow([repr(d[k]) if isinstance(d[k], float) else d[k] for k in COLUMNS])


def to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def read_csv(fh) -> list[BenchRow]:
    reader = csv.DictReader(fh)
    if reader.fieldnames != COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        out.append(BenchRow(
            implementation=rec["implementation"],
            usePruning=rec["usePruning"] == "True",
            useUnaryTable=rec["useUnaryTable"] == "True",
            **{k: int(rec[k]) for k in ("M", "S", "T", "F", "parallelism", "cellsComputed",
                                        "minIterations", "unaryEvaluations")},
            wallTimeMs=float(rec["wallTimeMs"]),
            energy=float(rec["energy"]),
        ))
    return out

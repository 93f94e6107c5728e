import itertools

import numpy as np
import pytest

from chainmatch.core import EPS, EnergyParams, SpaceTimePoint, build_model_chain, build_scene_block
from chainmatch.energy import chain_energy, ternary_cost, unary_cost
from chainmatch.oracle import solve_bruteforce
from chainmatch.solver import (SolverConfig, admissible_pair, solve_parallel,
                               solve_sequential, zi_loop_bounds)
from chainmatch.synth import bench_instance

from conftest import make_points, random_instance


def _scene(frames):
    return build_scene_block([SpaceTimePoint(f, 0.0, 0.0, 1.0, (0.0,)) for f in frames])


def _filter(a, b, scene, T):
    """Brute-force candidate set from the constraint predicate."""
    t = scene.frames
    out = []
    for c in range(scene.S):
        ok = True
        for prev in (a, b):
            if prev == EPS:
                continue
            ok &= c > prev and t[c] < t[prev] + T
        if ok:
            out.append(c)
    return out + [EPS]


class TestAdmissiblePair:
    def test_examples(self):
        scene = _scene([5, 5, 20])
        p = EnergyParams(T=10)
        assert admissible_pair(1, 0, scene, p)
        assert not admissible_pair(2, 0, scene, p)
        assert not admissible_pair(0, 1, scene, p)
        assert admissible_pair(2, EPS, scene, p)
        assert admissible_pair(EPS, EPS, scene, p)


class TestLoopBounds:
    def test_one_node_per_frame(self):
        # node 3 sits in frame 6, node 1 in frame 3
        scene = _scene([0, 3, 4, 6, 7, 8, 9, 10, 11, 12, 13, 14])
        p = EnergyParams(T=10)
        got = zi_loop_bounds(3, 1, scene, p)
        frames = [int(scene.frames[c]) for c in got[:-1]]
        assert frames == [7, 8, 9, 10, 11, 12]
        assert got == _filter(3, 1, scene, 10)

    def test_both_dummy(self):
        scene = _scene([0, 1, 1, 2])
        assert zi_loop_bounds(EPS, EPS, scene, EnergyParams()) == [0, 1, 2, 3, EPS]

    def test_same_frame_and_t1(self):
        scene = _scene([0, 2, 2, 2, 2, 3])
        got = zi_loop_bounds(2, 1, scene, EnergyParams(T=1))
        assert got == [3, 4, EPS]

    def test_empty_range(self):
        scene = _scene([0, 1, 5])
        assert zi_loop_bounds(1, 0, scene, EnergyParams(T=2)) == [EPS]

    def test_against_brute_filter(self, rng):
        for _ in range(20):
            scene = _scene(sorted(rng.integers(0, 12, 14).tolist()))
            T = int(rng.integers(1, 6))
            p = EnergyParams(T=T)
            for a in list(range(scene.S)) + [EPS]:
                for b in list(range(scene.S)) + [EPS]:
                    if not admissible_pair(a, b, scene, p):
                        continue
                    assert zi_loop_bounds(a, b, scene, p) == _filter(a, b, scene, T)


class TestTrellisCells:
    def _recompute(self, res, i, a, b, model, scene, p):
        tr = res.trellis
        best, arg = np.inf, None
        for c in zi_loop_bounds(a, b, scene, p):
            v = p.lambda1 * unary_cost(model[i], None if c == EPS else scene[c], p)
            v += p.lambda2 * ternary_cost(i, (c, a, b), model, scene, p)
            if i + 1 < model.M:
                v += tr.value(i + 1, c, a)
            if v < best:
                best, arg = v, c
        return best, arg

    @pytest.mark.parametrize("pruning", [True, False])
    def test_every_cell_matches_direct_min(self, rng, pruning):
        model, scene = random_instance(rng, 5, 9, 3)
        p = EnergyParams(T=4, Wd=1.5)
        cfg = SolverConfig(use_pruning=pruning)
        res = solve_sequential(model, scene, p, cfg)
        nodes = list(range(scene.S)) + [EPS]
        for i in range(2, model.M):
            for a in nodes:
                for b in nodes:
                    if pruning and not admissible_pair(a, b, scene, p):
                        continue
                    if not pruning:
                        # unconstrained: every candidate is allowed
                        best, arg = np.inf, None
                        for c in nodes:
                            v = p.lambda1 * unary_cost(model[i], None if c == EPS else scene[c], p)
                            v += p.lambda2 * ternary_cost(i, (c, a, b), model, scene, p)
                            if i + 1 < model.M:
                                v += res.trellis.value(i + 1, c, a)
                            if v < best:
                                best, arg = v, c
                    else:
                        best, arg = self._recompute(res, i, a, b, model, scene, p)
                    assert res.trellis.value(i, a, b) == pytest.approx(best, rel=1e-12, abs=1e-12)
                    assert res.trellis.argmin(i, a, b) == arg

    def test_inadmissible_cells_are_infinite(self, rng):
        model, scene = random_instance(rng, 4, 8, 2)
        p = EnergyParams(T=2)
        tr = solve_sequential(model, scene, p).trellis
        dense = tr.dense_alpha(2)
        mask = tr.admissible_mask()
        assert np.all(np.isfinite(dense[mask]))
        assert np.all(np.isinf(dense[~mask]))
        for a in range(scene.S):
            for b in range(scene.S):
                assert mask[a, b] == admissible_pair(a, b, scene, p)

    def test_dummy_only_cell(self):
        model = build_model_chain([SpaceTimePoint(f, float(f), 0.0, 1.0, (1.0,)) for f in range(4)])
        scene = _scene([0, 1, 9])
        p = EnergyParams(T=2, Wd=2.0)
        tr = solve_sequential(model, scene, p).trellis
        assert zi_loop_bounds(1, 0, scene, p) == [EPS]
        assert tr.value(2, 1, 0) == pytest.approx(p.lambda1 * p.Wd + tr.value(3, EPS, 1))
        assert tr.argmin(2, 1, 0) == EPS

    def test_last_layer_single_candidate(self):
        model = build_model_chain([SpaceTimePoint(f, 0.0, 0.0, 1.0, (float(f),)) for f in range(3)])
        scene = build_scene_block([SpaceTimePoint(f, 0.0, 0.0, 1.0, (0.5,)) for f in (0, 1, 2)])
        p = EnergyParams(T=3, Wd=100.0)
        tr = solve_sequential(model, scene, p).trellis
        # after (1, 0) only node 2 (or the dummy) remains; D = 0 for collinear points in time
        assert tr.value(2, 1, 0) == pytest.approx(p.lambda1 * 1.5)


class TestSolve:
    def test_exact_copy_gives_identity(self, rng):
        pts = make_points(range(8), rng)
        res = solve_sequential(build_model_chain(pts), build_scene_block(pts))
        assert res.assignment == tuple(range(8))
        assert res.energy == 0.0

    def test_all_dummy_when_features_far(self, rng):
        model = build_model_chain(make_points(range(5), rng))
        scene = build_scene_block(make_points(range(7), rng, feature_scale=0.0))
        scene = build_scene_block([SpaceTimePoint(q.frame, q.x, q.y, 1.0, (100.0,) * 3)
                                   for q in scene.points])
        p = EnergyParams(Wd=1.0)
        res = solve_sequential(model, scene, p)
        assert res.assignment == (EPS,) * 5
        assert res.energy == pytest.approx(p.lambda1 * 5)

    @pytest.mark.parametrize("M", [1, 2, 3, 5])
    def test_matches_oracle(self, rng, M):
        for _ in range(15):
            model, scene = random_instance(rng, M, 8, 3)
            p = EnergyParams(T=int(rng.integers(1, 6)), Wd=float(rng.uniform(0.1, 5)))
            res = solve_sequential(model, scene, p)
            ref = solve_bruteforce(model, scene, p)
            assert res.energy == pytest.approx(ref.energy, rel=1e-9, abs=1e-12)
            assert chain_energy(res.assignment, model, scene, p) == pytest.approx(res.energy, rel=1e-9)

    def test_unpruned_matches_unconstrained_oracle(self, rng):
        for _ in range(10):
            model, scene = random_instance(rng, 4, 6, 2)
            p = EnergyParams(T=2)
            res = solve_sequential(model, scene, p, SolverConfig(use_pruning=False))
            ref = solve_bruteforce(model, scene, p, constraints="none")
            assert res.energy == pytest.approx(ref.energy, rel=1e-9, abs=1e-12)
            assert res.energy <= solve_sequential(model, scene, p).energy + 1e-12

    def test_pruning_agrees_when_optimum_feasible(self, rng):
        agreed = 0
        for _ in range(20):
            model, scene = random_instance(rng, 5, 8, 3)
            p = EnergyParams(T=100)
            ref = solve_bruteforce(model, scene, p, constraints="none")
            if not solve_bruteforce(model, scene, p).energy == pytest.approx(ref.energy):
                continue
            on = solve_sequential(model, scene, p)
            off = solve_sequential(model, scene, p, SolverConfig(use_pruning=False))
            assert on.energy == pytest.approx(off.energy, rel=1e-12)
            agreed += 1
        assert agreed > 0

    def test_table_does_not_change_results(self, rng):
        model, scene = random_instance(rng, 6, 10, 4)
        a = solve_sequential(model, scene, config=SolverConfig(use_unary_table=True))
        b = solve_sequential(model, scene, config=SolverConfig(use_unary_table=False))
        assert a.energy == b.energy and a.assignment == b.assignment

    def test_deterministic_and_parallel_identical(self):
        model, scene = bench_instance(12, 40, 8, seed=3)
        ref = solve_sequential(model, scene)
        assert solve_sequential(model, scene) == ref
        for q in (1, 2, 3, 8):
            res = solve_parallel(model, scene, config=SolverConfig(parallelism=q))
            assert res.energy == ref.energy
            assert res.assignment == ref.assignment
            assert res.counters == ref.counters

    def test_oracle_tie_break_is_lexicographic(self):
        # two identical scene nodes in frame 0: the lower index wins
        scene = build_scene_block([SpaceTimePoint(0, 0.0, 0.0, 1.0, (0.0,))] * 2)
        model = build_model_chain([SpaceTimePoint(0, 0.0, 0.0, 1.0, (0.0,))])
        assert solve_sequential(model, scene).assignment == (0,)
        assert solve_bruteforce(model, scene).assignment == (0,)


class TestCounters:
    def test_unpruned_work_items(self):
        M, S = 30, 60
        model, scene = bench_instance(M, S, 4, seed=0)
        c = solve_sequential(model, scene, config=SolverConfig(use_pruning=False)).counters
        assert c.cells_computed == (M - 2) * (S + 1) ** 2
        assert c.real_cells == (M - 2) * S ** 2
        assert c.min_iterations == (M - 2) * (S + 1) ** 3
        assert c.init_evaluations == (S + 1) ** 2
        assert c.unary_evaluations == S * M

    def test_pruned_never_exceeds_unpruned(self, rng):
        for _ in range(5):
            model, scene = random_instance(rng, 6, 10, 2)
            p = EnergyParams(T=3)
            on = solve_sequential(model, scene, p).counters
            off = solve_sequential(model, scene, p, SolverConfig(use_pruning=False)).counters
            assert on.min_iterations <= off.min_iterations
            assert on.cells_computed <= off.cells_computed

    def test_table_free_counts_distance_evaluations(self, rng):
        model, scene = random_instance(rng, 5, 8, 2)
        c = solve_sequential(model, scene, config=SolverConfig(use_unary_table=False)).counters
        # every real candidate of every cell plus every real init candidate
        assert c.unary_evaluations > model.M * scene.S
        assert c.unary_evaluations < c.min_iterations + 2 * c.init_evaluations

    def test_cells_per_layer_pruned(self):
        model, scene = bench_instance(10, 60, 4, seed=1)
        p = EnergyParams(T=10)
        c = solve_sequential(model, scene, p).counters
        real_pairs = sum(admissible_pair(a, b, scene, p)
                         for a, b in itertools.product(range(60), repeat=2))
        assert c.real_cells == (model.M - 2) * real_pairs
        assert c.cells_computed == (model.M - 2) * (real_pairs + 2 * 60 + 1)

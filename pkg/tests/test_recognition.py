import numpy as np
import pytest

from chainmatch.core import (EPS, DimensionMismatch, EnergyParams, SpaceTimePoint,
                             build_model_chain, build_scene_block)
from chainmatch.energy import unary_cost
from chainmatch.recognition import (BlockingPolicy, EmptyDictionary, PrototypeSet,
                                    appearance_distance, block_starts, classify,
                                    majority_label, split_blocks)
from chainmatch.solver import MatchResult, SolverConfig, solve_sequential
from chainmatch.synth import PerturbSpec, gen_instance, random_model

from conftest import random_instance


def _rotate(chain, Q):
    return build_model_chain(SpaceTimePoint(p.frame, p.x, p.y, p.saliency, Q @ np.asarray(p.features))
                             for p in chain.points)


class TestAppearanceDistance:
    def test_self_match(self):
        m = random_model(6, 3, seed=0)
        scene = build_scene_block(m.points)
        assert appearance_distance(solve_sequential(m, scene), m, scene, EnergyParams()) == 0.0

    def test_all_dummy(self):
        m = random_model(4, 3, seed=0)
        scene = build_scene_block(random_model(2, 3, seed=1).points)
        p = EnergyParams(Wd=0.7)
        res = MatchResult((EPS,) * 4, 0.0)
        assert appearance_distance(res, m, scene, p) == pytest.approx(4 * 0.7)

    def test_resummation(self, rng):
        model, scene = random_instance(rng, 5, 9, 3)
        p = EnergyParams()
        res = solve_sequential(model, scene, p)
        expected = sum(p.Wd if z == EPS else unary_cost(model[i], scene[z], p)
                       for i, z in enumerate(res.assignment))
        assert appearance_distance(res, model, scene, p) == pytest.approx(expected, rel=1e-12)


class TestClassify:
    def setup_method(self):
        self.protos = PrototypeSet(tuple((lab, random_model(8, 4, seed=k, max_gap=2))
                                         for k, lab in enumerate("ABC")))

    def test_exact_copy_wins(self):
        scene, _ = gen_instance(self.protos.prototypes[1][1],
                                PerturbSpec(time_shift=3, clutter_points=10, seed=1))
        label, scores = classify(scene, self.protos)
        assert label == "B"
        assert dict(scores)["B"] == 0.0
        assert [lab for lab, _ in scores] == ["A", "B", "C"]

    def test_single_prototype(self):
        protos = PrototypeSet((("only", random_model(5, 4, seed=9)),))
        scene, _ = gen_instance(random_model(5, 4, seed=10), PerturbSpec())
        assert classify(scene, protos)[0] == "only"

    def test_tie_goes_to_first(self):
        m = random_model(5, 4, seed=9)
        protos = PrototypeSet((("x", m), ("y", m)))
        scene = build_scene_block(random_model(5, 4, seed=3).points)
        assert classify(scene, protos)[0] == "x"

    def test_noisy_two_prototypes(self):
        protos = PrototypeSet(self.protos.prototypes[:2])
        model_a = protos.prototypes[0][1]
        hits = 0
        for seed in range(100):
            spec = PerturbSpec(time_shift=2, feature_noise_sigma=0.05, clutter_points=8, seed=seed)
            scene, _ = gen_instance(model_a, spec)
            hits += classify(scene, protos)[0] == "A"
        assert hits >= 90

    def test_feature_rotation_invariance(self, rng):
        Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        scene, _ = gen_instance(self.protos.prototypes[2][1],
                                PerturbSpec(feature_noise_sigma=0.3, clutter_points=6, seed=2))
        label, scores = classify(scene, self.protos)
        rot = PrototypeSet(tuple((lab, _rotate(c, Q)) for lab, c in self.protos.prototypes))
        rscene = build_scene_block(SpaceTimePoint(p.frame, p.x, p.y, p.saliency,
                                                  Q @ np.asarray(p.features)) for p in scene.points)
        rlabel, rscores = classify(rscene, rot)
        assert rlabel == label
        assert np.allclose([d for _, d in rscores], [d for _, d in scores], rtol=1e-9)

    def test_parallel_matches_sequential(self):
        scene, _ = gen_instance(self.protos.prototypes[0][1], PerturbSpec(clutter_points=12, seed=4))
        assert classify(scene, self.protos, config=SolverConfig(parallelism=3)) == \
            classify(scene, self.protos)

    def test_normalize(self):
        scene, _ = gen_instance(self.protos.prototypes[0][1], PerturbSpec(clutter_points=3, seed=4))
        _, raw = classify(scene, self.protos)
        _, norm = classify(scene, self.protos, normalize=True)
        for (_, a), (_, b), (_, c) in zip(raw, norm, self.protos.prototypes):
            assert b == pytest.approx(a / c.M)

    def test_errors(self):
        with pytest.raises(EmptyDictionary):
            PrototypeSet(())
        with pytest.raises(DimensionMismatch):
            PrototypeSet((("a", random_model(3, 2, seed=0)), ("b", random_model(3, 3, seed=0))))
        scene = build_scene_block(random_model(3, 5, seed=0).points)
        with pytest.raises(DimensionMismatch):
            classify(scene, self.protos)


class TestBlocking:
    def _stream(self, n_frames):
        return [SpaceTimePoint(f, 0.0, 0.0, 1.0, (float(f),)) for f in range(n_frames)]

    def test_starts(self):
        policy = BlockingPolicy(60, 30)
        assert block_starts(0, 119, policy) == [0, 30, 60]
        assert block_starts(0, 54, policy) == [0]

    def test_disjoint_when_stride_equals_block(self):
        blocks = split_blocks(self._stream(100), BlockingPolicy(25, 25))
        assert [b.S for b in blocks] == [25, 25, 25, 25]

    def test_short_stream_single_block(self):
        blocks = split_blocks(self._stream(55), BlockingPolicy())
        assert len(blocks) == 1 and blocks[0].S == 55

    def test_local_frames_and_coverage(self):
        stream = self._stream(131)
        blocks = split_blocks(stream, BlockingPolicy(60, 30))
        assert all(b.frames[0] == 0 for b in blocks)
        seen = {p.features for b in blocks for p in b.points}
        assert seen == {p.features for p in stream}

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            BlockingPolicy(10, 20)
        with pytest.raises(ValueError):
            BlockingPolicy(10, 0)


def test_majority_label():
    assert majority_label(["b", "a", "b"], ["a", "b"]) == "b"
    assert majority_label(["b", "a"], ["a", "b"]) == "a"

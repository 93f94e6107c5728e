import numpy as np
import pytest

from chainmatch.core import EnergyParams
from chainmatch.energy import chain_energy, is_feasible
from chainmatch.fileio import points_to_obj
from chainmatch.solver import solve_sequential
from chainmatch.synth import (InvalidSpec, PerturbSpec, PortableRNG, bench_instance,
                              gen_instance, random_model, random_scene)


class TestPortableRNG:
    def test_known_stream(self):
        # raw Philox4x64-10 words for key 0, counter 0
        raw = np.random.Philox(key=0).random_raw(3)
        u = PortableRNG(0).uniform(3)
        assert np.array_equal(u, (raw >> np.uint64(11)).astype(float) * 2.0 ** -53)

    def test_ranges(self):
        rng = PortableRNG(5)
        ints = rng.integers(-2, 3, 5000)
        assert ints.min() == -2 and ints.max() == 3
        u = rng.uniform(5000)
        assert np.all((u >= 0) & (u < 1))
        z = rng.normal(20000)
        assert abs(z.mean()) < 0.05 and abs(z.std() - 1) < 0.05

    def test_reproducible(self):
        assert np.array_equal(PortableRNG(9).normal(10), PortableRNG(9).normal(10))
        assert not np.array_equal(PortableRNG(9).normal(10), PortableRNG(10).normal(10))


class TestGenInstance:
    def test_zero_noise_identity(self):
        model = random_model(8, 4, seed=1, max_gap=3)
        scene, truth = gen_instance(model, PerturbSpec())
        assert truth == tuple(range(8))
        assert scene.points == model.points
        res = solve_sequential(model, scene)
        assert res.energy == 0.0 and res.assignment == truth

    def test_shift_keeps_zero_energy(self):
        model = random_model(8, 4, seed=2, max_gap=3)
        scene, truth = gen_instance(model, PerturbSpec(time_shift=7))
        assert list(scene.frames) == [f + 7 for f in model.frames]
        assert chain_energy(truth, model, scene, EnergyParams()) == 0.0

    def test_noise_and_clutter(self):
        model = random_model(10, 5, seed=3, max_gap=2)
        spec = PerturbSpec(time_shift=4, max_warp_per_step=2, spatial_noise_sigma=0.5,
                           feature_noise_sigma=0.01, clutter_points=20, seed=11)
        scene, truth = gen_instance(model, spec)
        assert scene.S == 30
        p = EnergyParams()
        assert is_feasible(truth, scene, p.T)
        assert all(np.diff(truth) > 0)
        res = solve_sequential(model, scene, p)
        assert res.energy <= chain_energy(truth, model, scene, p) + 1e-12

    def test_same_seed_same_instance(self):
        model = random_model(6, 3, seed=4)
        spec = PerturbSpec(max_warp_per_step=1, spatial_noise_sigma=1.0, clutter_points=9, seed=5)
        a, ta = gen_instance(model, spec)
        b, tb = gen_instance(model, spec)
        assert ta == tb
        assert points_to_obj(a.points, a.feature_dim) == points_to_obj(b.points, b.feature_dim)

    def test_invalid_specs(self):
        model = random_model(4, 2, seed=0)
        with pytest.raises(InvalidSpec):
            gen_instance(model, PerturbSpec(max_warp_per_step=10), T=10)
        with pytest.raises(InvalidSpec):
            PerturbSpec(spatial_noise_sigma=-1)
        with pytest.raises(InvalidSpec):
            gen_instance(model, PerturbSpec(time_shift=-5))
        with pytest.raises(InvalidSpec):
            gen_instance(random_model(4, 2, seed=0, max_gap=9), PerturbSpec(), T=5)

    def test_warped_gaps_stay_in_window(self):
        model = random_model(20, 2, seed=8, max_gap=4)
        for seed in range(30):
            spec = PerturbSpec(max_warp_per_step=4, seed=seed)
            scene, truth = gen_instance(model, spec, T=10)
            assert is_feasible(truth, scene, 10)


def test_random_scene_covers_frames():
    scene = random_scene(50, 20, 3, seed=1)
    assert set(scene.frames.tolist()) == set(range(20))


def test_bench_instance_plants_model():
    model, scene = bench_instance(10, 40, 6, seed=2)
    assert model.M == 10 and scene.S == 40
    res = solve_sequential(model, scene)
    assert res.energy < 0.6 * 10 * 0.5

import numpy as np
import pytest

from chainmatch.core import SpaceTimePoint, build_model_chain, build_scene_block


def make_points(frames, rng, F=3, span=50.0, feature_scale=1.0):
    return [SpaceTimePoint(int(f), *rng.uniform(0, span, 2), float(rng.uniform()),
                           feature_scale * rng.normal(size=F)) for f in frames]


def random_instance(rng, M, S, F, model_frames=20, scene_frames=15):
    """Small random model/scene pair for oracle comparisons."""
    mf = np.sort(rng.choice(np.arange(model_frames), M, replace=False))
    model = build_model_chain(make_points(mf, rng, F))
    scene = build_scene_block(make_points(rng.integers(0, scene_frames, S), rng, F))
    return model, scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

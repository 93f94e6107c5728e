"""Hide a model chain in a cluttered scene and find it again."""

from chainmatch import EPS, EnergyParams, PerturbSpec, gen_instance, solve_sequential
from chainmatch.energy import chain_energy
from chainmatch.oracle import solve_bruteforce
from chainmatch.synth import random_model

# A model is one salient point per frame. Ten nodes, a few frames apart.
model = random_model(10, 8, seed=7, max_gap=3)
print("model frames:", model.frames.tolist())

# Plant a noisy, time-shifted copy among 20 clutter points.
spec = PerturbSpec(time_shift=12, max_warp_per_step=1, spatial_noise_sigma=0.5,
                   feature_noise_sigma=0.05, clutter_points=20, seed=3)
scene, truth = gen_instance(model, spec)
print(f"scene has {scene.S} points over frames {scene.frames[0]}..{scene.frames[-1]}")

params = EnergyParams()
result = solve_sequential(model, scene, params)
show = lambda z: ["eps" if v == EPS else v for v in z]
print("planted :", show(truth))
print("matched :", show(result.assignment))
# A dummy can undercut a warped, jittered node: the optimum is never worse than the truth.
print(f"energy {result.energy:.6f}, planted copy scores {chain_energy(truth, model, scene, params):.6f}")

# Crank the dummy penalty down and the solver prefers to skip nodes.
cheap = EnergyParams(Wd=0.01)
skipped = solve_sequential(model, scene, cheap).assignment
print("with Wd=0.01:", show(skipped))

# On a small problem the exhaustive oracle confirms the optimum.
small = random_model(4, 3, seed=1)
sscene, _ = gen_instance(small, PerturbSpec(feature_noise_sigma=0.4, clutter_points=6, seed=2))
dp = solve_sequential(small, sscene, params)
ref = solve_bruteforce(small, sscene, params)
print(f"small instance: trellis {dp.energy:.12f} vs oracle {ref.energy:.12f}")

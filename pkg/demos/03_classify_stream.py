"""Nearest-prototype labelling of a long stream cut into overlapping blocks."""

from chainmatch import BlockingPolicy, PerturbSpec, PrototypeSet, classify, gen_instance
from chainmatch.recognition import majority_label, split_blocks_with_starts
from chainmatch.synth import random_model, random_scene

labels = ["boxing", "waving", "clapping"]
protos = PrototypeSet(tuple((lab, random_model(15, 16, seed=40 + k, max_gap=2))
                            for k, lab in enumerate(labels)))

# Someone waves four times, each repetition a little different, over 180 frames of background.
chain = protos.prototypes[1][1]
stream = list(random_scene(200, 180, 16, seed=6, feature_scale=10.0).points)
for rep, start in enumerate((5, 50, 95, 140)):
    spec = PerturbSpec(time_shift=start, spatial_noise_sigma=1.0, feature_noise_sigma=0.05,
                       clutter_points=10, seed=rep)
    stream += gen_instance(chain, spec)[0].points
print(f"stream: {len(stream)} points over 180 frames")

# 60-frame blocks every 30 frames, so every block holds at least one full repetition.
votes = []
for start, block in split_blocks_with_starts(stream, BlockingPolicy(60, 30)):
    label, scores = classify(block, protos)
    votes.append(label)
    pretty = ", ".join(f"{lab} {d:6.2f}" for lab, d in scores)
    print(f"block @ {start:>3}: {label:<9} ({pretty})")

# A block without any action would score M*Wd for every prototype and fall back to the first label.
print("majority:", majority_label(votes, protos.labels))

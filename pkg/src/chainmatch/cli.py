"""Command-line interface: ``chainmatch {match,classify,gen,bench}``.

Exit codes: 0 success, 2 input parse error, 3 semantic or dimension error,
4 resource guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .core import ChainMatchError, DimensionMismatch, EnergyParams, build_model_chain, build_scene_block
from .fileio import (FormatError, assignment_to_wire, load_dictionary, load_points,
                     save_points, save_truth, sig9)
from .oracle import OracleSizeExceeded, solve_bruteforce
from .recognition import (BlockingPolicy, classify, majority_label,
                          split_blocks_with_starts)
from .solver import SolverConfig, default_parallelism, solve_parallel, solve_sequential
from .synth import InvalidSpec, PerturbSpec, gen_instance

EXIT_PARSE = 2
EXIT_SEMANTIC = 3
EXIT_RESOURCE = 4


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _add_energy_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("energy")
    g.add_argument("--lambda1", type=float, default=0.6)
    g.add_argument("--lambda2", type=float, default=0.2)
    g.add_argument("--lambda3", type=float, default=5.0)
    g.add_argument("--T", type=int, default=10, help="temporal closeness window (frames)")
    g.add_argument("--Wd", type=float, default=1.0, help="dummy assignment penalty")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--parallelism", type=int, default=None,
                   help="worker threads (default: $CHAINMATCH_PARALLELISM or 1)")
    g.add_argument("--no-pruning", action="store_true")
    g.add_argument("--no-unary-table", action="store_true")


def _params(args) -> EnergyParams:
    return EnergyParams(args.lambda1, args.lambda2, args.lambda3, args.T, args.Wd)


def _config(args) -> SolverConfig:
    q = args.parallelism
    if q is None:
        q = default_parallelism() if "CHAINMATCH_PARALLELISM" in os.environ else 1
    return SolverConfig(q, not args.no_pruning, not args.no_unary_table)


def _solve(model, scene, params, cfg):
    fn = solve_parallel if cfg.parallelism > 1 else solve_sequential
    return fn(model, scene, params, cfg)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_match(args) -> int:
    from .energy import appearance_sum

    model_pts, _ = load_points(args.model)
    scene_pts, _ = load_points(args.scene)
    model = build_model_chain(model_pts)
    scene = build_scene_block(scene_pts)
    if model.feature_dim != scene.feature_dim:
        raise DimensionMismatch(
            f"model has {model.feature_dim} features, scene has {scene.feature_dim}")
    params, cfg = _params(args), _config(args)
    result = _solve(model, scene, params, cfg)
    out = {
        "assignment": assignment_to_wire(result.assignment),
        "energy": sig9(result.energy),
        "appearanceDistance": sig9(appearance_sum(result.assignment, model, scene, params)),
        "counters": result.counters.as_dict(),
        "wallTimeMs": sig9(result.wall_time * 1e3),
    }
    if args.oracle:
        constraints = "full" if cfg.use_pruning else "none"
        oracle = solve_bruteforce(model, scene, params, constraints=constraints)
        out["oracle"] = {
            "assignment": assignment_to_wire(oracle.assignment),
            "energy": sig9(oracle.energy),
        }
    _emit(out)
    return 0


def cmd_classify(args) -> int:
    scene_pts, _ = load_points(args.scene)
    protos = load_dictionary(args.dictionary)
    params, cfg = _params(args), _config(args)
    if args.no_blocking:
        blocks = [(0, build_scene_block(scene_pts))]
    else:
        policy = BlockingPolicy(args.block_frames, args.stride_frames)
        blocks = split_blocks_with_starts(scene_pts, policy)
    out_blocks, labels = [], []
    for start, block in blocks:
        label, scores = classify(block, protos, params, cfg, normalize=args.normalize)
        labels.append(label)
        out_blocks.append({
            "startFrame": start,
            "label": label,
            "scores": [{"label": lab, "distance": sig9(d)} for lab, d in scores],
        })
    _emit({"blocks": out_blocks, "majority": majority_label(labels, protos.labels)})
    return 0


def cmd_gen(args) -> int:
    points, _ = load_points(args.model)
    model = build_model_chain(points)
    spec = PerturbSpec(args.time_shift, args.max_warp, args.spatial_noise,
                       args.feature_noise, args.clutter, args.clutter_scale, args.seed)
    scene, truth = gen_instance(model, spec, T=args.T)
    scene_path = f"{args.out_prefix}.scene.json"
    truth_path = f"{args.out_prefix}.truth.json"
    save_points(scene_path, scene.points, scene.feature_dim)
    save_truth(truth_path, truth)
    _emit({"scene": scene_path, "truth": truth_path, "S": scene.S, "M": model.M})
    return 0


def cmd_bench(args) -> int:
    from .bench import run_suite, write_csv

    rows = run_suite(args.M, args.S, args.T, args.F, args.parallelism,
                     repetitions=args.repetitions, seed=args.seed,
                     implementations=args.implementations.split(","))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainmatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="match one model against one scene")
    p.add_argument("model")
    p.add_argument("scene")
    p.add_argument("--oracle", action="store_true", help="also run the exhaustive oracle")
    _add_energy_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("classify", help="nearest-prototype classification of a scene")
    p.add_argument("scene")
    p.add_argument("dictionary")
    p.add_argument("--block-frames", type=int, default=60)
    p.add_argument("--stride-frames", type=int, default=30)
    p.add_argument("--no-blocking", action="store_true")
    p.add_argument("--normalize", action="store_true", help="divide distances by model length")
    _add_energy_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gen", help="plant a perturbed model copy in a cluttered scene")
    p.add_argument("model")
    p.add_argument("out_prefix")
    p.add_argument("--time-shift", type=int, default=0)
    p.add_argument("--max-warp", type=int, default=0)
    p.add_argument("--spatial-noise", type=float, default=0.0)
    p.add_argument("--feature-noise", type=float, default=0.0)
    p.add_argument("--clutter", type=int, default=0)
    p.add_argument("--clutter-scale", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T", type=int, default=10)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="counter and timing report as CSV")
    p.add_argument("--M", type=_int_list, default=[30])
    p.add_argument("--S", type=_int_list, default=[60])
    p.add_argument("--T", type=_int_list, default=[10])
    p.add_argument("--F", type=_int_list, default=[162])
    p.add_argument("--parallelism", type=_int_list, default=[1, 4])
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--implementations", default="sequential,parallel,bruteforce")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OracleSizeExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ChainMatchError, InvalidSpec, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())

"""Second-order chain matching of space-time point sets.

Exact dynamic-programming matching of a temporally ordered model chain
against a scene of space-time interest points, with pruning, a unary
look-up table, layer-parallel evaluation, an exhaustive oracle, a
nearest-prototype classifier and seeded instance generators.
"""

from .core import (EPS, ChainMatchError, DimensionMismatch, EmptyPointSet,
                   EnergyParams, InvalidAssignment, ModelChain, SceneBlock,
                   SpaceTimePoint, build_model_chain, build_scene_block)
from .energy import (chain_energy, is_feasible, precompute_unary_table,
                     ternary_cost, unary_cost)
from .oracle import OracleSizeExceeded, solve_bruteforce
from .recognition import (BlockingPolicy, EmptyDictionary, PrototypeSet,
                          classify, split_blocks)
from .solver import (Counters, MatchResult, SolverConfig, Trellis,
                     solve_parallel, solve_sequential)
from .synth import InvalidSpec, PerturbSpec, PortableRNG, gen_instance

__all__ = [
    "EPS", "ChainMatchError", "DimensionMismatch", "EmptyPointSet", "InvalidAssignment",
    "EnergyParams", "ModelChain", "SceneBlock", "SpaceTimePoint",
    "build_model_chain", "build_scene_block",
    "chain_energy", "is_feasible", "precompute_unary_table", "ternary_cost", "unary_cost",
    "OracleSizeExceeded", "solve_bruteforce",
    "BlockingPolicy", "EmptyDictionary", "PrototypeSet", "classify", "split_blocks",
    "Counters", "MatchResult", "SolverConfig", "Trellis", "solve_parallel", "solve_sequential",
    "InvalidSpec", "PerturbSpec", "PortableRNG", "gen_instance",
]

__version__ = "0.1.0"

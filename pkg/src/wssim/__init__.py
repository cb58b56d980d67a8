"""Round-synchronous work-stealing scheduler simulator and analysis toolkit."""

from .dag import ComputationDag, DagSpec, decode, encode, gen_binary_tree, gen_chain, gen_comb, validate
from .deque import ABORT, EMPTY, RelaxedDeque, SERIALIZED, SINGLE_WINNER, resolve_pop_tops
from .engine import Engine, Migration, RoundTrace, Snapshot, WS, WSS, replay_window
from .stability import (ExpectationEstimate, RoundSets, StabilityVerdict,
                        estimate_round_expectation, round_sets, stability_verdict,
                        verify_run)

__all__ = [
    "ABORT", "ComputationDag", "DagSpec", "EMPTY", "Engine",
    "ExpectationEstimate", "Migration", "RelaxedDeque", "RoundSets",
    "RoundTrace", "SERIALIZED", "SINGLE_WINNER", "Snapshot",
    "StabilityVerdict", "WS", "WSS", "decode", "encode",
    "estimate_round_expectation", "gen_binary_tree", "gen_chain", "gen_comb",
    "replay_window", "resolve_pop_tops", "round_sets", "stability_verdict",
    "validate",
]

__version__ = "0.1.0"

"""Shared helpers for the test suite."""
from __future__ import annotations

from itertools import permutations

from wssim.dag import gen_binary_tree, gen_chain, gen_comb
from wssim.deque import EMPTY, is_node
from wssim.engine import Engine


def make_dag(kind: str, size: int):
    return {"chain": gen_chain, "comb": gen_comb, "binary_tree": gen_binary_tree}[kind](size)


def run_engine(kind, size, p_count, scheduler, contention, seed, max_rounds=None,
               record=True):
    dag = make_dag(kind, size)
    eng = Engine(dag, p_count, scheduler, contention, seed)
    result = eng.run(max_rounds if max_rounds is not None else dag.node_count + 8,
                     record=record)
    return eng, result


def serial_linearization_exists(initial: tuple[int, ...], outcomes: dict) -> bool:
    """Brute-force relaxed-semantics check for a burst of popTop outcomes.

    True iff some ordering of the non-aborting invocations reproduces their
    results against a serial deque, and any abort coincides with another
    invocation having removed a node.
    """
    aborted = [t for t, out in outcomes.items() if out == "ABORT"]
    active = [t for t, out in outcomes.items() if out != "ABORT"]
    removed = sum(1 for t in active if is_node(outcomes[t]))
    if aborted and removed == 0:
        return False  # an abort needs a concurrent removal of the topmost item
    for order in permutations(active):
        items = list(initial)
        ok = True
        for t in order:
            expect = outcomes[t]
            if items:
                got = items.pop(0)
            else:
                got = EMPTY
            if got != expect:
                ok = False
                break
        if ok:
            return True
    return not active

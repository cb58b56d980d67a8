"""Owner work deque with modeled concurrent popTop contention.

The owner pushes and pops at the bottom; thieves pop at the top.  Real
lock-free implementations only promise relaxed semantics for popTop: each
invocation returns the topmost item, EMPTY, or aborts, and an abort is legal
only when some concurrent invocation removed the then-topmost item.  Here the
"concurrency" of a burst of simultaneous popTops is resolved by data, via
:func:`resolve_pop_tops`, under one of two contention models that both satisfy
the relaxed contract:

* ``single_winner`` -- one uniformly random attempt takes the topmost item,
  every other attempt aborts (one CAS wins per contention burst);
* ``serialized`` -- attempts are linearized in uniformly random order, each
  taking the then-topmost item until the deque runs dry.

Owner operations and contended popTops must not share a tick (the engine
schedules them in distinct phases); ticks passed to the mutators enforce it.
"""
from __future__ import annotations

from collections import deque as _dq
from typing import Iterable

# Invalid slot values, as distinct from node ids (non-negative ints).
EMPTY = "EMPTY"
ABORT = "ABORT"

SINGLE_WINNER = "single_winner"
SERIALIZED = "serialized"
CONTENTION_MODELS = (SINGLE_WINNER, SERIALIZED)


def is_node(value) -> bool:
    """True for an actual node id (as opposed to EMPTY/ABORT/None)."""
    return isinstance(value, int)


class RelaxedDeque:
    """Ordered node container; index 0 is the top, the last index the bottom."""

    __slots__ = ("_items", "_members", "_owner_tick", "_steal_tick")

    def __init__(self, items: Iterable[int] = ()):
        self._items = _dq(items)
        self._members = set(self._items)
        if len(self._members) != len(self._items):
            raise ValueError("duplicate nodes in deque")
        self._owner_tick = None
        self._steal_tick = None

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, node: int) -> bool:
        return node in self._members

    def contents(self) -> tuple[int, ...]:
        """Top-to-bottom snapshot of the stored nodes."""
        return tuple(self._items)

    def _mark_owner(self, tick):
        if tick is not None:
            if self._steal_tick == tick:
                raise AssertionError(
                    f"owner operation interleaved with popTop burst at tick {tick}"
                )
            self._owner_tick = tick

    def push_bottom(self, node: int, tick=None) -> None:
        if node in self._members:
            raise AssertionError(f"node {node} already in deque")
        self._mark_owner(tick)
        self._items.append(node)
        self._members.add(node)

    def pop_bottom(self, tick=None):
        """Remove and return the bottommost node, or EMPTY."""
        self._mark_owner(tick)
        if not self._items:
            return EMPTY
        node = self._items.pop()
        self._members.discard(node)
        return node

    def _pop_top(self):
        node = self._items.popleft()
        self._members.discard(node)
        return node


def resolve_pop_tops(deque: RelaxedDeque, attempts: list[int], model: str, rng,
                     tick=None) -> dict[int, object]:
    """Resolve a burst of simultaneous popTop attempts against one deque.

    ``attempts`` lists the ids of the invoking thieves.  Returns one outcome
    per thief: a node id, EMPTY, or ABORT.  On a non-empty deque at least one
    node is always removed; under ``single_winner`` exactly one is.
    """
    if not attempts:
        raise ValueError("resolve_pop_tops requires at least one attempt")
    if model not in CONTENTION_MODELS:
        raise ValueError(f"unknown contention model {model!r}")
    if tick is not None:
        if deque._owner_tick == tick:
            raise AssertionError(f"popTop burst interleaved with owner ops at tick {tick}")
        deque._steal_tick = tick

    if len(deque) == 0:
        return {t: EMPTY for t in attempts}

    outcomes: dict[int, object] = {}
    if model == SINGLE_WINNER:
        winner = attempts[rng.randrange(len(attempts))]
        for t in attempts:
            outcomes[t] = deque._pop_top() if t == winner else ABORT
    else:
        order = list(attempts)
        rng.shuffle(order)
        for t in order:
            outcomes[t] = deque._pop_top() if len(deque) else EMPTY
    return outcomes

"""Round-synchronous execution engine.

All processors advance through the phases of a scheduling iteration in
lockstep: phase k of every processor completes before phase k+1 of any
processor starts, so one round is one iteration and its length L equals the
scheduler's phase count.  Within a phase, simultaneity is resolved by data
(contended popTops, contended donation CASes) rather than by interleaving.

The engine is strictly sequential and deterministic given
``(dag, P, scheduler, contention, seed)``.  Snapshots capture the observable
state at a round boundary; restoring one with fresh seeds replays the next
rounds under independent randomness, which is what the stability estimator
needs to condition on a round prefix.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .dag import ComputationDag, validate
from .deque import CONTENTION_MODELS, EMPTY, RelaxedDeque, is_node

WS = "WS"
WSS = "WSS"
SCHEDULERS = (WS, WSS)
PHASE_COUNT = {WS: 2, WSS: 3}

# state flag values; donor ids (>= 0) mark a pending donation
WORKING = -1
IDLE = -2

# node lifecycle
NOT_READY = 0
READY = 1
EXECUTED = 2

STOLEN = "stolen"
SPREAD = "spread"


class Migration(NamedTuple):
    node: int
    src: int
    dst: int
    cause: str


class EngineFinishedError(RuntimeError):
    """Raised when stepping an engine whose computation already completed."""


@dataclass(frozen=True)
class RoundTrace:
    """Everything observable about one round.

    Sizes and small per-processor records are always present; the full
    attached-set memberships (``r_start``/``r_next``) are only recorded when
    requested, since copying them dominates the cost of long runs.
    """

    t: int
    p_count: int
    phase_count: int
    alpha: float
    p_idle: int
    executed: tuple[Optional[int], ...]
    enabled: tuple[tuple[int, ...], ...]
    migrations: tuple[Migration, ...]
    r_sizes: tuple[int, ...]
    r_next_sizes: tuple[int, ...]
    deque_sizes: tuple[int, ...]
    finished_after: bool
    r_start: tuple[tuple[int, ...], ...] | None = None
    r_next: tuple[tuple[int, ...], ...] | None = None

    def stolen_count(self) -> int:
        return sum(1 for m in self.migrations if m.cause == STOLEN)

    def spread_count(self) -> int:
        return sum(1 for m in self.migrations if m.cause == SPREAD)


class RunResult(NamedTuple):
    traces: list[RoundTrace]
    reason: str  # "finished" | "round-budget"


@dataclass
class ProcessorState:
    """One processor: next node to run, its deque, and the spreading cells."""

    assigned: object  # node id, EMPTY, ABORT, or None
    deque: RelaxedDeque
    state: int = IDLE  # WORKING, IDLE, or a donor id
    donation: int | None = None

    def attached(self) -> tuple[int, ...]:
        out = (self.assigned,) if is_node(self.assigned) else ()
        return out + self.deque.contents()


@dataclass(frozen=True)
class Snapshot:
    """Deep copy of an engine at a round boundary, minus the RNG."""

    dag: ComputationDag
    p_count: int
    scheduler: str
    contention: str
    t: int
    executed_count: int
    procs: tuple[tuple[object, tuple[int, ...], int, int | None], ...]
    node_state: np.ndarray
    preds_left: np.ndarray

    def r_sizes(self) -> tuple[int, ...]:
        return tuple(
            (1 if is_node(a) else 0) + len(dq) for a, dq, _, _ in self.procs
        )

    def non_self_stable(self) -> tuple[int, ...]:
        """Processors holding at least two attached nodes at this boundary.

        Every processor with work executes exactly one node per round, so
        these are exactly the processors that cannot clear their backlog
        this round.
        """
        return tuple(p for p, size in enumerate(self.r_sizes()) if size >= 2)


class Engine:
    """Executes one computation under WS or WSS.  See module docstring."""

    def __init__(self, dag: ComputationDag, p_count: int, scheduler: str,
                 contention: str, seed: int, _blank: bool = False):
        if scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {scheduler!r}")
        if contention not in CONTENTION_MODELS:
            raise ValueError(f"unknown contention model {contention!r}")
        if p_count < 2:
            raise ValueError(f"need at least 2 processors, got {p_count}")
        self.dag = dag
        self.p_count = p_count
        self.scheduler = scheduler
        self.contention = contention
        self.rng = random.Random(seed)
        self.t = 0
        self.executed_count = 0
        if _blank:
            return
        violations = validate(dag)
        if violations:
            raise ValueError(f"invalid dag: {violations}")
        self.node_state = np.zeros(dag.node_count, dtype=np.int8)
        self.preds_left = np.array(dag.pred_counts, dtype=np.int32)
        self.node_state[dag.root] = READY
        self.procs = [
            ProcessorState(assigned=EMPTY, deque=RelaxedDeque(), state=IDLE)
            for _ in range(p_count)
        ]
        self.procs[0].assigned = dag.root
        self.procs[0].state = WORKING

    # -- core stepping ------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self.executed_count == self.dag.node_count

    @property
    def phase_count(self) -> int:
        return PHASE_COUNT[self.scheduler]

    def step_round(self, record: bool = True) -> RoundTrace:
        """Advance one full round and return its trace."""
        if self.finished:
            raise EngineFinishedError(f"computation finished after round {self.t}")
        from . import schedulers  # deferred: schedulers uses engine types

        r_sizes = []
        deque_sizes = []
        r_start = [] if record else None
        idle = 0
        for proc in self.procs:
            has_node = is_node(proc.assigned)
            if not has_node:
                idle += 1
                assert len(proc.deque) == 0, "idle processor with non-empty deque"
            r_sizes.append((1 if has_node else 0) + len(proc.deque))
            deque_sizes.append(len(proc.deque))
            if record:
                r_start.append(proc.attached())

        if self.scheduler == WS:
            ctx = schedulers.run_ws_round(self)
        else:
            ctx = schedulers.run_wss_round(self)

        for proc in self.procs:
            assert proc.donation is None
            if self.scheduler == WSS:
                assert proc.state in (WORKING, IDLE)

        r_next_sizes = tuple(
            (1 if is_node(proc.assigned) else 0) + len(proc.deque)
            for proc in self.procs
        )
        trace = RoundTrace(
            t=self.t,
            p_count=self.p_count,
            phase_count=self.phase_count,
            alpha=idle / self.p_count,
            p_idle=idle,
            executed=tuple(ctx.executed_node.get(p) for p in range(self.p_count)),
            enabled=tuple(tuple(ctx.enabled.get(p, ())) for p in range(self.p_count)),
            migrations=tuple(ctx.migrations),
            r_sizes=tuple(r_sizes),
            r_next_sizes=r_next_sizes,
            deque_sizes=tuple(deque_sizes),
            finished_after=self.finished,
            r_start=tuple(r_start) if record else None,
            r_next=tuple(proc.attached() for proc in self.procs) if record else None,
        )
        self.t += 1
        return trace

    def run(self, max_rounds: int, record: bool = True) -> RunResult:
        """Step until the computation finishes or the round budget runs out."""
        if max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {max_rounds}")
        traces: list[RoundTrace] = []
        while not self.finished and len(traces) < max_rounds:
            traces.append(self.step_round(record=record))
        return RunResult(traces, "finished" if self.finished else "round-budget")

    # -- execution helpers shared by the schedulers -------------------------

    def apply_executions(self, executors: list[tuple[int, int]]) -> dict[int, list[int]]:
        """Execute all of this phase's nodes simultaneously.

        Returns the newly runnable successors attributed to each executor.
        When two processors complete the two inputs of a join in the same
        phase, the join is attributed to the lower-id enabler.
        """
        for _, node in executors:
            assert self.node_state[node] == READY
            self.node_state[node] = EXECUTED
        self.executed_count += len(executors)

        candidates: dict[int, list[int]] = {}
        for p, node in executors:
            for succ in self.dag.edges[node]:
                self.preds_left[succ] -= 1
                candidates.setdefault(succ, []).append(p)
        enabled: dict[int, list[int]] = {p: [] for p, _ in executors}
        for succ, enablers in candidates.items():
            if self.preds_left[succ] == 0:
                assert self.node_state[succ] == NOT_READY
                self.node_state[succ] = READY
                enabled[min(enablers)].append(succ)
        return enabled

    # -- snapshot / replay ---------------------------------------------------

    def snapshot(self) -> Snapshot:
        return Snapshot(
            dag=self.dag,
            p_count=self.p_count,
            scheduler=self.scheduler,
            contention=self.contention,
            t=self.t,
            executed_count=self.executed_count,
            procs=tuple(
                (proc.assigned, proc.deque.contents(), proc.state, proc.donation)
                for proc in self.procs
            ),
            node_state=self.node_state.copy(),
            preds_left=self.preds_left.copy(),
        )

    @classmethod
    def restore(cls, snapshot: Snapshot, seed: int) -> "Engine":
        """Rebuild an engine from a snapshot with a fresh RNG seed."""
        eng = cls(snapshot.dag, snapshot.p_count, snapshot.scheduler,
                  snapshot.contention, seed, _blank=True)
        eng.t = snapshot.t
        eng.executed_count = snapshot.executed_count
        eng.node_state = snapshot.node_state.copy()
        eng.preds_left = snapshot.preds_left.copy()
        eng.procs = [
            ProcessorState(assigned=a, deque=RelaxedDeque(items), state=s, donation=d)
            for a, items, s, d in snapshot.procs
        ]
        return eng


def replay_window(snapshot: Snapshot, seed: int,
                  rounds: int = 2) -> tuple[list[RoundTrace], bool]:
    """Replay the next ``rounds`` rounds from a snapshot under fresh randomness.

    Returns the traces and a truncation flag; the list is shorter than
    requested iff the computation finishes inside the window.
    """
    eng = Engine.restore(snapshot, seed)
    traces: list[RoundTrace] = []
    for _ in range(rounds):
        if eng.finished:
            return traces, True
        traces.append(eng.step_round(record=False))
    return traces, False

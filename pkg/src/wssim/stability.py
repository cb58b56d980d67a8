"""Per-round set accounting, framework identity checks, and stability verdicts.

From a recorded round trace this module derives, per processor, the attached
set R, enabled set E, executed set C and the migration sets M+/M- split by
cause (stolen vs spread), plus the idle ratio alpha and the self-stable /
non-self-stable processor split.  The checkers assert the set identities the
round model guarantees (they hold by construction; any report here is a bug
trap, not an expected outcome).

Stability of a round is judged by freeze-and-replay: snapshot the engine at
the round boundary, replay the next two rounds many times under independent
seeds, and estimate the expected unexecuted backlog of the non-self-stable
processors.  A round is stable when that expectation strictly drops below
the current backlog and no self-stable processor's attached set can exceed
L+1 nodes.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .engine import RoundTrace, Snapshot, SPREAD, STOLEN, WS, replay_window


@dataclass(frozen=True)
class RoundSets:
    """All per-round node sets of one round, each indexed by processor."""

    t: int
    p_count: int
    phase_count: int
    alpha: float
    p_idle: int
    r: tuple[frozenset[int], ...]
    r_next: tuple[frozenset[int], ...]
    e: tuple[frozenset[int], ...]
    c: tuple[frozenset[int], ...]
    m_plus: tuple[frozenset[int], ...]
    m_minus: tuple[frozenset[int], ...]
    stolen_plus: tuple[frozenset[int], ...]
    stolen_minus: tuple[frozenset[int], ...]
    spread_plus: tuple[frozenset[int], ...]
    spread_minus: tuple[frozenset[int], ...]
    deque_sizes: tuple[int, ...]

    @property
    def self_stable(self) -> frozenset[int]:
        return frozenset(p for p in range(self.p_count) if self.r[p] == self.c[p])

    @property
    def non_self_stable(self) -> frozenset[int]:
        return frozenset(range(self.p_count)) - self.self_stable

    def backlog(self, procs) -> int:
        """|R_t(S) - C_t(S)| for a set of processors (additive per processor)."""
        return sum(len(self.r[p] - self.c[p]) for p in procs)


def round_sets(trace: RoundTrace) -> RoundSets:
    if trace.r_start is None or trace.r_next is None:
        raise ValueError("trace was recorded without set membership")
    n = trace.p_count
    empty = frozenset()
    stolen_p = [empty] * n
    stolen_m = [empty] * n
    spread_p = [empty] * n
    spread_m = [empty] * n
    for mig in trace.migrations:
        if mig.cause == STOLEN:
            stolen_p[mig.src] = stolen_p[mig.src] | {mig.node}
            stolen_m[mig.dst] = stolen_m[mig.dst] | {mig.node}
        else:
            spread_p[mig.src] = spread_p[mig.src] | {mig.node}
            spread_m[mig.dst] = spread_m[mig.dst] | {mig.node}
    return RoundSets(
        t=trace.t,
        p_count=n,
        phase_count=trace.phase_count,
        alpha=trace.alpha,
        p_idle=trace.p_idle,
        r=tuple(frozenset(s) for s in trace.r_start),
        r_next=tuple(frozenset(s) for s in trace.r_next),
        e=tuple(frozenset(s) for s in trace.enabled),
        c=tuple(frozenset(() if trace.executed[p] is None else (trace.executed[p],))
                for p in range(n)),
        m_plus=tuple(stolen_p[p] | spread_p[p] for p in range(n)),
        m_minus=tuple(stolen_m[p] | spread_m[p] for p in range(n)),
        stolen_plus=tuple(stolen_p),
        stolen_minus=tuple(stolen_m),
        spread_plus=tuple(spread_p),
        spread_minus=tuple(spread_m),
        deque_sizes=trace.deque_sizes,
    )


def empty_followup(sets_t: RoundSets) -> RoundSets:
    """Synthetic all-empty round after a finished computation."""
    n = sets_t.p_count
    empty = (frozenset(),) * n
    return RoundSets(
        t=sets_t.t + 1, p_count=n, phase_count=sets_t.phase_count,
        alpha=1.0, p_idle=n,
        r=sets_t.r_next, r_next=empty, e=empty, c=empty,
        m_plus=empty, m_minus=empty,
        stolen_plus=empty, stolen_minus=empty,
        spread_plus=empty, spread_minus=empty,
        deque_sizes=(0,) * n,
    )


# ---------------------------------------------------------------------------
# Identity checks.  Each returns a list of violation strings (empty = pass).


def check_structural(sets: RoundSets) -> list[str]:
    """Within-round set relations: disjointness and containment."""
    bad: list[str] = []
    n = sets.p_count
    for p in range(n):
        r, e, c = sets.r[p], sets.e[p], sets.c[p]
        mp, mm = sets.m_plus[p], sets.m_minus[p]
        if e & r:
            bad.append(f"t={sets.t} p={p}: enabled set overlaps attached set")
        if c & mp:
            bad.append(f"t={sets.t} p={p}: executed node also migrated out")
        if (r | e) & mm:
            bad.append(f"t={sets.t} p={p}: inbound migration already attached/enabled")
        if not (r | e | mm) >= (c | mp):
            bad.append(f"t={sets.t} p={p}: executed/migrated-out nodes not accounted for")
        if mp & mm:
            bad.append(f"t={sets.t} p={p}: node migrated both in and out")
        others = frozenset().union(*(sets.m_plus[q] for q in range(n) if q != p)) \
            if n > 1 else frozenset()
        if not mm <= others:
            bad.append(f"t={sets.t} p={p}: inbound migration without a matching outbound")
    return bad


def check_round_progression(sets_t: RoundSets, sets_t1: RoundSets | None = None) -> list[str]:
    """Next attached set == (enabled + kept + received) - (executed + sent)."""
    bad: list[str] = []
    for p in range(sets_t.p_count):
        expected = (sets_t.e[p] | sets_t.r[p] | sets_t.m_minus[p]) \
            - (sets_t.c[p] | sets_t.m_plus[p])
        if sets_t.r_next[p] != expected:
            bad.append(
                f"t={sets_t.t} p={p}: attached-set progression mismatch "
                f"(expected {sorted(expected)}, got {sorted(sets_t.r_next[p])})"
            )
        if sets_t1 is not None and sets_t1.r[p] != sets_t.r_next[p]:
            bad.append(f"t={sets_t.t} p={p}: round boundary sets disagree across traces")
    return bad


def check_execution(sets: RoundSets) -> list[str]:
    """Each processor executes at most one node, and only attached ones."""
    bad = []
    for p in range(sets.p_count):
        if len(sets.c[p]) > 1:
            bad.append(f"t={sets.t} p={p}: executed more than one node")
        if not sets.c[p] <= sets.r[p]:
            bad.append(f"t={sets.t} p={p}: executed a node that was not attached")
        if sets.r[p] and not sets.c[p]:
            bad.append(f"t={sets.t} p={p}: had attached work but executed nothing")
    return bad


def check_partition(sets: RoundSets) -> list[str]:
    """Attached sets are pairwise disjoint; so are enabled-attribution sets."""
    bad = []
    seen: set[int] = set()
    for p in range(sets.p_count):
        if sets.r[p] & seen:
            bad.append(f"t={sets.t} p={p}: attached set overlaps another processor's")
        seen |= sets.r[p]
    seen = set()
    for p in range(sets.p_count):
        if sets.e[p] & seen:
            bad.append(f"t={sets.t} p={p}: node attributed to two enablers")
        seen |= sets.e[p]
    return bad


def check_migrate_once(sets: RoundSets) -> list[str]:
    counts: dict[int, int] = {}
    for p in range(sets.p_count):
        for node in sets.m_plus[p]:
            counts[node] = counts.get(node, 0) + 1
    dupes = [node for node, k in counts.items() if k > 1]
    if dupes:
        return [f"t={sets.t}: nodes migrated from two processors: {sorted(dupes)}"]
    return []


def check_migration_causes(sets: RoundSets, scheduler: str) -> list[str]:
    """Migrations decompose exactly into steals (WS) or steals+spreads (WSS)."""
    bad = []
    for p in range(sets.p_count):
        if scheduler == WS:
            if sets.spread_plus[p] or sets.spread_minus[p]:
                bad.append(f"t={sets.t} p={p}: spread migration under WS")
            if sets.m_plus[p] != sets.stolen_plus[p] or sets.m_minus[p] != sets.stolen_minus[p]:
                bad.append(f"t={sets.t} p={p}: WS migrations not all steals")
        else:
            if sets.stolen_plus[p] & sets.spread_plus[p]:
                bad.append(f"t={sets.t} p={p}: node both stolen and spread")
            if sets.m_plus[p] != (sets.stolen_plus[p] | sets.spread_plus[p]):
                bad.append(f"t={sets.t} p={p}: outbound migrations miss a cause")
            if sets.m_minus[p] != (sets.stolen_minus[p] | sets.spread_minus[p]):
                bad.append(f"t={sets.t} p={p}: inbound migrations miss a cause")
    return bad


def check_connecting(sets_t: RoundSets, sets_t1: RoundSets) -> list[str]:
    """Enable-rate vs backlog-shrink biconditional, per processor.

    |E_t(p)| < |C_{t+1}(p)| + |M+_t(p)|  must hold exactly when
    |R_{t+1}(p) - C_{t+1}(p)| < |R_t(p) - C_t(p)| + |M-_t(p)|.
    """
    bad = []
    for p in range(sets_t.p_count):
        lhs = len(sets_t.e[p]) < len(sets_t1.c[p]) + len(sets_t.m_plus[p])
        rhs = len(sets_t1.r[p] - sets_t1.c[p]) \
            < len(sets_t.r[p] - sets_t.c[p]) + len(sets_t.m_minus[p])
        if lhs != rhs:
            bad.append(f"t={sets_t.t} p={p}: enable/backlog biconditional broken")
    return bad


def check_base_facts(sets_t: RoundSets) -> list[str]:
    """Scheduler base facts: non-self-stable processors hold deque work and
    receive nothing; self-stable ones end the round with at most two nodes."""
    bad = []
    for p in sets_t.non_self_stable:
        if sets_t.deque_sizes[p] == 0:
            bad.append(f"t={sets_t.t} p={p}: non-self-stable with empty deque")
        if sets_t.m_minus[p]:
            bad.append(f"t={sets_t.t} p={p}: non-self-stable received a migration")
    for p in sets_t.self_stable:
        if len(sets_t.r_next[p]) > 2:
            bad.append(f"t={sets_t.t} p={p}: self-stable ended round with >2 nodes")
    return bad


def verify_round_pair(sets_t: RoundSets, sets_t1: RoundSets | None,
                      scheduler: str) -> list[str]:
    """All identity checks for one round (pair checks need the next round)."""
    bad = []
    bad += check_structural(sets_t)
    bad += check_execution(sets_t)
    bad += check_partition(sets_t)
    bad += check_migrate_once(sets_t)
    bad += check_migration_causes(sets_t, scheduler)
    bad += check_round_progression(sets_t, sets_t1)
    bad += check_base_facts(sets_t)
    if sets_t1 is not None:
        bad += check_connecting(sets_t, sets_t1)
    return bad


def verify_run(traces: list[RoundTrace], scheduler: str, finished: bool) -> list[str]:
    """Run every identity check over a full trace list."""
    bad: list[str] = []
    all_sets = [round_sets(tr) for tr in traces]
    for i, sets_t in enumerate(all_sets):
        if i + 1 < len(all_sets):
            nxt = all_sets[i + 1]
        elif finished:
            nxt = empty_followup(sets_t)
        else:
            nxt = None
        bad += verify_round_pair(sets_t, nxt, scheduler)
    return bad


# ---------------------------------------------------------------------------
# Conditional-expectation estimation by freeze-and-replay.

DEFAULT_REPLICATIONS = 10_000
DEFAULT_CONFIDENCE = 0.99


@dataclass(frozen=True)
class ExpectationEstimate:
    """Monte Carlo mean with a normal-approximation confidence half-interval."""

    mean: float
    half_width: float
    replications: int
    confidence: float
    truncated: int = 0
    max_r_next_self_stable: int | None = None


def _half_width(values: np.ndarray, confidence: float) -> float:
    std = float(values.std(ddof=1))
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    return z * std / math.sqrt(len(values))


def estimate_round_expectation(snapshot: Snapshot, u_procs,
                               replications: int = DEFAULT_REPLICATIONS,
                               confidence: float = DEFAULT_CONFIDENCE,
                               seed: int = 0) -> ExpectationEstimate:
    """Estimate the expected unexecuted backlog of ``u_procs`` after the next round.

    Replays rounds t and t+1 from the snapshot ``replications`` times with
    independent seeds and averages
    ``sum_p (|R_{t+1}(p)| - |C_{t+1}(p)|)`` over ``u_procs`` (the per-processor
    sum equals the set-difference size because executed nodes are always
    attached).  Also tracks, over the complement (the self-stable side), the
    largest attached-set size seen entering round t+1, and how many
    replications finished inside the window.
    """
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    u = tuple(u_procs)
    u_set = set(u)
    s = [p for p in range(snapshot.p_count) if p not in u_set]
    seeder = random.Random(seed)
    values = np.empty(replications, dtype=np.float64)
    truncated = 0
    b_max = 0
    for i in range(replications):
        traces, _ = replay_window(snapshot, seeder.getrandbits(63), rounds=2)
        if not traces:
            raise ValueError("snapshot taken after the computation finished")
        r1 = traces[0].r_next_sizes
        if len(traces) == 2:
            executed_next = traces[1].executed
            values[i] = sum(r1[p] - (0 if executed_next[p] is None else 1) for p in u)
        else:
            truncated += 1
            values[i] = sum(r1[p] for p in u)
        if s:
            m = max(r1[p] for p in s)
            if m > b_max:
                b_max = m
    return ExpectationEstimate(
        mean=float(values.mean()),
        half_width=_half_width(values, confidence),
        replications=replications,
        confidence=confidence,
        truncated=truncated,
        max_r_next_self_stable=b_max if s else None,
    )


def estimate_replay_statistic(snapshot: Snapshot, stat, rounds: int = 1,
                              replications: int = DEFAULT_REPLICATIONS,
                              confidence: float = DEFAULT_CONFIDENCE,
                              seed: int = 0) -> ExpectationEstimate:
    """Generic freeze-and-replay estimator of ``stat(traces)``.

    Used for per-processor migration counts and related round statistics
    where only a scalar per replication is needed.
    """
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    seeder = random.Random(seed)
    values = np.empty(replications, dtype=np.float64)
    truncated = 0
    for i in range(replications):
        traces, trunc = replay_window(snapshot, seeder.getrandbits(63), rounds=rounds)
        if trunc and len(traces) < rounds:
            truncated += 1
        values[i] = stat(traces)
    return ExpectationEstimate(
        mean=float(values.mean()),
        half_width=_half_width(values, confidence),
        replications=replications,
        confidence=confidence,
        truncated=truncated,
    )


def stolen_from(proc: int):
    """Statistic: nodes stolen from ``proc`` during the first replayed round."""
    def stat(traces):
        return sum(1 for m in traces[0].migrations
                   if m.src == proc and m.cause == STOLEN)
    return stat


def spread_from(proc: int):
    """Statistic: nodes donated away by ``proc`` during the first replayed round."""
    def stat(traces):
        return sum(1 for m in traces[0].migrations
                   if m.src == proc and m.cause == SPREAD)
    return stat


def r_next_size(proc: int):
    """Statistic: ``proc``'s attached-set size entering the next round."""
    def stat(traces):
        return traces[0].r_next_sizes[proc]
    return stat


# ---------------------------------------------------------------------------
# Verdicts

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"
NOT_APPLICABLE = "not_applicable"
VACUOUS = "vacuous"
APPLICABLE = "applicable"


@dataclass(frozen=True)
class StabilityVerdict:
    """Evaluation of one round against the two stability conjuncts.

    Conjunct A compares the estimated next-round backlog of the
    non-self-stable processors against the current backlog; the verdict is
    only ``holds``/``violated`` when the confidence interval excludes the
    threshold, otherwise ``inconclusive``.  Conjunct B is exact: the largest
    attached set a self-stable processor ended up with, over every
    replication, must stay within L+1.
    """

    t: int
    alpha: float
    u_size: int
    status: str  # applicable | not_applicable | vacuous
    interval: tuple[float, float]
    threshold: int | None = None
    estimate: ExpectationEstimate | None = None
    conjunct_a: str | None = None
    b_max: int | None = None
    b_bound: int | None = None
    conjunct_b: str | None = None


def stability_verdict(sets_t: RoundSets, estimate: ExpectationEstimate | None,
                      interval: tuple[float, float]) -> StabilityVerdict:
    lo, hi = interval
    u = sorted(sets_t.non_self_stable)
    base = dict(t=sets_t.t, alpha=sets_t.alpha, u_size=len(u), interval=(lo, hi))
    if not (lo <= sets_t.alpha < hi):
        return StabilityVerdict(status=NOT_APPLICABLE, **base)
    if not u:
        # strict decrease is unsatisfiable on an empty backlog (0 < 0)
        return StabilityVerdict(status=VACUOUS, **base)
    if estimate is None:
        raise ValueError("applicable round requires an estimate")
    threshold = sets_t.backlog(u)
    if estimate.mean + estimate.half_width < threshold:
        conj_a = HOLDS
    elif estimate.mean - estimate.half_width >= threshold:
        conj_a = VIOLATED
    else:
        conj_a = INCONCLUSIVE
    b_bound = sets_t.phase_count + 1
    b_max = estimate.max_r_next_self_stable
    conj_b = None
    if b_max is not None:
        conj_b = HOLDS if b_max <= b_bound else VIOLATED
    return StabilityVerdict(
        status=APPLICABLE, threshold=threshold, estimate=estimate,
        conjunct_a=conj_a, b_max=b_max, b_bound=b_bound, conjunct_b=conj_b,
        **base,
    )

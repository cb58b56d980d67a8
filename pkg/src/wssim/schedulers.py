"""Per-phase behavior of the two schedulers.

WS (two phases per round):
  I   busy processors execute their assigned node; idle ones pick a uniformly
      random victim (self included; a self-steal just finds an empty deque)
      and attempt a popTop, contended attempts resolved per the configured
      model.  A successful thief's loot becomes its assigned node.
  II  executors adopt one newly enabled node as assigned and push the other,
      if any, to the bottom of their own deque; executors that enabled
      nothing refill from their own deque bottom.  Thieves do nothing.

WSS (three phases per round):
  I   as WS, plus a successful thief immediately flips its state flag to
      WORKING, taking it out of the donation-target pool.
  II  executors adopt one enabled node; an executor that enabled two parks
      the extra in its donation cell, picks a uniformly random donee and
      attempts CAS(donee.state, IDLE, own id).  For each still-IDLE donee one
      uniformly random attempt wins; all attempts on non-IDLE donees fail.
  III failed donors push the parked node to their own deque bottom;
      executors that enabled nothing refill via popBottom and flag
      themselves IDLE when that fails; thieves whose steal failed poll their
      flag and, when it names a donor, take the donated node and flip to
      WORKING.  The donated node counts as migrating when it is taken.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .deque import is_node, resolve_pop_tops
from .engine import IDLE, Migration, SPREAD, STOLEN, WORKING


@dataclass
class RoundContext:
    """Intra-round scratch state handed from phase to phase."""

    executed_node: dict[int, int] = field(default_factory=dict)
    enabled: dict[int, list[int]] = field(default_factory=dict)
    thieves: list[int] = field(default_factory=list)
    migrations: list[Migration] = field(default_factory=list)
    donors: list[int] = field(default_factory=list)
    donor_ok: dict[int, bool] = field(default_factory=dict)


def run_ws_round(eng) -> RoundContext:
    ctx = RoundContext()
    ws_phase1(eng, ctx)
    ws_phase2(eng, ctx)
    return ctx


def run_wss_round(eng) -> RoundContext:
    ctx = RoundContext()
    wss_phase1(eng, ctx)
    wss_phase2(eng, ctx)
    wss_phase3(eng, ctx)
    return ctx


def _execute_and_steal(eng, ctx: RoundContext, tick: int, flag_thieves: bool) -> None:
    """Shared phase I: simultaneous execution, then contended steals."""
    executors: list[tuple[int, int]] = []
    for p, proc in enumerate(eng.procs):
        if is_node(proc.assigned):
            executors.append((p, proc.assigned))
            ctx.executed_node[p] = proc.assigned
            proc.assigned = None
        else:
            ctx.thieves.append(p)
    ctx.enabled = eng.apply_executions(executors)

    by_victim: dict[int, list[int]] = {}
    for p in ctx.thieves:
        victim = eng.rng.randrange(eng.p_count)
        by_victim.setdefault(victim, []).append(p)
    for victim in sorted(by_victim):
        outcomes = resolve_pop_tops(eng.procs[victim].deque, by_victim[victim],
                                    eng.contention, eng.rng, tick)
        for thief in by_victim[victim]:
            loot = outcomes[thief]
            eng.procs[thief].assigned = loot
            if is_node(loot):
                ctx.migrations.append(Migration(loot, victim, thief, STOLEN))
                if flag_thieves:
                    eng.procs[thief].state = WORKING


def ws_phase1(eng, ctx: RoundContext) -> None:
    _execute_and_steal(eng, ctx, tick=eng.t * 2, flag_thieves=False)


def ws_phase2(eng, ctx: RoundContext) -> None:
    tick = eng.t * 2 + 1
    for p in ctx.executed_node:
        proc = eng.procs[p]
        enabled = ctx.enabled[p]
        if enabled:
            proc.assigned = enabled[0]
            if len(enabled) == 2:
                proc.deque.push_bottom(enabled[1], tick)
        else:
            proc.assigned = proc.deque.pop_bottom(tick)


def wss_phase1(eng, ctx: RoundContext) -> None:
    _execute_and_steal(eng, ctx, tick=eng.t * 3, flag_thieves=True)


def wss_phase2(eng, ctx: RoundContext) -> None:
    cas_by_donee: dict[int, list[int]] = {}
    for p in ctx.executed_node:
        proc = eng.procs[p]
        enabled = ctx.enabled[p]
        if enabled:
            proc.assigned = enabled[0]
            if len(enabled) == 2:
                proc.donation = enabled[1]
                ctx.donors.append(p)
                donee = eng.rng.randrange(eng.p_count)
                cas_by_donee.setdefault(donee, []).append(p)
    for donee in sorted(cas_by_donee):
        attempts = cas_by_donee[donee]
        if eng.procs[donee].state == IDLE:
            winner = attempts[eng.rng.randrange(len(attempts))]
            eng.procs[donee].state = winner
            for donor in attempts:
                ctx.donor_ok[donor] = donor == winner
        else:
            for donor in attempts:
                ctx.donor_ok[donor] = False


def wss_phase3(eng, ctx: RoundContext) -> None:
    tick = eng.t * 3 + 2
    # donees take donations before donors touch their cells
    for p in ctx.thieves:
        proc = eng.procs[p]
        if not is_node(proc.assigned) and proc.state >= 0:
            donor = proc.state
            node = eng.procs[donor].donation
            proc.assigned = node
            proc.state = WORKING
            ctx.migrations.append(Migration(node, donor, p, SPREAD))
    for donor in ctx.donors:
        proc = eng.procs[donor]
        if not ctx.donor_ok[donor]:
            proc.deque.push_bottom(proc.donation, tick)
        proc.donation = None
    for p in ctx.executed_node:
        proc = eng.procs[p]
        if not ctx.enabled[p]:
            got = proc.deque.pop_bottom(tick)
            proc.assigned = got
            if not is_node(got):
                proc.state = IDLE

"""List-scheduling baselines: FCFS-H, PREMA-H, Herald-style load balancing, random."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..core import Decision, MasConfig, SubJob, SystemSnapshot
from ..costmodel import CostTable


def rank_priorities(order: Sequence[int]) -> list[float]:
    """Map a best-first ordering of ready-queue positions onto priorities in [-1, 1]."""
    n = len(order)
    prio = [0.0] * n
    for rank, idx in enumerate(order):
        prio[idx] = 1.0 if n == 1 else 1.0 - 2.0 * rank / (n - 1)
    return prio


def earliest_finish_sa(
    sj: SubJob,
    snapshot: SystemSnapshot,
    table: CostTable,
    avail: Optional[Sequence] = None,
    ready_time=0,
) -> int:
    """SA minimising max(free time, ready time) + cost; ties go to the lowest index.

    Times are relative to snapshot.now; `avail` defaults to the snapshot's busy horizon.
    """
    avail = snapshot.busy_until if avail is None else avail
    costs = table.cycles_row(sj.job.model_id, sj.layer_id)
    best, best_finish = 0, None
    for m, c in enumerate(costs):
        finish = max(avail[m], ready_time) + c
        if best_finish is None or finish < best_finish:
            best, best_finish = m, finish
    return best


def _predecessor_ready(snapshot: SystemSnapshot) -> dict[int, Fraction]:
    """Relative time at which each job's running layer (if any) frees its successor."""
    ready = {}
    for m, slot in enumerate(snapshot.running):
        if slot is not None:
            ready[slot.sj.job.job_id] = snapshot.busy_until[m]
    return ready


def list_assign(order: Sequence[int], snapshot: SystemSnapshot, table: CostTable) -> list[int]:
    """Greedy earliest-finish SA choice, visiting the ready queue in `order` and
    accounting for SA occupancy and layer precedence planned so far."""
    rq = snapshot.ready_queue
    avail = list(snapshot.busy_until)
    ready = _predecessor_ready(snapshot)
    choice = [0] * len(rq)
    for idx in order:
        sj = rq[idx]
        jid = sj.job.job_id
        r = ready.get(jid, 0)
        m = earliest_finish_sa(sj, snapshot, table, avail, r)
        finish = max(avail[m], r) + table.cycles(sj.job.model_id, sj.layer_id, m)
        avail[m] = finish
        ready[jid] = finish
        choice[idx] = m
    return choice


class FcfsH:
    """First come first served priorities + earliest-finish SA."""

    name = "fcfs-h"

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        rq = snapshot.ready_queue
        order = sorted(
            range(len(rq)), key=lambda i: (rq[i].job.arrival_cycle, rq[i].job.job_id, rq[i].layer_id)
        )
        prio = rank_priorities(order)
        sas = list_assign(order, snapshot, table)
        return [Decision(p, m) for p, m in zip(prio, sas)]


@dataclass
class PremaH:
    """Token-gated shortest-job-first priorities + earliest-finish SA."""

    base_priority: float = 1.0
    slope: float = 2.0
    threshold: float = 2.0
    name: str = "prema-h"

    def tokens(self, snapshot: SystemSnapshot) -> dict[int, float]:
        out = {}
        for sj in snapshot.ready_queue:
            job = sj.job
            waiting = float(snapshot.now - job.arrival_cycle)
            out[job.job_id] = self.base_priority + self.slope * waiting / job.qos_latency_cycles
        return out

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        rq = snapshot.ready_queue
        tokens = self.tokens(snapshot)
        remaining: dict[int, int] = {}
        for sj in rq:
            jid = sj.job.job_id
            remaining[jid] = remaining.get(jid, 0) + min(table.cycles_row(sj.job.model_id, sj.layer_id))
        candidates = {j for j, tok in tokens.items() if tok >= self.threshold} or set(tokens)

        def key(i):
            sj = rq[i]
            jid = sj.job.job_id
            return (jid not in candidates, remaining[jid], jid, sj.layer_id)

        order = sorted(range(len(rq)), key=key)
        prio = rank_priorities(order)
        sas = list_assign(order, snapshot, table)
        return [Decision(p, m) for p, m in zip(prio, sas)]


class HeraldLB:
    """Deadline-ordered greedy load balancing across SAs."""

    name = "herald"

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        rq = snapshot.ready_queue
        load = list(snapshot.busy_until)
        prio = rank_priorities(range(len(rq)))  # queue is already deadline-sorted
        out = []
        for i, sj in enumerate(rq):
            costs = table.cycles_row(sj.job.model_id, sj.layer_id)
            m = min(range(len(costs)), key=lambda a: (load[a] + costs[a], a))
            load[m] += costs[m]
            out.append(Decision(prio[i], m))
        return out


class RandomScheduler:
    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        n = len(snapshot.ready_queue)
        prio = self.rng.uniform(-1.0, 1.0, size=n)
        sas = self.rng.integers(0, snapshot.num_sas, size=n)
        return [Decision(float(p), int(m)) for p, m in zip(prio, sas)]

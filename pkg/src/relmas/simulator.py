"""Discrete-event execution of layer schedules on a bandwidth-shared MAS.

Time and progress are exact rationals (gmpy2 mpq internally; they compare and
hash like fractions.Fraction). Between two events every running sub-job
advances at the same rate r = min(1, B / sum(b)), so a layer of c cycles needs
c / r wall cycles under sustained contention.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Protocol, Sequence

from gmpy2 import mpq

from .core import (
    Decision,
    Job,
    MasConfig,
    RunningSlot,
    SjState,
    SubJob,
    SystemSnapshot,
    TransitionLog,
    check_decisions,
    sort_ready_queue,
)
from .costmodel import CostTable

ONE = mpq(1)
ZERO = mpq(0)


def contention_rate(bandwidths: Iterable, dram_bandwidth) -> Fraction:
    """Common progress rate of all running sub-jobs given their bandwidth demands."""
    total = sum((Fraction(b) for b in bandwidths), Fraction(0))
    if total <= dram_bandwidth:
        return Fraction(1)
    return Fraction(dram_bandwidth) / total


class Scheduler(Protocol):
    name: str

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        ...


@dataclass
class _Slot:
    sj: SubJob
    remaining: Fraction
    bandwidth: Fraction
    start: Fraction


@dataclass
class PeriodOutcome:
    residual_rq: tuple[SubJob, ...]
    finished: list[tuple[SubJob, Fraction]]
    dropped: list[SubJob]
    stall_cycles_total: Fraction


@dataclass
class Projection:
    """Projected fate of each ready sub-job: finish time, or None when dropped."""

    now: Fraction
    finish: dict[tuple[int, int], Optional[Fraction]]
    sa: dict[tuple[int, int], int]


@dataclass
class Metrics:
    jobs_total: int
    jobs_hit: int
    jobs_completed: int
    jobs_missed: int
    sla_satisfaction_rate: float
    vacuous: bool
    total_energy_pj: float
    busy_fraction: tuple[float, ...]
    makespan: Fraction
    stall_cycles: Fraction
    scheduler_invocations: int
    policy_energy_pj: float = 0.0

    def to_dict(self) -> dict:
        return {
            "jobs_total": self.jobs_total,
            "jobs_hit": self.jobs_hit,
            "jobs_completed": self.jobs_completed,
            "jobs_missed": self.jobs_missed,
            "sla_satisfaction_rate": self.sla_satisfaction_rate,
            "vacuous": self.vacuous,
            "total_energy_pj": self.total_energy_pj,
            "policy_energy_pj": self.policy_energy_pj,
            "busy_fraction": list(self.busy_fraction),
            "makespan": _num(self.makespan),
            "stall_cycles": _num(self.stall_cycles),
            "scheduler_invocations": self.scheduler_invocations,
        }


def sla_satisfaction_rate(metrics: Metrics) -> float:
    """Fraction of jobs whose last layer finished by arrival + QoS; 1.0 when there are no jobs."""
    if metrics.jobs_total == 0:
        return 1.0
    return metrics.jobs_hit / metrics.jobs_total


def _num(x):
    if isinstance(x, (Fraction, type(ONE))):
        if x.denominator == 1:
            return int(x)
        return round(float(x), 6)
    return x


class Engine:
    """Mutable state of one MAS run. A single engine is strictly sequential."""

    def __init__(self, cfg: MasConfig, table: CostTable, jobs: Sequence[Job] = (), record: bool = True):
        self.cfg = cfg
        self.table = table
        self.B = mpq(cfg.dram_bandwidth_bytes_per_cycle)
        self.M = cfg.num_sas
        self.now = ZERO
        self.record = record
        self.running: list[Optional[_Slot]] = [None] * self.M
        self.queues: list[list[SubJob]] = [[] for _ in range(self.M)]
        self.jobs = {j.job_id: j for j in jobs}
        self._arrivals = sorted(jobs, key=lambda j: (j.arrival_cycle, j.job_id))
        self._next_arrival = 0
        self.pending: dict[tuple[int, int], SubJob] = {}
        self._deadline_heap: list[tuple[int, int]] = []
        self.next_layer: dict[int, int] = {}
        self.start_time: dict[tuple[int, int], Fraction] = {}
        self.finish_time: dict[tuple[int, int], Fraction] = {}
        self.assigned_sa: dict[tuple[int, int], int] = {}
        self.job_result: dict[int, bool] = {}
        self.transitions = TransitionLog()
        self.log: list[dict] = []
        self.energy_pj = 0.0
        self.busy_time = [ZERO] * self.M
        self.stall_cycles = ZERO
        self.invocations = 0
        self.rq_lengths: list[int] = []
        self._snapshot: Optional[SystemSnapshot] = None
        self._period_finished: list[tuple[SubJob, Fraction]] = []
        self._period_dropped: list[SubJob] = []

    # -- construction from a snapshot (projection) --------------------------------

    @classmethod
    def from_snapshot(cls, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> "Engine":
        eng = cls(cfg, table, (), record=False)
        eng.now = mpq(snapshot.now)
        for m, slot in enumerate(snapshot.running):
            if slot is not None:
                eng.running[m] = _Slot(slot.sj, mpq(slot.remaining), mpq(slot.bandwidth), slot.start)
                eng._register_job(slot.sj.job)
                nl = eng.next_layer.get(slot.sj.job.job_id)
                eng.next_layer[slot.sj.job.job_id] = slot.sj.layer_id if nl is None else min(nl, slot.sj.layer_id)
        for sj in snapshot.ready_queue:
            eng._register_job(sj.job)
            eng.pending[sj.key] = sj
            jid = sj.job.job_id
            nl = eng.next_layer.get(jid)
            eng.next_layer[jid] = sj.layer_id if nl is None else min(nl, sj.layer_id)
            heapq.heappush(eng._deadline_heap, (sj.deadline, jid))
        eng._snapshot = snapshot
        return eng

    def _register_job(self, job: Job) -> None:
        self.jobs.setdefault(job.job_id, job)

    # -- bookkeeping ---------------------------------------------------------------

    def _emit(self, event: str, sj: Optional[SubJob] = None, sa: Optional[int] = None) -> None:
        if not self.record:
            return
        self.log.append(
            {
                "t": _num(self.now),
                "event": event,
                "job": sj.job.job_id if sj is not None else None,
                "layer": sj.layer_id if sj is not None else None,
                "sa": sa,
            }
        )

    def _admit_arrivals(self) -> None:
        while self._next_arrival < len(self._arrivals) and self._arrivals[self._next_arrival].arrival_cycle <= self.now:
            job = self._arrivals[self._next_arrival]
            self._next_arrival += 1
            self.next_layer[job.job_id] = 0
            for s in range(self.table.num_layers(job.model_id)):
                sj = SubJob(job, s)
                self.pending[sj.key] = sj
            heapq.heappush(self._deadline_heap, (job.deadline, job.job_id))

    def _drop_expired(self) -> None:
        heap = self._deadline_heap
        while heap and heap[0][0] <= self.now:
            _, jid = heapq.heappop(heap)
            job = self.jobs[jid]
            for s in range(self.next_layer.get(jid, 0), self.table.num_layers(job.model_id)):
                sj = self.pending.pop((jid, s), None)
                if sj is None:
                    continue
                if self.record:
                    self.transitions.move(sj.key, SjState.DROPPED)
                self._period_dropped.append(sj)
                self._emit("drop", sj)
            self.job_result.setdefault(jid, False)

    def _dispatch(self) -> None:
        for m in range(self.M):
            if self.running[m] is not None:
                continue
            queue = self.queues[m]
            pick = None
            i = 0
            while i < len(queue):
                sj = queue[i]
                if sj.key not in self.pending:
                    queue.pop(i)  # started elsewhere or dropped
                    continue
                if self.next_layer[sj.job.job_id] == sj.layer_id:
                    pick = queue.pop(i)
                    break
                i += 1  # dependency-blocked: skip, do not wait
            if pick is None:
                continue
            del self.pending[pick.key]
            mid, lid = pick.job.model_id, pick.layer_id
            self.running[m] = _Slot(
                pick, mpq(self.table.cycles(mid, lid, m)), self.table.bandwidth_q(mid, lid, m), self.now
            )
            self.start_time[pick.key] = self.now
            self.assigned_sa[pick.key] = m
            if self.record:
                self.transitions.move(pick.key, SjState.RUNNING)
            self._emit("start", pick, m)

    def _complete(self, m: int) -> None:
        slot = self.running[m]
        self.running[m] = None
        sj = slot.sj
        self.finish_time[sj.key] = self.now
        self.next_layer[sj.job.job_id] = sj.layer_id + 1
        self.energy_pj += self.table.energy(sj.job.model_id, sj.layer_id, m)
        if self.record:
            self.transitions.move(sj.key, SjState.FINISHED)
        self._period_finished.append((sj, self.now))
        self._emit("finish", sj, m)
        if sj.layer_id == self.table.num_layers(sj.job.model_id) - 1:
            self.job_result.setdefault(sj.job.job_id, self.now <= sj.job.deadline)

    def rate(self) -> Fraction:
        total = ZERO
        for slot in self.running:
            if slot is not None:
                total += slot.bandwidth
        if total <= self.B:
            return ONE
        return self.B / total

    # -- event loop ------------------------------------------------------------------

    def _run(self, until: Optional[Fraction]) -> None:
        """Advance event by event up to `until` (None: until nothing is left to happen)."""
        while True:
            self._admit_arrivals()
            self._drop_expired()
            if until is not None and self.now >= until:
                return  # starts at the boundary belong to the next schedule
            self._dispatch()
            rate = self.rate()
            t_next = until
            n_running = 0
            for slot in self.running:
                if slot is not None:
                    n_running += 1
                    t = self.now + slot.remaining / rate
                    if t_next is None or t < t_next:
                        t_next = t
            if self._deadline_heap and self.pending:
                d = mpq(self._deadline_heap[0][0])
                if t_next is None or d < t_next:
                    t_next = d
            if self._next_arrival < len(self._arrivals):
                a = mpq(self._arrivals[self._next_arrival].arrival_cycle)
                if t_next is None or a < t_next:
                    t_next = a
            if t_next is None:
                return
            dt = t_next - self.now
            if n_running:
                progress = rate * dt
                if rate != ONE:
                    self.stall_cycles += (dt - progress) * n_running
                for m, slot in enumerate(self.running):
                    if slot is not None:
                        slot.remaining -= progress
                        self.busy_time[m] += dt
            self.now = t_next
            for m, slot in enumerate(self.running):
                if slot is not None and slot.remaining <= 0:
                    self._complete(m)

    # -- public API ---------------------------------------------------------------------

    def snapshot(self) -> SystemSnapshot:
        self._admit_arrivals()
        self._drop_expired()
        busy = tuple(slot.remaining if slot is not None else ZERO for slot in self.running)
        running = tuple(
            RunningSlot(s.sj, s.remaining, s.bandwidth, s.start) if s is not None else None for s in self.running
        )
        snap = SystemSnapshot(self.now, busy, sort_ready_queue(self.pending.values()), running)
        self._snapshot = snap
        return snap

    def _load_decisions(self, decisions: Sequence[Decision]) -> None:
        snap = self._snapshot
        if snap is None:
            raise RuntimeError("advance_period called without a snapshot")
        check_decisions(decisions, snap)
        order = sorted(range(len(decisions)), key=lambda i: (-decisions[i].priority, i))
        self.queues = [[] for _ in range(self.M)]
        for i in order:
            self.queues[decisions[i].sa_choice].append(snap.ready_queue[i])

    def advance_period(self, decisions: Sequence[Decision], period) -> PeriodOutcome:
        self._load_decisions(decisions)
        rq = self._snapshot.ready_queue
        self._period_finished = []
        self._period_dropped = []
        stall0 = self.stall_cycles
        self._emit("period")
        self._run(self.now + mpq(period))
        residual = tuple(sj for sj in rq if sj.key in self.pending)
        self.queues = [[] for _ in range(self.M)]
        self._snapshot = None
        return PeriodOutcome(residual, self._period_finished, self._period_dropped, self.stall_cycles - stall0)

    def residual_snapshot(self, outcome: PeriodOutcome) -> SystemSnapshot:
        """Snapshot restricted to the residual ready queue (no newly arrived jobs)."""
        busy = tuple(slot.remaining if slot is not None else ZERO for slot in self.running)
        running = tuple(
            RunningSlot(s.sj, s.remaining, s.bandwidth, s.start) if s is not None else None for s in self.running
        )
        live = tuple(sj for sj in outcome.residual_rq if sj.key in self.pending)
        return SystemSnapshot(self.now, busy, live, running)

    def idle(self) -> bool:
        return not self.pending and all(s is None for s in self.running)

    def exhausted(self) -> bool:
        return self._next_arrival >= len(self._arrivals) and self.idle()

    def skip_idle(self, period) -> None:
        """Jump to the first period boundary at or after the next arrival when the MAS is idle."""
        if not self.idle() or self._next_arrival >= len(self._arrivals):
            return
        period = mpq(period)
        nxt = self._arrivals[self._next_arrival].arrival_cycle
        if nxt > self.now:
            k = math.ceil((nxt - self.now) / period)
            self.queues = [[] for _ in range(self.M)]
            # arrivals and deadline drops inside the skipped span still happen on time
            self._run(self.now + k * period)

    def project(self, decisions: Sequence[Decision]) -> Projection:
        eng = Engine.from_snapshot(self._snapshot, self.table, self.cfg) if self._snapshot else None
        if eng is None:
            raise RuntimeError("project called without a snapshot")
        return eng._project(decisions)

    def _project(self, decisions: Sequence[Decision]) -> Projection:
        self._load_decisions(decisions)
        rq = self._snapshot.ready_queue
        self._run(None)
        finish = {sj.key: self.finish_time.get(sj.key) for sj in rq}
        sa = {sj.key: d.sa_choice for sj, d in zip(rq, decisions)}
        return Projection(self._snapshot.now, finish, sa)

    def metrics(self) -> Metrics:
        total = len(self.jobs)
        hits = sum(1 for v in self.job_result.values() if v)
        completed = sum(
            1
            for j in self.jobs.values()
            if (j.job_id, self.table.num_layers(j.model_id) - 1) in self.finish_time
        )
        makespan = max(self.finish_time.values(), default=ZERO)
        busy = tuple(float(b / makespan) if makespan else 0.0 for b in self.busy_time)
        return Metrics(
            jobs_total=total,
            jobs_hit=hits,
            jobs_completed=completed,
            jobs_missed=total - hits,
            sla_satisfaction_rate=hits / total if total else 1.0,
            vacuous=total == 0,
            total_energy_pj=self.energy_pj,
            busy_fraction=busy,
            makespan=makespan,
            stall_cycles=self.stall_cycles,
            scheduler_invocations=self.invocations,
        )


def advance_period(engine: Engine, decisions: Sequence[Decision], period) -> PeriodOutcome:
    return engine.advance_period(decisions, period)


def project_schedule(
    snapshot: SystemSnapshot,
    decisions: Sequence[Decision],
    table: CostTable,
    cfg: MasConfig,
    bandwidth=None,
) -> Projection:
    """Run the snapshot's ready queue to completion (no new arrivals) without touching any live engine."""
    if bandwidth is not None:
        cfg = cfg.with_bandwidth(bandwidth)
    return Engine.from_snapshot(snapshot, table, cfg)._project(decisions)


@dataclass
class RunResult:
    metrics: Metrics
    log: list[dict]
    rq_lengths: list[int]
    engine: Engine = field(repr=False)

    def log_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.log)


def run_trace(
    cfg: MasConfig,
    table: CostTable,
    trace: Sequence[Job],
    scheduler: Scheduler,
    period,
    on_period: Optional[Callable[[Engine, SystemSnapshot, list, PeriodOutcome], None]] = None,
    record: bool = True,
) -> RunResult:
    """Periodic schedule/commit loop until the trace is exhausted and the MAS drained."""
    period = Fraction(period)
    if period <= 0:
        raise ValueError("scheduling period must be positive")
    eng = Engine(cfg, table, trace, record=record)
    while True:
        eng.skip_idle(period)
        snap = eng.snapshot()
        if eng.exhausted():
            break
        if snap.ready_queue:
            decisions = list(scheduler.schedule(snap, table, cfg))
            if len(decisions) != len(snap.ready_queue):
                raise ValueError(
                    f"scheduler {getattr(scheduler, 'name', scheduler)!r} returned {len(decisions)} decisions "
                    f"for a ready queue of {len(snap.ready_queue)}"
                )
            eng.invocations += 1
            eng.rq_lengths.append(len(snap.ready_queue))
        else:
            decisions = []
        outcome = eng.advance_period(decisions, period)
        if on_period is not None:
            on_period(eng, snap, decisions, outcome)
    return RunResult(eng.metrics(), eng.log, eng.rq_lengths, eng)

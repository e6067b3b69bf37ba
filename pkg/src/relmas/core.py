"""Domain types shared by the cost model, simulator and schedulers.

All times are integer or rational clock cycles of the single MAS clock domain.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

Cycles = Union[int, Fraction]


class Dataflow(str, Enum):
    ROW_STATIONARY = "RowStationary"
    WEIGHT_STATIONARY = "WeightStationary"


class QosLevel(str, Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


class SjState(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    FINISHED = "finished"
    DROPPED = "dropped"


# Pending -> Running -> Finished, or Pending -> Dropped. No preemption.
ALLOWED_TRANSITIONS = {
    SjState.PENDING: frozenset({SjState.RUNNING, SjState.DROPPED}),
    SjState.RUNNING: frozenset({SjState.FINISHED}),
    SjState.FINISHED: frozenset(),
    SjState.DROPPED: frozenset(),
}


class InvalidTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class SaSpec:
    id: int
    name: str
    dataflow: Dataflow
    num_pes: int
    macs_per_pe: int
    global_buffer_bytes: int = 0
    pe_buffer_bytes: int = 0
    frequency_hz: float = 1e9

    def __post_init__(self) -> None:
        if self.num_pes < 1:
            raise ValueError(f"SA {self.name!r}: num_pes must be >= 1")
        if self.macs_per_pe < 1:
            raise ValueError(f"SA {self.name!r}: macs_per_pe must be >= 1")
        object.__setattr__(self, "dataflow", Dataflow(self.dataflow))

    @property
    def peak_macs_per_cycle(self) -> int:
        return self.num_pes * self.macs_per_pe


@dataclass(frozen=True)
class MasConfig:
    sas: tuple[SaSpec, ...]
    dram_bandwidth_bytes_per_cycle: Fraction
    nop_energy_pj_per_bit: float = 1.3

    def __post_init__(self) -> None:
        object.__setattr__(self, "sas", tuple(self.sas))
        bw = Fraction(self.dram_bandwidth_bytes_per_cycle)
        object.__setattr__(self, "dram_bandwidth_bytes_per_cycle", bw)
        if not self.sas:
            raise ValueError("MAS needs at least one sub-accelerator")
        if bw <= 0:
            raise ValueError("DRAM bandwidth must be positive")
        for i, sa in enumerate(self.sas):
            if sa.id != i:
                raise ValueError(f"SA ids must be 0..M-1 in order; got {sa.id} at position {i}")
        if len({sa.frequency_hz for sa in self.sas}) != 1:
            raise ValueError("all SAs must share a single clock frequency")

    @property
    def num_sas(self) -> int:
        return len(self.sas)

    def with_bandwidth(self, bandwidth) -> "MasConfig":
        return MasConfig(self.sas, Fraction(bandwidth), self.nop_energy_pj_per_bit)


def table1_mas(dram_bandwidth_bytes_per_cycle=16, nop_energy_pj_per_bit: float = 1.3) -> MasConfig:
    """Six-SA reference system: small/large Eyeriss-like and Simba-like instances.

    Two small and one large instance per family; SA 3 (first Simba Small) hosts the policy.
    """
    rs, ws = Dataflow.ROW_STATIONARY, Dataflow.WEIGHT_STATIONARY
    kib = 1024
    rows = [
        ("eyeriss-small", rs, 256, 1, 64 * kib, 220),
        ("eyeriss-small-2", rs, 256, 1, 64 * kib, 220),
        ("eyeriss-large", rs, 512, 1, 64 * kib, 220),
        ("simba-small", ws, 16, 16, 32 * kib, 24 * kib),
        ("simba-small-2", ws, 16, 16, 32 * kib, 24 * kib),
        ("simba-large", ws, 32, 16, 64 * kib, 24 * kib),
    ]
    sas = tuple(
        SaSpec(i, name, df, pes, mpp, gb, pb, 1e9)
        for i, (name, df, pes, mpp, gb, pb) in enumerate(rows)
    )
    return MasConfig(sas, Fraction(dram_bandwidth_bytes_per_cycle), nop_energy_pj_per_bit)


@dataclass(frozen=True)
class LayerDesc:
    layer_id: int
    macs: int
    input_bytes: int = 0
    weight_bytes: int = 0
    output_bytes: int = 0

    def __post_init__(self) -> None:
        if self.macs <= 0:
            raise ValueError(f"layer {self.layer_id}: macs must be > 0")
        if min(self.input_bytes, self.weight_bytes, self.output_bytes) < 0:
            raise ValueError(f"layer {self.layer_id}: byte counts must be >= 0")

    @property
    def total_bytes(self) -> int:
        return self.input_bytes + self.weight_bytes + self.output_bytes


@dataclass(frozen=True)
class DnnModelDesc:
    model_id: int
    name: str
    layers: tuple[LayerDesc, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError(f"model {self.name!r} has no layers")
        for s, layer in enumerate(self.layers):
            if layer.layer_id != s:
                raise ValueError(f"model {self.name!r}: layer ids must be 0..L-1")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def total_macs(self) -> int:
        return sum(layer.macs for layer in self.layers)


def model_from_dict(model_id: int, doc: dict) -> DnnModelDesc:
    layers = [
        LayerDesc(
            s,
            int(row["macs"]),
            int(row.get("input_bytes", 0)),
            int(row.get("weight_bytes", 0)),
            int(row.get("output_bytes", 0)),
        )
        for s, row in enumerate(doc["layers"])
    ]
    return DnnModelDesc(model_id, str(doc["name"]), tuple(layers))


def load_model_desc(path: Union[str, Path], model_id: int) -> DnnModelDesc:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(model_id, json.load(fh))


def model_to_dict(model: DnnModelDesc) -> dict:
    return {
        "name": model.name,
        "layers": [
            {
                "macs": layer.macs,
                "input_bytes": layer.input_bytes,
                "weight_bytes": layer.weight_bytes,
                "output_bytes": layer.output_bytes,
            }
            for layer in model.layers
        ],
    }


@dataclass(frozen=True)
class Job:
    job_id: int
    model_id: int
    arrival_cycle: int
    qos_latency_cycles: int
    qos_level: QosLevel = QosLevel.MEDIUM

    def __post_init__(self) -> None:
        if self.qos_latency_cycles <= 0:
            raise ValueError(f"job {self.job_id}: QoS latency must be > 0")
        if self.arrival_cycle < 0:
            raise ValueError(f"job {self.job_id}: arrival must be >= 0")
        object.__setattr__(self, "qos_level", QosLevel(self.qos_level))

    @property
    def deadline(self) -> int:
        return self.arrival_cycle + self.qos_latency_cycles


def absolute_deadline(job: Job) -> int:
    return job.arrival_cycle + job.qos_latency_cycles


@dataclass(frozen=True)
class SubJob:
    """Identity of one layer of one job. Execution state lives in the engine."""

    job: Job
    layer_id: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.job.job_id, self.layer_id)

    @property
    def deadline(self) -> int:
        return self.job.deadline

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.job.deadline, self.job.job_id, self.layer_id)


class TransitionLog:
    """Tracks sub-job states and rejects any transition the state machine forbids."""

    def __init__(self) -> None:
        self.states: dict[tuple[int, int], SjState] = {}
        self.history: list[tuple[tuple[int, int], SjState, SjState]] = []

    def state(self, key: tuple[int, int]) -> SjState:
        return self.states.get(key, SjState.PENDING)

    def move(self, key: tuple[int, int], new: SjState) -> None:
        old = self.state(key)
        if new not in ALLOWED_TRANSITIONS[old]:
            raise InvalidTransition(f"sub-job {key}: {old.value} -> {new.value}")
        self.states[key] = new
        self.history.append((key, old, new))


@dataclass(frozen=True)
class RunningSlot:
    """A sub-job occupying an SA, with its remaining work in full-rate cycles."""

    sj: SubJob
    remaining: Fraction
    bandwidth: Fraction
    start: Fraction


@dataclass(frozen=True)
class SystemSnapshot:
    now: Fraction
    busy_until: tuple[Fraction, ...]
    ready_queue: tuple[SubJob, ...]
    # Per-SA occupant, needed to project a schedule from the snapshot alone.
    running: tuple[Optional[RunningSlot], ...] = field(default=())

    @property
    def num_sas(self) -> int:
        return len(self.busy_until)


@dataclass(frozen=True)
class Decision:
    priority: float
    sa_choice: int


def sort_ready_queue(entries: Iterable[SubJob]) -> tuple[SubJob, ...]:
    return tuple(sorted(entries, key=lambda sj: sj.sort_key))


def validate_snapshot(snapshot: SystemSnapshot) -> list[str]:
    """Return every invariant breach found in the snapshot; an empty list means ok."""
    problems: list[str] = []
    seen: set[tuple[int, int]] = set()
    prev = None
    for pos, sj in enumerate(snapshot.ready_queue):
        if sj.key in seen:
            problems.append(f"duplicate: {sj.key} at position {pos}")
        seen.add(sj.key)
        if sj.deadline <= snapshot.now:
            problems.append(f"expired: {sj.key} deadline {sj.deadline} <= now {snapshot.now}")
        if prev is not None and sj.sort_key < prev.sort_key:
            problems.append(f"unsorted: {sj.key} at position {pos} precedes {prev.key}")
        prev = sj
    return problems


def check_decisions(decisions: Sequence[Decision], snapshot: SystemSnapshot) -> None:
    if len(decisions) != len(snapshot.ready_queue):
        raise ValueError(
            f"scheduler returned {len(decisions)} decisions for {len(snapshot.ready_queue)} ready sub-jobs"
        )
    for d in decisions:
        if not 0 <= d.sa_choice < snapshot.num_sas:
            raise ValueError(f"decision references unknown SA index {d.sa_choice}")

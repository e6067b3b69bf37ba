"""State and action codecs for the sequence policy."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..core import Decision, MasConfig, SystemSnapshot
from ..costmodel import CostTable


def state_size(num_sas: int) -> int:
    return 4 + 2 * num_sas


def action_size(num_sas: int) -> int:
    return 1 + num_sas


@dataclass(frozen=True)
class Norms:
    """Feature scaling, fixed at training time and stored with the checkpoint."""

    time_scale: float  # cycles; usually the scheduling period
    bandwidth: float  # bytes/cycle divisor for per-SA bandwidth demand
    num_models: int
    max_layers: int
    cap: float = 8.0

    def __post_init__(self) -> None:
        if self.time_scale <= 0 or self.bandwidth <= 0 or self.cap <= 0:
            raise ValueError("normalization constants must be positive")
        if self.num_models < 1 or self.max_layers < 1:
            raise ValueError("num_models and max_layers must be >= 1")

    @classmethod
    def for_setup(cls, table: CostTable, cfg: MasConfig, period, cap: float = 8.0) -> "Norms":
        return cls(
            time_scale=float(period),
            bandwidth=float(cfg.dram_bandwidth_bytes_per_cycle),
            num_models=len(table.models),
            max_layers=max(m.num_layers for m in table.models),
            cap=cap,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "Norms":
        return cls(**doc)

    def as_array(self) -> np.ndarray:
        return np.array([self.time_scale, self.bandwidth, self.num_models, self.max_layers, self.cap], dtype="<f8")

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "Norms":
        return cls(float(a[0]), float(a[1]), int(a[2]), int(a[3]), float(a[4]))


def encode_state(snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig, norms: Norms) -> np.ndarray:
    """(|RQ|+1, 4+2M) matrix; row 0 is the primer carrying each SA's busy horizon."""
    M = cfg.num_sas
    rq = snapshot.ready_queue
    t = float(snapshot.now)
    T, cap = norms.time_scale, norms.cap
    out = np.zeros((len(rq) + 1, state_size(M)))
    out[0, 4 : 4 + M] = np.minimum([float(b) / T for b in snapshot.busy_until], cap)
    for r, sj in enumerate(rq, start=1):
        job = sj.job
        mid, lid = job.model_id, sj.layer_id
        row = out[r]
        row[0] = mid / norms.num_models
        row[1] = lid / norms.max_layers
        row[2] = min((job.deadline - t) / T, cap)
        row[3] = min((t - job.arrival_cycle) / T, cap)
        row[4 : 4 + M] = np.minimum(np.array(table.cycles_row(mid, lid), dtype=float) / T, cap)
        bw = [float(b) for b in table.bandwidth_row(mid, lid)]
        row[4 + M :] = np.minimum(np.array(bw) / norms.bandwidth, cap)
    return out


def decode_action(actions: np.ndarray) -> list[Decision]:
    """Priority from column 0; SA = argmax of the remaining columns (first wins ties)."""
    actions = np.asarray(actions, dtype=float)
    if actions.size == 0:
        return []
    return [Decision(float(a[0]), int(np.argmax(a[1:]))) for a in actions]

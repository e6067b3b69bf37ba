from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

from ..core import SubJob
from ..simulator import Projection


@dataclass(frozen=True)
class RewardCoefficients:
    alpha: float = 0.10
    beta: float = 0.11
    gamma_slack: float = 0.05
    delta: float = 0.01
    period: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if min(self.alpha, self.beta, self.gamma_slack) < 0:
            raise ValueError("alpha, beta and gamma must be non-negative")
        if self.period <= 0:
            raise ValueError("period must be positive")


class ProjectedSubJob(NamedTuple):
    arrival: int
    qos: int
    finish: Optional[Fraction]  # None when the sub-job is dropped
    job_id: int = -1
    is_last_layer: bool = False


def projection_entries(rq: Sequence[SubJob], projection: Projection, num_layers=None) -> list[ProjectedSubJob]:
    out = []
    for sj in rq:
        last = num_layers is not None and sj.layer_id == num_layers(sj.job.model_id) - 1
        out.append(
            ProjectedSubJob(sj.job.arrival_cycle, sj.job.qos_latency_cycles, projection.finish[sj.key], sj.job.job_id, last)
        )
    return out


def normalized_slack(entry: ProjectedSubJob) -> float:
    if entry.finish is None:
        return -1.0
    slack = float((entry.arrival + entry.qos) - entry.finish) / entry.qos
    return max(-1.0, min(1.0, slack))


def compute_reward(coeffs: RewardCoefficients, t, entries: Iterable[ProjectedSubJob]) -> float:
    horizon = t + Fraction(coeffs.period) if isinstance(t, Fraction) else t + coeffs.period
    r = 0.0
    for e in entries:
        if e.finish is None:
            r += coeffs.delta * (-coeffs.beta - coeffs.gamma_slack)
            continue
        weight = 1.0 if e.finish < horizon else coeffs.delta
        hit = coeffs.alpha if e.finish <= e.arrival + e.qos else -coeffs.beta
        r += weight * (hit + coeffs.gamma_slack * normalized_slack(e))
    return r


def sla_fitness(coeffs: RewardCoefficients, entries: Sequence[ProjectedSubJob]) -> float:
    """Deadline hits of jobs completing inside the projection plus gamma-weighted mean slack."""
    if not entries:
        return 0.0
    hits = sum(
        1 for e in entries if e.is_last_layer and e.finish is not None and e.finish <= e.arrival + e.qos
    )
    mean_slack = sum(normalized_slack(e) for e in entries) / len(entries)
    return hits + coeffs.gamma_slack * mean_slack

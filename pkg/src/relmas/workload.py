"""Multi-tenant request traces: Pareto inter-arrivals, uniform model choice, QoS deadlines."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import Job, QosLevel
from .costmodel import CostTable, min_job_latency


class WorkloadName(str, Enum):
    LIGHT = "Light"
    HEAVY = "Heavy"
    MIXED = "Mixed"


LIGHT_MODELS = ("SqueezeNet", "YOLO-Lite", "KeywordSpotting")
HEAVY_MODELS = ("AlexNet", "InceptionV3", "ResNet50", "YOLO-V2")


@dataclass(frozen=True)
class WorkloadSet:
    name: str
    model_names: tuple[str, ...]

    def model_ids(self, table: CostTable) -> list[int]:
        return [table.model_by_name(n).model_id for n in self.model_names]


def workload_set(name: Union[str, WorkloadName]) -> WorkloadSet:
    try:
        key = WorkloadName(name)
    except ValueError:
        raise ValueError(f"unknown workload set {name!r}; expected Light, Heavy or Mixed") from None
    models = {
        WorkloadName.LIGHT: LIGHT_MODELS,
        WorkloadName.HEAVY: HEAVY_MODELS,
        WorkloadName.MIXED: LIGHT_MODELS + HEAVY_MODELS,
    }[key]
    return WorkloadSet(key.value, models)


@dataclass(frozen=True)
class TraceParams:
    workload: WorkloadSet
    duration_cycles: int
    pareto_shape: float = 1.5
    pareto_scale_cycles: float = 1.0
    qos_medium_factor: float = 3.0
    qos_mix: Mapping[QosLevel, float] = field(default_factory=lambda: {QosLevel.MEDIUM: 1.0})
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pareto_shape <= 0:
            raise ValueError("pareto_shape must be > 0")
        if self.pareto_scale_cycles <= 0:
            raise ValueError("pareto_scale_cycles must be > 0")
        if self.qos_medium_factor <= 1:
            raise ValueError("qos_medium_factor must be > 1")
        if self.duration_cycles < 0:
            raise ValueError("duration must be >= 0")
        mix = {QosLevel(k): float(v) for k, v in self.qos_mix.items()}
        if not mix or any(v < 0 for v in mix.values()) or sum(mix.values()) <= 0:
            raise ValueError("qos_mix must be a non-negative, non-empty distribution")
        object.__setattr__(self, "qos_mix", mix)


def qos_factor(level: Union[QosLevel, str], medium_factor: float) -> float:
    level = QosLevel(level)
    if level is QosLevel.LOW:
        return 1.2 * medium_factor
    if level is QosLevel.HIGH:
        return 0.8 * medium_factor
    return medium_factor


def pareto_samples(rng: np.random.Generator, shape: float, scale: float, n: int) -> np.ndarray:
    # numpy's pareto() is the Lomax form; shifting by one gives the classical
    # Pareto with minimum `scale` and mean scale*shape/(shape-1).
    return scale * (1.0 + rng.pareto(shape, size=n))


def pareto_scale_for_load(rho: float, shape: float, mean_job_cycles: float, num_sas: int) -> float:
    """Scale giving mean inter-arrival mean_job_cycles / (rho * num_sas)."""
    if rho <= 0 or shape <= 1:
        raise ValueError("load calibration needs rho > 0 and a finite-mean shape > 1")
    mean_gap = mean_job_cycles / (rho * num_sas)
    return mean_gap * (shape - 1.0) / shape


def generate_trace(p: TraceParams, table: CostTable) -> list[Job]:
    if not p.workload.model_names:
        raise ValueError("workload set is empty")
    model_ids = p.workload.model_ids(table)
    min_lat = {m: min_job_latency(m, table) for m in model_ids}
    levels = sorted(p.qos_mix, key=lambda lv: list(QosLevel).index(lv))
    probs = np.array([p.qos_mix[lv] for lv in levels], dtype=float)
    probs /= probs.sum()

    rng = np.random.default_rng(p.seed)
    jobs: list[Job] = []
    t = 0.0
    chunk = 256
    while True:
        gaps = pareto_samples(rng, p.pareto_shape, p.pareto_scale_cycles, chunk)
        models = rng.integers(0, len(model_ids), size=chunk)
        qos = rng.choice(len(levels), size=chunk, p=probs)
        done = False
        for gap, mi, qi in zip(gaps, models, qos):
            t += float(gap)
            if t >= p.duration_cycles:
                done = True
                break
            model_id = model_ids[int(mi)]
            level = levels[int(qi)]
            q = math.ceil(qos_factor(level, p.qos_medium_factor) * min_lat[model_id])
            jobs.append(Job(len(jobs), model_id, int(t), max(q, 1), level))
        if done:
            return jobs


def job_to_dict(job: Job, table: CostTable) -> dict:
    return {
        "job_id": job.job_id,
        "model": table.model(job.model_id).name,
        "arrival": job.arrival_cycle,
        "qos_cycles": job.qos_latency_cycles,
        "qos_level": job.qos_level.value,
    }


def dumps_trace(jobs: Iterable[Job], table: CostTable, header: Optional[dict] = None) -> str:
    lines = []
    if header is not None:
        lines.append(json.dumps({"provenance": header}, sort_keys=True))
    lines.extend(json.dumps(job_to_dict(j, table), sort_keys=True) for j in jobs)
    return "".join(line + "\n" for line in lines)


def write_trace(path: Union[str, Path], jobs: Iterable[Job], table: CostTable, header: Optional[dict] = None) -> None:
    Path(path).write_text(dumps_trace(jobs, table, header), encoding="utf-8")


def read_trace(path: Union[str, Path], table: CostTable) -> list[Job]:
    jobs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "provenance" in doc:
                continue
            try:
                jobs.append(
                    Job(
                        int(doc["job_id"]),
                        table.model_by_name(doc["model"]).model_id,
                        int(doc["arrival"]),
                        int(doc["qos_cycles"]),
                        QosLevel(doc["qos_level"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad trace record ({exc})") from None
    return jobs

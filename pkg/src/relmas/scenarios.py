"""Small self-contained setups used for quick training runs and sanity checks."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import Dataflow, Job, MasConfig, QosLevel, SaSpec
from .costmodel import CostTable, table_from_costs
from .workload import TraceParams, WorkloadSet, generate_trace

# Two models on a two-SA system, each with a strong SA affinity. Requests mix
# tight and loose deadlines and the offered load exceeds capacity in bursts, so
# ordering by arrival wastes SA time on requests that can no longer be saved.
TOY_COSTS = {
    "small": [[(8, 40), (30, 40)], [(8, 40), (30, 40)]],
    "tall": [[(60, 80), (10, 80)], [(60, 80), (10, 80)]],
}


@dataclass(frozen=True)
class ToyScenario:
    cfg: MasConfig
    table: CostTable
    period: int = 5
    duration_cycles: int = 240
    pareto_shape: float = 1.5
    pareto_scale_cycles: float = 4.0
    qos_factor: float = 4.0
    qos_mix: tuple = ((QosLevel.HIGH, 1.0), (QosLevel.LOW, 1.0))

    def trace(self, seed: int) -> list[Job]:
        params = TraceParams(
            workload=WorkloadSet("toy", tuple(TOY_COSTS)),
            duration_cycles=self.duration_cycles,
            pareto_shape=self.pareto_shape,
            pareto_scale_cycles=self.pareto_scale_cycles,
            qos_medium_factor=self.qos_factor,
            qos_mix=dict(self.qos_mix),
            seed=seed,
        )
        return generate_trace(params, self.table)


# Trainer settings tuned for the toy scenario: faster learning rates, a short
# warmup, a lower discount and an exploration floor that never fully switches off.
TOY_TRAINER = {
    "hidden": 32,
    "actor_lr": 1e-3,
    "critic_lr": 1e-3,
    "discount": 0.9,
    "tau": 0.01,
    "warmup_steps": 200,
    "noise_sigma": 0.3,
    "noise_decay": 0.9998,
    "noise_min": 0.15,
    "train_every": 2,
    "episodes": 200,
    "precision": "float32",
}


def toy_scenario(**overrides) -> ToyScenario:
    sas = (
        SaSpec(0, "sa0", Dataflow.ROW_STATIONARY, 64, 1),
        SaSpec(1, "sa1", Dataflow.WEIGHT_STATIONARY, 64, 1),
    )
    cfg = MasConfig(sas, Fraction(16))
    return ToyScenario(cfg, table_from_costs(TOY_COSTS, 2), **overrides)

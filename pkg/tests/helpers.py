from __future__ import annotations

from fractions import Fraction

from relmas.core import Dataflow, Decision, Job, MasConfig, SaSpec
from relmas.costmodel import table_from_costs


def simple_mas(num_sas: int, bandwidth=16) -> MasConfig:
    sas = tuple(SaSpec(i, f"sa{i}", Dataflow.ROW_STATIONARY, 16, 1) for i in range(num_sas))
    return MasConfig(sas, Fraction(bandwidth))


def instance_to_engine_inputs(num_sas, dram_bw, jobs, costs):
    """Turn an oracle instance into (cfg, table, trace); each job gets its own model."""
    cfg = simple_mas(num_sas, dram_bw)
    costs_by_model = {}
    for j, _a, _d, n in jobs:
        costs_by_model[f"m{j}"] = [[(c, nb) for c, nb in costs[(j, s)]] for s in range(n)]
    table = table_from_costs(costs_by_model, num_sas)
    trace = [Job(j, j, a, d - a) for j, a, d, _n in jobs]
    return cfg, table, trace


class KeyedScheduler:
    """Replays a fixed (job, layer) -> (priority, sa) map."""

    name = "keyed"

    def __init__(self, decide):
        self.decide = decide

    def schedule(self, snapshot, table, cfg):
        return [Decision(*self.decide[sj.key]) for sj in snapshot.ready_queue]


def ga_instance(seed: int, num_sas: int = 2):
    """A six-sub-job snapshot at time 0 with random costs and mixed deadline tightness."""
    import random

    from relmas.core import SubJob, SystemSnapshot, sort_ready_queue

    rng = random.Random(seed)
    shapes = rng.choice([[2, 2, 2], [3, 3], [1, 2, 3], [2, 4], [1, 1, 2, 2]])
    costs_by_model = {
        f"m{j}": [[(rng.randint(1, 30), rng.randint(0, 400)) for _ in range(num_sas)] for _ in range(n)]
        for j, n in enumerate(shapes)
    }
    table = table_from_costs(costs_by_model, num_sas)
    rq = []
    for j, n in enumerate(shapes):
        lat = sum(min(c for c, _ in costs_by_model[f"m{j}"][s]) for s in range(n))
        job = Job(j, j, 0, max(1, int(lat * rng.uniform(1.0, 2.5))))
        rq += [SubJob(job, s) for s in range(n)]
    zero = Fraction(0)
    snap = SystemSnapshot(zero, (zero,) * num_sas, sort_ready_queue(rq), (None,) * num_sas)
    return snap, table, simple_mas(num_sas, 16)

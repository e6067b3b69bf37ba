"""Genetic-algorithm scheduler in the style of MAGMA, scored by schedule projection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..agent.reward import RewardCoefficients, projection_entries, sla_fitness
from ..core import Decision, MasConfig, SystemSnapshot
from ..costmodel import CostTable
from ..simulator import project_schedule


@dataclass
class GaChromosome:
    priorities: np.ndarray
    sas: np.ndarray

    def __post_init__(self) -> None:
        if self.priorities.shape != self.sas.shape:
            raise ValueError("priority and SA vectors must have equal length")

    def decisions(self) -> list[Decision]:
        return [Decision(float(p), int(m)) for p, m in zip(self.priorities, self.sas)]


@dataclass
class GaResult:
    best: GaChromosome
    best_fitness: float
    history: list[float] = field(default_factory=list)
    evaluations: int = 0


def schedule_keys(P: np.ndarray, S: np.ndarray) -> list[bytes]:
    """Canonical per-SA execution order of each chromosome row.

    Two chromosomes with equal keys produce identical schedules: the engine only
    observes which SA each sub-job goes to and the priority order within an SA.
    """
    order = np.argsort(-P, axis=1, kind="stable")
    sas_in_order = np.take_along_axis(S, order, axis=1)
    by_sa = np.argsort(sas_in_order, axis=1, kind="stable")
    perm = np.take_along_axis(order, by_sa, axis=1)
    return [S[i].tobytes() + perm[i].tobytes() for i in range(P.shape[0])]


class FitnessCache:
    def __init__(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig, coeffs: RewardCoefficients):
        self.snapshot, self.table, self.cfg, self.coeffs = snapshot, table, cfg, coeffs
        self.cache: dict[bytes, float] = {}
        self.evaluations = 0

    def evaluate(self, priorities: np.ndarray, sas: np.ndarray) -> float:
        decisions = [Decision(float(p), int(m)) for p, m in zip(priorities, sas)]
        proj = project_schedule(self.snapshot, decisions, self.table, self.cfg)
        entries = projection_entries(self.snapshot.ready_queue, proj, self.table.num_layers)
        self.evaluations += 1
        return sla_fitness(self.coeffs, entries)

    def batch(self, P: np.ndarray, S: np.ndarray) -> np.ndarray:
        out = np.empty(P.shape[0])
        for i, key in enumerate(schedule_keys(P, S)):
            value = self.cache.get(key)
            if value is None:
                value = self.cache[key] = self.evaluate(P[i], S[i])
            out[i] = value
        return out

    def __call__(self, priorities: np.ndarray, sas: np.ndarray) -> float:
        return float(self.batch(priorities[None, :], sas[None, :])[0])


def magma_ga(
    snapshot: SystemSnapshot,
    table: CostTable,
    cfg: MasConfig,
    pop: int = 100,
    gens: int = 100,
    seed: int = 0,
    coeffs: Optional[RewardCoefficients] = None,
    tournament_k: int = 3,
    sigma: float = 0.2,
    sa_mutation_p: float = 0.05,
) -> GaResult:
    if pop < 1 or gens < 0:
        raise ValueError("pop must be >= 1 and gens >= 0")
    coeffs = coeffs or RewardCoefficients()
    n = len(snapshot.ready_queue)
    M = cfg.num_sas
    rng = np.random.default_rng(seed)
    if n == 0:
        empty = GaChromosome(np.zeros(0), np.zeros(0, dtype=np.int64))
        return GaResult(empty, 0.0, [0.0] * (gens + 1))
    fitness = FitnessCache(snapshot, table, cfg, coeffs)

    P = rng.uniform(-1.0, 1.0, size=(pop, n))
    S = rng.integers(0, M, size=(pop, n), dtype=np.int64)
    fit = fitness.batch(P, S)
    history = [float(fit.max())]

    for _ in range(gens):
        elite = int(np.argmax(fit))
        if pop == 1:
            # degenerate population: mutation-only hill climb
            cp = np.clip(P + rng.normal(0.0, sigma, size=P.shape), -1.0, 1.0)
            flip = rng.random(S.shape) < sa_mutation_p
            cs = np.where(flip, rng.integers(0, M, size=S.shape, dtype=np.int64), S)
            cf = fitness.batch(cp, cs)
            if cf[0] >= fit[0]:
                P, S, fit = cp, cs, cf
            history.append(float(fit.max()))
            continue
        kids = pop - 1
        contenders = rng.integers(0, pop, size=(kids, 2, tournament_k))
        winners = np.take_along_axis(contenders, np.argmax(fit[contenders], axis=2)[..., None], axis=2)[..., 0]
        a, b = winners[:, 0], winners[:, 1]
        mask = rng.random((kids, n)) < 0.5
        cp = np.where(mask, P[a], P[b])
        cs = np.where(mask, S[a], S[b])
        cp = np.clip(cp + rng.normal(0.0, sigma, size=cp.shape), -1.0, 1.0)
        flip = rng.random(cs.shape) < sa_mutation_p
        cs = np.where(flip, rng.integers(0, M, size=cs.shape, dtype=np.int64), cs)
        P = np.vstack([P[elite : elite + 1], cp])
        S = np.vstack([S[elite : elite + 1], cs])
        fit = np.concatenate(([fit[elite]], fitness.batch(cp, cs)))
        history.append(float(fit.max()))

    best = int(np.argmax(fit))
    return GaResult(GaChromosome(P[best].copy(), S[best].copy()), float(fit[best]), history, fitness.evaluations)


@dataclass
class MagmaScheduler:
    pop: int = 100
    gens: int = 100
    seed: int = 0
    coeffs: Optional[RewardCoefficients] = None
    name: str = "magma"

    def __post_init__(self) -> None:
        self._calls = 0

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        # fresh, deterministic stream per invocation
        seed = (self.seed * 1_000_003 + self._calls) & 0xFFFFFFFF
        self._calls += 1
        return magma_ga(snapshot, table, cfg, self.pop, self.gens, seed, self.coeffs).best.decisions()

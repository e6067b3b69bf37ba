from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import Decision, MasConfig, SystemSnapshot
from ..costmodel import CostTable
from . import lstm
from .encoding import Norms, decode_action, encode_state


def relmas_schedule(
    actor: lstm.Params,
    snapshot: SystemSnapshot,
    table: CostTable,
    cfg: MasConfig,
    norms: Norms,
    sigma: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[Decision], np.ndarray]:
    """Encode, run the actor, optionally perturb with clipped Gaussian noise, decode.

    Returns the decisions and the (|RQ|, 1+M) action matrix that produced them.
    """
    state = encode_state(snapshot, table, cfg, norms)
    out, _ = lstm.forward(actor, state, "tanh")
    actions = out[1:]  # the primer step carries no decision
    if sigma > 0 and len(actions):
        if rng is None:
            raise ValueError("a random generator is required when sigma > 0")
        actions = np.clip(actions + rng.normal(0.0, sigma, size=actions.shape), -1.0, 1.0)
    return decode_action(actions), actions


class RelmasScheduler:
    """Deterministic (or noisy, for exploration) LSTM policy behind the scheduler interface."""

    name = "relmas"

    def __init__(self, actor: lstm.Params, norms: Norms, sigma: float = 0.0, seed: int = 0):
        self.actor = actor
        self.norms = norms
        self.sigma = sigma
        self.rng = np.random.default_rng(seed)

    def schedule(self, snapshot: SystemSnapshot, table: CostTable, cfg: MasConfig) -> list[Decision]:
        decisions, _ = relmas_schedule(self.actor, snapshot, table, cfg, self.norms, self.sigma, self.rng)
        return decisions

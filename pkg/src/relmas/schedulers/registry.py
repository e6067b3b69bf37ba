"""Scheduler lookup by command-line name."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional, Union

from ..agent.reward import RewardCoefficients
from .ga import MagmaScheduler
from .heuristics import FcfsH, HeraldLB, PremaH, RandomScheduler

SCHEDULER_NAMES = ("fcfs-h", "prema-h", "herald", "magma", "relmas", "random")


def make_scheduler(
    name: str,
    params: Optional[Mapping] = None,
    seed: int = 0,
    checkpoint: Optional[Union[str, Path]] = None,
):
    params = dict(params or {})
    if name == "fcfs-h":
        return FcfsH()
    if name == "prema-h":
        return PremaH(**params)
    if name == "herald":
        return HeraldLB()
    if name == "random":
        return RandomScheduler(seed)
    if name == "magma":
        coeffs = params.pop("coeffs", None)
        return MagmaScheduler(seed=seed, coeffs=RewardCoefficients(**coeffs) if coeffs else None, **params)
    if name == "relmas":
        if checkpoint is None:
            raise FileNotFoundError("the relmas scheduler needs a trained checkpoint")
        from ..agent.checkpoint import load_actor
        from ..agent.policy import RelmasScheduler

        actor, norms, _, _ = load_actor(checkpoint)
        return RelmasScheduler(actor, norms)
    raise ValueError(f"unknown scheduler {name!r}; expected one of {', '.join(SCHEDULER_NAMES)}")

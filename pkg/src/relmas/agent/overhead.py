"""Cost of running the policy network itself on one of the MAS sub-accelerators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .encoding import action_size, state_size


def policy_mac_count(h: int, num_sas: int) -> int:
    """Multiplies per timestep: LSTM gates, FC1 (h -> h/2) and FC2 (h/2 -> 1+M)."""
    if h < 2 or h % 2:
        raise ValueError("hidden size must be an even number >= 2")
    F, G = state_size(num_sas), action_size(num_sas)
    return 4 * h * (F + h) + h * (h // 2) + (h // 2) * G


def policy_param_count(h: int, num_sas: int) -> int:
    F, G = state_size(num_sas), action_size(num_sas)
    return 4 * h * (F + h + 1) + (h // 2) * (h + 1) + G * (h // 2 + 1)


@dataclass(frozen=True)
class OverheadResult:
    policy_energy_pj: float
    workload_energy_pj: float
    invocations: int
    macs: int

    @property
    def percent(self) -> float:
        return 100.0 * self.policy_energy_pj / self.workload_energy_pj if self.workload_energy_pj else 0.0


def overhead_energy(
    h: int,
    num_sas: int,
    rq_lengths: Sequence[int],
    workload_energy_pj: float,
    e_mac_pj: float,
    e_byte_pj: float,
    weight_bytes_per_param: int = 1,
) -> OverheadResult:
    """Each invocation runs |RQ|+1 timesteps (primer included) and streams the weights once."""
    if workload_energy_pj < 0:
        raise ValueError("workload energy must be non-negative")
    per_step = policy_mac_count(h, num_sas)
    macs = sum(per_step * (n + 1) for n in rq_lengths)
    weight_bytes = policy_param_count(h, num_sas) * weight_bytes_per_param * len(rq_lengths)
    pj = macs * e_mac_pj + weight_bytes * e_byte_pj
    return OverheadResult(pj, workload_energy_pj, len(rq_lengths), macs)

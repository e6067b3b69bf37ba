from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Experience:
    state: np.ndarray  # (R+1, F)
    action: np.ndarray  # (R, G)
    reward: float
    next_state: np.ndarray  # residual ready queue only
    terminal: bool
    state_keys: tuple = ()
    next_keys: tuple = ()


class ReplayBuffer:
    """Fixed-capacity FIFO of experiences with seeded uniform sampling."""

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("replay capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Experience] = deque(maxlen=capacity)
        self.rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, exp: Experience) -> None:
        self._items.append(exp)

    def sample(self, batch_size: int) -> list[Experience]:
        if not self._items:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = self.rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def __iter__(self):
        return iter(self._items)

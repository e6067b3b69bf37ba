"""DDPG training of the LSTM actor/critic pair against the MAS simulator."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..core import Job, MasConfig
from ..costmodel import CostTable
from ..simulator import Engine, project_schedule, run_trace
from . import lstm
from .encoding import Norms, action_size, encode_state, state_size
from .policy import RelmasScheduler, relmas_schedule
from .replay import Experience, ReplayBuffer
from .reward import RewardCoefficients, compute_reward, projection_entries

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainerConfig:
    hidden: int = 32
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    discount: float = 0.99
    tau: float = 0.005
    buffer_capacity: int = 100_000
    batch_size: int = 32
    warmup_steps: int = 1000
    noise_sigma: float = 0.2
    noise_decay: float = 0.999
    noise_min: float = 0.0
    updates_per_step: int = 1
    train_every: int = 1
    grad_clip: Optional[float] = 10.0
    episodes: int = 200
    eval_every: int = 10
    seed: int = 0
    # network arithmetic during training; checkpoints always store float64
    precision: str = "float64"

    def __post_init__(self) -> None:
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if self.hidden < 2 or self.hidden % 2:
            raise ValueError("hidden size must be an even number >= 2")
        if self.batch_size < 1 or self.buffer_capacity < 1 or self.episodes < 0:
            raise ValueError("batch_size and buffer_capacity must be >= 1, episodes >= 0")
        if self.train_every < 1 or self.updates_per_step < 0:
            raise ValueError("train_every must be >= 1 and updates_per_step >= 0")
        if self.precision not in ("float32", "float64"):
            raise ValueError("precision must be 'float32' or 'float64'")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainerConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown trainer settings: {sorted(unknown)}")
        return cls(**doc)


def pad_sequences(seqs: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Stack variable-length sequences with trailing zeros; returns (batch, lengths).

    The recurrence is causal, so outputs up to each sequence's own last step do
    not depend on the padding, and zero output gradients on padded steps keep it
    out of every parameter gradient. Results equal per-sequence processing.
    """
    lengths = np.array([len(s) for s in seqs])
    out = np.zeros((len(seqs), int(lengths.max()), seqs[0].shape[1]))
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out, lengths


def critic_input(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Concatenate state and action per timestep; the primer step gets a zero action.

    states: (N, T, F); actions: (N, T-1, G) aligned with ready-queue rows.
    """
    N, T, _ = states.shape
    pad = np.zeros((N, T, actions.shape[2]))
    pad[:, 1:] = actions
    return np.concatenate([states, pad], axis=2)


def _pad_actions(actions: Sequence[np.ndarray], T: int, G: int) -> np.ndarray:
    out = np.zeros((len(actions), T - 1, G))
    for i, a in enumerate(actions):
        out[i, : len(a)] = a
    return out


class DdpgAgent:
    def __init__(self, num_sas: int, norms: Norms, cfg: TrainerConfig):
        self.M = num_sas
        self.F, self.G = state_size(num_sas), action_size(num_sas)
        self.norms = norms
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.actor = self.cast(lstm.init_params(rng, self.F, cfg.hidden, self.G))
        self.critic = self.cast(lstm.init_params(rng, self.F + self.G, cfg.hidden, 1))
        self.actor_target = lstm.copy_params(self.actor)
        self.critic_target = lstm.copy_params(self.critic)
        self.actor_opt = lstm.Adam(self.actor, cfg.actor_lr, clip_norm=cfg.grad_clip)
        self.critic_opt = lstm.Adam(self.critic, cfg.critic_lr, clip_norm=cfg.grad_clip)
        self.noise_rng = np.random.default_rng(cfg.seed + 1)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, seed=cfg.seed + 2)
        self.sigma = cfg.noise_sigma
        self.steps = 0
        self.updates = 0
        self.episodes_done = 0

    def cast(self, params: lstm.Params) -> lstm.Params:
        return {k: v.astype(self.cfg.precision) for k, v in params.items()}

    # -- value estimates -----------------------------------------------------------

    def q_values(self, critic: lstm.Params, states: Sequence[np.ndarray], actions: Sequence[np.ndarray]) -> np.ndarray:
        """Final-timestep critic output for each (state, action) pair."""
        S, lengths = pad_sequences(states)
        A = _pad_actions(actions, S.shape[1], self.G)
        Y, _ = lstm.forward(critic, critic_input(S, A), "linear")
        return Y[np.arange(len(states)), lengths - 1, 0]

    def target_q(self, states: Sequence[np.ndarray]) -> np.ndarray:
        """Q'(s, mu'(s)) using the target networks."""
        S, lengths = pad_sequences(states)
        A, _ = lstm.forward(self.actor_target, S, "tanh")
        Y, _ = lstm.forward(self.critic_target, critic_input(S, A[:, 1:]), "linear")
        return Y[np.arange(len(states)), lengths - 1, 0]

    # -- learning ------------------------------------------------------------------

    def update(self, batch: Sequence[Experience]) -> tuple[float, float]:
        """One critic step on the TD error and one actor step along dQ/da; returns (loss, mean Q)."""
        n = len(batch)
        rows = np.arange(n)
        q_next = self.target_q([e.next_state for e in batch])
        live = np.array([0.0 if e.terminal else 1.0 for e in batch])
        y = np.array([e.reward for e in batch]) + self.cfg.discount * q_next * live

        S, lengths = pad_sequences([e.state for e in batch])
        last = lengths - 1
        A = _pad_actions([e.action for e in batch], S.shape[1], self.G)
        Y, cache = lstm.forward(self.critic, critic_input(S, A), "linear")
        err = Y[rows, last, 0] - y
        loss = float(np.mean(err**2))
        if not np.isfinite(loss):
            raise TrainingDiverged(f"critic loss became non-finite at update {self.updates}")
        dY = np.zeros_like(Y)
        dY[rows, last, 0] = 2.0 * err / n
        c_grads, _ = lstm.backward(self.critic, cache, dY)
        self.critic_opt.step(self.critic, c_grads)

        mu, a_cache = lstm.forward(self.actor, S, "tanh")
        Q, c_cache = lstm.forward(self.critic, critic_input(S, mu[:, 1:]), "linear")
        dQ = np.zeros_like(Q)
        dQ[rows, last, 0] = -1.0 / n  # ascend Q
        _, dX = lstm.backward(self.critic, c_cache, dQ)
        dmu = np.zeros_like(mu)
        dmu[:, 1:] = dX[:, 1:, self.F :]
        a_grads, _ = lstm.backward(self.actor, a_cache, dmu)
        self.actor_opt.step(self.actor, a_grads)

        lstm.soft_update(self.actor_target, self.actor, self.cfg.tau)
        lstm.soft_update(self.critic_target, self.critic, self.cfg.tau)
        self.updates += 1
        return loss, float(np.mean(Q[rows, last, 0]))


@dataclass
class TrainingEnv:
    """Everything needed to roll out episodes: hardware, costs, traces and period."""

    cfg: MasConfig
    table: CostTable
    period: int
    episode_trace: Callable[[int], list[Job]]
    eval_traces: list[list[Job]] = field(default_factory=list)
    coeffs: Optional[RewardCoefficients] = None

    def reward_coeffs(self) -> RewardCoefficients:
        base = self.coeffs or RewardCoefficients()
        return RewardCoefficients(base.alpha, base.beta, base.gamma_slack, base.delta, float(self.period))


@dataclass
class CurvePoint:
    episode: int
    mean_reward: float
    eval_sla_rate: Optional[float]


def evaluate_policy(actor: lstm.Params, norms: Norms, env: TrainingEnv, traces: Optional[list] = None) -> float:
    """Mean SLA satisfaction rate of the noise-free policy over the evaluation traces."""
    traces = env.eval_traces if traces is None else traces
    if not traces:
        raise ValueError("no evaluation traces configured")
    sched = RelmasScheduler(actor, norms)
    rates = [run_trace(env.cfg, env.table, tr, sched, env.period, record=False).metrics.sla_satisfaction_rate
             for tr in traces]
    return float(np.mean(rates))


def run_episode(agent: DdpgAgent, env: TrainingEnv, jobs: Sequence[Job], learn: bool = True) -> float:
    """One noisy rollout; every scheduling period with work is one transition."""
    coeffs = env.reward_coeffs()
    eng = Engine(env.cfg, env.table, jobs, record=False)
    rewards = []
    while True:
        eng.skip_idle(env.period)
        snap = eng.snapshot()
        if eng.exhausted():
            break
        if not snap.ready_queue:
            eng.advance_period([], env.period)
            continue
        decisions, actions = relmas_schedule(
            agent.actor, snap, env.table, env.cfg, agent.norms, agent.sigma, agent.noise_rng
        )
        state = encode_state(snap, env.table, env.cfg, agent.norms)
        proj = project_schedule(snap, decisions, env.table, env.cfg)
        r = compute_reward(coeffs, snap.now, projection_entries(snap.ready_queue, proj))
        eng.invocations += 1
        eng.rq_lengths.append(len(snap.ready_queue))
        outcome = eng.advance_period(decisions, env.period)
        residual = eng.residual_snapshot(outcome)
        next_state = encode_state(residual, env.table, env.cfg, agent.norms)
        terminal = eng.exhausted()
        agent.buffer.push(
            Experience(
                state, actions.copy(), r, next_state, terminal,
                tuple(sj.key for sj in snap.ready_queue), tuple(sj.key for sj in residual.ready_queue),
            )
        )
        rewards.append(r)
        agent.steps += 1
        agent.sigma = max(agent.cfg.noise_min, agent.sigma * agent.cfg.noise_decay)
        if (
            learn
            and len(agent.buffer) >= max(agent.cfg.warmup_steps, 1)
            and agent.steps % agent.cfg.train_every == 0
        ):
            for _ in range(agent.cfg.updates_per_step):
                agent.update(agent.buffer.sample(agent.cfg.batch_size))
    return float(np.mean(rewards)) if rewards else 0.0


def ddpg_train(
    agent: DdpgAgent,
    env: TrainingEnv,
    episodes: Optional[int] = None,
    on_episode: Optional[Callable[[DdpgAgent, CurvePoint], None]] = None,
) -> list[CurvePoint]:
    """Continue training for `episodes` more episodes (default: the config's count)."""
    episodes = agent.cfg.episodes if episodes is None else episodes
    curve = []
    for _ in range(episodes):
        ep = agent.episodes_done
        mean_r = run_episode(agent, env, env.episode_trace(ep))
        agent.episodes_done += 1
        sla = None
        if env.eval_traces and agent.cfg.eval_every > 0 and agent.episodes_done % agent.cfg.eval_every == 0:
            sla = evaluate_policy(agent.actor, agent.norms, env)
        point = CurvePoint(agent.episodes_done, mean_r, sla)
        curve.append(point)
        log.debug("episode %d reward %.4f eval %s", point.episode, mean_r, sla)
        if on_episode is not None:
            on_episode(agent, point)
    return curve

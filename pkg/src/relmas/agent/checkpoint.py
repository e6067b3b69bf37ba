"""Binary policy checkpoints plus a JSON sidecar with the trainer settings.

Layout (little-endian): magic "RLMS", u32 version, u32 hidden size, u32 SA count,
5 x f8 normalization constants, u32 array count, then per array: u16 name
length, UTF-8 name, u8 rank, u32 per dimension, row-major f8 data.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from . import lstm
from .ddpg import DdpgAgent, TrainerConfig
from .encoding import Norms

MAGIC = b"RLMS"
VERSION = 1
NETWORKS = ("actor", "critic", "actor_target", "critic_target")


class CheckpointError(ValueError):
    pass


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def encode_arrays(hidden: int, num_sas: int, norms: Norms, arrays: dict[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<III", VERSION, hidden, num_sas), norms.as_array().tobytes()]
    parts.append(struct.pack("<I", len(arrays)))
    for name, arr in arrays.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_arrays(blob: bytes) -> tuple[int, int, Norms, dict[str, np.ndarray]]:
    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError("checkpoint is truncated")
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    pos = 0
    if take(4) != MAGIC:
        raise CheckpointError("not a policy checkpoint (bad magic)")
    version, hidden, num_sas = struct.unpack("<III", take(12))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    norms = Norms.from_array(np.frombuffer(take(40), dtype="<f8"))
    (count,) = struct.unpack("<I", take(4))
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(take(8 * size), dtype="<f8").reshape(shape).astype(float)
    if pos != len(blob):
        raise CheckpointError("trailing bytes after the last array")
    return hidden, num_sas, norms, arrays


def save_checkpoint(path: Union[str, Path], agent: DdpgAgent) -> None:
    arrays = {}
    for net in NETWORKS:
        params = getattr(agent, net)
        for k in lstm.PARAM_NAMES:
            arrays[f"{net}.{k}"] = params[k]
    path = Path(path)
    path.write_bytes(encode_arrays(agent.cfg.hidden, agent.M, agent.norms, arrays))
    sidecar = {
        "format_version": VERSION,
        "trainer": agent.cfg.to_dict(),
        "episodes_done": agent.episodes_done,
        "steps": agent.steps,
        "updates": agent.updates,
        "sigma": agent.sigma,
    }
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_actor(path: Union[str, Path]) -> tuple[lstm.Params, Norms, int, int]:
    """Actor weights, normalization constants, hidden size and SA count."""
    hidden, num_sas, norms, arrays = decode_arrays(Path(path).read_bytes())
    actor = _network(arrays, "actor")
    return actor, norms, hidden, num_sas


def load_agent(path: Union[str, Path]) -> DdpgAgent:
    """Rebuild a trainer from a checkpoint; optimizer moments and replay contents start fresh."""
    path = Path(path)
    hidden, num_sas, norms, arrays = decode_arrays(path.read_bytes())
    side = sidecar_path(path)
    if not side.exists():
        raise CheckpointError(f"missing sidecar {side}")
    doc = json.loads(side.read_text(encoding="utf-8"))
    cfg = TrainerConfig.from_dict(doc["trainer"])
    if cfg.hidden != hidden:
        raise CheckpointError("sidecar hidden size disagrees with the checkpoint")
    agent = DdpgAgent(num_sas, norms, cfg)
    for net in NETWORKS:
        setattr(agent, net, agent.cast(_network(arrays, net)))
    agent.actor_opt = lstm.Adam(agent.actor, cfg.actor_lr, clip_norm=cfg.grad_clip)
    agent.critic_opt = lstm.Adam(agent.critic, cfg.critic_lr, clip_norm=cfg.grad_clip)
    agent.episodes_done = int(doc["episodes_done"])
    agent.steps = int(doc["steps"])
    agent.updates = int(doc["updates"])
    agent.sigma = float(doc["sigma"])
    return agent


def _network(arrays: dict[str, np.ndarray], net: str) -> lstm.Params:
    try:
        return {k: arrays[f"{net}.{k}"].copy() for k in lstm.PARAM_NAMES}
    except KeyError as e:
        raise CheckpointError(f"checkpoint lacks array {e.args[0]}") from None

"""Experiment configuration: one JSON document plus RELMAS_* environment overrides.

An override such as RELMAS_WORKLOAD__NAME=Heavy sets config["workload"]["name"];
double underscores separate nesting levels and values are parsed as JSON when
possible (so RELMAS_SEEDS=[1,2] yields a list), falling back to plain strings.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import numpy as np

from .core import MasConfig, QosLevel, load_model_desc, table1_mas
from .costmodel import CostModelParams, CostTable, build_analytic_table, load_cost_table
from .scenarios import TOY_COSTS, toy_scenario
from .schedulers.registry import SCHEDULER_NAMES
from .workload import TraceParams, WorkloadSet, pareto_scale_for_load, workload_set
from .zoo import builtin_models

ENV_PREFIX = "RELMAS_"


class ConfigError(ValueError):
    pass


def apply_env_overrides(doc: dict, environ: Optional[Mapping[str, str]] = None) -> dict:
    environ = os.environ if environ is None else environ
    doc = json.loads(json.dumps(doc))
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in key[len(ENV_PREFIX) :].split("__") if p]
        if not path:
            continue
        raw = environ[key]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        for p in path[:-1]:
            nxt = node.get(p)
            if not isinstance(nxt, dict):
                nxt = node[p] = {}
            node = nxt
        node[path[-1]] = value
    return doc


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path
    system: str = "table1"
    dram_bandwidth: float = 16
    period: int = 1000
    seeds: list[int] = field(default_factory=lambda: [0])
    schedulers: list[str] = field(default_factory=lambda: ["fcfs-h"])
    output_dir: Path = Path("out")

    @property
    def workload(self) -> dict:
        return self.raw.get("workload", {})

    def section(self, name: str) -> dict:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"'{name}' must be an object")
        return value

    def path(self, value: Union[str, Path]) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    # -- hardware and costs --------------------------------------------------------

    def mas(self, bandwidth=None) -> MasConfig:
        bw = self.dram_bandwidth if bandwidth is None else bandwidth
        if self.system == "toy":
            return toy_scenario().cfg.with_bandwidth(bw)
        return table1_mas(bw)

    def cost_table(self, cfg: MasConfig) -> CostTable:
        if self.system == "toy":
            return toy_scenario().table
        model_files = self.raw.get("models")
        if model_files:
            models = tuple(load_model_desc(self.path(p), i) for i, p in enumerate(model_files))
        else:
            models = builtin_models()
        params = CostModelParams.from_dict(self.raw["cost_params"]) if "cost_params" in self.raw else None
        table_path = self.raw.get("cost_table")
        if table_path:
            return load_cost_table(self.path(table_path), cfg, models, self.raw.get("allow_partial_table", False), params)
        return build_analytic_table(cfg, models, params)

    # -- workload ------------------------------------------------------------------

    def workload_models(self) -> WorkloadSet:
        w = self.workload
        if "models" in w:
            return WorkloadSet(w.get("name", "custom"), tuple(w["models"]))
        name = w.get("name", "toy" if self.system == "toy" else "Light")
        if self.system == "toy" and name == "toy":
            return WorkloadSet("toy", tuple(TOY_COSTS))
        return workload_set(name)

    def trace_params(self, table: CostTable, seed: int) -> TraceParams:
        w = self.workload
        wl = self.workload_models()
        known = {"name", "models", "duration_cycles", "pareto_shape", "pareto_scale_cycles", "load",
                 "qos_medium_factor", "qos_mix"}
        unknown = set(w) - known
        if unknown:
            raise ConfigError(f"unknown workload settings: {sorted(unknown)}")
        toy = toy_scenario()
        shape = float(w.get("pareto_shape", 1.5))
        if "pareto_scale_cycles" in w:
            scale = float(w["pareto_scale_cycles"])
        elif "load" in w:
            ids = wl.model_ids(table)
            from .costmodel import min_job_latency

            mean_job = float(np.mean([min_job_latency(m, table) for m in ids]))
            scale = pareto_scale_for_load(float(w["load"]), shape, mean_job, table.num_sas)
        elif self.system == "toy":
            scale = toy.pareto_scale_cycles
        else:
            raise ConfigError("workload needs either 'pareto_scale_cycles' or 'load'")
        default_mix = dict(toy.qos_mix) if self.system == "toy" else {QosLevel.MEDIUM: 1.0}
        mix = {QosLevel(k): float(v) for k, v in w.get("qos_mix", default_mix).items()}
        default_factor = toy.qos_factor if self.system == "toy" else 3.0
        default_duration = toy.duration_cycles if self.system == "toy" else 2_000_000
        return TraceParams(
            workload=wl,
            duration_cycles=int(w.get("duration_cycles", default_duration)),
            pareto_shape=shape,
            pareto_scale_cycles=scale,
            qos_medium_factor=float(w.get("qos_medium_factor", default_factor)),
            qos_mix=mix,
            seed=seed,
        )


def load_config(path: Union[str, Path], environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return config_from_dict(apply_env_overrides(doc, environ), path.parent)


def config_from_dict(doc: dict, base_dir: Union[str, Path] = ".") -> ExperimentConfig:
    try:
        system = str(doc.get("system", "table1"))
        if system not in ("table1", "toy"):
            raise ConfigError(f"unknown system {system!r}; expected 'table1' or 'toy'")
        default_period = toy_scenario().period if system == "toy" else 1000
        seeds = doc.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = [seeds]
        seeds = [int(s) for s in seeds]
        if not seeds:
            raise ConfigError("'seeds' must not be empty")
        schedulers = doc.get("schedulers", ["fcfs-h"])
        if isinstance(schedulers, str):
            schedulers = [schedulers]
        for name in schedulers:
            if name not in SCHEDULER_NAMES:
                raise ConfigError(f"unknown scheduler {name!r}; expected one of {', '.join(SCHEDULER_NAMES)}")
        period = int(doc.get("period", default_period))
        if period < 1:
            raise ConfigError("'period' must be a positive number of cycles")
        bw = doc.get("dram_bandwidth", 16)
        if float(bw) <= 0:
            raise ConfigError("'dram_bandwidth' must be positive")
        cfg = ExperimentConfig(
            raw=doc,
            base_dir=Path(base_dir),
            system=system,
            dram_bandwidth=bw,
            period=period,
            seeds=seeds,
            schedulers=list(schedulers),
            output_dir=Path(doc.get("output_dir", "out")),
        )
        if not isinstance(doc.get("workload", {}), dict):
            raise ConfigError("'workload' must be an object")
        cfg.workload_models()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    ref = doc.get("checkpoint")
    if ref is not None and "relmas" in cfg.schedulers and not cfg.path(ref).exists():
        raise ConfigError(f"checkpoint {ref} does not exist")
    return cfg


def config_value(cfg: ExperimentConfig, key: str, default: Any = None) -> Any:
    return cfg.raw.get(key, default)

"""Command-line experiment runner.

    relmas gen-workload|train|compare|sweep-bandwidth|overhead --config CFG [--seed N] [--out DIR]

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .core import Dataflow, Job
from .costmodel import CostModelParams, CostTable, CostTableError
from .reporting import (
    CurveRow,
    OverheadRow,
    ResultRow,
    SweepRow,
    bar_chart_svg,
    line_chart_svg,
    read_rows,
    write_rows,
)
from .schedulers.registry import make_scheduler
from .simulator import run_trace
from .workload import generate_trace, read_trace, write_trace

log = logging.getLogger("relmas")

EVAL_SEED_BASE = 10_000
EPISODE_SEED_STRIDE = 100_000


# -- helpers -------------------------------------------------------------------------


def _seeds(cfg: ExperimentConfig, seed: Optional[int]) -> list[int]:
    return [seed] if seed is not None else list(cfg.seeds)


def _qos_label(cfg: ExperimentConfig, table: CostTable) -> str:
    mix = cfg.trace_params(table, 0).qos_mix
    return "+".join(level.value for level, w in mix.items() if w > 0)


def _trace_for(cfg: ExperimentConfig, table: CostTable, seed: int) -> list[Job]:
    ref = cfg.raw.get("trace")
    if ref:
        return read_trace(cfg.path(ref), table)
    return generate_trace(cfg.trace_params(table, seed), table)


def _scheduler(cfg: ExperimentConfig, name: str, seed: int):
    params = cfg.section("scheduler_params").get(name, {})
    ckpt = cfg.raw.get("checkpoint")
    return make_scheduler(name, params, seed, cfg.path(ckpt) if ckpt else None)


def _provenance(cfg: ExperimentConfig, table: CostTable, seed: int) -> dict:
    p = cfg.trace_params(table, seed)
    return {
        "seed": seed,
        "system": cfg.system,
        "workload": p.workload.name,
        "models": list(p.workload.model_names),
        "duration_cycles": p.duration_cycles,
        "pareto_shape": p.pareto_shape,
        "pareto_scale_cycles": p.pareto_scale_cycles,
        "qos_medium_factor": p.qos_medium_factor,
        "qos_mix": {k.value: v for k, v in p.qos_mix.items()},
    }


# -- commands ------------------------------------------------------------------------


def cmd_gen_workload(cfg: ExperimentConfig, out: Path, seed: Optional[int]) -> list[Path]:
    mas = cfg.mas()
    table = cfg.cost_table(mas)
    paths = []
    for s in _seeds(cfg, seed):
        jobs = generate_trace(cfg.trace_params(table, s), table)
        path = out / f"trace_seed{s}.jsonl"
        write_trace(path, jobs, table, _provenance(cfg, table, s))
        log.info("wrote %d jobs to %s", len(jobs), path)
        paths.append(path)
    return paths


def _training_env(cfg: ExperimentConfig, seed: int):
    from .agent.ddpg import TrainingEnv
    from .agent.reward import RewardCoefficients

    mas = cfg.mas()
    table = cfg.cost_table(mas)
    train = cfg.section("train")
    n_eval = int(train.get("eval_traces", 4))
    eval_traces = [generate_trace(cfg.trace_params(table, EVAL_SEED_BASE + k), table) for k in range(n_eval)]
    coeffs = RewardCoefficients(**cfg.section("reward")) if cfg.raw.get("reward") else None
    return TrainingEnv(
        mas,
        table,
        cfg.period,
        lambda ep: generate_trace(cfg.trace_params(table, seed * EPISODE_SEED_STRIDE + ep), table),
        eval_traces,
        coeffs,
    )


def cmd_train(cfg: ExperimentConfig, out: Path, seed: Optional[int], resume: Optional[Path] = None) -> Path:
    from .agent.checkpoint import load_agent, save_checkpoint
    from .agent.ddpg import DdpgAgent, TrainerConfig, ddpg_train
    from .agent.encoding import Norms

    seed = cfg.seeds[0] if seed is None else seed
    env = _training_env(cfg, seed)
    train = cfg.section("train")
    resume = resume or (cfg.path(train["resume"]) if train.get("resume") else None)
    ckpt_path = out / "policy.ckpt"
    curves_path = out / "curves.csv"
    if resume is not None:
        agent = load_agent(resume)
        curve = read_rows(curves_path, CurveRow) if curves_path.exists() else []
        curve = [r for r in curve if r.episode <= agent.episodes_done]
    else:
        from .scenarios import TOY_TRAINER

        tdoc = dict(TOY_TRAINER) if cfg.system == "toy" else {}
        tdoc.update(cfg.section("trainer"))
        tdoc["seed"] = seed
        tcfg = TrainerConfig.from_dict(tdoc)
        norms = Norms.for_setup(env.table, env.cfg, cfg.period)
        agent = DdpgAgent(env.cfg.num_sas, norms, tcfg)
        curve = []
    total = int(train.get("episodes", agent.cfg.episodes))
    every = int(train.get("checkpoint_every", 10))
    remaining = max(0, total - agent.episodes_done)

    def on_episode(ag, point):
        curve.append(CurveRow(point.episode, point.mean_reward, point.eval_sla_rate))
        if every > 0 and point.episode % every == 0:
            save_checkpoint(ckpt_path, ag)
            write_rows(curves_path, curve, CurveRow)
        log.info("episode %d mean reward %.5f eval %s", point.episode, point.mean_reward, point.eval_sla_rate)

    save_checkpoint(ckpt_path, agent)
    ddpg_train(agent, env, remaining, on_episode)
    save_checkpoint(ckpt_path, agent)
    write_rows(curves_path, curve, CurveRow)
    return ckpt_path


def compare_rows(cfg: ExperimentConfig, seeds: Sequence[int], bandwidth=None) -> list[ResultRow]:
    nominal = cfg.mas()
    table = cfg.cost_table(nominal)
    mas = nominal if bandwidth is None else nominal.with_bandwidth(bandwidth)
    timing = bool(cfg.raw.get("record_runtime", False))
    workload = cfg.workload_models().name
    qos = _qos_label(cfg, table)
    rows = []
    for s in seeds:
        trace = _trace_for(cfg, table, s)
        for name in cfg.schedulers:
            sched = _scheduler(cfg, name, s)
            t0 = time.perf_counter()
            res = run_trace(mas, table, trace, sched, cfg.period, record=False)
            elapsed = (time.perf_counter() - t0) * 1000.0 if timing else None
            m = res.metrics
            rows.append(
                ResultRow(
                    scheduler=name,
                    workload=workload,
                    qos_level=qos,
                    bandwidth=float(mas.dram_bandwidth_bytes_per_cycle),
                    seed=s,
                    sla_rate=float(m.sla_satisfaction_rate),
                    misses=m.jobs_missed,
                    energy_pj=float(m.total_energy_pj),
                    makespan=float(m.makespan),
                    runtime_ms=elapsed,
                )
            )
    rows.sort(key=lambda r: (r.scheduler, r.seed))
    return rows


def cmd_compare(cfg: ExperimentConfig, out: Path, seed: Optional[int]) -> Path:
    rows = compare_rows(cfg, _seeds(cfg, seed))
    csv_path = out / "compare.csv"
    write_rows(csv_path, rows, ResultRow)
    # the chart is drawn from the file just written, not from the in-memory rows
    back = read_rows(csv_path, ResultRow)
    groups = sorted({f"seed {r.seed}" for r in back}, key=lambda g: int(g.split()[1]))
    series = sorted({r.scheduler for r in back})
    values = {(f"seed {r.seed}", r.scheduler): r.sla_rate for r in back}
    title = f"SLA satisfaction rate, {back[0].workload} workload" if back else "SLA satisfaction rate"
    (out / "compare.svg").write_text(bar_chart_svg(groups, series, values, title, "SLA rate"), encoding="utf-8")
    return csv_path


def normalize_sweep(rows: Sequence[ResultRow]) -> list[SweepRow]:
    """Mean SLA rate per (scheduler, bandwidth), divided by that scheduler's best point."""
    by_key: dict[tuple[str, float], list[float]] = {}
    workload = {}
    for r in rows:
        by_key.setdefault((r.scheduler, r.bandwidth), []).append(r.sla_rate)
        workload[r.scheduler] = r.workload
    means = {k: float(np.mean(v)) for k, v in by_key.items()}
    best: dict[str, float] = {}
    for (sched, _), v in means.items():
        best[sched] = max(best.get(sched, 0.0), v)
    out = []
    for (sched, bw), v in sorted(means.items(), key=lambda kv: (kv[0][0], -kv[0][1])):
        norm = v / best[sched] if best[sched] > 0 else 1.0
        out.append(SweepRow(sched, workload[sched], bw, len(by_key[(sched, bw)]), v, norm))
    return out


def cmd_sweep_bandwidth(cfg: ExperimentConfig, out: Path, seed: Optional[int]) -> Path:
    bandwidths = cfg.raw.get("bandwidths")
    if not bandwidths:
        raise ConfigError("sweep-bandwidth needs a non-empty 'bandwidths' list")
    rows = []
    for bw in bandwidths:
        if float(bw) <= 0:
            raise ConfigError("bandwidths must be positive")
        rows += compare_rows(cfg, _seeds(cfg, seed), bandwidth=bw)
    sweep = normalize_sweep(rows)
    csv_path = out / "sweep_bandwidth.csv"
    write_rows(csv_path, sweep, SweepRow)
    back = read_rows(csv_path, SweepRow)
    xs = sorted({r.bandwidth for r in back}, reverse=True)
    series = {}
    for sched in sorted({r.scheduler for r in back}):
        pts = {r.bandwidth: r.normalized_sla for r in back if r.scheduler == sched}
        series[sched] = [pts[x] for x in xs]
    svg = line_chart_svg(xs, series, "Normalized SLA rate vs DRAM bandwidth", "normalized SLA", "bytes/cycle")
    (out / "sweep_bandwidth.svg").write_text(svg, encoding="utf-8")
    return csv_path


def overhead_rows(cfg: ExperimentConfig, hidden_sizes: Sequence[int], periods: Sequence[int], seed: int) -> list[OverheadRow]:
    from .agent.overhead import overhead_energy

    section = cfg.section("overhead")
    mas = cfg.mas()
    table = cfg.cost_table(mas)
    trace = _trace_for(cfg, table, seed)
    driver = section.get("driver", "fcfs-h")
    designated = int(section.get("designated_sa", 3 if cfg.system == "table1" else 0))
    if not 0 <= designated < mas.num_sas:
        raise ConfigError(f"designated_sa {designated} out of range")
    params = CostModelParams.from_dict(cfg.raw["cost_params"]) if "cost_params" in cfg.raw else CostModelParams()
    e_mac = params.e_mac_pj[Dataflow(mas.sas[designated].dataflow)]
    rows = []
    for period in periods:
        res = run_trace(mas, table, trace, _scheduler(cfg, driver, seed), period, record=False)
        for h in hidden_sizes:
            o = overhead_energy(h, mas.num_sas, res.rq_lengths, res.metrics.total_energy_pj, e_mac, params.e_byte_pj)
            rows.append(OverheadRow(h, int(period), o.invocations, o.macs, o.policy_energy_pj,
                                    o.workload_energy_pj, o.percent))
    rows.sort(key=lambda r: (r.hidden, -r.period))
    return rows


def cmd_overhead(cfg: ExperimentConfig, out: Path, seed: Optional[int]) -> Path:
    section = cfg.section("overhead")
    hs = [int(h) for h in section.get("hidden_sizes", [64, 128, 256])]
    periods = [int(p) for p in section.get("periods", [cfg.period])]
    if any(h < 2 or h % 2 for h in hs) or any(p < 1 for p in periods):
        raise ConfigError("hidden sizes must be even and >= 2; periods must be >= 1")
    rows = overhead_rows(cfg, hs, periods, _seeds(cfg, seed)[0])
    csv_path = out / "overhead.csv"
    write_rows(csv_path, rows, OverheadRow)
    back = read_rows(csv_path, OverheadRow)
    xs = sorted({r.hidden for r in back})
    series = {}
    for p in sorted({r.period for r in back}, reverse=True):
        pts = {r.hidden: r.overhead_percent for r in back if r.period == p}
        series[f"T_s={p}"] = [pts[x] for x in xs]
    svg = line_chart_svg(xs, series, "Policy energy overhead", "% of workload energy", "LSTM hidden size")
    (out / "overhead.svg").write_text(svg, encoding="utf-8")
    return csv_path


COMMANDS = {
    "gen-workload": cmd_gen_workload,
    "train": cmd_train,
    "compare": cmd_compare,
    "sweep-bandwidth": cmd_sweep_bandwidth,
    "overhead": cmd_overhead,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relmas", description="Multi-tenant DNN scheduling experiments on a simulated MAS.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--seed", type=int, default=None, help="run a single seed instead of the configured list")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.add_argument("--resume", default=None, help="train: continue from this checkpoint")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        out = Path(args.out) if args.out else cfg.path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "train":
            result = cmd_train(cfg, out, args.seed, Path(args.resume) if args.resume else None)
        else:
            result = COMMANDS[args.command](cfg, out, args.seed)
    except (ConfigError, CostTableError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any failure past config loading is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, list):
        for path in result:
            print(path)
    else:
        print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end acceptance checks, one test per criterion, each reporting PASS/FAIL with its measurement."""
import json
import random
import time
from fractions import Fraction

import numpy as np

from helpers import KeyedScheduler, ga_instance, instance_to_engine_inputs, simple_mas
from oracles import cycle_stepping_run, exhaustive_optimum, gradient_check_error, random_instance
from relmas.agent import lstm
from relmas.agent.ddpg import DdpgAgent, TrainerConfig, TrainingEnv, ddpg_train, evaluate_policy
from relmas.agent.encoding import Norms
from relmas.agent.overhead import policy_mac_count
from relmas.agent.policy import relmas_schedule
from relmas.agent.reward import ProjectedSubJob, RewardCoefficients, compute_reward
from relmas.cli import compare_rows, main, normalize_sweep, overhead_rows
from relmas.config import config_from_dict
from relmas.core import Job, table1_mas
from relmas.costmodel import build_analytic_table, table_from_costs
from relmas.scenarios import TOY_TRAINER, toy_scenario
from relmas.schedulers.ga import FitnessCache, magma_ga
from relmas.schedulers.heuristics import FcfsH, RandomScheduler
from relmas.simulator import Engine, run_trace
from relmas.workload import TraceParams, generate_trace, workload_set
from relmas.zoo import builtin_models


def test_01_simulator_matches_cycle_oracle(report):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        inst = random_instance(rng)
        num_sas, bw, jobs, costs, decide, period = inst
        ref = cycle_stepping_run(*inst)
        cfg, table, trace = instance_to_engine_inputs(num_sas, bw, jobs, costs)
        eng = run_trace(cfg, table, trace, KeyedScheduler(decide), period).engine
        for key, outcome in ref.items():
            got = ("finish", eng.finish_time[key], eng.assigned_sa[key]) if key in eng.finish_time else ("drop",)
            if got != (outcome if outcome[0] == "finish" else ("drop",)):
                mismatches += 1
                break
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    assert report(1, "simulator oracle equivalence", ok,
                  f"{1000 - mismatches}/1000 instances exact, {elapsed:.1f}s (limit 60s)")


def test_02_contention_example(report):
    table = table_from_costs({"a": [[(100, 1000), (100, 1000)]], "b": [[(100, 1000), (100, 1000)]]}, 2)
    trace = [Job(0, 0, 0, 10**4), Job(1, 1, 0, 10**4)]
    res = run_trace(simple_mas(2, 16), table, trace, KeyedScheduler({(0, 0): (1.0, 0), (1, 0): (1.0, 1)}), 10**4)
    finishes = sorted(res.engine.finish_time.values())
    ok = finishes == [Fraction(125), Fraction(125)]
    assert report(2, "contention arithmetic", ok, f"two 10 B/cycle layers at B=16 finish at {[str(f) for f in finishes]}"
                  " (expected 125 = 100 x 1.25)")


def test_03_reward_unit_vectors(report):
    c = RewardCoefficients(period=5)
    cases = [
        (8, [ProjectedSubJob(0, 10, Fraction(10))], 0.10),
        (0, [ProjectedSubJob(0, 10, Fraction(30))], 0.01 * (-0.11 - 0.05)),
        (0, [ProjectedSubJob(0, 10, None)], 0.01 * (-0.11 - 0.05)),
        (0, [ProjectedSubJob(0, 20, Fraction(10))], 0.01 * (0.10 + 0.05 * 0.5)),
        (10, [ProjectedSubJob(0, 10, Fraction(12))], -0.11 + 0.05 * -0.2),
        (0, [], 0.0),
    ]
    mixed = [e for _, entries, _ in cases[1:4] for e in entries]
    cases.append((0, mixed, 2 * 0.01 * (-0.11 - 0.05) + 0.01 * (0.10 + 0.05 * 0.5)))
    worst = max(abs(compute_reward(c, t, entries) - want) for t, entries, want in cases)
    coeffs_ok = (c.alpha, c.beta, c.gamma_slack, c.delta) == (0.10, 0.11, 0.05, 0.01)
    ok = coeffs_ok and worst <= 1e-12
    assert report(3, "reward unit vectors", ok, f"{len(cases)} vectors, max abs error {worst:.2e} (limit 1e-12)")


def test_04_encoding_shapes(report):
    cfg = table1_mas()
    table = build_analytic_table(cfg, builtin_models())
    norms = Norms.for_setup(table, cfg, 1000)
    actor = lstm.init_params(np.random.default_rng(0), 16, 8, 7)
    rng = np.random.default_rng(4)
    bad = nonempty = 0
    for k in range(100):
        now = int(rng.integers(0, 400_000))
        p = TraceParams(workload_set("Mixed"), now, pareto_scale_cycles=float(rng.uniform(2_000, 40_000)), seed=k)
        eng = Engine(cfg, table, generate_trace(p, table))
        eng._run(Fraction(now))
        snap = eng.snapshot()
        nonempty += bool(snap.ready_queue)
        from relmas.agent.encoding import encode_state

        state = encode_state(snap, table, cfg, norms)
        _, actions = relmas_schedule(actor, snap, table, cfg, norms)
        if state.shape[1] != 16 or (len(actions) and actions.shape[1] != 7) or len(actions) != len(snap.ready_queue):
            bad += 1
    ok = bad == 0 and nonempty > 50
    assert report(4, "encoding shapes", ok, f"100 snapshots ({nonempty} non-empty), state 16 / action 7 wide, {bad} bad")


def test_05_gradient_fidelity(report):
    t0 = time.perf_counter()
    worst = max(gradient_check_error(seed) for seed in range(20))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 60
    assert report(5, "BPTT gradient fidelity", ok, f"max relative error {worst:.2e} over 20 nets (limit 1e-4), "
                  f"{elapsed:.1f}s")


def test_06_mac_count(report):
    macs = policy_mac_count(256, 6)
    rel = abs(macs - 316_288) / 316_288
    assert report(6, "MAC count", rel <= 0.02, f"{macs} vs 316288, {100 * rel:.2f}% off (limit 2%)")


def test_07_learning_trend(report):
    sc = toy_scenario()
    evals = [sc.trace(10_000 + k) for k in range(4)]
    fcfs = float(np.mean([run_trace(sc.cfg, sc.table, tr, FcfsH(), sc.period, record=False)
                          .metrics.sla_satisfaction_rate for tr in evals]))
    t0 = time.perf_counter()
    rows = []
    for seed in range(5):
        env = TrainingEnv(sc.cfg, sc.table, sc.period, lambda ep, s=seed: sc.trace(s * 100_000 + ep), evals)
        agent = DdpgAgent(2, Norms.for_setup(sc.table, sc.cfg, sc.period),
                          TrainerConfig(**dict(TOY_TRAINER, seed=seed, eval_every=0)))
        untrained = evaluate_policy(agent.actor, agent.norms, env)
        rand = float(np.mean([run_trace(sc.cfg, sc.table, tr, RandomScheduler(seed), sc.period, record=False)
                              .metrics.sla_satisfaction_rate for tr in evals]))
        ddpg_train(agent, env, 200)
        trained = evaluate_policy(agent.actor, agent.norms, env)
        rows.append((seed, untrained, rand, trained))
    elapsed = time.perf_counter() - t0
    beat_baselines = all(tr > max(u, r) for _, u, r, tr in rows)
    beat_fcfs = sum(tr > fcfs for *_, tr in rows)
    ok = beat_baselines and beat_fcfs >= 3 and elapsed < 900
    detail = ", ".join(f"seed {s}: {tr:.3f} (untrained {u:.3f}, random {r:.3f})" for s, u, r, tr in rows)
    assert report(7, "toy learning trend", ok, f"FCFS-H {fcfs:.3f}; {detail}; beats FCFS-H on {beat_fcfs}/5; "
                  f"{elapsed:.0f}s (limit 900s)")


def test_08_bandwidth_sensitivity(report):
    doc = {
        "system": "table1",
        "period": 20_000,
        "seeds": [0],
        "schedulers": ["fcfs-h", "prema-h", "herald", "magma"],
        "scheduler_params": {"magma": {"pop": 10, "gens": 5}},
        "workload": {"name": "Light", "load": 0.15, "duration_cycles": 20_000_000},
    }
    cfg = config_from_dict(doc)
    t0 = time.perf_counter()
    rows = []
    for bw in (16, 12, 8, 4):
        rows += compare_rows(cfg, cfg.seeds, bw)
    elapsed = time.perf_counter() - t0
    sweep = normalize_sweep(rows)
    curves = {}
    for r in sweep:
        curves.setdefault(r.scheduler, []).append(r.normalized_sla)  # rows come in decreasing bandwidth
    worst_rise = max(b - a for ys in curves.values() for a, b in zip(ys, ys[1:]))
    ok = worst_rise <= 0.02 and elapsed < 300
    shapes = "; ".join(f"{s} " + "/".join(f"{y:.2f}" for y in ys) for s, ys in curves.items())
    assert report(8, "bandwidth sensitivity shape", ok, f"B=16/12/8/4 -> {shapes}; worst step rise "
                  f"{100 * max(worst_rise, 0):.1f}pp (limit 2pp); {elapsed:.0f}s")


def test_09_ga_reaches_optimum(report):
    t0 = time.perf_counter()
    hits = 0
    for seed in range(50):
        snap, table, cfg = ga_instance(seed)
        opt = exhaustive_optimum(FitnessCache(snap, table, cfg, RewardCoefficients()), len(snap.ready_queue), 2)
        res = magma_ga(snap, table, cfg, pop=100, gens=200, seed=seed)
        hits += abs(res.best_fitness - opt) <= 1e-12
    elapsed = time.perf_counter() - t0
    ok = hits >= 45 and elapsed < 300
    assert report(9, "GA sanity", ok, f"optimum reached on {hits}/50 seeds (need 45), {elapsed:.0f}s (limit 300s)")


def test_10_overhead_trends(report):
    cfg = config_from_dict({"system": "table1", "period": 20_000,
                            "workload": {"name": "Light", "load": 0.15, "duration_cycles": 20_000_000}})
    t0 = time.perf_counter()
    hs, periods = [64, 128, 256], [40_000, 20_000, 10_000, 5_000]
    pct = {(r.hidden, r.period): r.overhead_percent for r in overhead_rows(cfg, hs, periods, 0)}
    elapsed = time.perf_counter() - t0
    up_in_h = all(pct[(a, p)] < pct[(b, p)] for p in periods for a, b in zip(hs, hs[1:]))
    up_as_period_shrinks = all(pct[(h, a)] <= pct[(h, b)] for h in hs for a, b in zip(periods, periods[1:]))
    ok = up_in_h and up_as_period_shrinks and elapsed < 120
    grid = "; ".join(f"h={h}: " + "/".join(f"{pct[(h, p)]:.2f}%" for p in periods) for h in hs)
    assert report(10, "overhead trends", ok, f"T_s=40k/20k/10k/5k -> {grid}; {elapsed:.1f}s")


def test_11_compare_determinism(report, tmp_path):
    doc = {
        "system": "toy",
        "seeds": [0, 1, 2],
        "schedulers": ["fcfs-h", "prema-h", "herald", "magma", "random"],
        "scheduler_params": {"magma": {"pop": 20, "gens": 10}},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(doc))
    t0 = time.perf_counter()
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["compare", "--config", str(cfg_path), "--out", str(out), "--seed", "7"]) == 0
        assert main(["compare", "--config", str(cfg_path), "--out", str(out / "all")]) == 0
        blobs.append(((out / "compare.csv").read_bytes(), (out / "all" / "compare.csv").read_bytes()))
    elapsed = time.perf_counter() - t0
    ok = blobs[0] == blobs[1] and elapsed < 120
    assert report(11, "compare determinism", ok, f"two runs byte-identical: {blobs[0] == blobs[1]} "
                  f"({len(blobs[0][1])} bytes), {elapsed:.1f}s")

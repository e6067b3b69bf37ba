"""Independent reference implementations used only by the test-suite."""
from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np


def cycle_stepping_run(num_sas, dram_bw, jobs, costs, decide, period, max_time=10**6):
    """Brute-force MAS simulation advancing at most one cycle per step.

    jobs:   list of (job_id, arrival, deadline, num_layers)
    costs:  dict (job_id, layer) -> list over SAs of (cycles, total_bytes)
    decide: dict (job_id, layer) -> (priority, sa)
    A step is shortened only when a completion, deadline, arrival or period
    boundary falls inside the current cycle. Returns dict key -> ("finish", t, sa) | ("drop", t).
    """
    period = Fraction(period)
    arrival = {j: Fraction(a) for j, a, _, _ in jobs}
    deadline = {j: Fraction(d) for j, _, d, _ in jobs}
    nlayers = {j: n for j, _, _, n in jobs}
    keys = [(j, s) for j, _, _, n in jobs for s in range(n)]
    state = {k: "wait" for k in keys}
    progress = {}
    where = {}
    result = {}
    visible = set()
    t = Fraction(0)

    def pred_done(k):
        j, s = k
        return s == 0 or state[(j, s - 1)] == "done"

    def rq_pos(k):
        j, s = k
        return (deadline[j], j, s)

    while any(state[k] in ("wait", "run") for k in keys):
        if t > max_time:
            raise RuntimeError("oracle did not terminate")
        # drops
        for k in keys:
            if state[k] == "wait" and arrival[k[0]] <= t and deadline[k[0]] <= t:
                state[k] = "drop"
                result[k] = ("drop", t)
        at_boundary = (t / period).denominator == 1
        if at_boundary:
            visible = {k for k in keys if state[k] == "wait" and arrival[k[0]] <= t}
        # dispatch on idle SAs
        busy = {where[k] for k in keys if state[k] == "run"}
        for m in range(num_sas):
            if m in busy:
                continue
            cands = [
                k for k in visible
                if state[k] == "wait" and decide[k][1] == m and pred_done(k) and deadline[k[0]] > t
            ]
            if not cands:
                continue
            top_priority = max(decide[k][0] for k in cands)
            # priority ties resolved by ready-queue order (earlier position wins)
            best = min((k for k in cands if decide[k][0] == top_priority), key=rq_pos)
            state[best] = "run"
            where[best] = m
            progress[best] = Fraction(0)
            result[best] = ("start", t, m)
        running = [k for k in keys if state[k] == "run"]
        total_bw = sum((Fraction(costs[k][where[k]][1], costs[k][where[k]][0]) for k in running), Fraction(0))
        rate = Fraction(1) if total_bw <= dram_bw else Fraction(dram_bw) / total_bw
        step = Fraction(1)
        next_boundary = (math.floor(t / period) + 1) * period
        step = min(step, next_boundary - t)
        for k in running:
            left = costs[k][where[k]][0] - progress[k]
            step = min(step, left / rate)
        for k in keys:
            if state[k] == "wait":
                a, d = arrival[k[0]], deadline[k[0]]
                if a > t:
                    step = min(step, a - t)
                elif d > t:
                    step = min(step, d - t)
        for k in running:
            progress[k] += rate * step
        t += step
        for k in running:
            if progress[k] == costs[k][where[k]][0]:
                state[k] = "done"
                result[k] = ("finish", t, where[k])
    return result


def random_instance(rng: random.Random, max_sas=3, max_sjs=12, max_cost=30):
    num_sas = rng.randint(1, max_sas)
    dram_bw = Fraction(rng.choice([4, 8, 12, 16]))
    jobs, costs = [], {}
    total = 0
    job_id = 0
    budget = rng.randint(1, max_sjs)
    while total < budget:
        n = rng.randint(1, min(4, budget - total))
        arrival = rng.randint(0, 40)
        q = rng.randint(5, 160)
        jobs.append((job_id, arrival, arrival + q, n))
        for s in range(n):
            row = []
            for _m in range(num_sas):
                c = rng.randint(1, max_cost)
                nbytes = rng.randint(0, c * 20)
                row.append((c, nbytes))
            costs[(job_id, s)] = row
        total += n
        job_id += 1
    decide = {k: (round(rng.uniform(-1, 1), 3), rng.randrange(num_sas)) for k in costs}
    period = rng.choice([3, 7, 10, 25, 60, 1000])
    return num_sas, dram_bw, jobs, costs, decide, period


def lstm_reference(params, seq, output="tanh"):
    """Scalar-arithmetic LSTM + FC1/ReLU + FC2 forward, one element at a time."""
    W, U, b = params["W"], params["U"], params["b"]
    W1, b1, W2, b2 = params["W1"], params["b1"], params["W2"], params["b2"]
    h = U.shape[1]
    hid = [0.0] * h
    cell = [0.0] * h
    outs = []

    def sig(x):
        return 1.0 / (1.0 + math.exp(-x))

    for x in seq:
        z = []
        for r in range(4 * h):
            acc = float(b[r])
            for c in range(len(x)):
                acc += float(W[r, c]) * float(x[c])
            for c in range(h):
                acc += float(U[r, c]) * hid[c]
            z.append(acc)
        new_cell, new_hid = [], []
        for u in range(h):
            i = sig(z[u])
            f = sig(z[h + u])
            g = math.tanh(z[2 * h + u])
            o = sig(z[3 * h + u])
            c = f * cell[u] + i * g
            new_cell.append(c)
            new_hid.append(o * math.tanh(c))
        cell, hid = new_cell, new_hid
        a1 = []
        for r in range(W1.shape[0]):
            acc = float(b1[r]) + sum(float(W1[r, c]) * hid[c] for c in range(h))
            a1.append(max(0.0, acc))
        out = []
        for r in range(W2.shape[0]):
            acc = float(b2[r]) + sum(float(W2[r, c]) * a1[c] for c in range(len(a1)))
            out.append(math.tanh(acc) if output == "tanh" else acc)
        outs.append(out)
    return np.array(outs)


def per_sa_orderings(n_items, num_sas):
    """Every distinct (assignment, per-SA execution order) pair for n_items sub-jobs."""
    for assign in itertools.product(range(num_sas), repeat=n_items):
        groups = [[i for i in range(n_items) if assign[i] == m] for m in range(num_sas)]
        for perms in itertools.product(*(itertools.permutations(g) for g in groups)):
            yield assign, perms


def exhaustive_optimum(fitness, n_items, num_sas):
    """Best fitness over every assignment and per-SA order, scored by fitness(priorities, sas)."""
    best = -math.inf
    for assign, perms in per_sa_orderings(n_items, num_sas):
        prio = np.zeros(n_items)
        for group in perms:
            for rank, i in enumerate(group):
                prio[i] = 1.0 - 0.1 * rank
        best = max(best, fitness(prio, np.array(assign)))
    return best


def gradient_check_error(seed, eps=1e-5):
    """Worst relative error of BPTT gradients against central differences on a random net (h <= 8)."""
    from relmas.agent import lstm

    rng = np.random.default_rng(seed)
    D, h, O, T = int(rng.integers(1, 6)), int(rng.choice([2, 4, 6, 8])), int(rng.integers(1, 4)), int(rng.integers(1, 7))
    output = "tanh" if seed % 2 else "linear"
    p = {k: rng.normal(0, 0.5, v.shape) for k, v in lstm.init_params(rng, D, h, O).items()}
    X = rng.normal(size=(2, T, D))
    G = rng.normal(size=(2, T, O))
    _, cache = lstm.forward(p, X, output)
    grads, _ = lstm.backward(p, cache, G)

    def f():
        return float(np.sum(lstm.forward(p, X, output)[0] * G))

    worst = 0.0
    for k, arr in p.items():
        fd = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = f()
            arr[idx] = old - eps
            down = f()
            arr[idx] = old
            fd[idx] = (up - down) / (2 * eps)
        # the floor keeps entries where both gradients vanish from dividing 0 by 0
        err = np.abs(fd - grads[k]) / np.maximum(1e-6, np.abs(fd) + np.abs(grads[k]))
        worst = max(worst, float(err.max()))
    return worst

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relmas.core import QosLevel, table1_mas
from relmas.costmodel import build_analytic_table, min_job_latency
from relmas.workload import (
    TraceParams,
    dumps_trace,
    generate_trace,
    pareto_samples,
    pareto_scale_for_load,
    qos_factor,
    read_trace,
    workload_set,
    write_trace,
)
from relmas.zoo import builtin_models

TABLE = build_analytic_table(table1_mas(), builtin_models())


def params(**kw):
    base = dict(workload=workload_set("Light"), duration_cycles=2_000_000, pareto_scale_cycles=20_000.0, seed=7)
    base.update(kw)
    return TraceParams(**base)


def test_trace_is_deterministic():
    p = params()
    assert dumps_trace(generate_trace(p, TABLE), TABLE) == dumps_trace(generate_trace(p, TABLE), TABLE)
    assert generate_trace(p, TABLE) != generate_trace(params(seed=8), TABLE)


def test_zero_duration_is_empty():
    assert generate_trace(params(duration_cycles=0), TABLE) == []


def test_light_set_models():
    names = {TABLE.model(j.model_id).name for j in generate_trace(params(), TABLE)}
    assert names and names <= {"SqueezeNet", "YOLO-Lite", "KeywordSpotting"}


def test_mixed_is_union():
    mixed = set(workload_set("Mixed").model_names)
    assert mixed == set(workload_set("Light").model_names) | set(workload_set("Heavy").model_names)


def test_unknown_workload_name():
    with pytest.raises(ValueError):
        workload_set("Medium")


@pytest.mark.parametrize("level,expected", [(QosLevel.LOW, 3.6), (QosLevel.HIGH, 2.4), (QosLevel.MEDIUM, 3.0)])
def test_qos_factor(level, expected):
    assert qos_factor(level, 3.0) == pytest.approx(expected, abs=1e-12)


def test_pareto_mean_shape_three():
    rng = np.random.default_rng(0)
    scale, shape = 50.0, 3.0
    mean = pareto_samples(rng, shape, scale, 10**6).mean()
    assert abs(mean - scale * shape / (shape - 1)) / (scale * shape / (shape - 1)) < 0.02


def test_load_calibration():
    scale = pareto_scale_for_load(0.5, 1.5, 1000.0, 4)
    # mean gap = scale * shape / (shape - 1) = 1000 / (0.5 * 4)
    assert scale * 3.0 == pytest.approx(500.0)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 2**32),
    st.floats(1.05, 5.0),
    st.sampled_from(["Light", "Heavy", "Mixed"]),
    st.dictionaries(st.sampled_from(list(QosLevel)), st.floats(0.1, 1.0), min_size=1),
)
def test_deadlines_feasible_and_arrivals_sorted(seed, factor, name, mix):
    p = params(workload=workload_set(name), qos_medium_factor=factor, qos_mix=mix, seed=seed, duration_cycles=300_000)
    jobs = generate_trace(p, TABLE)
    ids = set(workload_set(name).model_ids(TABLE))
    arrivals = [j.arrival_cycle for j in jobs]
    assert arrivals == sorted(arrivals)
    for j in jobs:
        assert j.model_id in ids
        if j.qos_level is not QosLevel.HIGH or factor * 0.8 > 1:
            assert j.qos_latency_cycles >= min_job_latency(j.model_id, TABLE)


def test_trace_file_round_trip(tmp_path):
    jobs = generate_trace(params(), TABLE)
    path = tmp_path / "trace.jsonl"
    write_trace(path, jobs, TABLE, header={"seed": 7})
    assert read_trace(path, TABLE) == jobs


def test_invalid_params():
    with pytest.raises(ValueError):
        params(pareto_shape=0)
    with pytest.raises(ValueError):
        params(qos_medium_factor=1.0)

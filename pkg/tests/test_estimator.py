import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from meshperf.estimator import compute_report, estimate
from meshperf.model import Flow, attempt_duration_us
from meshperf.scenario import gen_scenario, random_indoor
from meshperf.steady import CycleStats, EstimationError, FlowDelta

from helpers import chain, one_hop


def _stats(length, **kw):
    d = dict(delivered=1, delivered_bits=8192, generated=1, dropped_total=0, sum_delay_us=602)
    d.update(kw)
    return CycleStats(length, {0: FlowDelta(**d)})


def test_throughput_from_one_packet_per_interval():
    rep = compute_report(_stats(31387), True)
    assert round(rep.flows[0].throughput_kbps, 1) == 261.0


def test_loss_zero():
    rep = compute_report(_stats(31387, generated=100, delivered=100, delivered_bits=819200,
                                sum_delay_us=60200), True)
    assert rep.flows[0].loss_pct == 0.0


def test_delay_average():
    rep = compute_report(_stats(31387, delivered=10, delivered_bits=81920, generated=10,
                                sum_delay_us=6020), True)
    assert rep.flows[0].delay_ms == pytest.approx(0.602)


def test_undelivered_flow_marked_unavailable():
    rep = compute_report(_stats(31387, delivered=0, delivered_bits=0, generated=3,
                                dropped_total=3, sum_delay_us=0), False)
    f = rep.flows[0]
    assert (f.throughput_kbps, f.loss_pct, f.delay_ms) == (0.0, 100.0, None)
    assert json.loads(rep.to_json())["flows"][0]["delay_ms"] is None


def test_nonpositive_window_rejected():
    with pytest.raises(EstimationError):
        compute_report(_stats(0), True)


def test_report_keys_and_three_decimals():
    text = estimate(one_hop()).to_json()
    doc = json.loads(text)
    assert set(doc) == {"flows", "steady", "cycle_length_us", "events_simulated", "wall_time_ms"}
    assert set(doc["flows"][0]) == {"id", "throughput_kbps", "loss_pct", "delay_ms"}
    assert '"throughput_kbps": 261.000' in text
    assert '"loss_pct": 0.000' in text
    assert '"delay_ms": 0.602' in text


def test_report_pure_function_of_stats():
    cs = _stats(123410, delivered=205, delivered_bits=205 * 8192, generated=301,
                dropped_total=96, sum_delay_us=205 * 6000)
    a = compute_report(cs, True, 2, 100, 1.0).to_json(include_timing=False)
    b = compute_report(cs, True, 2, 100, 9.0).to_json(include_timing=False)
    assert a == b


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), flows=st.sampled_from([3, 6]))
def test_report_invariants(seed, flows):
    s, _ = gen_scenario(random_indoor(seed, flows))
    try:
        rep = estimate(s)
    except EstimationError:
        return
    mac = s.mac
    links = s.link_map()
    for f in s.flows:
        est = rep.flow(f.flow_id)
        assert 0.0 <= est.loss_pct <= 100.0
        if est.delay_ms is None:
            continue
        floor = sum(attempt_duration_us(mac, links[h].rate_bps, f.packet_size_bytes, 0) for h in f.hops)
        assert est.delay_ms >= floor / 1000 - 1e-9
        quantum = f.packet_bits / rep.cycle_length_us * 1e3
        if rep.steady:
            expected = f.rate_bps / 1e3 * (1 - est.loss_pct / 100)
            assert abs(est.throughput_kbps - expected) <= quantum + 1e-6


def test_multi_hop_delay_matches_hop_sum():
    s = chain(3, [Flow(0, (0, 1, 2), 261_000)])
    rep = estimate(s)
    assert rep.flows[0].delay_ms == pytest.approx(2 * 0.602)
    assert math.isclose(rep.flows[0].throughput_kbps, 8192 / 31387 * 1e3)

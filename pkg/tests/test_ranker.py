import pytest
from hypothesis import given, strategies as st

from meshperf.estimator import EstimateReport, FlowEstimate, estimate
from meshperf.model import Flow, Link, NetworkSnapshot
from meshperf.ranker import (
    Assignment,
    Ranking,
    classification_inversions,
    indexed_candidates,
    order_by_metric,
    rank_candidates,
    subject_flow_candidates,
)
from meshperf.steady import EstimationError

from helpers import chain_nodes

ids_strategy = st.lists(st.text("abcdefgh", min_size=1, max_size=3), min_size=2, max_size=8,
                        unique=True)


def test_identity_zero():
    assert classification_inversions(list("abcd"), list("abcd")).inversion_pct == 0.0


def test_reverse_all_inverted():
    rep = classification_inversions(list("cba"), list("abc"))
    assert (rep.inverted_pairs, rep.total_pairs, rep.inversion_pct) == (3, 3, 100.0)


def test_single_swap_one_third():
    rep = classification_inversions(list("acb"), list("abc"))
    assert rep.to_dict() == {"inverted_pairs": 1, "total_pairs": 3, "inversion_pct": 33.333}


def test_mismatched_ids_named():
    with pytest.raises(ValueError, match=r"\['d'\].*\['c'\]"):
        classification_inversions(list("abd"), list("abc"))


@given(ids_strategy, st.randoms(use_true_random=False))
def test_inversion_properties(ids, rnd):
    other = ids[:]
    rnd.shuffle(other)
    assert classification_inversions(ids, ids).inversion_pct == 0.0
    assert classification_inversions(ids[::-1], ids).inversion_pct == 100.0
    assert (classification_inversions(ids, other).inverted_pairs
            == classification_inversions(other, ids).inverted_pairs)
    n = len(ids)
    assert classification_inversions(ids, other).total_pairs == n * (n - 1) // 2


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=8),
       st.floats(1e-3, 1e3), st.sampled_from(["throughput", "loss", "delay"]))
def test_rescaling_keeps_order(values, k, metric):
    ids = [f"c{i}" for i in range(len(values))]
    base = dict(zip(ids, values))
    scaled = {c: v * k for c, v in base.items()}
    # rescaling may merge values that differ by less than float resolution
    if len(set(scaled.values())) == len(set(base.values())):
        assert order_by_metric(ids, base, metric) == order_by_metric(ids, scaled, metric)


def test_order_directions_and_ties():
    vals = {"a": 1.0, "b": 3.0, "c": 1.0}
    assert order_by_metric("abc", vals, "throughput") == ("b", "a", "c")
    assert order_by_metric("abc", vals, "delay") == ("a", "c", "b")


def _diamond() -> NetworkSnapshot:
    # 0 -> 1 -> 3 over perfect links, 0 -> 2 -> 3 over a p = 0.2 hop. Every fifth
    # attempt succeeds there, so at 2 Mb/s that hop's service time exceeds the
    # packet interval and its queue overflows.
    links = (Link(0, 1, 1.0), Link(1, 3, 1.0), Link(0, 2, 1.0), Link(2, 3, 0.2))
    return NetworkSnapshot(chain_nodes(4), links, (Flow(0, (0, 1, 3), 2_000_000),))


def test_single_candidate():
    r = rank_candidates(_diamond(), [Assignment("only", {0: (0, 1, 3)})], "throughput")
    assert r.ids == ("only",)


def test_perfect_path_ranks_first():
    cands = [Assignment("lossy", {0: (0, 2, 3)}), Assignment("clean", {0: (0, 1, 3)})]
    r = rank_candidates(_diamond(), cands, "throughput")
    assert r.ids == ("clean", "lossy")
    assert r.values["clean"] > r.values["lossy"]


def test_equal_delay_keeps_input_order():
    def fake(_s):
        return EstimateReport((FlowEstimate(0, 100.0, 0.0, 1.0),), True, 1, 2, 0, 0.0)

    cands = [Assignment(c, {}) for c in "xyz"]
    assert rank_candidates(_diamond(), cands, "delay", estimator=fake).ids == tuple("xyz")


def test_failed_candidate_ranked_last_with_diagnostic():
    def flaky(s):
        if s.flows[0].path == (0, 2, 3):
            raise EstimationError("no complete window")
        return estimate(s)

    cands = [Assignment("bad", {0: (0, 2, 3)}), Assignment("good", {0: (0, 1, 3)})]
    r = rank_candidates(_diamond(), cands, "loss", estimator=flaky)
    assert r.ids == ("good", "bad")
    assert "bad" in r.diagnostics
    assert [row["rank"] for row in r.to_list()] == [1, 2]


def test_rankings_accept_ranking_objects():
    a = Ranking(("x", "y"), "loss")
    b = Ranking(("y", "x"), "loss")
    assert classification_inversions(a, b).inverted_pairs == 1


def test_candidate_builders():
    cands = {0: [(0, 1), (0, 2, 1)], 1: [(3, 4)]}
    sub = subject_flow_candidates(0, cands[0])
    assert [a.candidate_id for a in sub] == ["f0p0", "f0p1"]
    idx = indexed_candidates(cands)
    assert idx[1].paths == {0: (0, 2, 1), 1: (3, 4)}

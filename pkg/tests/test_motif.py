import json
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tradegraph import classify, ingest
from tradegraph.motif import (CoreSet, DailySubgraph, Finding, core_accounts, daily_subgraph,
                              daily_subgraphs, detect_motifs, simple_cycles)
from tradegraph.temporal import SvdResult

from helpers import canonical_accounts, tiny_market, tuples_from_counts
from oracles import cycles_by_permutation, motifs_bruteforce

DAY = date(2013, 2, 7)


def findings(edges, **kw):
    return detect_motifs(DailySubgraph(DAY, dict(edges)), **kw).findings


def as_set(fs):
    return {(f.pattern, f.accounts, f.edges, f.truncated) for f in fs}


# -- hand-built cases --------------------------------------------------------------

def test_self_loop_749():
    subs = daily_subgraphs(tuples_from_counts({(231, 231): 749}, DAY), {231})
    assert subs[DAY].edges == {(231, 231): 749}
    fs = detect_motifs(subs[DAY]).findings
    assert fs == [Finding("SelfLoop", (231,), ((231, 231, 749),))]


def test_unidirection_322():
    fs = findings({(527332, 231): 322})
    assert fs == [Finding("Unidirection", (527332, 231), ((527332, 231, 322),))]


def test_triangle_loop():
    ring = {(282004, 71885): 150, (71885, 490089): 180, (490089, 282004): 160}
    fs = findings(ring)
    assert [f.pattern for f in fs] == ["Triangle"]
    assert fs[0].accounts == (71885, 490089, 282004)
    assert set(fs[0].edges) == {(s, b, c) for (s, b), c in ring.items()}


def test_self_loops_fire_at_any_count():
    assert [f.pattern for f in findings({(5, 5): 1})] == ["SelfLoop"]


@pytest.mark.parametrize("fwd, back, found", [(5, 5, True), (4, 5, False), (20, 1, True)])
def test_bidirection_uses_combined_count(fwd, back, found):
    fs = findings({(1, 2): fwd, (2, 1): back})
    assert any(f.pattern == "Bidirection" for f in fs) == found
    assert not any(f.pattern == "Unidirection" for f in fs)


def test_polygon_and_star():
    quad = {(282004, 488195): 210, (488195, 231): 220, (231, 527332): 230, (527332, 282004): 12}
    assert [f.pattern for f in findings(quad)] == ["Polygon"]
    star = {(282004, leaf): 50 for leaf in (488195, 490089, 527332, 231)}
    fs = findings(star)
    assert [f.pattern for f in fs] == ["Star"]
    assert fs[0].accounts == (282004, 231, 488195, 490089, 527332)
    three = {(1, leaf): 50 for leaf in (2, 3, 4)}
    assert [f.pattern for f in findings(three)] == ["Unidirection"] * 3
    assert [f.pattern for f in findings(three, star_branches=3)] == ["Star"]


def test_in_star_reported_separately():
    both = {(leaf, 9): 20 for leaf in (1, 2, 3, 4)}
    both.update({(9, leaf): 20 for leaf in (5, 6, 7, 8)})
    stars = [f for f in findings(both) if f.pattern == "Star"]
    assert len(stars) == 2
    assert {f.accounts[0] for f in stars} == {9}


def test_light_edges_ignored():
    assert findings({(1, 2): 9, (2, 3): 9, (3, 1): 9}) == []
    assert findings({(1, 2): 3}, min_repeats=3)[0].pattern == "Unidirection"


def test_long_ring_is_truncated_polygon():
    ring = {(i, (i + 1) % 10): 15 for i in range(10)}
    fs = findings(ring)
    assert [(f.pattern, f.truncated) for f in fs] == [("Polygon", True)]
    assert fs[0].accounts == tuple(range(10))
    assert [f.truncated for f in findings(ring, max_cycle=10)] == [False]


def test_parameter_checks():
    with pytest.raises(ValueError):
        findings({}, min_repeats=0)
    with pytest.raises(ValueError):
        findings({}, star_branches=2)


# -- oracle equivalence ---------------------------------------------------------------

subgraphs = st.dictionaries(
    st.tuples(st.integers(0, 11), st.integers(0, 11)),
    st.sampled_from([1, 3, 6, 10, 12, 40]),
    max_size=45,
)


@settings(max_examples=300)
@given(subgraphs, st.sampled_from([3, 4, 5]), st.sampled_from([4, 6, 8]))
def test_matches_bruteforce(edges, b, max_cycle):
    ours = as_set(findings(edges, star_branches=b, max_cycle=max_cycle))
    assert ours == motifs_bruteforce(edges, r=10, b=b, max_cycle=max_cycle)


@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(lambda e: e[0] != e[1]),
               max_size=25), st.integers(3, 7))
def test_cycles_match_permutation_search(edges, max_len):
    succ = {}
    for s, b in edges:
        succ.setdefault(s, set()).add(b)
    assert set(simple_cycles(succ, max_len)) == cycles_by_permutation(edges, max_len)
    assert len(simple_cycles(succ, max_len)) == len(set(simple_cycles(succ, max_len)))


def _subsumed(f, lower):
    return any(g.pattern == f.pattern and set(f.accounts) <= set(g.accounts) for g in lower)


def _edge_in_structure(f, lower):
    s, b, _ = f.edges[0]
    return any(g.pattern in ("Triangle", "Polygon", "Star") and
               any((x, y) == (s, b) for x, y, _ in g.edges) for g in lower)


@given(subgraphs, st.integers(2, 20), st.integers(1, 20))
def test_raising_threshold_only_removes_or_splits(edges, r, dr):
    low = findings(edges, min_repeats=r)
    high = findings(edges, min_repeats=r + dr)
    for f in high:
        ok = _subsumed(f, low) or (f.pattern == "Unidirection" and _edge_in_structure(f, low))
        assert ok, f


# -- core accounts and daily subgraphs ------------------------------------------------

def test_core_accounts_union_and_ties():
    edge_index = [(1, 2), (2, 3), (3, 4), (4, 5)]
    V = np.array([[0.9, 0.1], [-0.9, 0.2], [0.1, -0.7], [0.0, 0.7]])
    svd = SvdResult(np.array([2.0, 1.0]), np.eye(2), V, 2)
    core = core_accounts(svd, edge_index, N=2, k=1)
    assert core.per_base_top == {1: [(1, 2)], 2: [(3, 4)]}
    assert core.edges == {(1, 2), (3, 4)} and core.accounts == {1, 2, 3, 4}
    assert core_accounts(svd, edge_index, N=0, k=3).accounts == set()
    with pytest.raises(ValueError):
        core_accounts(svd, edge_index, N=3, k=1)


def test_daily_subgraph_paths_agree():
    market = tiny_market(seed=2)
    txs, _ = ingest.clean_records(market.records)
    tuples = ingest.to_tuples(txs, classify.make_labeler(market.reference))
    accounts = set(market.truth.manipulators)
    subs = daily_subgraphs(tuples, CoreSet(set(), accounts, {}))
    for d, sub in subs.items():
        assert daily_subgraph(tuples, accounts, d).edges == sub.edges
        assert sub.nodes <= accounts


def test_report_exports():
    rep = detect_motifs(DailySubgraph(DAY, {(1, 1): 3, (1, 2): 12, (2, 3): 1}))
    lines = [json.loads(x) for x in rep.jsonl().splitlines()]
    assert [x["pattern"] for x in lines] == ["SelfLoop", "Unidirection"]
    assert lines[0]["day"] == "2013-02-07"
    assert set(rep.by_pattern()) == {"SelfLoop", "Unidirection"}
    dot = rep.dot(DailySubgraph(DAY, {(1, 1): 3, (1, 2): 12, (2, 3): 1}))
    assert dot.startswith("digraph day_20130207")
    assert dot.count("color=red") == 2


# -- planted synthetic days ----------------------------------------------------------

def planted_set(market, t):
    return {(m.pattern, canonical_accounts(m.pattern, m.accounts))
            for m in market.truth.motifs_on(t)}


def detected_on_day(market, tuples, t):
    day = market.config.start + timedelta(days=t)
    everyone = set(market.truth.manipulators) | set(market.truth.normal_accounts)
    return {(f.pattern, f.accounts) for f in detect_motifs(daily_subgraph(tuples, everyone, day)).findings}


@pytest.mark.parametrize("seed", [0, 1])
def test_planted_motifs_recovered_in_full_day_graph(seed):
    market = tiny_market(seed=seed, days=4, n_phases=4, motifs_per_phase=6)
    txs, _ = ingest.clean_records(market.records)
    tuples = ingest.to_tuples(txs, lambda tx: "NMT")
    for t in range(market.config.days):
        assert detected_on_day(market, tuples, t) == planted_set(market, t)

"""Builders shared by the test modules."""
from __future__ import annotations

from datetime import date, datetime, timedelta


from tradegraph.ingest import RawRecord, TransactionTuple
from tradegraph.synth import MarketConfig, generate_market

SAMPLE_LOG = """Trade_Id,Date,User_Id,Type,Currency,Bitcoins,Money,User_Country,User_State
1380587338975940,2013/10/1  0:28:58,125439,buy,USD,0.5,71.69169,US,NC
1380587338975940,2013/10/1  0:28:58,295701,sell,USD,0.5,71.69169,CA,QC
1380739642844790,2013/10/2  18:47:22,609336,buy,USD,0.26177217,33.96631,US,PA
1380739642844790,2013/10/2  18:47:22,36865,sell,USD,0.26177217,33.96631,US,CA
"""

T0 = datetime(2013, 1, 1, 12, 0, 0)


def rec(trade_id, user, side, btc=1.0, money=100.0, ts=T0, currency="USD"):
    return RawRecord(str(trade_id), ts, user, side, currency, btc, money)


def pair(trade_id, seller, buyer, btc=1.0, money=100.0, ts=T0, currency="USD"):
    return [rec(trade_id, buyer, "buy", btc, money, ts, currency),
            rec(trade_id, seller, "sell", btc, money, ts, currency)]


def tuples_from_counts(counts: dict, day: date, volume=1.0, label="NMT"):
    """Expand {(s, b): n} into n tuples per edge on ``day``."""
    base = datetime(day.year, day.month, day.day)
    out = []
    for (s, b), n in sorted(counts.items()):
        for k in range(n):
            out.append(TransactionTuple(s, b, volume, base + timedelta(seconds=k), label))
    return out


def canonical_accounts(pattern, accounts):
    """Account tuple in the order the detector reports it."""
    a = tuple(accounts)
    if pattern in ("Triangle", "Polygon"):
        i = a.index(min(a))
        return a[i:] + a[:i]
    if pattern == "Bidirection":
        return tuple(sorted(a))
    if pattern == "Star":
        return (a[0], *sorted(a[1:]))
    return a


def tiny_market(seed=0, **overrides):
    cfg = dict(days=6, n_normal=30, n_manipulator=8, normal_rate=25, n_phases=2,
               motifs_per_phase=3, seed=seed)
    cfg.update(overrides)
    return generate_market(MarketConfig(**cfg))


def random_edges(rng, n_nodes, p, self_loops=False):
    edges = set()
    for s in range(n_nodes):
        for b in range(n_nodes):
            if (s != b or self_loops) and rng.random() < p:
                edges.add((s, b))
    return edges


def random_normalized(rng, T, L, zero_rows=0):
    from tradegraph.temporal import GraphTimeSeriesMatrix, normalize_matrix
    X = rng.exponential(1.0, (T, L)) * (rng.random((T, L)) < 0.4)
    X[X.sum(axis=1) == 0, 0] = 1.0
    if zero_rows:
        X[rng.choice(T, zero_rows, replace=False)] = 0.0
    days = [date(2013, 1, 1) + timedelta(days=i) for i in range(T)]
    edges = [(i, i + 1) for i in range(L)]
    return normalize_matrix(GraphTimeSeriesMatrix(days, edges, X))

"""Slow, obviously-correct reference implementations used as test oracles.

None of these import the package's algorithms; they re-derive each result
by brute force so the fast code can be checked against them.
"""
from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np


# -- cleaning ---------------------------------------------------------------------

def clean_quadratic(records):
    """Three-stage cleaning by pairwise scans.

    Returns (transactions as tuples, counters dict). A transaction tuple is
    (trade_id, timestamp, seller, buyer, currency, bitcoins, money).
    """
    positive = [r for r in records if r.bitcoins > 0 and r.money > 0]

    kept = []
    for i, r in enumerate(positive):
        dup = any((q.date, q.user_id, q.side, q.bitcoins) == (r.date, r.user_id, r.side, r.bitcoins)
                  for q in positive[:i])
        if not dup:
            kept.append(r)

    def close(a, b):
        return abs(a - b) <= 1e-8 * max(abs(a), abs(b))

    txs, singles, multi_trades, multi_rows, bad_trades, bad_rows = [], 0, 0, 0, 0, 0
    done = set()
    for r in kept:
        if r.trade_id in done:
            continue
        done.add(r.trade_id)
        group = [q for q in kept if q.trade_id == r.trade_id]
        if len(group) == 1:
            singles += 1
        elif len(group) > 2:
            multi_trades += 1
            multi_rows += len(group)
        else:
            a, b = group
            sides = sorted([a.side, b.side])
            if (sides == ["buy", "sell"] and a.date == b.date and a.currency == b.currency
                    and close(a.bitcoins, b.bitcoins) and close(a.money, b.money)):
                sell = a if a.side == "sell" else b
                buy = b if sell is a else a
                txs.append((r.trade_id, sell.date, sell.user_id, buy.user_id, sell.currency,
                            sell.bitcoins, sell.money))
            else:
                bad_trades += 1
                bad_rows += 2

    final = []
    for i, t in enumerate(txs):
        key = (t[0], t[1], t[2], t[3], t[5], t[6])
        if not any((u[0], u[1], u[2], u[3], u[5], u[6]) == key for u in txs[:i]):
            final.append(t)

    counts = {
        "dropped_nonpositive": len(records) - len(positive),
        "dropped_duplicate_rows": len(positive) - len(kept),
        "dropped_single_rows": singles,
        "multi_row_trades": multi_trades,
        "dropped_multi_rows": multi_rows,
        "inconsistent_trades": bad_trades,
        "dropped_inconsistent_rows": bad_rows,
        "complete_transactions": len(txs),
        "dropped_duplicate_transactions": len(txs) - len(final),
        "transactions_after_dedup": len(final),
    }
    return final, counts


# -- graphs -------------------------------------------------------------------------

def undirected_simple(edges):
    nodes = {a for e in edges for a in e}
    adj = {n: set() for n in nodes}
    for s, b in edges:
        if s != b:
            adj[s].add(b)
            adj[b].add(s)
    return adj


def clustering_bruteforce(edges):
    """(average local clustering, transitivity) by enumerating node triples."""
    adj = undirected_simple(edges)
    nodes = sorted(adj)
    local = []
    for v in nodes:
        others = [u for u in nodes if u != v]
        pairs = [(a, b) for a, b in itertools.combinations(others, 2)
                 if a in adj[v] and b in adj[v]]
        if not pairs:
            local.append(0.0)
            continue
        closed = sum(1 for a, b in pairs if b in adj[a])
        local.append(closed / len(pairs))
    triangles = sum(1 for a, b, c in itertools.combinations(nodes, 3)
                    if b in adj[a] and c in adj[b] and a in adj[c])
    triples = sum(len(adj[v]) * (len(adj[v]) - 1) // 2 for v in nodes)
    return sum(local) / len(local), (3 * triangles / triples if triples else 0.0)


def degree_tally(edges, mode="total"):
    edges = list(edges)
    nodes = {a for e in edges for a in e}
    out = {}
    for n in nodes:
        i = sum(1 for s, b in edges if b == n)
        o = sum(1 for s, b in edges if s == n)
        out[n] = {"in": i, "out": o, "total": i + o}[mode]
    return out


# -- power law ------------------------------------------------------------------------

def hurwitz_zeta(alpha, x_min, terms=200_000):
    """Direct summation plus an Euler-Maclaurin tail."""
    k = np.arange(x_min, x_min + terms, dtype=float)
    head = np.sum(k ** -alpha)
    a = x_min + terms
    tail = a ** (1 - alpha) / (alpha - 1) + 0.5 * a ** -alpha + alpha / 12 * a ** (-alpha - 1)
    return head + tail


def grid_mle(sample, x_min, lo=1.05, hi=5.0, step=1e-3):
    """Maximise the discrete power-law likelihood over a grid of exponents."""
    x = np.asarray(sample, dtype=float)
    x = x[x >= x_min]
    n, s = len(x), np.sum(np.log(x))
    grid = np.arange(lo, hi, step)
    ll = [-n * math.log(hurwitz_zeta(a, x_min, terms=20_000)) - a * s for a in grid]
    return float(grid[int(np.argmax(ll))])


# -- linear algebra ------------------------------------------------------------------

def svd_via_gram(X):
    """Singular values and left vectors from the eigendecomposition of X X^T."""
    w, U = np.linalg.eigh(X @ X.T)
    order = np.argsort(w)[::-1]
    return np.sqrt(np.clip(w[order], 0, None)), U[:, order]


# -- correlation ----------------------------------------------------------------------

def pearson_direct(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    dx, dy = x - x.mean(), y - y.mean()
    return float(np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))


def average_ranks(x):
    x = list(x)
    ranks = []
    for v in x:
        below = sum(1 for u in x if u < v)
        equal = sum(1 for u in x if u == v)
        ranks.append(below + (equal + 1) / 2)
    return ranks


def spearman_direct(x, y):
    return pearson_direct(average_ranks(x), average_ranks(y))


def kendall_tau_b_pairs(x, y):
    """Tau-b by enumerating every pair."""
    conc = disc = tx = ty = 0
    for i, j in itertools.combinations(range(len(x)), 2):
        dx = np.sign(x[i] - x[j])
        dy = np.sign(y[i] - y[j])
        if dx == 0 and dy == 0:
            continue
        if dx == 0:
            tx += 1
        elif dy == 0:
            ty += 1
        elif dx == dy:
            conc += 1
        else:
            disc += 1
    return (conc - disc) / math.sqrt((conc + disc + tx) * (conc + disc + ty))


# -- motifs ----------------------------------------------------------------------------

def _rotate_min(cycle):
    i = cycle.index(min(cycle))
    return tuple(cycle[i:] + cycle[:i])


def cycles_by_permutation(heavy_edges, max_len):
    """Directed simple cycles (length 3..max_len) by trying every ordering."""
    nodes = sorted({a for e in heavy_edges for a in e})
    found = set()
    for k in range(3, max_len + 1):
        for combo in itertools.combinations(nodes, k):
            first, rest = combo[0], combo[1:]
            for perm in itertools.permutations(rest):
                ring = (first, *perm)
                if all((ring[i], ring[(i + 1) % k]) in heavy_edges for i in range(k)):
                    found.add(ring)
    return found


def motifs_bruteforce(edges, r=10, b=4, max_cycle=8):
    """Findings as a set of (pattern, accounts, edges, truncated), built from
    the pattern rules with networkx doing the cycle and component searches."""
    found = set()
    for (s, t), c in edges.items():
        if s == t:
            found.add(("SelfLoop", (s,), ((s, s, c),), False))
    for (s, t), c in edges.items():
        if s < t and (t, s) in edges and c + edges[(t, s)] >= r:
            found.add(("Bidirection", (s, t), ((s, t, c), (t, s, edges[(t, s)])), False))

    heavy = {e: c for e, c in edges.items() if c >= r and e[0] != e[1]}
    g = nx.DiGraph(list(heavy))
    covered = set()
    for cyc in nx.simple_cycles(g):
        if 3 <= len(cyc) <= max_cycle:
            ring = _rotate_min(list(cyc))
            spokes = list(zip(ring, ring[1:] + ring[:1]))
            covered.update(spokes)
            found.add(("Triangle" if len(ring) == 3 else "Polygon", ring,
                       tuple((s, t, heavy[(s, t)]) for s, t in spokes), False))
    for comp in nx.strongly_connected_components(g):
        if len(comp) > max_cycle:
            inner = tuple(sorted((s, t, c) for (s, t), c in heavy.items() if s in comp and t in comp))
            covered.update((s, t) for s, t, _ in inner)
            found.add(("Polygon", tuple(sorted(comp)), inner, True))
    for v in g.nodes:
        for nbrs, outward in ((set(g.successors(v)), True), (set(g.predecessors(v)), False)):
            if len(nbrs) >= b:
                leaves = sorted(nbrs)
                spokes = [(v, w) if outward else (w, v) for w in leaves]
                covered.update(spokes)
                found.add(("Star", (v, *leaves), tuple((s, t, heavy[(s, t)]) for s, t in spokes),
                           False))
    for (s, t), c in heavy.items():
        if (t, s) not in edges and (s, t) not in covered:
            found.add(("Unidirection", (s, t), ((s, t, c),), False))
    return found

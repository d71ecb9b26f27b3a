"""Core abnormal accounts and manipulation-pattern detection in daily subgraphs."""
from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable

from .graph import to_dot
from .ingest import TransactionTuple
from .temporal import SvdResult

Edge = tuple[int, int]

PATTERNS = ("SelfLoop", "Unidirection", "Bidirection", "Triangle", "Polygon", "Star")
DEFAULT_MIN_REPEATS = 10
DEFAULT_STAR_BRANCHES = 4
DEFAULT_MAX_CYCLE = 8


@dataclass
class CoreSet:
    edges: set[Edge]
    accounts: set[int]
    per_base_top: dict[int, list[Edge]]


def core_accounts(svd: SvdResult, edge_index: list[Edge], N: int, k: int = 10) -> CoreSet:
    """Union of the k largest-|weight| edges of base networks 1..N."""
    if not 0 <= N <= svd.rank_kept:
        raise ValueError(f"N={N} outside 0..{svd.rank_kept}")
    if k < 1:
        raise ValueError("k must be >= 1")
    per_base = {}
    for i in range(N):
        v = svd.V[:, i]
        order = sorted(range(len(edge_index)), key=lambda l: (-abs(v[l]), edge_index[l]))
        per_base[i + 1] = [edge_index[l] for l in order[:k]]
    edges = set().union(*per_base.values()) if per_base else set()
    accounts = {a for e in edges for a in e}
    return CoreSet(edges, accounts, per_base)


@dataclass
class DailySubgraph:
    day: date | None
    edges: dict[Edge, int] = field(default_factory=dict)

    @property
    def nodes(self) -> set[int]:
        return {a for e in self.edges for a in e}


def daily_subgraph(tuples: Iterable[TransactionTuple], accounts, day: date) -> DailySubgraph:
    """Transaction counts on ``day`` among ``accounts`` (a CoreSet or a set)."""
    accounts = accounts.accounts if isinstance(accounts, CoreSet) else accounts
    counts = Counter((t.seller, t.buyer) for t in tuples
                     if t.day == day and t.seller in accounts and t.buyer in accounts)
    return DailySubgraph(day, dict(counts))


def daily_subgraphs(tuples: Iterable[TransactionTuple], accounts) -> dict[date, DailySubgraph]:
    """All non-empty daily subgraphs in one pass, ordered by day."""
    accounts = accounts.accounts if isinstance(accounts, CoreSet) else accounts
    per_day: dict[date, Counter] = defaultdict(Counter)
    for t in tuples:
        if t.seller in accounts and t.buyer in accounts:
            per_day[t.day][(t.seller, t.buyer)] += 1
    return {d: DailySubgraph(d, dict(per_day[d])) for d in sorted(per_day)}


@dataclass(frozen=True)
class Finding:
    pattern: str
    accounts: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]   # (src, dst, tx_count)
    truncated: bool = False

    def to_dict(self, day=None) -> dict:
        out = {"pattern": self.pattern, "accounts": list(self.accounts),
               "edges": [list(e) for e in self.edges]}
        if day is not None:
            out = {"day": day.isoformat(), **out}
        if self.truncated:
            out["truncated"] = True
        return out


@dataclass
class MotifReport:
    day: date | None
    findings: list[Finding]

    def by_pattern(self) -> dict[str, list[Finding]]:
        out = defaultdict(list)
        for f in self.findings:
            out[f.pattern].append(f)
        return dict(out)

    def jsonl(self) -> str:
        return "".join(json.dumps(f.to_dict(self.day)) + "\n" for f in self.findings)

    def dot(self, sub: DailySubgraph) -> str:
        hl = {(s, b) for f in self.findings for s, b, _ in f.edges}
        name = "day_" + self.day.strftime("%Y%m%d") if self.day else "G"
        return to_dot(sub.edges, name=name, highlight=hl, label=str)


def simple_cycles(succ: dict[int, set[int]], max_len: int) -> list[tuple[int, ...]]:
    """Directed simple cycles of length 3..max_len, each once, rotated so the
    smallest node comes first."""
    cycles = []
    for s in sorted(succ):
        path = [s]
        on_path = {s}

        def extend(v):
            for w in sorted(succ.get(v, ())):
                if w == s and len(path) >= 3:
                    cycles.append(tuple(path))
                elif w > s and w not in on_path and len(path) < max_len:
                    path.append(w)
                    on_path.add(w)
                    extend(w)
                    path.pop()
                    on_path.discard(w)

        extend(s)
    return cycles


def _strongly_connected(succ: dict[int, set[int]]) -> list[set[int]]:
    index, low, stack, on_stack, out = {}, {}, [], set(), []
    counter = [0]

    def visit(v):
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in succ.get(v, ()):
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = set()
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.add(w)
                if w == v:
                    break
            out.append(comp)

    for v in sorted(succ):
        if v not in index:
            visit(v)
    return out


def detect_motifs(sub: DailySubgraph, min_repeats: int = DEFAULT_MIN_REPEATS,
                  star_branches: int = DEFAULT_STAR_BRANCHES,
                  max_cycle: int = DEFAULT_MAX_CYCLE) -> MotifReport:
    """Find the six patterns in one day's subgraph.

    An edge is heavy when its count reaches ``min_repeats``. Self-loops are
    reported at any count. Cycles and stars use heavy edges only. A strongly
    connected heavy component too large to enumerate is reported once as a
    truncated Polygon. A heavy one-way edge is reported as a Unidirection
    unless it already belongs to a reported cycle, component or star.
    """
    if min_repeats < 1 or star_branches < 3:
        raise ValueError("need min_repeats >= 1 and star_branches >= 3")
    E = sub.edges
    findings: list[Finding] = []

    for (s, b), c in sorted(E.items()):
        if s == b:
            findings.append(Finding("SelfLoop", (s,), ((s, s, c),)))

    for (s, b), c in sorted(E.items()):
        if s < b and (b, s) in E:
            back = E[(b, s)]
            if c + back >= min_repeats:
                findings.append(Finding("Bidirection", (s, b), ((s, b, c), (b, s, back))))

    heavy = {e: c for e, c in E.items() if c >= min_repeats and e[0] != e[1]}
    succ: dict[int, set[int]] = defaultdict(set)
    pred: dict[int, set[int]] = defaultdict(set)
    for s, b in heavy:
        succ[s].add(b)
        pred[b].add(s)

    covered: set[Edge] = set()
    for cyc in simple_cycles(succ, max_cycle):
        ring = list(zip(cyc, cyc[1:] + cyc[:1]))
        covered.update(ring)
        findings.append(Finding("Triangle" if len(cyc) == 3 else "Polygon", cyc,
                                tuple((s, b, heavy[(s, b)]) for s, b in ring)))
    for comp in _strongly_connected(succ):
        if len(comp) > max_cycle:
            inner = tuple(sorted((s, b, c) for (s, b), c in heavy.items()
                                 if s in comp and b in comp))
            # every edge inside a strongly connected component lies on a cycle
            covered.update((s, b) for s, b, _ in inner)
            findings.append(Finding("Polygon", tuple(sorted(comp)), inner, truncated=True))

    for v in sorted(set(succ) | set(pred)):
        for nbrs, outward in ((succ.get(v, set()), True), (pred.get(v, set()), False)):
            if len(nbrs) >= star_branches:
                leaves = sorted(nbrs)
                spokes = [(v, w) if outward else (w, v) for w in leaves]
                covered.update(spokes)
                findings.append(Finding("Star", (v, *leaves),
                                        tuple((s, b, heavy[(s, b)]) for s, b in spokes)))

    for (s, b), c in sorted(heavy.items()):
        if (b, s) not in E and (s, b) not in covered:
            findings.append(Finding("Unidirection", (s, b), ((s, b, c),)))

    order = {p: i for i, p in enumerate(PATTERNS)}
    findings.sort(key=lambda f: (order[f.pattern], f.accounts, f.truncated))
    return MotifReport(sub.day, findings)

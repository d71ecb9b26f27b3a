"""Aggregate transaction graphs and their summary metrics."""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

from .ingest import TransactionTuple

Edge = tuple[int, int]


@dataclass
class EdgeData:
    weight: float = 0.0
    tx_count: int = 0


@dataclass
class WeightedDigraph:
    """Directed graph keyed by ordered (seller, buyer) pairs.

    Edge weight is the total BTC moved along the edge. Self-loops are kept.
    Only endpoints of stored edges count as nodes.
    """
    edges: dict[Edge, EdgeData] = field(default_factory=dict)

    @property
    def nodes(self) -> set[int]:
        out = set()
        for s, b in self.edges:
            out.add(s)
            out.add(b)
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def add(self, seller: int, buyer: int, volume: float, count: int = 1) -> None:
        e = self.edges.get((seller, buyer))
        if e is None:
            e = self.edges[(seller, buyer)] = EdgeData()
        e.weight += volume
        e.tx_count += count

    def merge(self, other: "WeightedDigraph") -> "WeightedDigraph":
        out = WeightedDigraph({k: EdgeData(v.weight, v.tx_count) for k, v in self.edges.items()})
        for (s, b), e in other.edges.items():
            out.add(s, b, e.weight, e.tx_count)
        return out

    def reversed(self) -> "WeightedDigraph":
        return WeightedDigraph({(b, s): EdgeData(e.weight, e.tx_count)
                                for (s, b), e in self.edges.items()})

    def undirected_neighbors(self) -> dict[int, set[int]]:
        """Adjacency of the simple undirected projection (no self-loops)."""
        nbrs: dict[int, set[int]] = {n: set() for n in self.nodes}
        for s, b in self.edges:
            if s != b:
                nbrs[s].add(b)
                nbrs[b].add(s)
        return nbrs


def build_graph(tuples: Iterable[TransactionTuple],
                node_filter: Callable[[int], bool] | None = None) -> WeightedDigraph:
    """Sum tuple volumes per ordered pair, keeping tuples whose seller and
    buyer both pass ``node_filter``."""
    g = WeightedDigraph()
    edges = g.edges
    for t in tuples:
        if node_filter is not None and not (node_filter(t.seller) and node_filter(t.buyer)):
            continue
        e = edges.get((t.seller, t.buyer))
        if e is None:
            e = edges[(t.seller, t.buyer)] = EdgeData()
        e.weight += t.volume
        e.tx_count += 1
    return g


def _require_nonempty(g: WeightedDigraph):
    if not g.edges:
        raise ValueError("graph has no edges")


def local_clustering(g: WeightedDigraph) -> dict[int, float]:
    nbrs = g.undirected_neighbors()
    out = {}
    for v, nv in nbrs.items():
        k = len(nv)
        if k < 2:
            out[v] = 0.0
            continue
        links = sum(len(nv & nbrs[u]) for u in nv) / 2
        out[v] = 2.0 * links / (k * (k - 1))
    return out


def clustering_coefficient(g: WeightedDigraph, kind: str = "average") -> float:
    """Clustering of the undirected simple projection of ``g``.

    ``kind="average"`` is the mean local coefficient over all nodes (nodes
    with fewer than two neighbours count as 0); ``kind="transitivity"`` is
    3 * triangles / connected triples.
    """
    _require_nonempty(g)
    if kind == "average":
        cc = local_clustering(g)
        return sum(cc.values()) / len(cc)
    if kind == "transitivity":
        nbrs = g.undirected_neighbors()
        closed = sum(len(nv & nbrs[u]) for v, nv in nbrs.items() for u in nv)
        triples = sum(len(nv) * (len(nv) - 1) for nv in nbrs.values())
        return closed / triples if triples else 0.0
    raise ValueError(f"unknown clustering kind {kind!r}")


@dataclass
class GraphStats:
    n_nodes: int
    n_edges: int
    avg_clustering: float
    avg_degree: float
    avg_weighted_degree: float

    def to_dict(self):
        return asdict(self)


def degree_stats(g: WeightedDigraph, clustering: str = "average") -> GraphStats:
    """Node/edge counts, clustering, E/N and total weight / N."""
    _require_nonempty(g)
    n = g.n_nodes
    total_w = sum(e.weight for e in g.edges.values())
    return GraphStats(n_nodes=n, n_edges=g.n_edges,
                      avg_clustering=clustering_coefficient(g, clustering),
                      avg_degree=g.n_edges / n,
                      avg_weighted_degree=total_w / n)


def degrees(g: WeightedDigraph, mode: str = "total") -> dict[int, int]:
    indeg: Counter = Counter()
    outdeg: Counter = Counter()
    for s, b in g.edges:
        outdeg[s] += 1
        indeg[b] += 1
    if mode == "in":
        src = indeg
    elif mode == "out":
        src = outdeg
    elif mode == "total":
        src = indeg + outdeg
    else:
        raise ValueError(f"unknown degree mode {mode!r}")
    return {n: src.get(n, 0) for n in g.nodes}


def degree_distribution(g: WeightedDigraph, mode: str = "total") -> dict[int, int]:
    """Histogram degree -> number of nodes, sorted by degree."""
    hist = Counter(degrees(g, mode).values())
    return dict(sorted(hist.items()))


# -- export --------------------------------------------------------------------

def write_edge_list(g: WeightedDigraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "weight", "tx_count"])
        for (s, b) in sorted(g.edges):
            e = g.edges[(s, b)]
            w.writerow([s, b, repr(e.weight), e.tx_count])


def read_edge_list(path) -> WeightedDigraph:
    g = WeightedDigraph()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            g.add(int(row["src"]), int(row["dst"]), float(row["weight"]), int(row["tx_count"]))
    return g


def to_dot(edges: dict[Edge, object], name: str = "G", highlight: Iterable[Edge] = (),
           label: Callable[[object], str] | None = None) -> str:
    """DOT text for a small edge map; highlighted edges are drawn red."""
    hl = set(highlight)
    lines = [f"digraph {name} {{"]
    nodes = sorted({n for e in edges for n in e})
    for n in nodes:
        lines.append(f'  "{n}";')
    for (s, b) in sorted(edges):
        attrs = []
        if label is not None:
            attrs.append(f'label="{label(edges[(s, b)])}"')
        if (s, b) in hl:
            attrs.append("color=red")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f'  "{s}" -> "{b}"{suffix};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def stats_json(stats: dict[str, GraphStats]) -> str:
    return json.dumps({k: v.to_dict() for k, v in stats.items()}, indent=2)


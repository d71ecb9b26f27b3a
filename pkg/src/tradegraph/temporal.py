"""Daily snapshot matrices and their singular value decomposition.

Row t of the snapshot matrix is the edge-weight vector of day t over a fixed
edge universe (the edges of the in-window aggregate graph, in lexicographic
order). Right-singular vectors read as signed edge weights ("base networks"),
left-singular vectors as their daily contribution.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .ingest import TransactionTuple

Edge = tuple[int, int]

DEFAULT_WINDOW_START = date(2012, 12, 1)


@dataclass
class GraphTimeSeriesMatrix:
    days: list[date]
    edge_index: list[Edge]
    X: np.ndarray
    normalized: bool = False

    @property
    def T(self) -> int:
        return len(self.days)

    @property
    def L(self) -> int:
        return len(self.edge_index)

    def select_days(self, mask) -> "GraphTimeSeriesMatrix":
        """Keep the rows where ``mask`` is true (raw matrices only)."""
        if self.normalized:
            raise ValueError("select rows before normalizing")
        mask = np.asarray(mask, dtype=bool)
        return replace(self, days=[d for d, k in zip(self.days, mask) if k], X=self.X[mask])

    def save(self, stem) -> None:
        """Write ``<stem>.npy`` plus a ``<stem>.json`` sidecar."""
        stem = Path(stem)
        np.save(stem.with_suffix(".npy"), self.X, allow_pickle=False)
        meta = {"days": [d.isoformat() for d in self.days],
                "edge_index": [list(e) for e in self.edge_index],
                "normalized": self.normalized}
        stem.with_suffix(".json").write_text(json.dumps(meta))

    @classmethod
    def load(cls, stem) -> "GraphTimeSeriesMatrix":
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        X = np.load(stem.with_suffix(".npy"), allow_pickle=False)
        return cls([date.fromisoformat(d) for d in meta["days"]],
                   [tuple(e) for e in meta["edge_index"]], X, meta["normalized"])


def build_snapshot_series(tuples: Iterable[TransactionTuple], start: date | None = None,
                          end: date | None = None,
                          node_filter: Callable[[int], bool] | None = None
                          ) -> GraphTimeSeriesMatrix:
    """Daily edge-weight matrix over ``[start, end]`` (inclusive).

    ``start`` defaults to 2012-12-01 and ``end`` to the last selected day.
    Every calendar day in the window gets a row, including days without trades.
    """
    start = DEFAULT_WINDOW_START if start is None else start
    selected = []
    for t in tuples:
        d = t.day
        if d < start or (end is not None and d > end):
            continue
        if node_filter is not None and not (node_filter(t.seller) and node_filter(t.buyer)):
            continue
        selected.append(t)
    if not selected:
        raise ValueError(f"no tuples in window {start} .. {end or 'end of data'}")
    if end is None:
        end = max(t.day for t in selected)
    if end < start:
        raise ValueError("empty window")

    edge_index = sorted({(t.seller, t.buyer) for t in selected})
    col = {e: i for i, e in enumerate(edge_index)}
    n_days = (end - start).days + 1
    X = np.zeros((n_days, len(edge_index)))
    for t in selected:
        X[(t.day - start).days, col[(t.seller, t.buyer)]] += t.volume
    days = [start + timedelta(days=i) for i in range(n_days)]
    return GraphTimeSeriesMatrix(days, edge_index, X)


def normalize_matrix(m: GraphTimeSeriesMatrix) -> GraphTimeSeriesMatrix:
    """Scale each nonzero row to sum 1, then subtract column means."""
    if m.normalized:
        raise ValueError("matrix already normalized")
    X = np.array(m.X, dtype=float)
    sums = X.sum(axis=1)
    nz = sums > 0
    X[nz] /= sums[nz, None]
    X -= X.mean(axis=0)
    return GraphTimeSeriesMatrix(list(m.days), list(m.edge_index), X, normalized=True)


@dataclass
class SvdResult:
    sigma: np.ndarray          # (T,) descending
    U: np.ndarray              # (T, T), columns u_i
    V: np.ndarray              # (L, r), columns v_i
    rank_kept: int
    days: list[date] = field(default_factory=list)

    def reconstruct(self) -> np.ndarray:
        r = self.rank_kept
        return (self.U[:, :r] * self.sigma[:r]) @ self.V.T

    def save(self, directory, edge_index=None) -> None:
        """One CSV per factor: sigma, U (days x T), V (edges x r)."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        np.savetxt(d / "sigma.csv", self.sigma[:, None], delimiter=",", fmt="%.17g",
                   header="sigma", comments="")
        hdr = ",".join(["day"] + [f"u{i + 1}" for i in range(self.U.shape[1])])
        with open(d / "U.csv", "w") as fh:
            fh.write(hdr + "\n")
            for i, row in enumerate(self.U):
                day = self.days[i].isoformat() if self.days else str(i)
                fh.write(day + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
        with open(d / "V.csv", "w") as fh:
            fh.write(",".join(["src", "dst"] + [f"v{i + 1}" for i in range(self.V.shape[1])]) + "\n")
            for l, row in enumerate(self.V):
                s, b = edge_index[l] if edge_index is not None else (l, l)
                fh.write(f"{s},{b}," + ",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def load(cls, directory) -> "SvdResult":
        d = Path(directory)
        sigma = np.atleast_1d(np.loadtxt(d / "sigma.csv", delimiter=",", skiprows=1))
        u_raw = np.loadtxt(d / "U.csv", delimiter=",", skiprows=1, dtype=str, ndmin=2)
        v_raw = np.loadtxt(d / "V.csv", delimiter=",", skiprows=1, dtype=str, ndmin=2)
        days = [date.fromisoformat(x) for x in u_raw[:, 0]]
        U = u_raw[:, 1:].astype(float)
        V = v_raw[:, 2:].astype(float)
        return cls(sigma, U, V, V.shape[1], days)


def _sign_fix(U: np.ndarray, Vt: np.ndarray) -> None:
    """Make the largest-magnitude entry of each right vector positive, in place."""
    for i in range(Vt.shape[0]):
        j = np.argmax(np.abs(Vt[i]))
        if Vt[i, j] < 0:
            Vt[i] *= -1
            U[:, i] *= -1


def compute_svd(m, rank: int | None = None) -> SvdResult:
    """Thin SVD of a normalized snapshot matrix (or a raw ndarray).

    ``rank`` limits how many right-singular vectors are kept; all T singular
    values and left vectors are always returned.
    """
    if isinstance(m, GraphTimeSeriesMatrix):
        if not m.normalized:
            raise ValueError("normalize the matrix before decomposing it")
        X, days = m.X, list(m.days)
    else:
        X, days = np.asarray(m, dtype=float), []
    T, L = X.shape
    if T > L:
        raise ValueError(f"{T} days but only {L} edges: shorten the window or "
                         "widen the edge universe (need T <= L)")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    _sign_fix(U, Vt)
    r = T if rank is None else min(rank, T)
    return SvdResult(s, U, Vt[:r].T.copy(), r, days)


@dataclass
class BaseNetwork:
    index: int
    sigma: float
    edge_weights: dict[Edge, float]

    def top_edges(self, k: int) -> list[Edge]:
        """The k edges with largest |weight|; ties go to the smaller edge."""
        return sorted(self.edge_weights, key=lambda e: (-abs(self.edge_weights[e]), e))[:k]


def base_network(svd: SvdResult, i: int, edge_index: list[Edge]) -> BaseNetwork:
    """The i-th (1-based) right-singular vector mapped onto edges."""
    if not 1 <= i <= svd.rank_kept:
        raise IndexError(f"base network {i} outside 1..{svd.rank_kept}")
    v = svd.V[:, i - 1]
    return BaseNetwork(i, float(svd.sigma[i - 1]), dict(zip(edge_index, v.tolist())))


def contribution_series(svd: SvdResult, i: int) -> np.ndarray:
    """u_i(t), the daily weight of base network i (1-based)."""
    if not 1 <= i <= svd.U.shape[1]:
        raise IndexError(f"contribution {i} outside 1..{svd.U.shape[1]}")
    return svd.U[:, i - 1].copy()


def select_rank(sigma, method: str = "fixed", n: int = 10) -> int:
    """Number of base networks to keep.

    ``fixed`` keeps ``min(n, #nonzero)``; ``elbow`` picks the point of the
    scree curve farthest from the chord between its first and last points.
    """
    sigma = np.asarray(sigma, dtype=float)
    tol = sigma.max(initial=0.0) * max(sigma.shape[0], 1) * np.finfo(float).eps
    nonzero = int(np.sum(sigma > tol))
    if nonzero == 0:
        raise ValueError("all singular values are zero")
    if method == "fixed":
        return min(n, nonzero)
    if method == "elbow":
        y = sigma[:nonzero]
        if len(y) <= 2:
            return len(y)
        x = np.arange(1, len(y) + 1, dtype=float)
        x0, y0, x1, y1 = x[0], y[0], x[-1], y[-1]
        dist = np.abs((y1 - y0) * x - (x1 - x0) * y + x1 * y0 - y1 * x0)
        dist /= np.hypot(y1 - y0, x1 - x0)
        return int(x[np.argmax(dist)])
    raise ValueError(f"unknown rank method {method!r}")

"""Pipeline stages shared by the command-line subcommands."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from . import classify, graph, ingest, motif, powerlaw, pricefit, temporal

log = logging.getLogger("tradegraph")

GRAPHS = ("EHG", "ELG", "ABG", "NMG", "CG")


class InputError(Exception):
    """Bad or missing user input (exit code 2)."""


@dataclass
class RunConfig:
    trades: str | None = None
    cleaned: str | None = None
    reference: str | None = None
    outdir: str = "out"
    start: date | None = temporal.DEFAULT_WINDOW_START
    end: date | None = None
    high: float = classify.HIGH_MULTIPLIER
    low: float = classify.LOW_MULTIPLIER
    currency: str = "USD"
    graphs: list[str] = field(default_factory=lambda: ["EHG", "ELG", "NMG"])
    n_base: int = 10
    rank_method: str = "fixed"
    k: int = 10
    min_repeats: int = motif.DEFAULT_MIN_REPEATS
    star_branches: int = motif.DEFAULT_STAR_BRANCHES
    max_cycle: int = motif.DEFAULT_MAX_CYCLE
    clustering: str = "average"
    degree_mode: str = "total"
    max_missing_reference: float = 0.05
    dot_days: int = 20
    seed: int = 0

    def validate(self) -> None:
        if self.start and self.end and self.end < self.start:
            raise InputError(f"window end {self.end} precedes start {self.start}")
        bad = [g for g in self.graphs if g not in GRAPHS]
        if bad:
            raise InputError(f"unknown graphs {bad}; choose from {', '.join(GRAPHS)}")
        if self.rank_method not in ("fixed", "elbow"):
            raise InputError("rank method must be fixed or elbow")
        if self.n_base < 1 or self.k < 1 or self.min_repeats < 1 or self.star_branches < 3:
            raise InputError("need n_base >= 1, k >= 1, min_repeats >= 1, star_branches >= 3")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("start", "end"):
            if d[key] is not None:
                d[key] = d[key].isoformat()
        return d


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, date):
        return o.isoformat()
    raise TypeError(type(o).__name__)


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def provenance(cfg: RunConfig) -> dict:
    digests = {}
    for key in ("trades", "cleaned", "reference"):
        p = getattr(cfg, key)
        if p:
            digests[key] = sha256_file(p)
    return {"config": cfg.to_dict(), "inputs_sha256": digests}


# -- stages --------------------------------------------------------------------

def run_clean(cfg: RunConfig):
    if not cfg.trades:
        raise InputError("no trades file given")
    if not Path(cfg.trades).is_file():
        raise InputError(f"trades file not found: {cfg.trades}")
    try:
        txs, report, errors = ingest.clean(cfg.trades)
    except ingest.IngestError as exc:
        raise InputError(str(exc)) from exc
    if report.rows_in == 0:
        raise InputError(f"{cfg.trades}: no data rows")
    if report.rows_accounted() != report.rows_in:
        raise AssertionError("cleaning counters do not conserve rows")
    return txs, report, errors


def load_transactions(cfg: RunConfig):
    """Cleaned transactions from ``cfg.cleaned`` or, failing that, by
    cleaning ``cfg.trades``."""
    if cfg.cleaned:
        if not Path(cfg.cleaned).is_file():
            raise InputError(f"cleaned file not found: {cfg.cleaned}")
        try:
            return ingest.read_transactions(cfg.cleaned), None
        except (ingest.IngestError, ValueError) as exc:
            raise InputError(str(exc)) from exc
    txs, report, _ = run_clean(cfg)
    return txs, report


def load_reference(cfg: RunConfig) -> classify.ReferencePriceTable:
    if not cfg.reference:
        raise InputError("no reference price file given")
    if not Path(cfg.reference).is_file():
        raise InputError(f"reference file not found: {cfg.reference}")
    try:
        return classify.load_reference(cfg.reference, currency=cfg.currency)
    except (ingest.IngestError, ValueError) as exc:
        raise InputError(str(exc)) from exc


@dataclass
class Labeled:
    tuples: list[ingest.TransactionTuple]
    categories: dict[int, classify.AccountFlags]
    reference: classify.ReferencePriceTable
    cleaning: ingest.CleaningReport | None
    missing_reference_fraction: float


def prepare(cfg: RunConfig) -> Labeled:
    txs, report = load_transactions(cfg)
    ref = load_reference(cfg)
    tuples = ingest.to_tuples(txs, classify.make_labeler(ref, cfg.high, cfg.low))
    n_unclassified = sum(t.label == classify.TxLabel.UNCLASSIFIED for t in tuples)
    frac = n_unclassified / len(tuples) if tuples else 0.0
    if frac > cfg.max_missing_reference:
        log.warning("%.1f%% of transactions have no reference price for their day/currency",
                    100 * frac)
    return Labeled(tuples, classify.categorize_accounts(tuples), ref, report, frac)


def graph_summary(data: Labeled, name: str, cfg: RunConfig) -> tuple[dict, graph.WeightedDigraph]:
    g = graph.build_graph(data.tuples, classify.account_filter(data.categories, name))
    if not g.edges:
        return {"error": "graph is empty"}, g
    out = {"stats": graph.degree_stats(g, cfg.clustering).to_dict(),
           "degree_mode": cfg.degree_mode,
           "degree_distribution": {str(k): v for k, v in
                                   graph.degree_distribution(g, cfg.degree_mode).items()}}
    try:
        fit = powerlaw.fit_power_law(list(graph.degrees(g, cfg.degree_mode).values()))
        out["power_law"] = {"alpha": fit.alpha, "x_min": fit.x_min, "n_tail": fit.n_tail,
                            "ks": fit.ks, "sigma": fit.sigma}
    except ValueError as exc:
        out["power_law"] = {"error": str(exc)}
    return out, g


@dataclass
class Decomposition:
    graph: str
    raw: temporal.GraphTimeSeriesMatrix
    matrix: temporal.GraphTimeSeriesMatrix
    svd: temporal.SvdResult
    N: int
    dropped_days: int


def decompose(data: Labeled, name: str, cfg: RunConfig) -> Decomposition:
    """Snapshot matrix over the window, minus days without a close price,
    normalized and decomposed."""
    raw = temporal.build_snapshot_series(data.tuples, cfg.start, cfg.end,
                                         classify.account_filter(data.categories, name))
    mask = pricefit.align_prices(raw.days, data.reference.close_series(raw.days))
    dropped = int((~mask).sum())
    if dropped:
        raw = raw.select_days(mask)
    if raw.T < 2:
        raise ValueError("fewer than two priced days in the window")
    norm = temporal.normalize_matrix(raw)
    svd = temporal.compute_svd(norm)
    N = temporal.select_rank(svd.sigma, cfg.rank_method, cfg.n_base)
    return Decomposition(name, raw, norm, svd, N, dropped)


def price_series(data: Labeled, days) -> np.ndarray:
    return pricefit.log_price(data.reference.close_series(days))


def scree_csv(sigma) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "sigma"])
    for i, s in enumerate(sigma, 1):
        w.writerow([i, repr(float(s))])
    return buf.getvalue()


def contributions_csv(svd: temporal.SvdResult, n: int = 4) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = min(n, svd.U.shape[1])
    w.writerow(["day"] + [f"u{i}" for i in range(1, n + 1)])
    for d, row in zip(svd.days, svd.U[:, :n]):
        w.writerow([d.isoformat()] + [repr(float(v)) for v in row])
    return buf.getvalue()


def price_fit(svd: temporal.SvdResult, B, N: int) -> tuple[dict, str]:
    report = pricefit.fit_report(svd, B, N)
    fit = pricefit.fit_price(B, svd, N)
    return report, pricefit.fitted_series_csv(svd.days, B, fit.fitted)


def find_motifs(data: Labeled, dec_svd: temporal.SvdResult, edge_index, N: int,
                cfg: RunConfig):
    core = motif.core_accounts(dec_svd, edge_index, N, cfg.k)
    subs = motif.daily_subgraphs(data.tuples, core)
    reports = {d: motif.detect_motifs(s, cfg.min_repeats, cfg.star_branches, cfg.max_cycle)
               for d, s in subs.items()}
    return core, subs, reports


def core_json(core: motif.CoreSet) -> dict:
    return {"n_edges": len(core.edges), "n_accounts": len(core.accounts),
            "edges": [list(e) for e in sorted(core.edges)],
            "accounts": sorted(core.accounts),
            "per_base_top": {str(i): [list(e) for e in es] for i, es in core.per_base_top.items()}}


def write_motif_outputs(out: Path, subs, reports, dot_days: int) -> dict:
    lines = "".join(reports[d].jsonl() for d in sorted(reports))
    write_text(out / "motifs.jsonl", lines)
    # DOT files for the busiest days only; the full list is in motifs.jsonl
    ranked = sorted(reports, key=lambda d: (-len(reports[d].findings), d))[:dot_days]
    for d in sorted(ranked):
        if reports[d].findings:
            write_text(out / "dot" / f"{d.isoformat()}.dot", reports[d].dot(subs[d]))
    counts: dict[str, int] = {}
    for r in reports.values():
        for f in r.findings:
            counts[f.pattern] = counts.get(f.pattern, 0) + 1
    return dict(sorted(counts.items()))

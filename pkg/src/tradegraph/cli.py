"""Command-line entry point: ``tradegraph <subcommand> [options]``.

Subcommands: clean, analyze, synth, graph-stats, svd, fit, motifs. The last
four run single stages and exchange results through files in the output
directory. Settings come from flags, then a JSON ``--config`` file, then
defaults. ``TRADEGRAPH_OUTDIR`` overrides the default output directory.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from datetime import date
from pathlib import Path

from . import ingest, pricefit, synth, temporal
from .pipeline import (GRAPHS, InputError, RunConfig, contributions_csv, core_json,
                       decompose, dump_json, find_motifs, graph_summary, load_reference, prepare,
                       price_fit, price_series, provenance, run_clean, scree_csv,
                       write_motif_outputs, write_text)
from .classify import summarize
from .graph import write_edge_list

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
OUTDIR_ENV = "TRADEGRAPH_OUTDIR"

log = logging.getLogger("tradegraph")


# -- stage commands --------------------------------------------------------------

def cmd_clean(cfg: RunConfig) -> dict:
    txs, report, errors = run_clean(cfg)
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    ingest.write_transactions(txs, out / "cleaned.csv")
    _report(out / "cleaning_report.json", report.to_dict(), provenance(cfg))
    write_text(out / "parse_errors.jsonl",
               "".join(json.dumps({"line": e.line, "field": e.field, "reason": e.reason}) + "\n"
                       for e in errors))
    print(f"{report.rows_in} rows -> {report.transactions_after_dedup} transactions "
          f"({len(errors)} malformed rows)")
    return report.to_dict()


def _report(path: Path, body: dict, prov: dict) -> None:
    write_text(path, dump_json({**body, "provenance": prov}))


def _category_outputs(data, out: Path, prov: dict) -> dict:
    stats = summarize(data.tuples, data.categories)
    _report(out / "category_stats.json", stats.to_dict(), prov)
    write_text(out / "category_stats.csv", stats.to_csv())
    return stats.to_dict()


def _graph_outputs(data, cfg: RunConfig, out: Path, prov: dict) -> dict:
    result = {}
    for name in cfg.graphs:
        summary, g = graph_summary(data, name, cfg)
        result[name] = summary
        if g.edges:
            (out / name).mkdir(parents=True, exist_ok=True)
            write_edge_list(g, out / name / "edges.csv")
    _report(out / "graph_stats.json", result, prov)
    return result


def cmd_graph_stats(cfg: RunConfig) -> dict:
    data, prov = prepare(cfg), provenance(cfg)
    out = Path(cfg.outdir)
    return {"categories": _category_outputs(data, out, prov),
            "graphs": _graph_outputs(data, cfg, out, prov)}


def _decompose_all(data, cfg: RunConfig, out: Path, prov: dict):
    decs, meta = {}, {}
    for name in cfg.graphs:
        gdir = out / name
        try:
            dec = decompose(data, name, cfg)
        except ValueError as exc:
            log.warning("%s: %s", name, exc)
            meta[name] = {"error": str(exc)}
            _report(gdir / "svd_meta.json", meta[name], prov)
            continue
        decs[name] = dec
        gdir.mkdir(parents=True, exist_ok=True)
        dec.matrix.save(gdir / "matrix")
        dec.svd.save(gdir / "svd", dec.matrix.edge_index)
        write_text(gdir / "scree.csv", scree_csv(dec.svd.sigma))
        write_text(gdir / "contributions.csv", contributions_csv(dec.svd))
        meta[name] = {"T": dec.matrix.T, "L": dec.matrix.L, "N": dec.N,
                      "dropped_days_without_price": dec.dropped_days,
                      "sigma_top": dec.svd.sigma[:dec.N].tolist()}
        _report(gdir / "svd_meta.json", meta[name], prov)
    return decs, meta


def cmd_svd(cfg: RunConfig) -> dict:
    data = prepare(cfg)
    _, meta = _decompose_all(data, cfg, Path(cfg.outdir), provenance(cfg))
    return meta


def _load_stage(out: Path, name: str):
    gdir = out / name
    meta_path = gdir / "svd_meta.json"
    if not meta_path.is_file():
        raise InputError(f"{meta_path} missing: run the svd stage first")
    meta = json.loads(meta_path.read_text())
    meta.pop("provenance", None)
    if "error" in meta:
        return None, None, meta
    m = temporal.GraphTimeSeriesMatrix.load(gdir / "matrix")
    svd = temporal.SvdResult.load(gdir / "svd")
    return m, svd, meta


def _fit_one(svd, B, N, gdir: Path, prov: dict) -> dict:
    report, series = price_fit(svd, B, N)
    _report(gdir / "fit.json", report, prov)
    write_text(gdir / "fitted.csv", series)
    return report


def cmd_fit(cfg: RunConfig) -> dict:
    ref, prov = load_reference(cfg), provenance(cfg)
    out = Path(cfg.outdir)
    result = {}
    for name in cfg.graphs:
        m, svd, meta = _load_stage(out, name)
        if svd is None:
            result[name] = meta
            continue
        closes = ref.close_series(m.days)
        if any(c is None for c in closes):
            raise InputError(f"{name}: reference lacks close prices for decomposed days")
        result[name] = _fit_one(svd, pricefit.log_price(closes), meta["N"], out / name,
                                prov)
    return result


def cmd_motifs(cfg: RunConfig) -> dict:
    data, prov = prepare(cfg), provenance(cfg)
    out = Path(cfg.outdir)
    result = {}
    for name in cfg.graphs:
        m, svd, meta = _load_stage(out, name)
        if svd is None:
            result[name] = meta
            continue
        result[name] = _motifs_one(data, svd, m.edge_index, meta["N"], cfg, out / name, prov)
    return result


def _motifs_one(data, svd, edge_index, N, cfg, gdir: Path, prov: dict) -> dict:
    core, subs, reports = find_motifs(data, svd, edge_index, N, cfg)
    _report(gdir / "core.json", core_json(core), prov)
    counts = write_motif_outputs(gdir, subs, reports, cfg.dot_days)
    return {"core_edges": len(core.edges), "core_accounts": len(core.accounts),
            "days_with_findings": sum(1 for r in reports.values() if r.findings),
            "findings": counts}


def cmd_analyze(cfg: RunConfig) -> dict:
    data = prepare(cfg)
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    prov = provenance(cfg)
    summary = {}
    if data.cleaning is not None:
        _report(out / "cleaning_report.json", data.cleaning.to_dict(), prov)
        summary["cleaning"] = data.cleaning.to_dict()
    summary["unclassified_fraction"] = data.missing_reference_fraction
    summary["categories"] = _category_outputs(data, out, prov)
    graphs = _graph_outputs(data, cfg, out, prov)
    summary["graphs"] = {k: v.get("stats", v) for k, v in graphs.items()}
    decs, meta = _decompose_all(data, cfg, out, prov)
    summary["svd"] = meta
    summary["fit"], summary["motifs"] = {}, {}
    for name, dec in decs.items():
        B = price_series(data, dec.matrix.days)
        summary["fit"][name] = _fit_one(dec.svd, B, dec.N, out / name, prov)
        summary["motifs"][name] = _motifs_one(data, dec.svd, dec.matrix.edge_index,
                                              dec.N, cfg, out / name, prov)
    _report(out / "report.json", summary, prov)
    _print_summary(summary)
    return summary


def _print_summary(summary: dict) -> None:
    cats = summary["categories"]
    print(f"accounts: {cats['All']['accounts']} ({cats['ABA']['accounts']} abnormal), "
          f"transactions: {cats['All']['tx']} ({cats['All']['abt']} abnormal)")
    for name, fit in summary["fit"].items():
        f = fit["fitted"]
        fmt = lambda v: "n/a" if v is None else f"{v:.3f}"
        print(f"{name}: fitted-{fit['N']} pearson={fmt(f['pearson'])} "
              f"spearman={fmt(f['spearman'])} kendall={fmt(f['kendall'])}; "
              f"motif findings {summary['motifs'][name]['findings']}")


def cmd_synth(mcfg: synth.MarketConfig, outdir: str, dup_fraction: float = 0.0) -> dict:
    market = synth.generate_market(mcfg)
    paths = market.write(outdir)
    result = {"rows": len(market.records), "manipulators": len(market.truth.manipulators),
              "planted_motifs": len(market.truth.motifs)}
    if dup_fraction > 0:
        corrupted, expected = synth.plant_duplicates(market.records, dup_fraction, mcfg.seed)
        with open(paths["trades"], "w", newline="", encoding="utf-8") as fh:
            ingest.write_raw_records(corrupted, fh)
        write_text(Path(outdir) / "expected_cleaning_report.json", dump_json(expected.to_dict()))
        result["rows"] = len(corrupted)
    print(f"wrote {result['rows']} rows, {result['manipulators']} manipulators, "
          f"{result['planted_motifs']} planted motifs to {outdir}")
    return result


# -- argument handling -------------------------------------------------------------

def _date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _graph_list(text: str) -> list[str]:
    names = [g.strip().upper() for g in text.split(",") if g.strip()]
    bad = [g for g in names if g not in GRAPHS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown graphs {bad}")
    return names


def _add_run_options(p: argparse.ArgumentParser, need: set[str]) -> None:
    g = p.add_argument_group("inputs")
    if "trades" in need:
        g.add_argument("--trades", help="raw trade log CSV (Trade_Id, Date, User_Id, Type, ...)")
    if "cleaned" in need:
        g.add_argument("--cleaned", help="cleaned transactions CSV written by 'clean'")
    if "reference" in need:
        g.add_argument("--reference", help="reference prices CSV (date,open,high,low,close)")
    p.add_argument("--config", help="JSON file of run settings (flags take precedence)")
    p.add_argument("-o", "--outdir", help=f"output directory (default: ${OUTDIR_ENV} or ./out)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    if "analysis" not in need:
        return
    a = p.add_argument_group("analysis")
    a.add_argument("--start", type=_date, help="window start, YYYY-MM-DD (default 2012-12-01)")
    a.add_argument("--end", type=_date, help="window end, YYYY-MM-DD (default: last day in data)")
    a.add_argument("--high-mult", dest="high", type=float,
                   help="EHT threshold multiplier on the daily high (default 1.5)")
    a.add_argument("--low-mult", dest="low", type=float,
                   help="ELT threshold multiplier on the daily low (default 0.5)")
    a.add_argument("--currency", help="currency of the reference prices (default USD)")
    a.add_argument("--graphs", type=_graph_list,
                   help="comma-separated graphs from EHG,ELG,ABG,NMG,CG (default EHG,ELG,NMG)")
    a.add_argument("-N", "--n-base", dest="n_base", type=int,
                   help="base networks kept by the fixed rank rule (default 10)")
    a.add_argument("--rank-method", choices=["fixed", "elbow"],
                   help="rank selection rule (default fixed)")
    a.add_argument("-k", dest="k", type=int, help="top edges per base network (default 10)")
    a.add_argument("--min-repeats", type=int,
                   help="transactions per day for an edge to count as heavy (default 10)")
    a.add_argument("--star-branches", type=int,
                   help="distinct heavy counterparties for a star (default 4)")
    a.add_argument("--max-cycle", type=int, help="longest cycle enumerated (default 8)")
    a.add_argument("--clustering", choices=["average", "transitivity"],
                   help="clustering coefficient variant (default average)")
    a.add_argument("--degree-mode", choices=["in", "out", "total"],
                   help="degree used for distributions and power-law fits (default total)")
    a.add_argument("--max-missing-ref", dest="max_missing_reference", type=float,
                   help="warn when more than this fraction of trades lack a reference day")
    a.add_argument("--dot-days", type=int, help="DOT files written per graph (default 20)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tradegraph", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="deduplicate and pair a raw trade log")
    _add_run_options(p, {"trades"})

    for name, helptext, need in [
        ("analyze", "run every stage and write the full report bundle",
         {"trades", "cleaned", "reference", "analysis"}),
        ("graph-stats", "category counts, graph metrics, degree fits",
         {"trades", "cleaned", "reference", "analysis"}),
        ("svd", "snapshot matrices and their decompositions",
         {"trades", "cleaned", "reference", "analysis"}),
        ("fit", "price fit from a persisted decomposition", {"reference", "analysis"}),
        ("motifs", "core accounts and daily patterns from a persisted decomposition",
         {"trades", "cleaned", "reference", "analysis"}),
    ]:
        _add_run_options(sub.add_parser(name, help=helptext), need)

    s = sub.add_parser("synth", help="generate a synthetic market with planted manipulators")
    s.add_argument("--config", help="JSON file of market settings (flags take precedence)")
    s.add_argument("-o", "--outdir", help=f"output directory (default: ${OUTDIR_ENV} or ./out)")
    s.add_argument("--days", type=int, help="number of days (default 300)")
    s.add_argument("--start", type=_date, help="first day, YYYY-MM-DD (default 2012-12-01)")
    s.add_argument("--normal", dest="n_normal", type=int, help="normal accounts (default 300)")
    s.add_argument("--manipulators", dest="n_manipulator", type=int,
                   help="manipulator accounts (default 60)")
    s.add_argument("--normal-rate", type=float, help="mean normal trades per day (default 40)")
    s.add_argument("--phases", dest="n_phases", type=int,
                   help="manipulation phases with distinct campaigns (default 12)")
    s.add_argument("--motifs-per-phase", type=int, help="motifs per campaign (default 12)")
    s.add_argument("--kappa", type=float, help="intensity-to-return coupling (default 0.8)")
    s.add_argument("--p-ab", type=float, help="probability a manipulator trade is abnormally priced")
    s.add_argument("--price0", type=float, help="initial price (default 13)")
    s.add_argument("--drift", type=float, help="daily log-return drift (default 0.005)")
    s.add_argument("--volatility", type=float, help="daily log-return sd (default 0.03)")
    s.add_argument("--seed", type=int, help="random seed (default 0)")
    s.add_argument("--dup-fraction", type=float, default=0.0,
                   help="plant this fraction of duplicate/orphan rows and write the expected "
                        "cleaning report")
    s.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _read_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"config {path} must hold a JSON object")
    return data


def _outdir(args, file_cfg: dict) -> str:
    return args.outdir or os.environ.get(OUTDIR_ENV) or file_cfg.get("outdir") or "out"


def run_config_from_args(args) -> RunConfig:
    file_cfg = _read_config_file(args.config) if args.config else {}
    known = {f.name for f in fields(RunConfig)}
    unknown = set(file_cfg) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    values = dict(file_cfg)
    for key in ("start", "end"):
        if isinstance(values.get(key), str):
            values[key] = date.fromisoformat(values[key])
    for key in known:
        v = getattr(args, key, None)
        if v is not None and key != "outdir":
            values[key] = v
    values["outdir"] = _outdir(args, file_cfg)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def market_config_from_args(args) -> synth.MarketConfig:
    values = _read_config_file(args.config) if args.config else {}
    for f in fields(synth.MarketConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v.isoformat() if isinstance(v, date) else v
    try:
        return synth.MarketConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


COMMANDS = {"clean": cmd_clean, "analyze": cmd_analyze, "graph-stats": cmd_graph_stats,
            "svd": cmd_svd, "fit": cmd_fit, "motifs": cmd_motifs}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            mcfg = market_config_from_args(args)
            cmd_synth(mcfg, _outdir(args, {}), args.dup_fraction)
        else:
            COMMANDS[args.command](run_config_from_args(args))
    except (InputError, ingest.IngestError, synth.ScheduleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

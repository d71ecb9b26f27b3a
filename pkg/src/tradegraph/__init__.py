"""Transaction-graph analysis of exchange trade logs.

Cleans raw trade logs, labels trades against reference prices, builds
account graphs, decomposes their daily time series and looks for
manipulation patterns among the accounts driving that decomposition.
"""
from .classify import TxLabel, load_reference
from .graph import WeightedDigraph, build_graph, clustering_coefficient
from .ingest import CleaningReport, clean, parse_records
from .powerlaw import fit_power_law
from .pricefit import correlations, fit_price
from .temporal import build_snapshot_series, compute_svd, normalize_matrix
from .motif import core_accounts, detect_motifs
from .synth import MarketConfig, generate_market

__version__ = "0.1.0"

__all__ = [
    "TxLabel", "load_reference", "WeightedDigraph", "build_graph", "clustering_coefficient",
    "CleaningReport", "clean", "parse_records", "fit_power_law", "correlations", "fit_price",
    "build_snapshot_series", "compute_svd", "normalize_matrix", "core_accounts",
    "detect_motifs", "MarketConfig", "generate_market",
]

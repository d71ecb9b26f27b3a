"""Relating base-network contributions to the exchange price.

The log price B(t) = log_1000 P(t) is approximated by
c0 + sum_i c_i u_i(t), with c0 the mean of B and c_i = (B - c0) . u_i.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy import stats

from .temporal import SvdResult

METHODS = ("pearson", "spearman", "kendall")


def log_price(prices) -> np.ndarray:
    p = np.asarray(prices, dtype=float)
    if np.any(~(p > 0)):
        raise ValueError("prices must be positive")
    return np.log(p) / np.log(1000.0)


def correlate(x, y, method: str = "pearson") -> float:
    """Pearson, Spearman (average ranks) or Kendall tau-b."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length series of length >= 2")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("correlation undefined for a constant series")
    if method == "pearson":
        r = stats.pearsonr(x, y).statistic
    elif method == "spearman":
        r = stats.spearmanr(x, y).statistic
    elif method == "kendall":
        r = stats.kendalltau(x, y, variant="b").statistic
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.clip(r, -1.0, 1.0))


@dataclass
class CorrelationTriple:
    pearson: float
    spearman: float
    kendall: float

    def to_dict(self):
        return {"pearson": self.pearson, "spearman": self.spearman, "kendall": self.kendall}


def correlations(x, y) -> CorrelationTriple:
    return CorrelationTriple(*(correlate(x, y, m) for m in METHODS))


@dataclass
class PriceFit:
    c0: float
    coefficients: np.ndarray
    fitted: np.ndarray

    @property
    def N(self) -> int:
        return len(self.coefficients)


def fit_price(B, svd: SvdResult, N: int, days: list[date] | None = None) -> PriceFit:
    B = np.asarray(B, dtype=float)
    T = svd.U.shape[0]
    if len(B) != T:
        raise ValueError(f"price series has {len(B)} days, decomposition has {T}")
    if days is not None and svd.days and list(days) != list(svd.days):
        raise ValueError("price days do not match the decomposition's days")
    if not 0 <= N <= T:
        raise ValueError(f"N={N} outside 0..{T}")
    c0 = float(B.mean())
    Un = svd.U[:, :N]
    c = Un.T @ (B - c0)
    return PriceFit(c0, c, c0 + Un @ c)


def evaluate_fit(fit: PriceFit, B) -> CorrelationTriple:
    return correlations(fit.fitted, B)


def align_prices(days: list[date], closes: list[float | None]) -> np.ndarray:
    """Boolean mask of days that have a close price."""
    return np.array([c is not None for c in closes], dtype=bool)


def fit_report(svd: SvdResult, B, N: int) -> dict:
    """First-base-network and fitted-N correlations plus coefficients."""
    fit = fit_price(B, svd, N)
    u1 = svd.U[:, 0]
    return {
        "N": N,
        "c0": fit.c0,
        "c": fit.coefficients.tolist(),
        "first_base_network": _safe_triple(u1, B),
        "fitted": _safe_triple(fit.fitted, B),
    }


def _safe_triple(x, y):
    out = {}
    for m in METHODS:
        try:
            out[m] = correlate(x, y, m)
        except ValueError:
            out[m] = None
    return out


def fitted_series_csv(days, B, fitted) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["day", "B", "fitted"])
    for d, b, f in zip(days, B, fitted):
        w.writerow([d.isoformat(), repr(float(b)), repr(float(f))])
    return buf.getvalue()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)

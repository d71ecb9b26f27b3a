"""Discrete power-law fitting for degree samples.

``alpha`` is the maximum-likelihood exponent of p(x) = x^-alpha / zeta(alpha, x_min)
on the tail x >= x_min; x_min is the candidate minimising the Kolmogorov-Smirnov
distance between the tail's empirical CDF and the fitted CDF.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

ALPHA_BOUNDS = (1.0 + 1e-6, 20.0)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: int
    n_tail: int
    ks: float

    @property
    def sigma(self) -> float:
        """Asymptotic standard error of alpha."""
        return (self.alpha - 1.0) / np.sqrt(self.n_tail)


def approx_alpha(tail: np.ndarray, x_min: int) -> float:
    """Closed-form discrete approximation 1 + n / sum ln(x / (x_min - 1/2))."""
    return 1.0 + len(tail) / np.sum(np.log(tail / (x_min - 0.5)))


def log_likelihood(alpha: float, n: int, sum_log: float, x_min: int) -> float:
    return -n * np.log(zeta(alpha, x_min)) - alpha * sum_log


def mle_alpha(n: int, sum_log: float, x_min: int) -> float:
    res = minimize_scalar(lambda a: -log_likelihood(a, n, sum_log, x_min),
                          bounds=ALPHA_BOUNDS, method="bounded",
                          options={"xatol": 1e-7})
    return float(res.x)


def ks_distance(values: np.ndarray, counts: np.ndarray, alpha: float, x_min: int) -> float:
    """KS distance on the tail; ``values`` are sorted unique tail values."""
    emp = np.cumsum(counts) / counts.sum()
    model = 1.0 - zeta(alpha, values + 1.0) / zeta(alpha, x_min)
    return float(np.max(np.abs(emp - model)))


def fit_power_law(sample, x_min: int | None = None, min_tail: int = 10) -> PowerLawFit:
    """Fit a discrete power law to positive integer data (e.g. degrees).

    Values below 1 are ignored. When ``x_min`` is not given every distinct
    value leaving at least ``min_tail`` observations in the tail is tried.
    """
    x = np.asarray(sample, dtype=float)
    x = x[x >= 1]
    if len(x) < 10:
        raise ValueError("need at least 10 samples >= 1")
    if np.any(x != np.floor(x)):
        raise ValueError("sample must be integer valued")
    values, counts = np.unique(x, return_counts=True)
    if len(values) < 2:
        raise ValueError("degenerate sample: all values identical")

    # suffix sums: tail size and sum of logs for each candidate x_min
    tail_n = np.cumsum(counts[::-1])[::-1]
    tail_log = np.cumsum((counts * np.log(values))[::-1])[::-1]

    if x_min is not None:
        idx = np.searchsorted(values, x_min)
        if idx >= len(values) or tail_n[idx] < 2:
            raise ValueError(f"fewer than 2 samples >= x_min={x_min}")
        candidates = [idx]
    else:
        # the tail must keep two distinct values or alpha is unidentifiable
        candidates = [i for i in range(len(values) - 1) if tail_n[i] >= min_tail]
        if not candidates:
            candidates = [0]

    best = None
    for i in candidates:
        xm = int(values[i]) if x_min is None else int(x_min)
        n = int(tail_n[i])
        alpha = mle_alpha(n, float(tail_log[i]), xm)
        d = ks_distance(values[i:], counts[i:], alpha, xm)
        if best is None or d < best.ks:
            best = PowerLawFit(alpha=alpha, x_min=xm, n_tail=n, ks=d)
    return best


def sample_discrete_power_law(alpha: float, n: int, x_min: int = 1, rng=None,
                              x_max: int = 10**6) -> np.ndarray:
    """Exact inverse-CDF sampler on {x_min, ..., x_max - 1} plus an
    approximate continuous tail beyond ``x_max``."""
    rng = np.random.default_rng(rng)
    support = np.arange(x_min, x_max, dtype=float)
    pmf = support ** -alpha / zeta(alpha, x_min)
    cdf = np.cumsum(pmf)
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    out = np.empty(n)
    inside = idx < len(support)
    out[inside] = support[idx[inside]]
    # rare: beyond x_max, continuous approximation of the survival function
    k = ~inside
    if k.any():
        surv = 1.0 - u[k]
        out[k] = np.floor((x_max - 0.5) * (surv / (1.0 - cdf[-1])) ** (-1.0 / (alpha - 1.0)) + 0.5)
    return out.astype(np.int64)

"""Synthetic exchange logs with planted manipulators.

Normal accounts trade random pairs at prices inside the day's range.
Manipulators only trade among themselves, executing a schedule of planted
motifs (self-loops, one-way and two-way channels, cycles, stars). Each
manipulator trade is priced outside the abnormality band with probability
``p_ab``. The daily manipulation intensity m(t) feeds the price walk, so the
manipulators' daily activity carries information about the price level.
"""
from __future__ import annotations

import calendar
import json
from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .classify import DayPrice, ReferencePriceTable, TxLabel, write_reference
from .ingest import CleaningReport, RawRecord, write_raw_records

PATTERN_SIZES = {"SelfLoop": (1, 1), "Unidirection": (2, 2), "Bidirection": (2, 2),
                 "Triangle": (3, 3), "Polygon": (4, None), "Star": (4, None)}
_CAMPAIGN_CYCLE = ("SelfLoop", "Unidirection", "Bidirection", "Triangle", "Polygon", "Star")
_COUNTRIES = [("US", "NC"), ("US", "CA"), ("US", "PA"), ("CA", "QC"), ("JP", "13"),
              ("GB", ""), ("DE", "")]


class ScheduleError(ValueError):
    pass


@dataclass
class PlantedMotif:
    """A motif executed on one day. ``accounts`` are manipulator indices in
    configs and account ids in ground truth."""
    day: int
    pattern: str
    accounts: tuple[int, ...]
    count: int = 20

    def edges(self) -> list[tuple[int, int]]:
        a = self.accounts
        if self.pattern == "SelfLoop":
            return [(a[0], a[0])]
        if self.pattern == "Unidirection":
            return [(a[0], a[1])]
        if self.pattern == "Bidirection":
            return [(a[0], a[1]), (a[1], a[0])]
        if self.pattern in ("Triangle", "Polygon"):
            return list(zip(a, a[1:] + a[:1]))
        if self.pattern == "Star":
            return [(a[0], leaf) for leaf in a[1:]]
        raise ScheduleError(f"unknown pattern {self.pattern!r}")


@dataclass
class MarketConfig:
    days: int = 300
    start: date = date(2012, 12, 1)
    n_normal: int = 300
    n_manipulator: int = 60
    normal_rate: float = 40.0          # mean normal trades per day
    intensity: list[float] | None = None   # m(t); piecewise constant per phase if None
    n_phases: int = 12
    price0: float = 13.0
    drift: float = 0.005               # daily log-return drift
    volatility: float = 0.03           # daily log-return noise sd
    kappa: float = 0.8                 # intensity signal, in units of volatility
    spread: float = 0.01               # intraday log-price sd of normal trades
    p_ab: float = 0.3
    motif_schedule: list[PlantedMotif] | None = None
    motifs_per_phase: int = 12
    motif_min_count: int = 10
    motif_rate: float = 8.0            # extra Poisson trades per edge at m(t) = 1
    currency: str = "USD"
    seed: int = 0

    def validate(self) -> None:
        if self.days <= 0 or self.n_normal < 2 or self.n_manipulator < 0:
            raise ValueError("days > 0, n_normal >= 2 and n_manipulator >= 0 required")
        if not 0.0 <= self.p_ab <= 1.0:
            raise ValueError("p_ab must lie in [0, 1]")
        if self.intensity is not None:
            if len(self.intensity) != self.days:
                raise ValueError("intensity schedule needs one value per day")
            if any(not 0.0 <= m <= 1.0 for m in self.intensity):
                raise ValueError("intensity values must lie in [0, 1]")
        if self.n_phases < 1:
            raise ValueError("n_phases must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MarketConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if isinstance(d.get("start"), str):
            d["start"] = date.fromisoformat(d["start"])
        if d.get("motif_schedule") is not None:
            d["motif_schedule"] = [PlantedMotif(m["day"], m["pattern"], tuple(m["accounts"]),
                                                m.get("count", 20))
                                   for m in d["motif_schedule"]]
        return cls(**d)


@dataclass
class GroundTruth:
    manipulators: list[int]
    normal_accounts: list[int]
    motifs: list[PlantedMotif]          # accounts are real ids here
    motif_edge_counts: dict[tuple[int, tuple[int, int]], int]   # (day, edge) -> trades
    prices: dict[date, DayPrice]
    intensity: list[float]
    labels: dict[str, str] = field(default_factory=dict)

    def motifs_on(self, day: int) -> list[PlantedMotif]:
        return [m for m in self.motifs if m.day == day]

    def to_dict(self, start: date) -> dict:
        return {
            "manipulators": self.manipulators,
            "normal_accounts": self.normal_accounts,
            "motifs": [{"day": (start + timedelta(days=m.day)).isoformat(),
                        "pattern": m.pattern, "accounts": list(m.accounts),
                        "edges": [[s, b, self.motif_edge_counts[(m.day, (s, b))]]
                                  for s, b in m.edges()]}
                       for m in self.motifs],
            "prices": {d.isoformat(): {"close": p.close, "high": p.high, "low": p.low}
                       for d, p in sorted(self.prices.items())},
            "intensity": self.intensity,
            "labels": self.labels,
        }


@dataclass
class Market:
    config: MarketConfig
    records: list[RawRecord]
    reference: ReferencePriceTable
    truth: GroundTruth

    def write(self, directory) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"trades": d / "trades.csv", "reference": d / "reference.csv",
                 "truth": d / "ground_truth.json", "config": d / "market_config.json"}
        with open(paths["trades"], "w", newline="", encoding="utf-8") as fh:
            write_raw_records(self.records, fh)
        with open(paths["reference"], "w", newline="", encoding="utf-8") as fh:
            write_reference(self.reference, fh)
        paths["truth"].write_text(json.dumps(self.truth.to_dict(self.config.start), indent=1) + "\n")
        paths["config"].write_text(json.dumps(self.config.to_dict(), indent=2, default=_jsonable) + "\n")
        return paths


def _jsonable(o):
    if isinstance(o, PlantedMotif):
        return asdict(o)
    raise TypeError(type(o).__name__)


def _intensity(cfg: MarketConfig, rng) -> np.ndarray:
    if cfg.intensity is not None:
        return np.asarray(cfg.intensity, dtype=float)
    levels = rng.uniform(0.0, 1.0, cfg.n_phases)
    return levels[_phase_of_day(cfg)]


def _phase_of_day(cfg: MarketConfig) -> np.ndarray:
    return (np.arange(cfg.days) * cfg.n_phases) // cfg.days


def _auto_schedule(cfg: MarketConfig, rng) -> list[PlantedMotif]:
    """One campaign of account-disjoint motifs per phase, repeated every day
    of the phase. Manipulators unused so far are drawn first."""
    if cfg.n_manipulator == 0:
        return []
    phase = _phase_of_day(cfg)
    used: set[int] = set()
    out = []
    for p in range(cfg.n_phases):
        fresh = [i for i in rng.permutation(cfg.n_manipulator) if i not in used]
        rest = [i for i in rng.permutation(cfg.n_manipulator) if i in used]
        pool = fresh + rest
        campaign = []
        for j in range(cfg.motifs_per_phase):
            pattern = _CAMPAIGN_CYCLE[j % len(_CAMPAIGN_CYCLE)]
            lo, _ = PATTERN_SIZES[pattern]
            size = lo + int(rng.integers(0, 2)) if pattern in ("Polygon", "Star") else lo
            if pattern == "Star":
                size += 1
            if len(pool) < size:
                break
            members, pool = pool[:size], pool[size:]
            used.update(members)
            campaign.append((pattern, tuple(int(i) for i in members)))
        for day in np.flatnonzero(phase == p):
            for pattern, members in campaign:
                out.append(PlantedMotif(int(day), pattern, members, cfg.motif_min_count))
    return out


def _check_schedule(cfg: MarketConfig, schedule: list[PlantedMotif]) -> None:
    per_day: dict[int, set[int]] = {}
    for m in schedule:
        if m.pattern not in PATTERN_SIZES:
            raise ScheduleError(f"unknown pattern {m.pattern!r}")
        lo, hi = PATTERN_SIZES[m.pattern]
        n = len(m.accounts)
        if n < lo or (hi is not None and n > hi) or len(set(m.accounts)) != n:
            raise ScheduleError(f"{m.pattern} needs {lo}{'+' if hi is None else ''} distinct accounts")
        if not 0 <= m.day < cfg.days:
            raise ScheduleError(f"motif day {m.day} outside 0..{cfg.days - 1}")
        if any(not 0 <= a < cfg.n_manipulator for a in m.accounts):
            raise ScheduleError(f"motif references manipulator outside 0..{cfg.n_manipulator - 1}")
        if m.count < 1:
            raise ScheduleError("motif count must be >= 1")
        seen = per_day.setdefault(m.day, set())
        if seen & set(m.accounts):
            raise ScheduleError(f"motifs on day {m.day} share accounts")
        seen.update(m.accounts)


class _Emitter:
    """Collects paired rows, keeping (time, user, side, bitcoins) keys unique."""

    def __init__(self, currency, rng):
        self.currency = currency
        self.rng = rng
        self.keys: set = set()
        self.seq = 0
        self.trades: list[tuple] = []
        self.labels: dict[str, str] = {}
        self.locale: dict[int, tuple[str, str]] = {}

    def emit(self, ts: datetime, seller: int, buyer: int, btc: float, price: float, label: str):
        btc = round(btc, 8)
        while (ts, seller, "sell", btc) in self.keys or (ts, buyer, "buy", btc) in self.keys:
            btc = round(btc + 1e-8, 8)
        self.keys.add((ts, seller, "sell", btc))
        self.keys.add((ts, buyer, "buy", btc))
        money = round(float(price) * btc, 8)
        self.seq += 1
        trade_id = f"{calendar.timegm(ts.timetuple())}{self.seq:07d}"
        self.trades.append((ts, trade_id, seller, buyer, btc, money))
        self.labels[trade_id] = label
        return money / btc

    def where(self, acct):
        loc = self.locale.get(acct)
        if loc is None:
            loc = self.locale[acct] = _COUNTRIES[int(self.rng.integers(len(_COUNTRIES)))]
        return loc

    def records(self) -> list[RawRecord]:
        out = []
        for ts, trade_id, seller, buyer, btc, money in sorted(self.trades):
            for user, side in ((buyer, "buy"), (seller, "sell")):
                country, state = self.where(user)
                out.append(RawRecord(trade_id, ts, user, side, self.currency, btc, money,
                                     country, state or None))
        return out


def generate_market(cfg: MarketConfig) -> Market:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    ids = rng.choice(np.arange(1, 1_000_000), cfg.n_normal + cfg.n_manipulator, replace=False)
    normal = [int(a) for a in ids[:cfg.n_normal]]
    manip = [int(a) for a in ids[cfg.n_normal:]]

    m = _intensity(cfg, rng)
    schedule = cfg.motif_schedule if cfg.motif_schedule is not None else _auto_schedule(cfg, rng)
    _check_schedule(cfg, schedule)

    sd = m.std()
    z = (m - m.mean()) / sd if sd > 0 else np.zeros_like(m)
    steps = cfg.drift + cfg.volatility * (cfg.kappa * z + rng.standard_normal(cfg.days))
    close = cfg.price0 * np.exp(np.cumsum(steps))

    by_day: dict[int, list[PlantedMotif]] = {}
    for mot in schedule:
        by_day.setdefault(mot.day, []).append(mot)

    em = _Emitter(cfg.currency, rng)
    prices: dict[date, DayPrice] = {}
    truth_motifs: list[PlantedMotif] = []
    edge_counts: dict = {}
    for t in range(cfg.days):
        day = cfg.start + timedelta(days=t)
        midnight = datetime(day.year, day.month, day.day)

        def stamp():
            return midnight + timedelta(seconds=int(rng.integers(0, 86400)))

        unit = []
        n_trades = max(2, int(rng.poisson(cfg.normal_rate)))
        for _ in range(n_trades):
            s, b = rng.choice(cfg.n_normal, 2, replace=False)
            btc = max(1e-4, float(rng.lognormal(np.log(0.5), 1.0)))
            price = close[t] * np.exp(cfg.spread * rng.standard_normal())
            unit.append(em.emit(stamp(), normal[s], normal[b], btc, price, TxLabel.NMT.value))
        high, low = max(unit), min(unit)
        prices[day] = DayPrice(high, low, float(close[t]))

        for mot in by_day.get(t, []):
            real = tuple(manip[i] for i in mot.accounts)
            truth_motifs.append(PlantedMotif(t, mot.pattern, real, mot.count))
            for s, b in PlantedMotif(t, mot.pattern, real).edges():
                count = mot.count + int(rng.poisson(cfg.motif_rate * m[t]))
                edge_counts[(t, (s, b))] = count
                for _ in range(count):
                    btc = float(rng.uniform(0.01, 0.5))
                    if rng.random() < cfg.p_ab:
                        if rng.random() < 0.5:
                            price, label = 1.5 * high * rng.uniform(1.5, 4.0), TxLabel.EHT
                        else:
                            price, label = 0.5 * low * rng.uniform(0.1, 0.6), TxLabel.ELT
                    else:
                        price, label = rng.uniform(low, high), TxLabel.NMT
                    em.emit(stamp(), s, b, btc, price, label.value)

    ref = ReferencePriceTable(prices, currency=cfg.currency)
    truth = GroundTruth(sorted(manip), sorted(normal), truth_motifs, edge_counts,
                        prices, m.tolist(), em.labels)
    return Market(cfg, em.records(), ref, truth)


def plant_duplicates(records: list[RawRecord], fraction: float, seed=0
                     ) -> tuple[list[RawRecord], CleaningReport]:
    """Corrupt a clean paired log with duplicated rows, duplicated whole
    transactions and orphan rows; return the log and the report cleaning
    must produce.

    About half the planted rows are exact row copies, a quarter are copies of
    both rows of a trade, and a quarter are orphans (a row copied under a
    fresh trade id one second later) that only the single-row pass removes.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    groups: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        groups.setdefault(r.trade_id, []).append(i)
    if any(len(v) != 2 for v in groups.values()):
        raise ValueError("input log must be clean: exactly two rows per trade id")
    n_tx = len(groups)
    base = CleaningReport(rows_in=len(records), rows_after_field_dedup=len(records),
                          rows_after_single_row_removal=len(records),
                          complete_transactions=n_tx, transactions_after_dedup=n_tx)
    budget = int(round(fraction * len(records)))
    if budget == 0 or not records:
        return list(records), base

    rng = np.random.default_rng(seed)
    n_orphan = budget // 4
    n_tx_dup = (budget // 4) // 2
    n_row_dup = budget - n_orphan - 2 * n_tx_dup

    keys = {(r.date, r.user_id, r.side, r.bitcoins) for r in records}
    trade_ids = list(groups)
    extra: list[RawRecord] = []
    for i in rng.integers(0, len(records), n_row_dup):
        extra.append(records[int(i)])
    for j in rng.choice(len(trade_ids), n_tx_dup, replace=n_tx_dup > len(trade_ids)):
        extra.extend(records[i] for i in groups[trade_ids[int(j)]])
    for k, i in enumerate(rng.integers(0, len(records), n_orphan)):
        r = records[int(i)]
        shift = 1
        while (r.date + timedelta(seconds=shift), r.user_id, r.side, r.bitcoins) in keys:
            shift += 1
        ts = r.date + timedelta(seconds=shift)
        keys.add((ts, r.user_id, r.side, r.bitcoins))
        extra.append(RawRecord(f"orphan{k:07d}", ts, r.user_id, r.side, r.currency,
                               r.bitcoins, r.money, r.country, r.state))

    # splice copies in at random positions
    pos = rng.integers(0, len(records) + 1, len(extra))
    order = np.argsort(pos, kind="stable")
    out: list[RawRecord] = []
    cursor = 0
    for o in order:
        p = int(pos[o])
        out.extend(records[cursor:p])
        cursor = p
        out.append(extra[o])
    out.extend(records[cursor:])

    expected = CleaningReport(
        rows_in=len(out),
        rows_after_field_dedup=len(records) + n_orphan,
        dropped_duplicate_rows=n_row_dup + 2 * n_tx_dup,
        dropped_single_rows=n_orphan,
        rows_after_single_row_removal=len(records),
        complete_transactions=n_tx,
        transactions_after_dedup=n_tx,
    )
    return out, expected

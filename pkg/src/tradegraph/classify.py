"""Price-band labelling of transactions and account categorisation."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from datetime import date
from enum import Enum
from typing import Iterable

from .ingest import CompleteTransaction, IngestError, TransactionTuple, _open_text, parse_timestamp

HIGH_MULTIPLIER = 1.5
LOW_MULTIPLIER = 0.5


class TxLabel(str, Enum):
    EHT = "EHT"
    ELT = "ELT"
    NMT = "NMT"
    UNCLASSIFIED = "UNCLASSIFIED"

    def __str__(self):
        return self.value


class ReferenceLoadError(IngestError):
    pass


@dataclass(frozen=True)
class DayPrice:
    high: float
    low: float
    close: float | None = None


@dataclass
class ReferencePriceTable:
    days: dict[date, DayPrice] = field(default_factory=dict)
    currency: str = "USD"

    def __len__(self):
        return len(self.days)

    def __contains__(self, day):
        return day in self.days

    def __getitem__(self, day) -> DayPrice:
        return self.days[day]

    def get(self, day):
        return self.days.get(day)

    def close_series(self, days):
        """Close prices for ``days``; ``None`` where missing."""
        return [p.close if (p := self.days.get(d)) is not None else None for d in days]


def _optional_price(text):
    text = text.strip()
    if not text or set(text) <= {"."}:
        return None
    return float(text)


def load_reference(source, currency: str = "USD") -> ReferencePriceTable:
    """Load a ``date,open,high,low,close`` CSV. ``open`` is ignored and
    ``close`` may be blank. A bad row aborts the load with its line number."""
    fh = _open_text(source)
    table = ReferencePriceTable(currency=currency.upper())
    try:
        reader = csv.reader(fh)
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            line = reader.line_num
            if row[0].strip().lower() == "date":
                continue
            if len(row) < 4:
                raise ReferenceLoadError(f"line {line}: expected date,open,high,low,close")
            try:
                day = parse_timestamp(row[0]).date()
                high = float(row[2])
                low = float(row[3])
                close = _optional_price(row[4]) if len(row) > 4 else None
            except ValueError as exc:
                raise ReferenceLoadError(f"line {line}: {exc}") from None
            if high <= 0 or low <= 0 or (close is not None and close <= 0):
                raise ReferenceLoadError(f"line {line}: non-positive price")
            if low > high:
                raise ReferenceLoadError(f"line {line}: low {low} exceeds high {high}")
            if day in table.days:
                raise ReferenceLoadError(f"line {line}: duplicate day {day}")
            table.days[day] = DayPrice(high, low, close)
    finally:
        if fh is not source:
            fh.close()
    return table


def write_reference(table: ReferencePriceTable, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["date", "open", "high", "low", "close"])
    for day in sorted(table.days):
        p = table.days[day]
        w.writerow([day.isoformat(), "", repr(p.high), repr(p.low),
                    "" if p.close is None else repr(p.close)])


def label_transaction(tx: CompleteTransaction, ref: ReferencePriceTable,
                      high: float = HIGH_MULTIPLIER, low: float = LOW_MULTIPLIER) -> TxLabel:
    """EHT above ``high * H_t``, ELT below ``low * L_t``, NMT in between
    (bounds inclusive). Other currencies and days without a reference
    entry are UNCLASSIFIED."""
    if tx.currency != ref.currency:
        return TxLabel.UNCLASSIFIED
    p = ref.get(tx.day)
    if p is None:
        return TxLabel.UNCLASSIFIED
    price = tx.unit_price
    if price > high * p.high:
        return TxLabel.EHT
    if price < low * p.low:
        return TxLabel.ELT
    return TxLabel.NMT


def make_labeler(ref: ReferencePriceTable, high: float = HIGH_MULTIPLIER,
                 low: float = LOW_MULTIPLIER):
    return lambda tx: label_transaction(tx, ref, high, low)


@dataclass
class AccountFlags:
    is_eha: bool = False
    is_ela: bool = False

    @property
    def is_aba(self) -> bool:
        return self.is_eha or self.is_ela

    @property
    def is_nma(self) -> bool:
        return not self.is_aba


def categorize_accounts(tuples: Iterable[TransactionTuple]) -> dict[int, AccountFlags]:
    flags: dict[int, AccountFlags] = {}
    for t in tuples:
        for acct in (t.seller, t.buyer):
            f = flags.get(acct)
            if f is None:
                f = flags[acct] = AccountFlags()
            if t.label == TxLabel.EHT:
                f.is_eha = True
            elif t.label == TxLabel.ELT:
                f.is_ela = True
    return flags


CATEGORIES = ("EHA", "ELA", "ABA", "NMA", "All")

_MEMBERSHIP = {
    "EHA": lambda f: f.is_eha,
    "ELA": lambda f: f.is_ela,
    "ABA": lambda f: f.is_aba,
    "NMA": lambda f: f.is_nma,
    "All": lambda f: True,
}

# graph name -> account category it is built over
GRAPH_CATEGORY = {"EHG": "EHA", "ELG": "ELA", "ABG": "ABA", "NMG": "NMA", "CG": "All"}


def in_category(flags: AccountFlags, category: str) -> bool:
    return _MEMBERSHIP[category](flags)


def account_filter(categories: dict[int, AccountFlags], graph_or_category: str):
    """Predicate over account ids selecting members of a category (``"EHA"``)
    or of the node set of a graph (``"EHG"``)."""
    cat = GRAPH_CATEGORY.get(graph_or_category, graph_or_category)
    member = _MEMBERSHIP[cat]
    if cat == "All":
        return lambda acct: True
    members = frozenset(a for a, f in categories.items() if member(f))
    return members.__contains__


@dataclass
class CategoryRow:
    accounts: int = 0
    tx: int = 0
    abt: int = 0
    eht: int = 0
    elt: int = 0


@dataclass
class CategoryStats:
    rows: dict[str, CategoryRow] = field(default_factory=dict)

    def __getitem__(self, category) -> CategoryRow:
        return self.rows[category]

    def to_dict(self) -> dict:
        return {k: asdict(v) for k, v in self.rows.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Category", "#accounts", "#Tx", "#ABT", "#EHT", "#ELT"])
        for name, r in self.rows.items():
            w.writerow([name, r.accounts, r.tx, r.abt, r.eht, r.elt])
        return buf.getvalue()


def summarize(tuples: Iterable[TransactionTuple], categories: dict[int, AccountFlags]) -> CategoryStats:
    """Per-category account and transaction counts.

    A transaction counts toward a category only when both its endpoints
    belong to it; the All row counts everything.
    """
    stats = CategoryStats({c: CategoryRow() for c in CATEGORIES})
    for f in categories.values():
        for c in CATEGORIES:
            if _MEMBERSHIP[c](f):
                stats.rows[c].accounts += 1
    for t in tuples:
        fs, fb = categories[t.seller], categories[t.buyer]
        for c in CATEGORIES:
            member = _MEMBERSHIP[c]
            if not (member(fs) and member(fb)):
                continue
            row = stats.rows[c]
            row.tx += 1
            if t.label == TxLabel.EHT:
                row.eht += 1
                row.abt += 1
            elif t.label == TxLabel.ELT:
                row.elt += 1
                row.abt += 1
    all_row = stats.rows["All"]
    assert all_row.abt == all_row.eht + all_row.elt
    return stats

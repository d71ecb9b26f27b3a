"""Trade-log ingestion and cleaning.

The raw log has one row per side of a trade (columns Trade_Id, Date, User_Id,
Type, Currency, Bitcoins, Money, User_Country, User_State). Cleaning runs in
three passes: drop rows duplicated on (date, user, side, bitcoins), pair the
surviving buy and sell rows on trade id, then drop duplicated complete
transactions.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime
from os import PathLike
from typing import Callable, Iterable, Sequence

COLUMNS = ["Trade_Id", "Date", "User_Id", "Type", "Currency", "Bitcoins",
           "Money", "User_Country", "User_State"]
CLEAN_COLUMNS = ["trade_id", "timestamp", "seller", "buyer", "currency",
                 "bitcoins", "money"]

# buy/sell rows of one trade must agree on amounts to this relative tolerance
PAIR_RTOL = 1e-8

_TS_RE = re.compile(
    r"^\s*(\d{4})[/-](\d{1,2})[/-](\d{1,2})(?:[ T]+(\d{1,2}):(\d{1,2})(?::(\d{1,2})(?:\.\d+)?)?)?\s*$"
)


class IngestError(Exception):
    """Raised when a source cannot be read at all."""


@dataclass(frozen=True, slots=True)
class RawRecord:
    trade_id: str
    date: datetime
    user_id: int
    side: str
    currency: str
    bitcoins: float
    money: float
    country: str | None = None
    state: str | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class ParseError:
    line: int
    field: str | None
    reason: str


@dataclass(frozen=True, slots=True)
class CompleteTransaction:
    trade_id: str
    timestamp: datetime
    seller: int
    buyer: int
    currency: str
    bitcoins: float
    money: float

    @property
    def unit_price(self) -> float:
        return self.money / self.bitcoins

    @property
    def day(self):
        return self.timestamp.date()


@dataclass(frozen=True, slots=True)
class TransactionTuple:
    """One trade as (seller, buyer, volume, time, label)."""
    seller: int
    buyer: int
    volume: float
    time: datetime
    label: str

    @property
    def day(self):
        return self.time.date()


@dataclass
class CleaningReport:
    rows_in: int = 0
    dropped_malformed: int = 0
    dropped_nonpositive: int = 0
    rows_after_field_dedup: int = 0
    dropped_duplicate_rows: int = 0
    dropped_single_rows: int = 0
    multi_row_trades: int = 0
    dropped_multi_rows: int = 0
    inconsistent_trades: int = 0
    dropped_inconsistent_rows: int = 0
    rows_after_single_row_removal: int = 0
    complete_transactions: int = 0
    dropped_duplicate_transactions: int = 0
    transactions_after_dedup: int = 0

    def rows_accounted(self) -> int:
        """Surviving rows plus every row-level drop; equals ``rows_in``."""
        return (2 * self.transactions_after_dedup
                + self.dropped_malformed
                + self.dropped_nonpositive
                + self.dropped_duplicate_rows
                + self.dropped_single_rows
                + self.dropped_multi_rows
                + self.dropped_inconsistent_rows
                + 2 * self.dropped_duplicate_transactions)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def parse_timestamp(text: str) -> datetime:
    """Parse ``2013/10/1 0:28:58`` style stamps (zero padding optional)."""
    m = _TS_RE.match(text)
    if m is None:
        raise ValueError(f"unrecognised timestamp {text!r}")
    y, mo, d, h, mi, s = m.groups()
    return datetime(int(y), int(mo), int(d), int(h or 0), int(mi or 0), int(s or 0))


def _open_text(source):
    if isinstance(source, (str, PathLike)):
        try:
            return open(source, newline="", encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read {source}: {exc}") from exc
    if isinstance(source, bytes):
        try:
            return io.StringIO(source.decode("utf-8"), newline="")
        except UnicodeDecodeError as exc:
            raise IngestError(f"source is not UTF-8: {exc}") from exc
    if isinstance(source, io.TextIOBase):
        return source
    if hasattr(source, "read"):
        return io.TextIOWrapper(source, encoding="utf-8", newline="")
    raise IngestError(f"unsupported source type {type(source).__name__}")


def _finite_float(name, text):
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"{name}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"{name}: not finite: {text!r}")
    return value


def _parse_row(row: list[str], lineno: int) -> RawRecord:
    fields = [c.strip() for c in row]
    if not 7 <= len(fields) <= 9:
        raise _RowError(None, f"expected 7-9 columns, got {len(fields)}")
    fields += [""] * (9 - len(fields))
    trade_id, date, user, side, currency, btc, money, country, state = fields
    if not trade_id:
        raise _RowError("Trade_Id", "empty trade id")
    try:
        ts = parse_timestamp(date)
    except ValueError as exc:
        raise _RowError("Date", str(exc)) from None
    try:
        user_id = int(user)
    except ValueError:
        raise _RowError("User_Id", f"not an integer: {user!r}") from None
    side = side.lower()
    if side not in ("buy", "sell"):
        raise _RowError("Type", f"expected buy/sell, got {side!r}")
    if not currency:
        raise _RowError("Currency", "empty currency")
    try:
        bitcoins = _finite_float("Bitcoins", btc)
    except ValueError as exc:
        raise _RowError("Bitcoins", str(exc)) from None
    try:
        amount = _finite_float("Money", money)
    except ValueError as exc:
        raise _RowError("Money", str(exc)) from None
    return RawRecord(trade_id, ts, user_id, side, currency.upper(), bitcoins,
                     amount, country or None, state or None, lineno)


class _RowError(ValueError):
    def __init__(self, field, reason):
        super().__init__(reason)
        self.field = field
        self.reason = reason


def parse_records(source, *, delimiter: str = ",", header: bool | None = None
                  ) -> tuple[list[RawRecord], list[ParseError]]:
    """Parse a raw trade log.

    ``header=None`` auto-detects a leading ``Trade_Id`` header row. Blank
    lines are skipped; every other malformed line is reported, never dropped
    silently.
    """
    records: list[RawRecord] = []
    errors: list[ParseError] = []
    fh = _open_text(source)
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        first = True
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if first:
                first = False
                is_header = row[0].strip().lower() == "trade_id" if header is None else header
                if is_header:
                    continue
            try:
                records.append(_parse_row(row, lineno))
            except _RowError as exc:
                errors.append(ParseError(lineno, exc.field, exc.reason))
    except (UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"unreadable source: {exc}") from exc
    finally:
        if fh is source:
            pass
        elif isinstance(fh, io.TextIOWrapper) and fh.buffer is source:
            fh.detach()   # leave the caller's binary stream open
        else:
            fh.close()
    return records, errors


def dedup_rows(records: Iterable[RawRecord]) -> list[RawRecord]:
    """Keep the first row per (date, user_id, side, bitcoins) key."""
    seen = set()
    out = []
    for r in records:
        key = (r.date, r.user_id, r.side, r.bitcoins)
        if key in seen:
            continue
        seen.add(key)
        out.append(r)
    return out


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= PAIR_RTOL * max(abs(a), abs(b))


def pair_transactions(records: Iterable[RawRecord]
                      ) -> tuple[list[CompleteTransaction], dict[str, int]]:
    """Join buy and sell rows sharing a trade id.

    Returns the transactions (in order of each trade id's first row) and drop
    counters: ``single_rows``, ``multi_row_trades``, ``multi_rows``,
    ``inconsistent_trades``, ``inconsistent_rows``.
    """
    groups: dict[str, list[RawRecord]] = defaultdict(list)
    for r in records:
        groups[r.trade_id].append(r)

    counts = dict(single_rows=0, multi_row_trades=0, multi_rows=0,
                  inconsistent_trades=0, inconsistent_rows=0)
    out = []
    for trade_id, rows in groups.items():
        if len(rows) == 1:
            counts["single_rows"] += 1
            continue
        if len(rows) > 2:
            counts["multi_row_trades"] += 1
            counts["multi_rows"] += len(rows)
            continue
        a, b = rows
        if {a.side, b.side} != {"buy", "sell"}:
            ok = False
        else:
            ok = (a.date == b.date and a.currency == b.currency
                  and _close(a.bitcoins, b.bitcoins) and _close(a.money, b.money))
        if not ok:
            counts["inconsistent_trades"] += 1
            counts["inconsistent_rows"] += 2
            continue
        buy, sell = (a, b) if a.side == "buy" else (b, a)
        out.append(CompleteTransaction(trade_id, sell.date, sell.user_id,
                                       buy.user_id, sell.currency,
                                       sell.bitcoins, sell.money))
    return out, counts


def dedup_complete(transactions: Iterable[CompleteTransaction]) -> list[CompleteTransaction]:
    seen = set()
    out = []
    for tx in transactions:
        key = (tx.trade_id, tx.timestamp, tx.seller, tx.buyer, tx.bitcoins, tx.money)
        if key in seen:
            continue
        seen.add(key)
        out.append(tx)
    return out


def clean_records(records: Sequence[RawRecord], n_malformed: int = 0
                  ) -> tuple[list[CompleteTransaction], CleaningReport]:
    """Run the full cleaning pipeline over parsed records."""
    report = CleaningReport(rows_in=len(records) + n_malformed,
                            dropped_malformed=n_malformed)
    positive = [r for r in records if r.bitcoins > 0 and r.money > 0]
    report.dropped_nonpositive = len(records) - len(positive)

    rows = dedup_rows(positive)
    report.rows_after_field_dedup = len(rows)
    report.dropped_duplicate_rows = len(positive) - len(rows)

    txs, counts = pair_transactions(rows)
    report.dropped_single_rows = counts["single_rows"]
    report.multi_row_trades = counts["multi_row_trades"]
    report.dropped_multi_rows = counts["multi_rows"]
    report.inconsistent_trades = counts["inconsistent_trades"]
    report.dropped_inconsistent_rows = counts["inconsistent_rows"]
    report.complete_transactions = len(txs)
    report.rows_after_single_row_removal = 2 * len(txs)

    final = dedup_complete(txs)
    report.dropped_duplicate_transactions = len(txs) - len(final)
    report.transactions_after_dedup = len(final)
    return final, report


def clean(source, **parse_options) -> tuple[list[CompleteTransaction], CleaningReport, list[ParseError]]:
    records, errors = parse_records(source, **parse_options)
    txs, report = clean_records(records, n_malformed=len(errors))
    return txs, report, errors


def to_tuples(transactions: Iterable[CompleteTransaction],
              labeler: Callable[[CompleteTransaction], str]) -> list[TransactionTuple]:
    return [TransactionTuple(tx.seller, tx.buyer, tx.bitcoins, tx.timestamp, labeler(tx))
            for tx in transactions]


# -- persisted cleaned transactions -------------------------------------------

def write_transactions(transactions: Iterable[CompleteTransaction], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CLEAN_COLUMNS)
        for tx in transactions:
            w.writerow([tx.trade_id, tx.timestamp.strftime("%Y-%m-%d %H:%M:%S"),
                        tx.seller, tx.buyer, tx.currency, repr(tx.bitcoins),
                        repr(tx.money)])


def read_transactions(path) -> list[CompleteTransaction]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CLEAN_COLUMNS:
            raise IngestError(f"{path}: not a cleaned-transactions file")
        for row in reader:
            trade_id, ts, seller, buyer, currency, btc, money = row
            out.append(CompleteTransaction(trade_id, datetime.fromisoformat(ts),
                                           int(seller), int(buyer), currency,
                                           float(btc), float(money)))
    return out


def write_raw_records(records: Iterable[RawRecord], fh, header: bool = True) -> None:
    """Write records back out in the raw log schema."""
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(COLUMNS)
    for r in records:
        d = r.date
        w.writerow([r.trade_id, f"{d.year}/{d.month}/{d.day} {d.hour}:{d.minute:02d}:{d.second:02d}",
                    r.user_id, r.side, r.currency, repr(float(r.bitcoins)), repr(float(r.money)),
                    r.country or "", r.state or ""])

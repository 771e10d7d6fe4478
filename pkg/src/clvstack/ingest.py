"""Parse, clean and aggregate retail transaction logs.

Input is a CSV with the Online Retail II header::

    Invoice,StockCode,Description,Quantity,InvoiceDate,Price,Customer ID,Country

Money is kept as :class:`decimal.Decimal` end to end so revenue totals are
exact to the cent.
"""
from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import IO, Iterable, Mapping

from .exceptions import EmptyInputError, SchemaError

DEFAULT_COLUMNS = {
    "invoice": "Invoice",
    "stock_code": "StockCode",
    "description": "Description",
    "quantity": "Quantity",
    "invoice_datetime": "InvoiceDate",
    "unit_price": "Price",
    "customer_id": "Customer ID",
    "country": "Country",
}

DATETIME_FORMAT = "%d-%m-%Y %H:%M"


@dataclass(frozen=True, slots=True)
class RawRecord:
    invoice: str
    stock_code: str
    description: str | None
    quantity: int
    invoice_datetime: datetime
    unit_price: Decimal
    customer_id: int | None
    country: str


@dataclass(frozen=True, slots=True)
class Transaction:
    invoice: str
    stock_code: str
    description: str | None
    quantity: int
    invoice_datetime: datetime
    unit_price: Decimal
    customer_id: int
    country: str
    revenue: Decimal


@dataclass(frozen=True)
class ParseError:
    row: int
    reason: str


@dataclass
class CleanReport:
    cancellation: int = 0
    nonpositive_price: int = 0
    nonpositive_quantity: int = 0
    missing_customer: int = 0
    unparseable: int = 0
    retained: int = 0

    @property
    def removed(self) -> int:
        return (
            self.cancellation
            + self.nonpositive_price
            + self.nonpositive_quantity
            + self.missing_customer
            + self.unparseable
        )

    @property
    def input_rows(self) -> int:
        return self.removed + self.retained

    def to_dict(self) -> dict:
        return {
            "input_rows": self.input_rows,
            "retained": self.retained,
            "removed": {
                "cancellation": self.cancellation,
                "nonpositive_price": self.nonpositive_price,
                "nonpositive_quantity": self.nonpositive_quantity,
                "missing_customer": self.missing_customer,
                "unparseable": self.unparseable,
            },
        }


def parse_datetime(text: str) -> datetime:
    """Day-first ``01-12-2009 07:45``, falling back to ISO 8601."""
    text = text.strip()
    try:
        return datetime.strptime(text, DATETIME_FORMAT)
    except ValueError:
        return datetime.fromisoformat(text)


def _parse_int(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        # Spreadsheet exports often write integer columns as "13085.0".
        value = Decimal(text)
        if not value.is_finite() or value != value.to_integral_value():
            raise ValueError(f"not an integer: {text!r}")
        return int(value)


def _parse_decimal(text: str) -> Decimal:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"not a number: {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"not a finite number: {text!r}")
    return value


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8", errors="replace"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8", errors="replace", newline=""), False


def parse_transactions(
    source, columns: Mapping[str, str] = DEFAULT_COLUMNS
) -> tuple[list[RawRecord], list[ParseError]]:
    """Read every data row of a transaction CSV.

    ``source`` is a path or a binary/text stream. Malformed rows are reported
    as :class:`ParseError` entries (1-based data row numbers) instead of being
    dropped; a header that lacks a required column raises :class:`SchemaError`.
    """
    stream, owned = _open_text(source)
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None:
            raise SchemaError("input has no header row")
        header = [h.strip().lstrip("\ufeff") for h in header]
        missing = [name for name in columns.values() if name not in header]
        if missing:
            raise SchemaError(f"header is missing required column(s): {', '.join(missing)}")
        pos = {field_: header.index(name) for field_, name in columns.items()}
        width = len(header)

        records: list[RawRecord] = []
        errors: list[ParseError] = []
        dt_cache: dict[str, datetime] = {}
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) < width:
                errors.append(ParseError(row_no, f"expected {width} fields, got {len(row)}"))
                continue
            try:
                stamp = row[pos["invoice_datetime"]]
                when = dt_cache.get(stamp)
                if when is None:
                    when = dt_cache[stamp] = parse_datetime(stamp)
                customer = row[pos["customer_id"]].strip()
                description = row[pos["description"]]
                records.append(
                    RawRecord(
                        invoice=row[pos["invoice"]].strip(),
                        stock_code=row[pos["stock_code"]].strip(),
                        description=description if description else None,
                        quantity=_parse_int(row[pos["quantity"]]),
                        invoice_datetime=when,
                        unit_price=_parse_decimal(row[pos["unit_price"]]),
                        customer_id=_parse_int(customer) if customer else None,
                        country=row[pos["country"]].strip(),
                    )
                )
            except (ValueError, ArithmeticError) as exc:
                errors.append(ParseError(row_no, str(exc)))
        return records, errors
    finally:
        if owned:
            stream.close()


def is_cancellation(invoice: str) -> bool:
    return invoice[:1] in ("C", "c")


def clean(records: Iterable[RawRecord], parse_errors: Iterable[ParseError] = ()) -> tuple[list[Transaction], CleanReport]:
    """Drop cancellations, non-positive quantities or prices, and anonymous rows.

    Each removed row is counted under the first rule it breaks, in the order
    cancellation, quantity, price, customer. Rows that never parsed are
    counted as ``unparseable`` when their errors are passed in.
    """
    report = CleanReport(unparseable=sum(1 for _ in parse_errors))
    kept: list[Transaction] = []
    for r in records:
        if is_cancellation(r.invoice):
            report.cancellation += 1
        elif r.quantity <= 0:
            report.nonpositive_quantity += 1
        elif r.unit_price <= 0:
            report.nonpositive_price += 1
        elif r.customer_id is None:
            report.missing_customer += 1
        else:
            kept.append(
                Transaction(
                    r.invoice,
                    r.stock_code,
                    r.description,
                    r.quantity,
                    r.invoice_datetime,
                    r.unit_price,
                    r.customer_id,
                    r.country,
                    revenue=r.quantity * r.unit_price,
                )
            )
    report.retained = len(kept)
    return kept, report


CLEANED_HEADER = [*DEFAULT_COLUMNS.values(), "Revenue"]


def write_transactions(transactions: Iterable[Transaction], dest) -> None:
    """Write cleaned transactions as CSV with an added Revenue column."""
    stream, owned = (open(dest, "w", newline="", encoding="utf-8"), True) if isinstance(dest, (str, Path)) else (dest, False)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CLEANED_HEADER)
        for t in transactions:
            writer.writerow(
                [
                    t.invoice,
                    t.stock_code,
                    t.description or "",
                    t.quantity,
                    t.invoice_datetime.strftime(DATETIME_FORMAT),
                    t.unit_price,
                    t.customer_id,
                    t.country,
                    t.revenue,
                ]
            )
    finally:
        if owned:
            stream.close()


@dataclass(frozen=True)
class PurchaseEvent:
    invoice: str
    timestamp: datetime
    revenue: Decimal


@dataclass(frozen=True)
class CustomerAccount:
    customer_id: int
    events: tuple[PurchaseEvent, ...]

    @property
    def invoice_count(self) -> int:
        return len(self.events)

    @property
    def revenue(self) -> Decimal:
        return sum((e.revenue for e in self.events), Decimal(0))


@dataclass(frozen=True)
class CustomerLedger:
    """Per-customer purchase history, one event per distinct invoice."""

    accounts: dict[int, CustomerAccount] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.accounts)

    def __iter__(self):
        return iter(self.accounts.values())

    def __getitem__(self, customer_id: int) -> CustomerAccount:
        return self.accounts[customer_id]

    def date_range(self) -> tuple[datetime, datetime]:
        if not self.accounts:
            raise EmptyInputError("ledger has no customers")
        return (
            min(a.events[0].timestamp for a in self),
            max(a.events[-1].timestamp for a in self),
        )


def build_ledger(transactions: Iterable[Transaction]) -> CustomerLedger:
    """Group line items into invoices and invoices into customers.

    An invoice's timestamp is its earliest line; events are sorted by
    ``(timestamp, invoice)``.
    """
    invoices: dict[int, dict[str, list]] = {}
    for t in transactions:
        per_customer = invoices.setdefault(t.customer_id, {})
        slot = per_customer.get(t.invoice)
        if slot is None:
            per_customer[t.invoice] = [t.invoice_datetime, t.revenue]
        else:
            if t.invoice_datetime < slot[0]:
                slot[0] = t.invoice_datetime
            slot[1] += t.revenue
    accounts = {}
    for cid in sorted(invoices):
        events = sorted(
            (PurchaseEvent(inv, when, rev) for inv, (when, rev) in invoices[cid].items()),
            key=lambda e: (e.timestamp, e.invoice),
        )
        accounts[cid] = CustomerAccount(cid, tuple(events))
    return CustomerLedger(accounts)


@dataclass(frozen=True)
class DatasetStats:
    n_customers: int
    n_transactions: int
    date_min: datetime
    date_max: datetime
    mean_customer_revenue: Decimal
    median_customer_revenue: Decimal

    def to_dict(self) -> dict:
        return {
            "n_customers": self.n_customers,
            "n_transactions": self.n_transactions,
            "date_min": self.date_min.isoformat(),
            "date_max": self.date_max.isoformat(),
            "mean_customer_revenue": float(self.mean_customer_revenue),
            "median_customer_revenue": float(self.median_customer_revenue),
        }


def dataset_stats(ledger: CustomerLedger, transactions) -> DatasetStats:
    """Customer count, line-item count, date span and per-customer revenue summary."""
    if len(ledger) == 0:
        raise EmptyInputError("dataset_stats needs at least one customer")
    revenues = [a.revenue for a in ledger]
    date_min, date_max = ledger.date_range()
    return DatasetStats(
        n_customers=len(ledger),
        n_transactions=len(transactions),
        date_min=date_min,
        date_max=date_max,
        mean_customer_revenue=sum(revenues, Decimal(0)) / len(revenues),
        median_customer_revenue=statistics.median(revenues),
    )

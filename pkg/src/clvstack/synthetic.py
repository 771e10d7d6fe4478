"""Seeded generator of Online Retail II-shaped transaction logs.

Customers purchase as a Poisson process whose rate is drawn per customer and
which stops at a random dropout time, so recency and frequency genuinely carry
signal about the next quarter's purchases. A fraction of rows is made dirty
(cancellations, zero prices, anonymous lines) to exercise cleaning.
"""
from __future__ import annotations

import csv
from datetime import datetime, timedelta
from decimal import Decimal
from pathlib import Path

import numpy as np

from .ingest import DATETIME_FORMAT, DEFAULT_COLUMNS

START = datetime(2009, 12, 1, 7, 45)
END = datetime(2011, 12, 9, 12, 50)


def generate_rows(n_customers: int = 200, seed: int = 0, start: datetime = START, end: datetime = END) -> list[list[str]]:
    rng = np.random.default_rng(seed)
    span_days = (end - start).total_seconds() / 86400.0
    rows: list[tuple] = []
    invoice_no = 489434
    products = [(f"{20000 + i}", f"PRODUCT {i}", Decimal(int(rng.integers(25, 1500))) / 100) for i in range(60)]

    for c in range(n_customers):
        customer_id = 12346 + c
        rate = rng.gamma(shape=0.9, scale=0.08)  # invoices per day
        joined = rng.uniform(0.0, span_days * 0.8)
        lifetime = rng.exponential(span_days * 0.7)
        stop = min(span_days, joined + lifetime)
        t = joined
        times = [t]
        while True:
            t += rng.exponential(1.0 / max(rate, 1e-3))
            if t >= stop:
                break
            times.append(t)
        for day in times:
            when = start + timedelta(minutes=int(day * 1440))
            if when > end:
                continue
            invoice_no += 1
            n_lines = int(rng.integers(1, 6))
            cancelled = rng.random() < 0.02
            for _ in range(n_lines):
                code, desc, price = products[int(rng.integers(0, len(products)))]
                qty = int(rng.integers(1, 25))
                if cancelled:
                    rows.append((f"C{invoice_no}", code, desc, -qty, when, price, customer_id))
                    continue
                roll = rng.random()
                if roll < 0.01:
                    price = Decimal("0.00")
                cid = None if roll > 0.985 else customer_id
                rows.append((str(invoice_no), code, desc, qty, when, price, cid))

    rows.sort(key=lambda r: (r[4], r[0]))
    return [
        [inv, code, desc, str(qty), when.strftime(DATETIME_FORMAT), str(price), "" if cid is None else str(cid), "United Kingdom"]
        for inv, code, desc, qty, when, price, cid in rows
    ]


def write_csv(path: str | Path, n_customers: int = 200, seed: int = 0) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(DEFAULT_COLUMNS.values()))
        writer.writerows(generate_rows(n_customers, seed))
    return path

"""Recency/frequency predictors and a future-purchase-count target per customer.

History before a cutoff (the observation window) yields the predictors; the
number of distinct invoices in the following horizon is the target. Both
windows are half-open: observation ``[start, cutoff)``, target
``[cutoff, cutoff + horizon)``.
"""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from datetime import datetime, time, timedelta
from pathlib import Path
from typing import Iterable

import numpy as np

from .exceptions import ClvStackError, EmptyInputError, WindowError
from .ingest import CustomerLedger, PurchaseEvent

FEATURE_NAMES = ("latetime", "earlytime", "freq", "freq_3m")
CSV_HEADER = ("customer_id", *FEATURE_NAMES, "target")


@dataclass(frozen=True)
class WindowSpec:
    cutoff: datetime
    target_horizon_days: int = 90
    recent_window_days: int = 90

    def __post_init__(self):
        if self.target_horizon_days <= 0 or self.recent_window_days <= 0:
            raise WindowError("window lengths must be positive")

    @property
    def target_end(self) -> datetime:
        return self.cutoff + timedelta(days=self.target_horizon_days)

    @property
    def recent_start(self) -> datetime:
        return self.cutoff - timedelta(days=self.recent_window_days)


@dataclass(frozen=True)
class FeatureRow:
    customer_id: int
    latetime: int
    earlytime: int
    freq: int
    freq_3m: int
    target: int


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    customer_ids: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __len__(self) -> int:
        return self.X.shape[0]

    def take(self, rows) -> "DesignMatrix":
        return DesignMatrix(self.X[rows], self.y[rows], self.customer_ids[rows], self.feature_names)


def default_cutoff(ledger: CustomerLedger, target_horizon_days: int = 90) -> datetime:
    """Start of the final ``target_horizon_days`` whole days of data.

    The target window then ends at midnight after the last recorded purchase,
    so that purchase is inside it.
    """
    _, last = ledger.date_range()
    end = datetime.combine(last.date() + timedelta(days=1), time())
    return end - timedelta(days=target_horizon_days)


Windows = dict[int, list[PurchaseEvent]]


def split_windows(ledger: CustomerLedger, spec: WindowSpec) -> tuple[Windows, Windows]:
    first, last = ledger.date_range()
    if not first <= spec.cutoff <= last:
        raise WindowError(f"cutoff {spec.cutoff} is outside the data range [{first}, {last}]")
    observation: Windows = {}
    target: Windows = {}
    end = spec.target_end
    for account in ledger:
        obs = [e for e in account.events if e.timestamp < spec.cutoff]
        tgt = [e for e in account.events if spec.cutoff <= e.timestamp < end]
        if obs:
            observation[account.customer_id] = obs
        if tgt:
            target[account.customer_id] = tgt
    return observation, target


def featurize(observation: Windows, target: Windows, spec: WindowSpec) -> list[FeatureRow]:
    """One row per customer with at least one invoice before the cutoff."""
    rows = []
    recent_start = spec.recent_start
    for cid, events in observation.items():
        last = max(e.timestamp for e in events)
        first = min(e.timestamp for e in events)
        rows.append(
            FeatureRow(
                customer_id=cid,
                latetime=(spec.cutoff - last).days,
                earlytime=(spec.cutoff - first).days,
                freq=len({e.invoice for e in events}),
                freq_3m=len({e.invoice for e in events if e.timestamp >= recent_start}),
                target=len({e.invoice for e in target.get(cid, ())}),
            )
        )
    return rows


def build_features(ledger: CustomerLedger, spec: WindowSpec) -> list[FeatureRow]:
    rows = featurize(*split_windows(ledger, spec), spec)
    if not rows:
        raise EmptyInputError(f"no customer purchased before the cutoff {spec.cutoff}")
    return rows


def to_matrix(rows: Iterable[FeatureRow]) -> DesignMatrix:
    rows = sorted(rows, key=lambda r: r.customer_id)
    if not rows:
        raise EmptyInputError("to_matrix needs at least one feature row")
    X = np.array([[r.latetime, r.earlytime, r.freq, r.freq_3m] for r in rows], dtype=np.float64)
    y = np.array([r.target for r in rows], dtype=np.float64)
    ids = np.array([r.customer_id for r in rows], dtype=np.int64)
    return DesignMatrix(X, y, ids)


def write_features_csv(rows: Iterable[FeatureRow], dest) -> None:
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in sorted(rows, key=lambda r: r.customer_id):
            writer.writerow(astuple(row))


def read_features_csv(path: str | Path) -> list[FeatureRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
            raise ClvStackError(f"feature CSV header must be {','.join(CSV_HEADER)}, got {reader.fieldnames}")
        try:
            return [FeatureRow(**{f.name: int(rec[f.name]) for f in fields(FeatureRow)}) for rec in reader]
        except (TypeError, ValueError) as exc:
            raise ClvStackError(f"malformed feature CSV: {exc}") from exc

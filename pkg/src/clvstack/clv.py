"""Aggregate analytic customer lifetime value.

CLV = average_sales * purchase_frequency / churn * profit_margin, with
average_sales = sales / orders, purchase_frequency = orders / customers,
retention = repeat customers / customers and churn = 1 - retention.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from decimal import Decimal
from fractions import Fraction

from .exceptions import ChurnZeroError, ClvStackError, EmptyInputError


@dataclass(frozen=True)
class ClvInputs:
    total_sales: float | Decimal
    total_order_number: int
    total_unique_customers: int
    customers_with_multiple_orders: int
    profit_margin: float


@dataclass(frozen=True)
class ClvBreakdown:
    average_sales: float
    purchase_frequency: float
    retention_rate: float
    churn: float
    clv: float

    def to_dict(self) -> dict:
        return asdict(self)


def compute_clv(inputs: ClvInputs) -> ClvBreakdown:
    if inputs.total_order_number <= 0:
        raise ClvStackError("total_order_number must be positive")
    if inputs.total_unique_customers <= 0:
        raise ClvStackError("total_unique_customers must be positive")
    if not 0 <= inputs.customers_with_multiple_orders <= inputs.total_unique_customers:
        raise ClvStackError("customers_with_multiple_orders must lie in [0, total_unique_customers]")

    # Exact rational arithmetic; outputs are rounded to float once.
    sales = Fraction(inputs.total_sales)
    orders = Fraction(inputs.total_order_number)
    customers = Fraction(inputs.total_unique_customers)
    average_sales = sales / orders
    purchase_frequency = orders / customers
    retention_rate = Fraction(inputs.customers_with_multiple_orders) / customers
    churn = 1 - retention_rate
    if churn == 0:
        raise ChurnZeroError(
            "CLV = average_sales * purchase_frequency / churn is undefined: "
            "every customer placed more than one order, so churn is 0"
        )
    clv = (average_sales * purchase_frequency / churn) * Fraction(inputs.profit_margin)
    return ClvBreakdown(
        float(average_sales), float(purchase_frequency), float(retention_rate), float(churn), float(clv)
    )


def clv_from_ledger(ledger, profit_margin: float) -> ClvBreakdown:
    """Aggregate CLV over every customer in a :class:`~clvstack.ingest.CustomerLedger`."""
    if len(ledger) == 0:
        raise EmptyInputError("ledger has no customers")
    accounts = ledger.accounts.values()
    inputs = ClvInputs(
        total_sales=sum((a.revenue for a in accounts), Decimal(0)),
        total_order_number=sum(a.invoice_count for a in accounts),
        total_unique_customers=len(ledger),
        customers_with_multiple_orders=sum(1 for a in accounts if a.invoice_count > 1),
        profit_margin=profit_margin,
    )
    return compute_clv(inputs)

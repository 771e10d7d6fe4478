from datetime import datetime
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clvstack.clv import ClvInputs, clv_from_ledger, compute_clv
from clvstack.exceptions import ChurnZeroError, ClvStackError, EmptyInputError
from clvstack.ingest import Transaction, build_ledger


def test_hand_case():
    out = compute_clv(ClvInputs(100, 10, 5, 4, 0.05))
    assert (out.average_sales, out.purchase_frequency, out.retention_rate, out.churn) == (10, 2, 0.8, 0.2)
    assert out.clv == 5.0


def test_zero_margin():
    a = compute_clv(ClvInputs(100, 10, 5, 4, 0.05))
    b = compute_clv(ClvInputs(100, 10, 5, 4, 0.0))
    assert b.clv == 0
    assert (a.average_sales, a.purchase_frequency, a.retention_rate, a.churn) == (
        b.average_sales,
        b.purchase_frequency,
        b.retention_rate,
        b.churn,
    )


def test_all_repeat_is_singular():
    with pytest.raises(ChurnZeroError, match="churn"):
        compute_clv(ClvInputs(100, 10, 5, 5, 0.05))


@pytest.mark.parametrize("orders,customers", [(0, 5), (10, 0)])
def test_domain_errors(orders, customers):
    with pytest.raises(ClvStackError):
        compute_clv(ClvInputs(100, orders, customers, 0, 0.1))


inputs = st.builds(
    lambda sales, orders, customers, frac, margin: ClvInputs(
        sales, orders, customers, min(customers - 1, int(frac * customers)), margin
    ),
    st.one_of(st.just(0.0), st.floats(1e-6, 1e7)),
    st.integers(1, 10**6),
    st.integers(1, 10**5),
    st.floats(0, 1),
    st.one_of(st.just(0.0), st.floats(1e-6, 1)),
)


@given(inputs)
def test_margin_linearity_and_churn_identity(i):
    a = compute_clv(i)
    b = compute_clv(ClvInputs(i.total_sales, i.total_order_number, i.total_unique_customers, i.customers_with_multiple_orders, 2 * i.profit_margin))
    assert b.clv == 2 * a.clv
    assert a.churn + a.retention_rate == 1
    assert 0 <= a.retention_rate <= 1


@given(inputs, st.integers(1, 1000))
def test_sales_scale_covariance(i, c):
    a = compute_clv(i)
    b = compute_clv(ClvInputs(i.total_sales * c, i.total_order_number, i.total_unique_customers, i.customers_with_multiple_orders, i.profit_margin))
    assert (b.purchase_frequency, b.retention_rate, b.churn) == (a.purchase_frequency, a.retention_rate, a.churn)
    assert b.average_sales == pytest.approx(c * a.average_sales, rel=1e-15)
    assert b.clv == pytest.approx(c * a.clv, rel=1e-15)


def _tx(cid, invoice, revenue):
    return Transaction(invoice, "S", None, 1, datetime(2010, 1, 1), Decimal(revenue), cid, "UK", Decimal(revenue))


def test_from_ledger_single_invoice():
    out = clv_from_ledger(build_ledger([_tx(1, "a", "10")]), 0.1)
    assert (out.retention_rate, out.churn) == (0, 1)
    assert out.clv == pytest.approx(1.0, rel=1e-15)


def test_from_ledger_repeat_customer_is_singular():
    with pytest.raises(ChurnZeroError):
        clv_from_ledger(build_ledger([_tx(1, "a", "10"), _tx(1, "b", "5")]), 0.1)


def test_from_ledger_empty():
    with pytest.raises(EmptyInputError):
        clv_from_ledger(build_ledger([]), 0.1)


def test_from_ledger_aggregates():
    ledger = build_ledger([_tx(1, "a", "10"), _tx(1, "b", "30"), _tx(2, "c", "20"), _tx(3, "d", "40")])
    out = clv_from_ledger(ledger, 1)
    # sales 100, orders 4, customers 3, one repeater
    assert out.average_sales == 25
    assert out.purchase_frequency == pytest.approx(4 / 3)
    assert out.retention_rate == pytest.approx(1 / 3)
    assert out.clv == pytest.approx(25 * (4 / 3) / (2 / 3))

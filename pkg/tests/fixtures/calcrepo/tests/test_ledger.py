import pytest

from calckit.ledger import Ledger


def test_empty_balance():
    assert Ledger().balance() == 0


def test_balance_sums_entries():
    book = Ledger()
    book.add_entry("rent", 100)
    book.add_entry("food", 25)
    assert book.balance() == 125


def test_balance_goes_negative():
    book = Ledger()
    book.add_entry("refund", -40)
    book.add_entry("fee", 15)
    assert book.balance() == -25


def test_balance_after_many():
    book = Ledger()
    for i in range(10):
        book.add_entry("tick", i)
    assert book.balance() == 45


def test_add_entry_requires_category():
    with pytest.raises(ValueError):
        Ledger().add_entry("", 10)


def test_totals_by_category():
    book = Ledger()
    book.add_entry("rent", 100)
    book.add_entry("food", 20)
    book.add_entry("food", 5)
    assert book.totals_by_category() == {"rent": 100, "food": 25}


def test_apply_interest():
    book = Ledger()
    book.add_entry("savings", 100)
    book.apply_interest(0.05)
    assert book.balance() == 105.0


def test_apply_interest_rounds_to_cents():
    book = Ledger()
    book.add_entry("savings", 10.333)
    book.apply_interest(0.1)
    assert book.entries == [("savings", 11.37)]

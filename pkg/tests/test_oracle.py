"""Dual-feed aggregation rules, feed store semantics, trace loading."""

from __future__ import annotations

import random

import pytest

from perpamm.errors import DeviationTooHigh, DomainError, FeedError, StaleFeed, TraceError
from perpamm.money import to_units
from perpamm.oracle import (
    FeedStore,
    OracleConfig,
    PricePoint,
    TradeSide,
    aggregate,
    load_trace,
)

CFG = OracleConfig(max_age=60,
                   min_acceptable_deviation=to_units("0.1"),
                   threshold_deviation=to_units(1))


def pp(price, t, feed="primary"):
    return PricePoint(feed, to_units(price), t)


# -- Feed store ---------------------------------------------------------------

def test_first_insert_and_newer_wins():
    store = FeedStore()
    store.ingest(pp(2000, 10, "A"))
    assert store.get("A").price == to_units(2000)
    store.ingest(pp(2010, 20, "A"))
    assert store.get("A").price == to_units(2010)


def test_older_point_is_ignored():
    store = FeedStore()
    store.ingest(pp(2010, 20, "A"))
    store.ingest(pp(1990, 15, "A"))
    assert store.get("A").price == to_units(2010)
    assert store.get("A").publish_time == 20


def test_non_positive_price_rejected():
    with pytest.raises(FeedError):
        PricePoint("A", 0, 10)
    with pytest.raises(FeedError):
        PricePoint("A", -5, 10)


def test_oracle_config_validation():
    with pytest.raises(DomainError):
        OracleConfig(max_age=0, min_acceptable_deviation=0, threshold_deviation=1)
    with pytest.raises(DomainError):
        OracleConfig(max_age=60, min_acceptable_deviation=5, threshold_deviation=5)


# -- Aggregation rule set ----------------------------------------------------------

def test_within_min_band_uses_primary():
    # d = 100*1/2000 = 0.05% <= 0.1%
    assert aggregate(pp(2000, 100), pp(2001, 100, "s"), TradeSide.BUY, CFG, 100) \
        == to_units(2000)


def test_in_band_buy_takes_higher_price():
    # d = 0.5%: above min, below threshold
    assert aggregate(pp(2000, 100), pp(2010, 100, "s"), TradeSide.BUY, CFG, 100) \
        == to_units(2010)


def test_in_band_sell_takes_lower_price():
    assert aggregate(pp(2000, 100), pp(2010, 100, "s"), TradeSide.SELL, CFG, 100) \
        == to_units(2000)


def test_above_threshold_reverts():
    with pytest.raises(DeviationTooHigh):
        aggregate(pp(2000, 100), pp(2100, 100, "s"), TradeSide.BUY, CFG, 100)
    with pytest.raises(DeviationTooHigh):
        aggregate(pp(2000, 100), pp(2100, 100, "s"), TradeSide.SELL, CFG, 100)


def test_stale_feed_rejected():
    with pytest.raises(StaleFeed):
        aggregate(pp(2000, 40), pp(2000, 100, "s"), TradeSide.BUY, CFG, 101)
    with pytest.raises(StaleFeed):
        aggregate(pp(2000, 100), pp(2000, 40, "s"), TradeSide.BUY, CFG, 101)


def test_staleness_checked_before_deviation():
    # deviation above threshold AND one stale feed: staleness dominates
    with pytest.raises(StaleFeed):
        aggregate(pp(2000, 0), pp(2100, 100, "s"), TradeSide.BUY, CFG, 100)


def test_boundary_equal_to_min_uses_primary():
    # d = 100*2/2000 = 0.1% exactly
    assert aggregate(pp(2000, 100), pp(2002, 100, "s"), TradeSide.BUY, CFG, 100) \
        == to_units(2000)
    # primary is privileged even when it is the higher price
    assert aggregate(pp(2002, 100), pp(2000, 100, "s"), TradeSide.SELL, CFG, 100) \
        == to_units(2002)


def test_boundary_equal_to_threshold_is_accepted():
    # d = 100*20/2000 = 1% exactly: still in-band, least favorable applies
    assert aggregate(pp(2000, 100), pp(2020, 100, "s"), TradeSide.BUY, CFG, 100) \
        == to_units(2020)
    assert aggregate(pp(2000, 100), pp(2020, 100, "s"), TradeSide.SELL, CFG, 100) \
        == to_units(2000)


def test_age_boundary_is_inclusive():
    # exactly max_age old passes; one second older fails
    assert aggregate(pp(2000, 40), pp(2000, 40, "s"), TradeSide.BUY, CFG, 100) \
        == to_units(2000)
    with pytest.raises(StaleFeed):
        aggregate(pp(2000, 39), pp(2000, 40, "s"), TradeSide.BUY, CFG, 100)


def test_side_duality_and_in_band_symmetry():
    rng = random.Random(11)
    for _ in range(2000):
        p1 = rng.randint(1_000_000, 5_000_000_000)
        p2 = p1 + rng.randint(-p1 // 50, p1 // 50)
        if p2 <= 0:
            continue
        a = PricePoint("p", p1, 100)
        b = PricePoint("s", p2, 100)
        try:
            buy = aggregate(a, b, TradeSide.BUY, CFG, 100)
            sell = aggregate(a, b, TradeSide.SELL, CFG, 100)
        except DeviationTooHigh:
            continue
        assert buy >= sell
        assert buy in (p1, p2) and sell in (p1, p2)
        # in the least-favorable band the result ignores feed order
        scaled = 100 * abs(p1 - p2) * 10**6
        if scaled > CFG.min_acceptable_deviation * min(p1, p2):
            assert aggregate(b, a, TradeSide.BUY, CFG, 100) == buy
            assert aggregate(b, a, TradeSide.SELL, CFG, 100) == sell


# -- Trace loading --------------------------------------------------------------------

def test_load_trace_roundtrip(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text(
        "timestamp,feed_id,price\n"
        "10,primary,2000\n"
        "10,secondary,2000.5\n"
        "20,primary,1999.25\n")
    points = load_trace(str(path))
    assert [(p.publish_time, p.feed_id, p.price) for p in points] == [
        (10, "primary", to_units(2000)),
        (10, "secondary", to_units("2000.5")),
        (20, "primary", to_units("1999.25")),
    ]


def test_load_trace_rejects_bad_header(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("time,feed,price\n10,primary,2000\n")
    with pytest.raises(TraceError):
        load_trace(str(path))


def test_load_trace_rejects_decreasing_timestamps(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("timestamp,feed_id,price\n20,primary,2000\n10,primary,2001\n")
    with pytest.raises(TraceError):
        load_trace(str(path))


def test_load_trace_rejects_bad_price(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("timestamp,feed_id,price\n10,primary,abc\n")
    with pytest.raises(TraceError):
        load_trace(str(path))
    path.write_text("timestamp,feed_id,price\n10,primary,-3\n")
    with pytest.raises(TraceError):
        load_trace(str(path))

"""Shared builders for engine-level tests."""

from __future__ import annotations

import pytest

from perpamm.curves import BaseFeeParams, DeviationParams, DynamicFeeParams
from perpamm.engine import Engine, MarketConfig
from perpamm.money import to_units
from perpamm.oracle import OracleConfig, PricePoint

BIG = to_units(10**9)


def make_config(**overrides) -> MarketConfig:
    """Frictionless default market: zero fees, zero deviation, loose caps."""
    fields = dict(
        market_id="ETH-USD",
        deviation=DeviationParams(0.0, 0.0),
        base_fee=BaseFeeParams(0.0, 0.0),
        dynamic_fee=DynamicFeeParams(0.0, 0.0125),
        max_open_interest=BIG,
        max_leverage=to_units(10),
        max_exposure=BIG,
        maintenance_margin_rate=to_units(1),
        open_close_fee_rate=0,
        liquidation_fee_rate=0,
        oracle=OracleConfig(max_age=3600,
                            min_acceptable_deviation=to_units("0.1"),
                            threshold_deviation=to_units(1)),
    )
    fields.update(overrides)
    return MarketConfig(**fields)


def make_engine(config: MarketConfig | None = None, **kw) -> Engine:
    return Engine(config if config is not None else make_config(), **kw)


def feed_both(engine: Engine, price_units: int, t: int) -> None:
    """Publish the same price on both feeds at time t."""
    engine.feeds.ingest(PricePoint("primary", price_units, t))
    engine.feeds.ingest(PricePoint("secondary", price_units, t))


@pytest.fixture
def engine() -> Engine:
    return make_engine()

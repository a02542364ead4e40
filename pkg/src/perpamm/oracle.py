"""Simulated dual-feed price source and settlement-time aggregation.

Each market settles against exactly two feeds (primary, secondary). At
settlement the two latest points are compared: staleness is checked first on
both feeds, then the relative deviation d = 100*|p1-p2|/min(p1,p2) decides
the outcome:

* d <= min_acceptable_deviation   -> the primary price is used;
* min_acceptable < d <= threshold -> the price least favorable to the trader
  (higher of the two for a buy, lower for a sell);
* d > threshold                   -> the settlement reverts.

Band comparisons are exact integer cross-multiplications, so boundary
equality behaves identically on every platform.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

from .errors import DeviationTooHigh, DomainError, FeedError, StaleFeed, TraceError
from .money import UNIT_SCALE, to_units

TRACE_HEADER = ["timestamp", "feed_id", "price"]


class TradeSide(enum.Enum):
    """Direction in which the trader consumes the quote."""

    BUY = "buy"
    SELL = "sell"


@dataclass(frozen=True)
class PricePoint:
    feed_id: str
    price: int          # base units, > 0
    publish_time: int   # seconds since epoch

    def __post_init__(self) -> None:
        if self.price <= 0:
            raise FeedError(f"non-positive price for feed {self.feed_id!r}")
        if self.publish_time < 0:
            raise FeedError(f"negative publish time for feed {self.feed_id!r}")


@dataclass(frozen=True)
class OracleConfig:
    max_age: int                    # seconds
    min_acceptable_deviation: int   # percent, base units
    threshold_deviation: int        # percent, base units

    def __post_init__(self) -> None:
        if self.max_age <= 0:
            raise DomainError("max_age must be positive")
        if not 0 <= self.min_acceptable_deviation < self.threshold_deviation:
            raise DomainError(
                "need 0 <= min_acceptable_deviation < threshold_deviation")


class FeedStore:
    """Latest point per feed id; older publish times never overwrite newer."""

    def __init__(self) -> None:
        self._points: dict[str, PricePoint] = {}

    def ingest(self, point: PricePoint) -> None:
        current = self._points.get(point.feed_id)
        if current is not None and point.publish_time < current.publish_time:
            return
        self._points[point.feed_id] = point

    def get(self, feed_id: str) -> PricePoint | None:
        return self._points.get(feed_id)

    def latest_price(self, feed_id: str) -> int | None:
        point = self._points.get(feed_id)
        return None if point is None else point.price


def _check_fresh(point: PricePoint, cfg: OracleConfig, now: int) -> None:
    if now - point.publish_time > cfg.max_age:
        raise StaleFeed(
            f"feed {point.feed_id!r} is {now - point.publish_time}s old "
            f"(max {cfg.max_age}s)")


def aggregate(
    primary: PricePoint,
    secondary: PricePoint,
    side: TradeSide,
    cfg: OracleConfig,
    now: int,
) -> int:
    """Settlement price in base units, per the dual-feed decision rule."""
    _check_fresh(primary, cfg, now)
    _check_fresh(secondary, cfg, now)

    p1, p2 = primary.price, secondary.price
    diff = abs(p1 - p2)
    low = min(p1, p2)
    # d <= band  <=>  100 * diff * UNIT_SCALE <= band_units * low
    scaled = 100 * diff * UNIT_SCALE
    if scaled > cfg.threshold_deviation * low:
        raise DeviationTooHigh(
            f"feed deviation exceeds threshold ({p1} vs {p2})")
    if scaled <= cfg.min_acceptable_deviation * low:
        return p1
    return max(p1, p2) if side is TradeSide.BUY else min(p1, p2)


# -- Trace loading -------------------------------------------------------------

def load_trace(path: str) -> list[PricePoint]:
    """Parse a `timestamp,feed_id,price` CSV; timestamps must be nondecreasing."""
    points: list[PricePoint] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise TraceError(f"expected header {TRACE_HEADER}, got {header}")
        last_ts = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise TraceError(f"line {lineno}: expected 3 columns, got {len(row)}")
            try:
                ts = int(row[0])
            except ValueError:
                raise TraceError(f"line {lineno}: bad timestamp {row[0]!r}") from None
            if last_ts is not None and ts < last_ts:
                raise TraceError(f"line {lineno}: timestamps decrease ({last_ts} -> {ts})")
            last_ts = ts
            try:
                price = to_units(row[2])
            except Exception:
                raise TraceError(f"line {lineno}: bad price {row[2]!r}") from None
            try:
                points.append(PricePoint(feed_id=row[1], price=price, publish_time=ts))
            except FeedError as exc:
                raise TraceError(f"line {lineno}: {exc}") from None
    return points

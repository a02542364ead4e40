"""Protocol state machine: orders, positions, fee accrual, liquidation.

One engine serves one market backed by one LP vault: the pool value *is*
the vault's total assets, and `reserved` is the gross notional of open
positions, so utilization = reserved / vault assets.

All monetary state is integer base units (1e-6). Borrow fees accrue lazily
through per-side cumulative indices: every state-mutating entry point first
rolls the indices forward at the rates prevailing since the last accrual,
and a position owes size * (index_now - index_at_entry) when it closes.
Indices accumulate in raw binary64 (quantizing each increment would break
split-vs-single-step accrual equivalence); the rates feeding them are
9-digit-quantized curve outputs.

Every mutating method is atomic: any raised error restores the engine,
vault included, to the state bit-identical to the one before the call.
"""

from __future__ import annotations

import enum
from contextlib import contextmanager
from dataclasses import dataclass, replace

from . import kernels
from .curves import (
    BaseFeeParams,
    DeviationParams,
    DynamicFeeParams,
    quote_prices_units,
    total_borrow_rates,
)
from .errors import (
    ClockRegression,
    DomainError,
    ExposureCapExceeded,
    InsolventVault,
    InsufficientCollateral,
    InsufficientLiquidity,
    LeverageExceeded,
    NotLiquidatable,
    OpenInterestCapExceeded,
    SlippageExceeded,
    StaleFeed,
    TriggerNotMet,
    UnknownMarket,
    UnknownOrder,
    UnknownPosition,
)
from .money import (
    SECONDS_PER_YEAR,
    UNIT_SCALE,
    div_round_half_even,
    pct_of,
    quantize9,
)
from .oracle import FeedStore, OracleConfig, TradeSide, aggregate
from .vault import VaultState


class Direction(enum.Enum):
    LONG = "long"
    SHORT = "short"


class OrderKind(enum.Enum):
    MARKET_OPEN = "market_open"
    MARKET_CLOSE = "market_close"
    LIMIT_OPEN = "limit_open"
    STOP_LOSS = "stop_loss"
    TAKE_PROFIT = "take_profit"


OPEN_KINDS = frozenset({OrderKind.MARKET_OPEN, OrderKind.LIMIT_OPEN})
CLOSE_KINDS = frozenset({OrderKind.MARKET_CLOSE, OrderKind.STOP_LOSS, OrderKind.TAKE_PROFIT})
TRIGGER_KINDS = frozenset({OrderKind.LIMIT_OPEN, OrderKind.STOP_LOSS, OrderKind.TAKE_PROFIT})


@dataclass(frozen=True)
class MarketConfig:
    market_id: str
    deviation: DeviationParams
    base_fee: BaseFeeParams
    dynamic_fee: DynamicFeeParams
    max_open_interest: int        # base units, per side
    max_leverage: int             # ratio, base units
    max_exposure: int             # base units, cap on |L - S|
    maintenance_margin_rate: int  # percent of size, base units
    open_close_fee_rate: int      # percent of size, base units
    liquidation_fee_rate: int     # percent of remaining equity, base units
    oracle: OracleConfig

    def violations(self) -> list[str]:
        """All invariant violations, empty when the config is sound."""
        out: list[str] = []
        if self.max_leverage < UNIT_SCALE:
            out.append("max_leverage must be >= 1")
        for name in ("max_open_interest", "max_exposure", "maintenance_margin_rate",
                     "open_close_fee_rate", "liquidation_fee_rate"):
            if getattr(self, name) < 0:
                out.append(f"{name} must be >= 0")
        # a fresh max-leverage position must not be instantly liquidatable
        if self.maintenance_margin_rate * self.max_leverage >= 100 * UNIT_SCALE * UNIT_SCALE:
            out.append("maintenance_margin_rate * max_leverage must be < 100")
        return out


@dataclass(frozen=True)
class PoolState:
    pool_value: int
    reserved: int
    long_oi: int
    short_oi: int
    cum_fee_index_long: float
    cum_fee_index_short: float
    last_accrual_time: int


@dataclass(frozen=True)
class Position:
    position_id: int
    owner: str
    market_id: str
    direction: Direction
    size: int
    collateral: int
    entry_price: int
    entry_fee_index: float


@dataclass(frozen=True)
class Order:
    order_id: int
    owner: str
    market_id: str
    kind: OrderKind
    direction: Direction
    size: int
    collateral: int
    acceptable_price: int
    max_slippage: int      # percent, base units
    trigger_price: int     # 0 unless a trigger kind
    position_id: int | None
    created_at: int


@dataclass(frozen=True)
class SettlementReceipt:
    executed_price: int
    open_close_fee: int
    borrow_fee_paid: int
    realized_pnl: int
    liquidation_fee: int = 0
    payout: int = 0        # money returned to the trader (refund)


# -- Pure state operations ----------------------------------------------------

def utilization_pct(pool: PoolState) -> float:
    """Utilization 100*reserved/pool_value in percent, 9-digit quantized."""
    if pool.pool_value <= 0:
        raise DomainError("pool value must be positive")
    return quantize9(kernels.utilization(float(pool.reserved), float(pool.pool_value)))


def accrue_fees(pool: PoolState, cfg: MarketConfig, now: int) -> PoolState:
    """Roll both cumulative fee indices forward to `now`.

    Rates are evaluated once at the pre-accrual state, so the result over
    [t0, t2] equals accruing [t0, t1] then [t1, t2] when nothing else
    changes in between.
    """
    if now < pool.last_accrual_time:
        raise ClockRegression(
            f"accrual time {now} before last accrual {pool.last_accrual_time}")
    dt = now - pool.last_accrual_time
    if dt == 0:
        return pool
    idx_long = pool.cum_fee_index_long
    idx_short = pool.cum_fee_index_short
    if pool.pool_value > 0:
        rate_long, rate_short = total_borrow_rates(
            utilization_pct(pool), pool.long_oi, pool.short_oi, pool.pool_value,
            cfg.base_fee, cfg.dynamic_fee)
        year_frac = dt / SECONDS_PER_YEAR
        idx_long += (rate_long / 100.0) * year_frac
        idx_short += (rate_short / 100.0) * year_frac
    elif pool.reserved > 0:
        raise InsolventVault("open positions with an empty pool")
    return replace(pool, cum_fee_index_long=idx_long, cum_fee_index_short=idx_short,
                   last_accrual_time=now)


def _side_index(pool: PoolState, direction: Direction) -> float:
    return pool.cum_fee_index_long if direction is Direction.LONG else pool.cum_fee_index_short


def _pnl(pos: Position, mark: int) -> int:
    """Signed pnl in base units at a mark price, rounded half-even."""
    raw = div_round_half_even(pos.size * (mark - pos.entry_price), pos.entry_price)
    return raw if pos.direction is Direction.LONG else -raw


def _owed_borrow_fee(pos: Position, pool: PoolState) -> int:
    delta = _side_index(pool, pos.direction) - pos.entry_fee_index
    return round(pos.size * delta)


def position_equity(pos: Position, pool: PoolState, mark_price: int) -> int:
    """collateral + pnl - owed borrow fees, in base units (signed)."""
    return pos.collateral + _pnl(pos, mark_price) - _owed_borrow_fee(pos, pool)


def check_liquidation(pos: Position, pool: PoolState, cfg: MarketConfig,
                      mark_price: int) -> bool:
    """True when equity <= maintenance_margin_rate% of size (boundary liquidates)."""
    equity = position_equity(pos, pool, mark_price)
    return equity * 100 * UNIT_SCALE <= cfg.maintenance_margin_rate * pos.size


def trigger_met(kind: OrderKind, direction: Direction, trigger_price: int,
                mark: int) -> bool:
    """Touch-inclusive trigger rule for limit/stop-loss/take-profit orders."""
    if kind is OrderKind.STOP_LOSS or kind is OrderKind.LIMIT_OPEN:
        return mark <= trigger_price if direction is Direction.LONG else mark >= trigger_price
    if kind is OrderKind.TAKE_PROFIT:
        return mark >= trigger_price if direction is Direction.LONG else mark <= trigger_price
    return False


# -- The engine ----------------------------------------------------------------

class Engine:
    """Single-market, single-writer protocol engine."""

    def __init__(
        self,
        config: MarketConfig,
        vault: VaultState | None = None,
        feeds: FeedStore | None = None,
        treasury_fee_share: int = 0,   # percent of fees, base units
        primary_feed: str = "primary",
        secondary_feed: str = "secondary",
    ) -> None:
        bad = config.violations()
        if bad:
            raise DomainError("invalid market config: " + "; ".join(bad))
        if not 0 <= treasury_fee_share <= 100 * UNIT_SCALE:
            raise DomainError("treasury_fee_share must be within [0, 100]%")
        self.config = config
        self.vault = vault if vault is not None else VaultState()
        self.feeds = feeds if feeds is not None else FeedStore()
        self.treasury_fee_share = treasury_fee_share
        self.primary_feed = primary_feed
        self.secondary_feed = secondary_feed

        self.reserved = 0
        self.long_oi = 0
        self.short_oi = 0
        self.cum_fee_index_long = 0.0
        self.cum_fee_index_short = 0.0
        self.last_accrual_time = 0
        self.treasury = 0
        self.positions: dict[int, Position] = {}
        self.orders: dict[int, Order] = {}
        self.escrow: dict[int, int] = {}
        self._next_order_id = 1
        self._next_position_id = 1

    # -- state views ------------------------------------------------------------

    def pool_state(self) -> PoolState:
        return PoolState(
            pool_value=self.vault.total_assets,
            reserved=self.reserved,
            long_oi=self.long_oi,
            short_oi=self.short_oi,
            cum_fee_index_long=self.cum_fee_index_long,
            cum_fee_index_short=self.cum_fee_index_short,
            last_accrual_time=self.last_accrual_time,
        )

    def borrow_rates(self) -> tuple[float, float]:
        """Current annualized (long, short) rates; (0, 0) for an empty pool."""
        pool = self.pool_state()
        if pool.pool_value <= 0:
            return 0.0, 0.0
        return total_borrow_rates(
            utilization_pct(pool), pool.long_oi, pool.short_oi, pool.pool_value,
            self.config.base_fee, self.config.dynamic_fee)

    def escrow_total(self) -> int:
        return sum(self.escrow.values())

    def open_collateral_total(self) -> int:
        return sum(p.collateral for p in self.positions.values())

    # -- atomicity ---------------------------------------------------------------

    def _snapshot(self):
        return (
            self.vault.clone(), dict(self.positions), dict(self.orders),
            dict(self.escrow), self.reserved, self.long_oi, self.short_oi,
            self.cum_fee_index_long, self.cum_fee_index_short,
            self.last_accrual_time, self.treasury,
            self._next_order_id, self._next_position_id,
        )

    def _restore(self, snap) -> None:
        (vault, positions, orders, escrow, self.reserved, self.long_oi,
         self.short_oi, self.cum_fee_index_long, self.cum_fee_index_short,
         self.last_accrual_time, self.treasury,
         self._next_order_id, self._next_position_id) = snap
        # restore the vault in place: callers hold references to the same object
        self.vault.total_assets = vault.total_assets
        self.vault.total_shares = vault.total_shares
        self.vault.balances = vault.balances
        self.positions = positions
        self.orders = orders
        self.escrow = escrow

    @contextmanager
    def _atomic(self):
        snap = self._snapshot()
        try:
            yield
        except BaseException:
            self._restore(snap)
            raise

    # -- accrual -------------------------------------------------------------------

    def _accrue(self, now: int) -> None:
        pool = accrue_fees(self.pool_state(), self.config, now)
        self.cum_fee_index_long = pool.cum_fee_index_long
        self.cum_fee_index_short = pool.cum_fee_index_short
        self.last_accrual_time = pool.last_accrual_time

    def accrue(self, now: int) -> None:
        with self._atomic():
            self._accrue(now)

    # -- LP flows --------------------------------------------------------------------

    def lp_deposit(self, account: str, assets: int, now: int) -> int:
        with self._atomic():
            self._accrue(now)
            return self.vault.deposit(account, assets)

    def lp_redeem(self, account: str, shares: int, now: int) -> int:
        with self._atomic():
            self._accrue(now)
            if self.vault.total_shares > 0 and 0 < shares <= self.vault.balances.get(account, 0):
                assets_out = shares * self.vault.total_assets // self.vault.total_shares
                if self.vault.total_assets - assets_out < self.reserved:
                    raise InsufficientLiquidity(
                        "redeem would leave the pool below reserved liquidity")
            return self.vault.redeem(account, shares)

    # -- order lifecycle ---------------------------------------------------------------

    def create_order(
        self,
        owner: str,
        kind: OrderKind,
        direction: Direction,
        now: int,
        size: int = 0,
        collateral: int = 0,
        acceptable_price: int = 0,
        max_slippage: int = 0,
        trigger_price: int = 0,
        position_id: int | None = None,
        market_id: str | None = None,
    ) -> int:
        if market_id is not None and market_id != self.config.market_id:
            raise UnknownMarket(f"engine serves {self.config.market_id!r}, not {market_id!r}")
        if max_slippage < 0:
            raise DomainError("max_slippage must be >= 0")
        if kind in TRIGGER_KINDS:
            if trigger_price <= 0:
                raise DomainError("trigger orders need a positive trigger_price")
            if acceptable_price <= 0:
                acceptable_price = trigger_price
        else:
            if trigger_price:
                raise DomainError("market orders do not take a trigger_price")
            if acceptable_price <= 0:
                raise DomainError("market orders need a positive acceptable_price")
        if kind in OPEN_KINDS:
            if size <= 0 or collateral <= 0:
                raise DomainError("opens need positive size and collateral")
            if size * UNIT_SCALE > collateral * self.config.max_leverage:
                raise LeverageExceeded(
                    f"size/collateral exceeds max leverage "
                    f"{self.config.max_leverage / UNIT_SCALE}x")
            if position_id is not None:
                raise DomainError("open orders do not reference a position")
        else:
            if collateral:
                raise DomainError("close orders do not escrow collateral")
            if position_id is None:
                raise DomainError("close orders need a position_id")
        order_id = self._next_order_id
        order = Order(order_id, owner, self.config.market_id, kind, direction,
                      size, collateral, acceptable_price, max_slippage,
                      trigger_price, position_id, now)
        with self._atomic():
            self._next_order_id += 1
            self.orders[order_id] = order
            if kind in OPEN_KINDS:
                self.escrow[order_id] = collateral
        return order_id

    def cancel_order(self, order_id: int, now: int) -> int:
        if order_id not in self.orders:
            raise UnknownOrder(f"no pending order {order_id}")
        with self._atomic():
            del self.orders[order_id]
            return self.escrow.pop(order_id, 0)

    # -- settlement --------------------------------------------------------------------

    def _aggregate_mark(self, side: TradeSide, now: int) -> int:
        primary = self.feeds.get(self.primary_feed)
        secondary = self.feeds.get(self.secondary_feed)
        if primary is None or secondary is None:
            raise StaleFeed("both oracle feeds must have published a price")
        return aggregate(primary, secondary, side, self.config.oracle, now)

    @staticmethod
    def _check_slippage(side: TradeSide, exec_price: int, acceptable: int,
                        max_slippage: int) -> None:
        # only an adverse move counts: above acceptable for buys, below for sells
        if side is TradeSide.BUY:
            adverse = exec_price - acceptable
        else:
            adverse = acceptable - exec_price
        if adverse > 0 and adverse * 100 * UNIT_SCALE > max_slippage * acceptable:
            raise SlippageExceeded(
                f"execution {exec_price} beyond slippage bound from {acceptable}")

    def _route_fee(self, amount: int) -> None:
        cut = amount * self.treasury_fee_share // (100 * UNIT_SCALE)
        self.treasury += cut
        self.vault.credit(amount - cut)

    def settle_order(self, order_id: int, now: int) -> SettlementReceipt:
        order = self.orders.get(order_id)
        if order is None:
            raise UnknownOrder(f"no pending order {order_id}")
        with self._atomic():
            self._accrue(now)
            pos: Position | None = None
            if order.kind in CLOSE_KINDS:
                pos = self.positions.get(order.position_id)  # type: ignore[arg-type]
                if pos is None:
                    raise UnknownPosition(f"no open position {order.position_id}")
                if pos.owner != order.owner:
                    raise DomainError("order owner does not hold the position")
                if pos.direction is not order.direction:
                    raise DomainError("order direction does not match the position")
                if order.size and order.size != pos.size:
                    raise DomainError("partial closes are not supported")
                side = TradeSide.SELL if pos.direction is Direction.LONG else TradeSide.BUY
            else:
                side = TradeSide.BUY if order.direction is Direction.LONG else TradeSide.SELL
            mark = self._aggregate_mark(side, now)
            if order.kind in TRIGGER_KINDS and not trigger_met(
                    order.kind, order.direction, order.trigger_price, mark):
                raise TriggerNotMet(f"order {order_id} trigger not met at {mark}")

            long_q, short_q = quote_prices_units(
                mark, utilization_pct(self.pool_state()), self.config.deviation)
            if order.kind in OPEN_KINDS:
                exec_price = long_q if order.direction is Direction.LONG else short_q
            else:
                # closes consume the opposite quote side (bid/ask behavior)
                exec_price = short_q if order.direction is Direction.LONG else long_q
            self._check_slippage(side, exec_price, order.acceptable_price,
                                 order.max_slippage)

            if order.kind in OPEN_KINDS:
                receipt = self._execute_open(order, exec_price)
            else:
                assert pos is not None
                receipt = self._execute_close(pos, exec_price,
                                              charge_close_fee=True)
            del self.orders[order_id]
            self.escrow.pop(order_id, None)
            return receipt

    def _execute_open(self, order: Order, exec_price: int) -> SettlementReceipt:
        fee = pct_of(order.size, self.config.open_close_fee_rate)
        net_collateral = order.collateral - fee
        if net_collateral <= 0:
            raise InsufficientCollateral("open fee consumes the entire collateral")
        self._route_fee(fee)
        if order.direction is Direction.LONG:
            self.long_oi += order.size
        else:
            self.short_oi += order.size
        self.reserved += order.size
        side_oi = self.long_oi if order.direction is Direction.LONG else self.short_oi
        if side_oi > self.config.max_open_interest:
            raise OpenInterestCapExceeded(
                f"open interest {side_oi} above cap {self.config.max_open_interest}")
        if abs(self.long_oi - self.short_oi) > self.config.max_exposure:
            raise ExposureCapExceeded(
                f"net exposure above cap {self.config.max_exposure}")
        if self.reserved > self.vault.total_assets:
            raise InsufficientLiquidity("pool too small to reserve this notional")
        entry_index = (self.cum_fee_index_long if order.direction is Direction.LONG
                       else self.cum_fee_index_short)
        position = Position(self._next_position_id, order.owner, order.market_id,
                            order.direction, order.size, net_collateral,
                            exec_price, entry_index)
        self.positions[position.position_id] = position
        self._next_position_id += 1
        return SettlementReceipt(executed_price=exec_price, open_close_fee=fee,
                                 borrow_fee_paid=0, realized_pnl=0)

    def _execute_close(self, pos: Position, exec_price: int, *,
                       charge_close_fee: bool, liquidation: bool = False) -> SettlementReceipt:
        pool = self.pool_state()
        owed = _owed_borrow_fee(pos, pool)
        pnl = _pnl(pos, exec_price)
        gross = pos.collateral + pnl
        borrow_collected = min(max(owed, 0), max(gross, 0))
        remainder = max(gross - borrow_collected, 0)
        close_fee = 0
        if charge_close_fee:
            close_fee = min(pct_of(pos.size, self.config.open_close_fee_rate), remainder)
            remainder -= close_fee
        liq_fee = 0
        if liquidation:
            liq_fee = pct_of(remainder, self.config.liquidation_fee_rate)
            remainder -= liq_fee
        payout = remainder

        # collateral dissolves into: payout, the treasury's fee cut, and the
        # vault's net flow (trade gain plus its fee share, netted against any
        # trader profit so a payable settlement never trips insolvency)
        fee_pot = borrow_collected + close_fee + liq_fee
        cut = fee_pot * self.treasury_fee_share // (100 * UNIT_SCALE)
        self.treasury += cut
        net = pos.collateral - payout - cut
        if net >= 0:
            self.vault.credit(net)
        else:
            self.vault.debit(-net)

        del self.positions[pos.position_id]
        if pos.direction is Direction.LONG:
            self.long_oi -= pos.size
        else:
            self.short_oi -= pos.size
        self.reserved -= pos.size
        if self.vault.total_assets < self.reserved:
            raise InsolventVault("pool below reserved liquidity after payout")
        return SettlementReceipt(executed_price=exec_price, open_close_fee=close_fee,
                                 borrow_fee_paid=borrow_collected, realized_pnl=pnl,
                                 liquidation_fee=liq_fee, payout=payout)

    # -- liquidation ---------------------------------------------------------------------

    def liquidate(self, position_id: int, now: int) -> SettlementReceipt:
        pos = self.positions.get(position_id)
        if pos is None:
            raise UnknownPosition(f"no open position {position_id}")
        with self._atomic():
            self._accrue(now)
            side = TradeSide.SELL if pos.direction is Direction.LONG else TradeSide.BUY
            mark = self._aggregate_mark(side, now)
            if not check_liquidation(pos, self.pool_state(), self.config, mark):
                raise NotLiquidatable(f"position {position_id} is healthy at {mark}")
            return self._execute_close(pos, mark, charge_close_fee=False,
                                       liquidation=True)

    # -- triggers ------------------------------------------------------------------------

    def evaluate_triggers(self, mark_price: int, now: int) -> list[int]:
        """Ids of pending trigger orders whose condition holds at the mark."""
        ready: list[int] = []
        for order_id in sorted(self.orders):
            order = self.orders[order_id]
            if order.kind in TRIGGER_KINDS and trigger_met(
                    order.kind, order.direction, order.trigger_price, mark_price):
                ready.append(order_id)
        return ready

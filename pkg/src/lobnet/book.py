"""Order-book snapshots and the quantities derived from them.

A snapshot holds the visible depth of one instrument at one point in time:
prices and volumes for up to ``N_LEVELS`` levels per side, best price first.
Snapshots are immutable values; every operation here is a pure function, so
they are safe to share across threads.

Level arrays may hold fewer than ``N_LEVELS`` entries (a market order can
sweep levels away); the fixed 40-feature flattening used by the model requires
the full 10/10 shape and says so loudly when it is missing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientLiquidityError, ValidationError

N_LEVELS = 10
N_FEATURES = 4 * N_LEVELS


def _as_price_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class LobSnapshot:
    """One timestamp's visible order-book state.

    ``ask_prices`` sorted strictly ascending (best ask first), ``bid_prices``
    strictly descending (best bid first). All prices and volumes positive,
    best bid strictly below best ask.
    """

    timestamp: int
    ask_prices: np.ndarray
    ask_volumes: np.ndarray
    bid_prices: np.ndarray
    bid_volumes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ask_prices", _as_price_array(self.ask_prices, "ask_prices"))
        object.__setattr__(self, "ask_volumes", _as_price_array(self.ask_volumes, "ask_volumes"))
        object.__setattr__(self, "bid_prices", _as_price_array(self.bid_prices, "bid_prices"))
        object.__setattr__(self, "bid_volumes", _as_price_array(self.bid_volumes, "bid_volumes"))
        self._validate()

    def _validate(self) -> None:
        for prices, volumes, side in (
            (self.ask_prices, self.ask_volumes, "ask"),
            (self.bid_prices, self.bid_volumes, "bid"),
        ):
            if prices.shape != volumes.shape:
                raise ValidationError(f"{side} prices/volumes length mismatch")
            if prices.size > N_LEVELS:
                raise ValidationError(f"{side} side has more than {N_LEVELS} levels")
            if prices.size and (np.any(prices <= 0) or np.any(volumes <= 0)):
                raise ValidationError(f"{side} side has non-positive price or volume")
        if np.any(np.diff(self.ask_prices) <= 0):
            raise ValidationError("ask prices must be strictly increasing across levels")
        if np.any(np.diff(self.bid_prices) >= 0):
            raise ValidationError("bid prices must be strictly decreasing across levels")
        if self.ask_prices.size and self.bid_prices.size:
            if self.bid_prices[0] >= self.ask_prices[0]:
                raise ValidationError(
                    f"crossed or locked book: best bid {self.bid_prices[0]} >= "
                    f"best ask {self.ask_prices[0]}"
                )

    @property
    def n_ask_levels(self) -> int:
        return self.ask_prices.size

    @property
    def n_bid_levels(self) -> int:
        return self.bid_prices.size

    def _require_top(self) -> None:
        if not (self.ask_prices.size and self.bid_prices.size):
            raise ValidationError("operation requires at least one level on each side")


def mid_price(s: LobSnapshot) -> float:
    """Average of best ask and best bid."""
    s._require_top()
    return (s.ask_prices[0] + s.bid_prices[0]) / 2.0


def imbalance(s: LobSnapshot) -> float:
    """Best-bid volume as a fraction of total best-level volume, in [0, 1]."""
    s._require_top()
    vb, va = s.bid_volumes[0], s.ask_volumes[0]
    return vb / (va + vb)


def micro_price(s: LobSnapshot) -> float:
    """Imbalance-weighted average of best ask and best bid.

    Equals the mid-price exactly when best-level volumes balance; leans toward
    the ask when bid volume dominates (buy pressure) and vice versa.
    """
    s._require_top()
    i = imbalance(s)
    return i * s.ask_prices[0] + (1.0 - i) * s.bid_prices[0]


def match_market_order(
    prices: np.ndarray, volumes: np.ndarray, qty: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """Consume ``qty`` from a best-first (price-priority) side of a book.

    Returns the surviving levels and the volume actually consumed. Fully
    consumed levels are dropped; a partial fill reduces the front level.
    Raises when qty exceeds the visible depth. Shared by the snapshot-level
    operation below and the synthetic generator's internal deep book.
    """
    if qty < 0:
        raise ValidationError("order quantity must be non-negative")
    if qty == 0:
        return prices.copy(), volumes.copy(), 0.0
    total = float(volumes.sum())
    if qty > total:
        raise InsufficientLiquidityError(
            f"market order for {qty} exceeds visible depth {total}"
        )
    remaining = qty
    level = 0
    new_volumes = volumes.copy()
    while level < volumes.size and remaining >= new_volumes[level]:
        remaining -= new_volumes[level]
        level += 1
    if level < volumes.size and remaining > 0:
        new_volumes[level] -= remaining
    return prices[level:].copy(), new_volumes[level:], qty


def apply_market_order(s: LobSnapshot, side: str, qty: float) -> LobSnapshot:
    """Execute a market order against the opposite side of the book.

    ``side`` is the aggressor's side: a ``"buy"`` consumes ask levels, a
    ``"sell"`` consumes bid levels. Levels are eaten in price priority; a
    fully consumed level disappears and deeper levels take its place.
    """
    if side not in ("buy", "sell"):
        raise ValidationError(f"side must be 'buy' or 'sell', got {side!r}")
    if qty == 0:
        return s
    if side == "buy":
        prices, volumes, _ = match_market_order(s.ask_prices, s.ask_volumes, qty)
        return LobSnapshot(s.timestamp, prices, volumes, s.bid_prices, s.bid_volumes)
    prices, volumes, _ = match_market_order(s.bid_prices, s.bid_volumes, qty)
    return LobSnapshot(s.timestamp, s.ask_prices, s.ask_volumes, prices, volumes)


def flatten(s: LobSnapshot) -> np.ndarray:
    """Flatten a full 10-level snapshot to the model's 40-feature layout.

    Feature order per level i: ask price, ask volume, bid price, bid volume.
    """
    if s.n_ask_levels != N_LEVELS or s.n_bid_levels != N_LEVELS:
        raise ValidationError(
            f"flatten requires exactly {N_LEVELS} levels per side, got "
            f"{s.n_ask_levels} ask / {s.n_bid_levels} bid"
        )
    out = np.empty(N_FEATURES, dtype=np.float64)
    out[0::4] = s.ask_prices
    out[1::4] = s.ask_volumes
    out[2::4] = s.bid_prices
    out[3::4] = s.bid_volumes
    return out


def unflatten(values: np.ndarray, timestamp: int = 0) -> LobSnapshot:
    """Inverse of :func:`flatten`; validates the reconstructed snapshot."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (N_FEATURES,):
        raise ValidationError(f"expected {N_FEATURES} features, got shape {values.shape}")
    return LobSnapshot(
        timestamp=timestamp,
        ask_prices=values[0::4],
        ask_volumes=values[1::4],
        bid_prices=values[2::4],
        bid_volumes=values[3::4],
    )

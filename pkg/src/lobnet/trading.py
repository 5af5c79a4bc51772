"""Mid-price trading simulation over per-step class signals.

The rule set is deliberately simple: a +1 signal while flat opens a long, a
-1 while long closes it (and, in the default flip mode, opens a short at the
same execution; ``close_only`` disables the flip), 0 does nothing. Position
decisions are taken at signal time while every fill happens ``delay`` events
later at the mid, which stands in for slippage. Actions whose fill would
land past the end of the day or inside an auction mask are discarded. All
positions are force-closed at the day's final (unmasked) index, so nothing
is held overnight.

Profits are in the mid-price's own units: pence-style currency units for raw
feeds, unitless for pre-normalised benchmark data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Signal:
    anchor_t: int
    value: int  # -1 sell, 0 wait, +1 buy

    def __post_init__(self):
        if self.value not in (-1, 0, 1):
            raise ValidationError(f"signal value must be -1/0/+1, got {self.value}")


@dataclass(frozen=True)
class Trade:
    day: object
    entry_index: int
    exit_index: int
    side: int  # +1 long, -1 short
    entry_mid: float
    exit_mid: float
    profit: float


@dataclass(frozen=True)
class DailyStats:
    day: object
    profit: float
    n_trades: int

    @property
    def normalised_profit(self) -> float:
        return self.profit / self.n_trades if self.n_trades else 0.0


@dataclass
class TradeLedger:
    trades: list[Trade] = field(default_factory=list)
    daily: list[DailyStats] = field(default_factory=list)

    @property
    def total_profit(self) -> float:
        return float(sum(t.profit for t in self.trades))


def signals_from_probs(probs: np.ndarray, anchors=None) -> list[Signal]:
    """Argmax class per row; any exact tie for the maximum waits (0)."""
    probs = np.asarray(probs)
    if probs.ndim != 2 or probs.shape[1] != 3:
        raise ValidationError(f"probabilities must be (N, 3), got {probs.shape}")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-5):
        raise ValidationError("probability rows must sum to 1")
    anchors = np.arange(probs.shape[0]) if anchors is None else np.asarray(anchors)
    signals = []
    for anchor, row in zip(anchors, probs):
        top = row.max()
        winners = np.flatnonzero(row == top)
        value = int(winners[0]) - 1 if winners.size == 1 else 0
        signals.append(Signal(int(anchor), value))
    return signals


def simulate(
    mids: np.ndarray,
    signals: list[Signal],
    day=0,
    mu: float = 1.0,
    delay: int = 5,
    auction_mask: np.ndarray | None = None,
    close_only: bool = False,
) -> TradeLedger:
    """Run one day's state machine; every position is closed by day end."""
    mids = np.asarray(mids, dtype=np.float64)
    n = mids.size
    if n == 0:
        raise ValidationError("mids must be non-empty")
    if auction_mask is not None:
        auction_mask = np.asarray(auction_mask, dtype=bool)
        if auction_mask.shape != mids.shape:
            raise ValidationError("auction mask length must match mids")
    for sig in signals:
        if not 0 <= sig.anchor_t < n:
            raise ValidationError(f"signal anchor {sig.anchor_t} outside day of {n} events")

    def masked(i: int) -> bool:
        return auction_mask is not None and bool(auction_mask[i])

    trades: list[Trade] = []
    position = 0
    entry_index = -1
    entry_mid = 0.0

    for sig in sorted(signals, key=lambda s: s.anchor_t):
        v = sig.value
        if v == 0 or v == position:
            continue  # wait, or already positioned that way (no pyramiding)
        exec_i = sig.anchor_t + delay
        if exec_i >= n or masked(exec_i):
            continue  # fill would overrun the day or land in an auction
        price = float(mids[exec_i])
        was_open = position != 0
        if was_open:
            trades.append(
                Trade(day, entry_index, exec_i, position, entry_mid,
                      price, (price - entry_mid) * position * mu)
            )
            position = 0
        if not (close_only and was_open):
            # flip mode re-opens on the opposite side at the same fill;
            # close-only mode opens only from flat
            position = v
            entry_index, entry_mid = exec_i, price

    if position != 0:
        close_i = n - 1
        while close_i >= 0 and masked(close_i):
            close_i -= 1
        if close_i > entry_index:
            price = float(mids[close_i])
            trades.append(
                Trade(day, entry_index, close_i, position, entry_mid,
                      price, (price - entry_mid) * position * mu)
            )
        position = 0

    profit = float(sum(t.profit for t in trades))
    daily = [DailyStats(day, profit, len(trades))] if trades else [DailyStats(day, 0.0, 0)]
    return TradeLedger(trades=trades, daily=daily)


def merge_ledgers(ledgers: list[TradeLedger]) -> TradeLedger:
    merged = TradeLedger()
    for led in ledgers:
        merged.trades.extend(led.trades)
        merged.daily.extend(led.daily)
    merged.trades.sort(key=lambda t: (str(t.day), t.entry_index))
    merged.daily.sort(key=lambda d: str(d.day))
    return merged


def t_statistic(ledger: TradeLedger) -> float:
    """One-sample t of daily normalised profits against zero.

    Days without trades contribute no observation. A zero standard deviation
    collapses to a signed infinity sentinel (0 if the mean is also 0).
    """
    values = np.array([d.normalised_profit for d in ledger.daily if d.n_trades > 0])
    if values.size < 2:
        raise ValidationError("t-statistic needs at least 2 days with trades")
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        return 0.0 if mean == 0.0 else float(np.sign(mean) * np.inf)
    return mean / (sd / np.sqrt(values.size))


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def write_ledger_csv(path, ledger: TradeLedger) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "entry_index", "exit_index", "side", "entry_mid", "exit_mid", "profit"])
        for t in ledger.trades:
            writer.writerow([t.day, t.entry_index, t.exit_index, t.side,
                             repr(t.entry_mid), repr(t.exit_mid), repr(t.profit)])


def write_daily_csv(path, ledger: TradeLedger) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "profit", "n_trades", "normalised_profit"])
        for d in ledger.daily:
            writer.writerow([d.day, repr(d.profit), d.n_trades, repr(d.normalised_profit)])


def write_cumulative_csv(path, ledger: TradeLedger) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "cumulative_profit"])
        total = 0.0
        for d in ledger.daily:
            total += d.profit
            writer.writerow([d.day, repr(total)])

"""Seeded synthetic limit-order-book stream.

Stands in for a proprietary exchange feed: a latent two-state momentum
regime drives both order flow and book shape. While the regime is up, buy
market orders dominate (eating ask levels), new bids appear inside the
spread, and the best-bid volume is inflated relative to the best ask, so the
imbalance visible in the features carries the signal that the labelling of
future mids confirms. Signal strength 0 reduces the stream to a neutral
random walk.

The book itself is a real 10-level snapshot: market orders go through
``book.apply_market_order`` and consumed levels are replaced by promoting
fresh synthetic depth behind the worst level. Identical seeds give identical
output, byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import book
from ..errors import ValidationError
from .series import SeriesDay


@dataclass(frozen=True)
class GeneratorConfig:
    n_days: int = 10
    events_per_day: int = 20_000
    signal_strength: float = 0.9  # 0 = pure noise, 1 = fully regime-driven flow
    regime_flip_prob: float = 5e-4
    market_order_prob: float = 0.25
    inside_quote_prob: float = 0.15
    imbalance_gain: float = 0.5  # best-level volume skew toward the regime side
    tick: float = 0.01
    base_price: float = 100.0
    base_volume: float = 100.0
    min_volume: float = 1.0
    levels: int = book.N_LEVELS

    def validate(self) -> None:
        if self.n_days < 1 or self.events_per_day < 1:
            raise ValidationError("n_days and events_per_day must be >= 1")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValidationError("signal_strength must be in [0, 1]")
        for name in ("regime_flip_prob", "market_order_prob", "inside_quote_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1]")
        if not 0.0 <= self.imbalance_gain < 1.0:
            raise ValidationError("imbalance_gain must be in [0, 1)")
        if self.tick <= 0 or self.base_price <= 0 or self.base_volume <= 0:
            raise ValidationError("tick, base_price and base_volume must be positive")
        if self.levels != book.N_LEVELS:
            raise ValidationError(f"generator emits exactly {book.N_LEVELS} levels")


class _Book:
    """Mutable working copy of the visible book, kept at exactly 10 levels."""

    def __init__(self, cfg: GeneratorConfig, rng: np.random.Generator):
        self.cfg = cfg
        n = cfg.levels
        tick = cfg.tick
        ask0 = cfg.base_price + tick
        bid0 = cfg.base_price - tick
        self.ask_p = ask0 + tick * np.arange(n)
        self.bid_p = bid0 - tick * np.arange(n)
        self.ask_v = self._fresh_volumes(rng, n)
        self.bid_v = self._fresh_volumes(rng, n)

    def _fresh_volumes(self, rng, n):
        return np.maximum(
            self.cfg.base_volume * rng.uniform(0.5, 1.5, size=n), self.cfg.min_volume
        )

    def snapshot(self, t: int) -> book.LobSnapshot:
        return book.LobSnapshot(t, self.ask_p, self.ask_v, self.bid_p, self.bid_v)

    def mid(self) -> float:
        return (self.ask_p[0] + self.bid_p[0]) / 2.0

    def _refill(self, rng) -> None:
        # promote synthetic depth so both sides show the full level count
        cfg = self.cfg
        while self.ask_p.size < cfg.levels:
            worst = self.ask_p[-1] if self.ask_p.size else self.bid_p[0] + 2 * cfg.tick
            self.ask_p = np.append(self.ask_p, worst + cfg.tick)
            self.ask_v = np.append(self.ask_v, self._fresh_volumes(rng, 1))
        while self.bid_p.size < cfg.levels:
            worst = self.bid_p[-1] if self.bid_p.size else self.ask_p[0] - 2 * cfg.tick
            self.bid_p = np.append(self.bid_p, worst - cfg.tick)
            self.bid_v = np.append(self.bid_v, self._fresh_volumes(rng, 1))

    def market_order(self, side: str, frac: float, t: int, rng) -> None:
        opp_v = self.ask_v if side == "buy" else self.bid_v
        qty = min(float(opp_v[0]) * frac, float(opp_v.sum()) * 0.5)
        snap = book.apply_market_order(self.snapshot(t), side, qty)
        self.ask_p, self.ask_v = snap.ask_prices, snap.ask_volumes
        self.bid_p, self.bid_v = snap.bid_prices, snap.bid_volumes
        self._refill(rng)

    def inside_quote(self, side: str, rng) -> bool:
        # tighten the spread by one tick if there is room
        tick = self.cfg.tick
        spread_ticks = round((self.ask_p[0] - self.bid_p[0]) / tick)
        if spread_ticks < 2:
            return False
        vol = self._fresh_volumes(rng, 1)
        if side == "bid":
            self.bid_p = np.concatenate(([self.bid_p[0] + tick], self.bid_p[:-1]))
            self.bid_v = np.concatenate((vol, self.bid_v[:-1]))
        else:
            self.ask_p = np.concatenate(([self.ask_p[0] - tick], self.ask_p[:-1]))
            self.ask_v = np.concatenate((vol, self.ask_v[:-1]))
        return True

    def drift_top_volumes(self, skew: float, rng) -> None:
        # pull best-level volumes toward the regime's imbalance target
        cfg = self.cfg
        target_bid = cfg.base_volume * (1.0 + cfg.imbalance_gain * skew)
        target_ask = cfg.base_volume * (1.0 - cfg.imbalance_gain * skew)
        rate = 0.3
        noise = cfg.base_volume * 0.05
        self.bid_v[0] = max(
            self.bid_v[0] + rate * (target_bid - self.bid_v[0]) + rng.normal(0, noise),
            cfg.min_volume,
        )
        self.ask_v[0] = max(
            self.ask_v[0] + rate * (target_ask - self.ask_v[0]) + rng.normal(0, noise),
            cfg.min_volume,
        )
        # background churn somewhere deeper in the book
        side, lvl = rng.integers(0, 2), rng.integers(1, cfg.levels)
        vols = self.bid_v if side == 0 else self.ask_v
        vols[lvl] = max(vols[lvl] + rng.normal(0, noise), cfg.min_volume)


def synth_generate(cfg: GeneratorConfig, seed: int) -> list[SeriesDay]:
    """Generate ``cfg.n_days`` days of book states; deterministic in ``seed``."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    days = []
    for d in range(cfg.n_days):
        features = np.empty((cfg.events_per_day, 4 * cfg.levels), dtype=np.float32)
        mids = np.empty(cfg.events_per_day, dtype=np.float64)
        state = _Book(cfg, rng)
        regime = 1 if rng.random() < 0.5 else -1
        for t in range(cfg.events_per_day):
            if rng.random() < cfg.regime_flip_prob:
                # soft reversion toward the base price keeps the walk bounded
                pull = (cfg.base_price - state.mid()) / cfg.base_price
                p_up = min(max(0.5 + 2.0 * pull, 0.05), 0.95)
                regime = 1 if rng.random() < p_up else -1
            if rng.random() < cfg.market_order_prob:
                p_buy = 0.5 * (1.0 + cfg.signal_strength * regime)
                side = "buy" if rng.random() < p_buy else "sell"
                state.market_order(side, rng.uniform(0.3, 1.4), t, rng)
            else:
                p_fav = 0.5 * (1.0 + cfg.signal_strength * regime)
                favoured = "bid" if rng.random() < p_fav else "ask"
                if not (rng.random() < cfg.inside_quote_prob and state.inside_quote(favoured, rng)):
                    state.drift_top_volumes(regime * cfg.signal_strength, rng)
            features[t] = book.flatten(state.snapshot(t)).astype(np.float32)
            mids[t] = state.mid()
        days.append(
            SeriesDay(
                f"synth{seed}_{d + 1:02d}",
                features,
                mids=mids,
                timestamps=np.arange(cfg.events_per_day),
            )
        )
    return days

"""Order-book domain types and derived quantities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lobnet import book
from lobnet.errors import InsufficientLiquidityError, ValidationError


def snapshot(ask_p, ask_v, bid_p, bid_v, ts=0):
    return book.LobSnapshot(ts, ask_p, ask_v, bid_p, bid_v)


def full_snapshot(best_ask=20.6, best_bid=20.4, ask_v=None, bid_v=None, tick=0.1):
    levels = book.N_LEVELS
    return snapshot(
        best_ask + tick * np.arange(levels),
        ask_v if ask_v is not None else np.full(levels, 4.0),
        best_bid - tick * np.arange(levels),
        bid_v if bid_v is not None else np.full(levels, 4.0),
    )


@st.composite
def valid_snapshots(draw):
    levels = book.N_LEVELS
    tick = draw(st.sampled_from([0.01, 0.1, 1.0]))
    mid = draw(st.floats(min_value=1.0, max_value=1000.0))
    spread_ticks = draw(st.integers(min_value=1, max_value=5))
    ask0 = mid + spread_ticks * tick / 2
    bid0 = mid - spread_ticks * tick / 2
    vols = st.integers(min_value=1, max_value=500)
    ask_v = np.array([draw(vols) for _ in range(levels)], dtype=float)
    bid_v = np.array([draw(vols) for _ in range(levels)], dtype=float)
    return snapshot(
        ask0 + tick * np.arange(levels), ask_v,
        bid0 - tick * np.arange(levels), bid_v,
    )


class TestValidation:
    def test_zero_spread_rejected(self):
        with pytest.raises(ValidationError):
            full_snapshot(best_ask=20.4, best_bid=20.4)

    def test_crossed_book_rejected(self):
        with pytest.raises(ValidationError):
            full_snapshot(best_ask=20.3, best_bid=20.4)

    def test_non_monotone_asks_rejected(self):
        prices = 20.6 + 0.1 * np.arange(10)
        prices[3] = prices[2]
        with pytest.raises(ValidationError):
            snapshot(prices, np.full(10, 4.0), 20.4 - 0.1 * np.arange(10), np.full(10, 4.0))

    def test_nonpositive_volume_rejected(self):
        vols = np.full(10, 4.0)
        vols[0] = 0.0
        with pytest.raises(ValidationError):
            full_snapshot(ask_v=vols)


class TestMidPrice:
    def test_arithmetic_mean(self):
        assert book.mid_price(full_snapshot(20.6, 20.4)) == pytest.approx(20.5)

    def test_market_order_moves_mid(self):
        # sweeping the first two ask levels moves best ask 20.6 -> 20.8
        s = full_snapshot(20.6, 20.4, ask_v=np.array([3.0, 2.0] + [4.0] * 8))
        before = book.mid_price(s)
        after = book.apply_market_order(s, "buy", 5)
        assert after.ask_prices[0] == pytest.approx(20.8)
        assert book.mid_price(after) - before == pytest.approx(0.1)

    @given(valid_snapshots())
    @settings(max_examples=100, deadline=None)
    def test_mid_strictly_inside_touch(self, s):
        mid = book.mid_price(s)
        assert s.bid_prices[0] < mid < s.ask_prices[0]


class TestImbalance:
    def test_balanced(self):
        assert book.imbalance(full_snapshot()) == pytest.approx(0.5)

    def test_three_to_one(self):
        s = full_snapshot(bid_v=np.array([3.0] + [4.0] * 9), ask_v=np.array([1.0] + [4.0] * 9))
        # direct evaluation: 3 / (3 + 1)
        assert book.imbalance(s) == pytest.approx(3.0 / (3.0 + 1.0))

    def test_vanishing_bid_limit(self):
        s = full_snapshot(bid_v=np.array([1e-9] + [4.0] * 9))
        assert book.imbalance(s) == pytest.approx(0.0, abs=1e-9)


class TestMicroPrice:
    def test_equals_mid_at_balance(self):
        s = full_snapshot(20.6, 20.4)
        assert book.micro_price(s) == pytest.approx(20.5)

    def test_imbalanced_value(self):
        s = full_snapshot(20.6, 20.4,
                          bid_v=np.array([3.0] + [4.0] * 9),
                          ask_v=np.array([1.0] + [4.0] * 9))
        # I = 0.75 -> 0.75 * 20.6 + 0.25 * 20.4
        assert book.micro_price(s) == pytest.approx(0.75 * 20.6 + 0.25 * 20.4)

    def test_heavy_bid_pushes_to_ask(self):
        s = full_snapshot(bid_v=np.array([1e9] + [4.0] * 9), ask_v=np.array([1.0] + [4.0] * 9))
        assert book.micro_price(s) == pytest.approx(s.ask_prices[0], abs=1e-6)

    @given(valid_snapshots())
    @settings(max_examples=100, deadline=None)
    def test_bounded_and_balance_condition(self, s):
        micro = book.micro_price(s)
        assert s.bid_prices[0] <= micro <= s.ask_prices[0]
        if s.ask_volumes[0] == s.bid_volumes[0]:
            assert micro == pytest.approx(book.mid_price(s))
        else:
            assert abs(micro - book.mid_price(s)) > 0


class TestApplyMarketOrder:
    def test_sweep_two_levels(self):
        s = full_snapshot(20.6, 20.4, ask_v=np.array([3.0, 2.0] + [4.0] * 8))
        after = book.apply_market_order(s, "buy", 5)
        assert after.n_ask_levels == 8
        assert after.ask_prices[0] == pytest.approx(20.8)
        assert np.array_equal(after.bid_prices, s.bid_prices)

    def test_zero_quantity_identity(self):
        s = full_snapshot()
        assert book.apply_market_order(s, "buy", 0) is s

    def test_partial_fill_front_level(self):
        s = full_snapshot(bid_v=np.full(10, 4.0))
        after = book.apply_market_order(s, "sell", 1)
        assert after.bid_volumes[0] == pytest.approx(3.0)
        assert np.array_equal(after.bid_prices, s.bid_prices)
        assert after.n_bid_levels == 10

    def test_insufficient_liquidity(self):
        s = full_snapshot()
        with pytest.raises(InsufficientLiquidityError):
            book.apply_market_order(s, "buy", 41.0)

    @given(valid_snapshots(), st.integers(min_value=0, max_value=400))
    @settings(max_examples=150, deadline=None)
    def test_share_conservation(self, s, qty):
        total = s.ask_volumes.sum()
        if qty > total:
            with pytest.raises(InsufficientLiquidityError):
                book.apply_market_order(s, "buy", qty)
            return
        after = book.apply_market_order(s, "buy", qty)
        # integer volumes make the conservation identity exact
        assert after.ask_volumes.sum() + qty == total


class TestFeatureVector:
    def test_layout(self):
        s = full_snapshot()
        v = book.flatten(s)
        assert v.shape == (40,)
        assert v[0] == s.ask_prices[0]
        assert v[1] == s.ask_volumes[0]
        assert v[2] == s.bid_prices[0]
        assert v[3] == s.bid_volumes[0]
        assert v[4] == s.ask_prices[1]

    @given(valid_snapshots())
    @settings(max_examples=100, deadline=None)
    def test_round_trip(self, s):
        back = book.unflatten(book.flatten(s), timestamp=s.timestamp)
        assert np.array_equal(back.ask_prices, s.ask_prices)
        assert np.array_equal(back.ask_volumes, s.ask_volumes)
        assert np.array_equal(back.bid_prices, s.bid_prices)
        assert np.array_equal(back.bid_volumes, s.bid_volumes)

    def test_flatten_requires_full_book(self):
        s = full_snapshot(ask_v=np.array([1.0] + [4.0] * 9))
        swept = book.apply_market_order(s, "buy", 1.0)
        with pytest.raises(ValidationError):
            book.flatten(swept)

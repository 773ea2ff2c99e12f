import datetime as dt

import numpy as np
import pytest

from tweetevents.errors import AlignmentError, ValidationError
from tweetevents.timeseries import (
    PolaritySeries,
    PriceSeries,
    ReturnSeries,
    TradingCalendar,
    TweetDailySeries,
    align,
    compute_polarity,
    compute_returns,
)

from conftest import calendar_dates, make_tweet_series, weekday_dates
from oracles import polarity_oracle, returns_oracle


class TestTradingCalendar:
    def test_rejects_unsorted(self):
        days = (dt.date(2013, 6, 4), dt.date(2013, 6, 3))
        with pytest.raises(ValidationError):
            TradingCalendar(days)

    def test_rejects_duplicates(self):
        days = (dt.date(2013, 6, 3), dt.date(2013, 6, 3))
        with pytest.raises(ValidationError):
            TradingCalendar(days)

    def test_next_on_or_after(self):
        cal = TradingCalendar(weekday_dates(dt.date(2013, 6, 3), 10))
        saturday = dt.date(2013, 6, 8)
        assert cal.next_on_or_after(saturday) == dt.date(2013, 6, 10)
        assert cal.next_on_or_after(dt.date(2013, 6, 3)) == dt.date(2013, 6, 3)
        assert cal.next_on_or_after(dt.date(2030, 1, 1)) is None


class TestComputeReturns:
    def test_single_step(self):
        prices = PriceSeries("T", calendar_dates(dt.date(2013, 6, 3), 2), [100.0, 110.0])
        returns = compute_returns(prices)
        assert returns.dates == prices.dates[1:]
        np.testing.assert_allclose(returns.values, [0.10])

    def test_constant_prices(self):
        prices = PriceSeries("T", calendar_dates(dt.date(2013, 6, 3), 3), [100.0] * 3)
        np.testing.assert_array_equal(compute_returns(prices).values, [0.0, 0.0])

    def test_up_then_down(self):
        prices = PriceSeries("T", calendar_dates(dt.date(2013, 6, 3), 3), [100.0, 110.0, 99.0])
        np.testing.assert_allclose(compute_returns(prices).values, [0.10, -0.10])

    def test_too_short(self):
        prices = PriceSeries("T", calendar_dates(dt.date(2013, 6, 3), 1), [100.0])
        with pytest.raises(ValidationError):
            compute_returns(prices)

    def test_nonpositive_price_rejected(self):
        with pytest.raises(ValidationError):
            PriceSeries("T", calendar_dates(dt.date(2013, 6, 3), 2), [100.0, 0.0])

    def test_matches_oracle_on_random_prices(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = rng.integers(2, 50)
            prices = np.exp(rng.normal(4.6, 0.2, n))
            series = PriceSeries("T", calendar_dates(dt.date(2013, 1, 1), n), prices)
            got = compute_returns(series).values
            np.testing.assert_allclose(got, returns_oracle(list(prices)), rtol=1e-12)

    def test_price_round_trip(self):
        rng = np.random.default_rng(11)
        prices = np.exp(rng.normal(4.6, 0.3, 60))
        series = PriceSeries("T", calendar_dates(dt.date(2013, 1, 1), 60), prices)
        returns = compute_returns(series).values
        rebuilt = [prices[0]]
        for r in returns:
            rebuilt.append(rebuilt[-1] * (1 + r))
        np.testing.assert_allclose(rebuilt, prices, rtol=1e-12)


class TestComputePolarity:
    def test_balanced(self):
        series = make_tweet_series("T", dt.date(2013, 6, 1), [5], [0], [5])
        assert compute_polarity(series).values[0] == 0.0

    def test_three_to_one(self):
        series = make_tweet_series("T", dt.date(2013, 6, 1), [1], [0], [3])
        assert compute_polarity(series).values[0] == 0.5

    def test_all_neutral_is_missing(self):
        series = make_tweet_series("T", dt.date(2013, 6, 1), [0], [7], [0])
        assert np.isnan(compute_polarity(series).values[0])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            make_tweet_series("T", dt.date(2013, 6, 1), [-1], [0], [0])

    def test_inconsistent_total_rejected(self):
        with pytest.raises(ValidationError):
            TweetDailySeries.from_daily_counts(
                "T", {dt.date(2013, 6, 1): (1, 2, 3)}, total={dt.date(2013, 6, 1): 7}
            )

    def test_range_and_extremes_property(self):
        rng = np.random.default_rng(3)
        neg = rng.integers(0, 20, 200)
        neu = rng.integers(0, 20, 200)
        pos = rng.integers(0, 20, 200)
        series = make_tweet_series("T", dt.date(2013, 1, 1), neg, neu, pos)
        values = compute_polarity(series).values
        present = ~np.isnan(values)
        assert np.all(values[present] >= -1) and np.all(values[present] <= 1)
        for i in range(200):
            if not present[i]:
                assert pos[i] + neg[i] == 0
                continue
            assert (values[i] == 1.0) == (neg[i] == 0 and pos[i] > 0)
            assert (values[i] == -1.0) == (pos[i] == 0 and neg[i] > 0)
        expected = polarity_oracle(neg.tolist(), pos.tolist())
        for i, exp in enumerate(expected):
            if exp is None:
                assert not present[i]
            else:
                assert values[i] == pytest.approx(exp, rel=1e-12)


def _returns_on(dates, values, ticker="T"):
    return ReturnSeries(ticker, dates, values)


class TestAlign:
    def test_weekend_fold_forward(self):
        # trading days: Friday 6/7 and Monday 6/10
        friday, monday = dt.date(2013, 6, 7), dt.date(2013, 6, 10)
        tweets = make_tweet_series("T", friday, [0, 0, 0, 0], [10, 4, 6, 5], [0, 0, 0, 0])
        returns = _returns_on((friday, monday), [0.01, 0.02])
        market = _returns_on((friday, monday), [0.005, 0.01], "DJIA")
        panel = align(returns, tweets, compute_polarity(tweets), market)
        np.testing.assert_array_equal(panel.tweet_volume, [10.0, 15.0])

    def test_disjoint_ranges(self):
        tweets = make_tweet_series("T", dt.date(2013, 6, 3), [1], [1], [1])
        returns = _returns_on((dt.date(2013, 6, 3),), [0.01])
        market = _returns_on((dt.date(2014, 6, 3),), [0.01], "DJIA")
        with pytest.raises(AlignmentError):
            align(returns, tweets, compute_polarity(tweets), market)

    def test_identical_calendars_identity(self):
        days = calendar_dates(dt.date(2013, 6, 3), 5)  # Mon..Fri
        tweets = make_tweet_series("T", days[0], [1, 2, 3, 4, 5], [0] * 5, [5, 4, 3, 2, 1])
        polarity = compute_polarity(tweets)
        returns = _returns_on(days, [0.01, -0.02, 0.03, 0.0, 0.01])
        market = _returns_on(days, [0.0, 0.01, 0.02, -0.01, 0.0], "DJIA")
        panel = align(returns, tweets, polarity, market)
        assert panel.dates == days
        np.testing.assert_array_equal(panel.returns, returns.values)
        np.testing.assert_array_equal(panel.market_returns, market.values)
        np.testing.assert_array_equal(panel.tweet_volume, tweets.total.astype(float))
        np.testing.assert_array_equal(panel.polarity, polarity.values)

    def test_fold_conserves_totals(self):
        rng = np.random.default_rng(5)
        start = dt.date(2013, 6, 1)  # Saturday
        n = 40
        tweets = make_tweet_series(
            "T", start,
            rng.integers(0, 30, n), rng.integers(0, 30, n), rng.integers(0, 30, n),
        )
        trading = [d for d in tweets.dates if d.weekday() < 5]
        returns = _returns_on(tuple(trading), rng.normal(0, 0.01, len(trading)))
        market = _returns_on(tuple(trading), rng.normal(0, 0.01, len(trading)), "DJIA")
        panel = align(returns, tweets, compute_polarity(tweets), market)
        last = trading[-1]
        raw_total = sum(
            int(tweets.total[i]) for i, d in enumerate(tweets.dates) if d <= last
        )
        assert int(panel.tweet_volume.sum()) == raw_total

    def test_mismatched_ticker_rejected(self):
        tweets = make_tweet_series("A", dt.date(2013, 6, 3), [1], [1], [1])
        returns = _returns_on((dt.date(2013, 6, 3),), [0.01], "B")
        market = _returns_on((dt.date(2013, 6, 3),), [0.01], "DJIA")
        with pytest.raises(ValidationError):
            align(returns, tweets, compute_polarity(tweets), market)

    def test_missing_polarity_policies(self):
        days = calendar_dates(dt.date(2013, 6, 3), 3)
        tweets = make_tweet_series("T", days[0], [1, 0, 2], [0, 5, 0], [1, 0, 2])
        polarity = compute_polarity(tweets)
        returns = _returns_on(days, [0.01, 0.02, 0.03])
        market = _returns_on(days, [0.0, 0.0, 0.0], "DJIA")
        panel = align(returns, tweets, polarity, market)
        filled, mask = panel.polarity_filled("zero")
        assert mask.all() and filled[1] == 0.0
        dropped, mask = panel.polarity_filled("drop")
        assert len(dropped) == 2 and not mask[1]


class TestPolaritySeries:
    def test_value_on_missing_day(self):
        series = PolaritySeries("T", calendar_dates(dt.date(2013, 6, 3), 2), [0.5, -0.5])
        assert series.value_on(dt.date(2013, 6, 3)) == 0.5
        assert np.isnan(series.value_on(dt.date(2013, 7, 1)))

    def test_out_of_range_values_rejected(self):
        with pytest.raises(ValidationError):
            PolaritySeries("T", calendar_dates(dt.date(2013, 6, 3), 1), [1.5])

"""Canonical calendar, price/return and tweet-count series plus alignment.

All containers are frozen dataclasses holding a tuple of dates and read-only
numpy value arrays; operations are pure functions, so everything here is safe
to share across worker threads.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ValidationError


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


def _check_strictly_increasing(dates: tuple[dt.date, ...], what: str) -> None:
    for a, b in zip(dates, dates[1:]):
        if b <= a:
            raise ValidationError(f"{what}: dates must be strictly increasing ({a} !< {b})")


@dataclass(frozen=True)
class TradingCalendar:
    """Ordered trading dates; the day index used by returns and the study."""

    dates: tuple[dt.date, ...]
    _index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if not self.dates:
            raise ValidationError("TradingCalendar: no dates")
        _check_strictly_increasing(self.dates, "TradingCalendar")
        object.__setattr__(self, "_index", {d: i for i, d in enumerate(self.dates)})

    def __len__(self) -> int:
        return len(self.dates)

    def __contains__(self, day: dt.date) -> bool:
        return day in self._index

    def index(self, day: dt.date) -> int:
        try:
            return self._index[day]
        except KeyError:
            raise ValidationError(f"{day} is not a trading date") from None

    def next_on_or_after(self, day: dt.date) -> dt.date | None:
        """First trading date >= day, or None past the calendar end."""
        if day > self.dates[-1]:
            return None
        lo, hi = 0, len(self.dates)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.dates[mid] < day:
                lo = mid + 1
            else:
                hi = mid
        return self.dates[lo]


@dataclass(frozen=True)
class PriceSeries:
    """Daily closing prices for one ticker on trading dates."""

    ticker: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise ValidationError("PriceSeries: dates/values length mismatch")
        _check_strictly_increasing(self.dates, f"PriceSeries[{self.ticker}]")
        vals = np.asarray(self.values, dtype=np.float64)
        if len(vals) and not np.all(vals > 0):
            raise ValidationError(f"PriceSeries[{self.ticker}]: prices must be > 0")
        object.__setattr__(self, "values", _freeze(vals))

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Daily raw returns; index excludes the first price date."""

    ticker: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise ValidationError("ReturnSeries: dates/values length mismatch")
        _check_strictly_increasing(self.dates, f"ReturnSeries[{self.ticker}]")
        vals = np.asarray(self.values, dtype=np.float64)
        if len(vals) and not np.all(vals > -1):
            raise ValidationError(f"ReturnSeries[{self.ticker}]: returns must exceed -1")
        object.__setattr__(self, "values", _freeze(vals))

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class TweetDailySeries:
    """Per-calendar-day tweet counts by sentiment class for one ticker.

    Dates are consecutive calendar days (non-trading days included); days
    without tweets carry zero counts.
    """

    ticker: str
    dates: tuple[dt.date, ...]
    negative: np.ndarray
    neutral: np.ndarray
    positive: np.ndarray

    def __post_init__(self):
        n = len(self.dates)
        arrays = {}
        for name in ("negative", "neutral", "positive"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if len(arr) != n:
                raise ValidationError(f"TweetDailySeries: {name} length mismatch")
            if len(arr) and arr.min() < 0:
                raise ValidationError(f"TweetDailySeries: negative {name} count")
            arrays[name] = _freeze(arr)
        for i in range(1, n):
            if (self.dates[i] - self.dates[i - 1]).days != 1:
                raise ValidationError(
                    f"TweetDailySeries[{self.ticker}]: days must be consecutive "
                    f"(gap after {self.dates[i - 1]})"
                )
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def total(self) -> np.ndarray:
        return self.negative + self.neutral + self.positive

    def __len__(self) -> int:
        return len(self.dates)

    @classmethod
    def from_daily_counts(cls, ticker, counts, total=None):
        """Build a dense series from {date: (neg, neu, pos)}, zero-filling gaps.

        ``total`` optionally maps dates to stated totals, validated against
        the class counts.
        """
        if not counts:
            raise ValidationError(f"TweetDailySeries[{ticker}]: no observations")
        days = sorted(counts)
        first, last = days[0], days[-1]
        n = (last - first).days + 1
        dates = tuple(first + dt.timedelta(days=i) for i in range(n))
        neg = np.zeros(n, dtype=np.int64)
        neu = np.zeros(n, dtype=np.int64)
        pos = np.zeros(n, dtype=np.int64)
        for day, (c_neg, c_neu, c_pos) in counts.items():
            i = (day - first).days
            neg[i], neu[i], pos[i] = c_neg, c_neu, c_pos
            if total is not None and day in total:
                if total[day] != c_neg + c_neu + c_pos:
                    raise ValidationError(
                        f"TweetDailySeries[{ticker}]: total on {day} inconsistent "
                        f"with class counts"
                    )
        return cls(ticker, dates, neg, neu, pos)


@dataclass(frozen=True)
class PolaritySeries:
    """Daily sentiment polarity in [-1, 1]; NaN where no non-neutral tweets."""

    ticker: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise ValidationError("PolaritySeries: dates/values length mismatch")
        vals = np.asarray(self.values, dtype=np.float64)
        present = vals[~np.isnan(vals)]
        if len(present) and (present.min() < -1 or present.max() > 1):
            raise ValidationError(f"PolaritySeries[{self.ticker}]: values outside [-1, 1]")
        object.__setattr__(self, "values", _freeze(vals))

    def value_on(self, day: dt.date) -> float:
        """Polarity on a day; NaN when missing or outside the series."""
        lo, hi = 0, len(self.dates)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.dates[mid] < day:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.dates) and self.dates[lo] == day:
            return float(self.values[lo])
        return float("nan")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class AlignedPanel:
    """Trading-day panel of stock returns, market returns, folded tweet
    volume and polarity for one ticker (shared date index)."""

    ticker: str
    dates: tuple[dt.date, ...]
    returns: np.ndarray
    market_returns: np.ndarray
    tweet_volume: np.ndarray
    polarity: np.ndarray

    def __post_init__(self):
        n = len(self.dates)
        for name in ("returns", "market_returns", "tweet_volume", "polarity"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if len(arr) != n:
                raise ValidationError(f"AlignedPanel: {name} length mismatch")
            object.__setattr__(self, name, _freeze(arr))

    @property
    def abs_returns(self) -> np.ndarray:
        return np.abs(self.returns)

    def polarity_filled(self, missing: str = "zero") -> tuple[np.ndarray, np.ndarray]:
        """Polarity with the missing-day policy applied.

        ``zero`` substitutes 0 (balanced sentiment) for missing days and keeps
        every row; ``drop`` returns a keep-mask excluding them.  Returns
        (values, mask).
        """
        mask = ~np.isnan(self.polarity)
        if missing == "zero":
            return np.nan_to_num(self.polarity, nan=0.0), np.ones(len(self.dates), bool)
        if missing == "drop":
            return self.polarity[mask], mask
        raise ValidationError(f"unknown missing-polarity policy {missing!r}")

    @property
    def calendar(self) -> TradingCalendar:
        return TradingCalendar(self.dates)

    def __len__(self) -> int:
        return len(self.dates)


def compute_returns(prices: PriceSeries) -> ReturnSeries:
    """Raw daily returns (p_d - p_{d-1}) / p_{d-1}."""
    if len(prices) < 2:
        raise ValidationError(
            f"compute_returns[{prices.ticker}]: need at least 2 prices, got {len(prices)}"
        )
    p = prices.values
    values = (p[1:] - p[:-1]) / p[:-1]
    return ReturnSeries(prices.ticker, prices.dates[1:], values)


def compute_polarity(tweets: TweetDailySeries) -> PolaritySeries:
    """Polarity (pos - neg) / (pos + neg); NaN on days with no non-neutral tweets."""
    pos = tweets.positive.astype(np.float64)
    neg = tweets.negative.astype(np.float64)
    denom = pos + neg
    values = np.full(len(tweets), np.nan)
    nz = denom > 0
    values[nz] = (pos[nz] - neg[nz]) / denom[nz]
    return PolaritySeries(tweets.ticker, tweets.dates, values)


def align(
    returns: ReturnSeries,
    tweets: TweetDailySeries,
    polarity: PolaritySeries,
    market: ReturnSeries,
) -> AlignedPanel:
    """Build the trading-day panel.

    The panel index is the intersection of the stock's and the market's
    return dates.  Tweet counts on non-trading days fold forward onto the
    next trading day (each panel day sums the calendar days since the
    previous panel day, inclusive); days after the last trading day are
    outside the panel.  Panel polarity is the trading day's own value.
    """
    if returns.ticker != tweets.ticker or returns.ticker != polarity.ticker:
        raise ValidationError("align: returns/tweets/polarity tickers differ")
    common = sorted(set(returns.dates) & set(market.dates))
    if not common:
        raise AlignmentError(
            f"align[{returns.ticker}]: no common trading dates with market"
        )
    ret_idx = {d: i for i, d in enumerate(returns.dates)}
    mkt_idx = {d: i for i, d in enumerate(market.dates)}
    r = np.array([returns.values[ret_idx[d]] for d in common])
    m = np.array([market.values[mkt_idx[d]] for d in common])

    totals = tweets.total
    first_tweet_day = tweets.dates[0]
    volume = np.zeros(len(common))
    prev: dt.date | None = None
    for j, day in enumerate(common):
        start = first_tweet_day if prev is None else prev + dt.timedelta(days=1)
        lo = max(0, (start - first_tweet_day).days)
        hi = (day - first_tweet_day).days + 1
        if hi > 0:
            volume[j] = totals[lo : min(hi, len(totals))].sum()
        prev = day

    pol = np.array([polarity.value_on(d) for d in common])
    return AlignedPanel(returns.ticker, tuple(common), r, m, volume, pol)

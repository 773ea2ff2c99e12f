import datetime as dt
from itertools import combinations

import numpy as np
import pytest

from tweetevents.sentiment import LabeledTweet
from tweetevents.timeseries import (
    AlignedPanel,
    PriceSeries,
    ReturnSeries,
    TweetDailySeries,
)


def weekday_dates(start: dt.date, n: int) -> tuple:
    """n consecutive weekdays starting on/after start."""
    out = []
    day = start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return tuple(out)


def calendar_dates(start: dt.date, n: int) -> tuple:
    return tuple(start + dt.timedelta(days=i) for i in range(n))


def make_tweet_series(ticker, start, neg, neu, pos):
    n = len(neg)
    return TweetDailySeries(ticker, calendar_dates(start, n), neg, neu, pos)


def make_panel(ticker="TST", seed=0, n_days=400, alpha=0.0005, beta=1.1,
               sigma_eps=0.01, market_sigma=0.012, start=dt.date(2013, 1, 2)):
    """Synthetic market-model panel on a weekday calendar."""
    rng = np.random.default_rng(seed)
    dates = weekday_dates(start, n_days)
    market = rng.normal(0.0, market_sigma, n_days)
    eps = rng.normal(0.0, sigma_eps, n_days)
    stock = alpha + beta * market + eps
    volume = rng.poisson(30, n_days).astype(float)
    polarity = rng.uniform(-1, 1, n_days)
    return AlignedPanel(ticker, dates, stock, market, volume, polarity)


def return_series_pair(panel: AlignedPanel):
    stock = ReturnSeries(panel.ticker, panel.dates, panel.returns)
    market = ReturnSeries("market", panel.dates, panel.market_returns)
    return stock, market


@pytest.fixture
def price_series():
    dates = weekday_dates(dt.date(2013, 6, 3), 5)
    return PriceSeries("TST", dates, [100.0, 110.0, 99.0, 101.0, 101.0])


# Separable toy corpus: each class draws word triples from a small recurring
# core vocabulary so every held-out document still shares indicative words
# with the training split.
_POS_CORE = ["great", "strong", "win", "gain", "rally", "soar", "beat", "bullish"]
_NEG_CORE = ["bad", "weak", "loss", "drop", "crash", "plunge", "miss", "bearish"]
_FILLER = ["market", "shares", "report", "today", "session", "trading", "volume",
           "update"]


def _toy_texts(core):
    triples = list(combinations(range(8), 3))[::3][:20]
    return [
        f"{core[a]} {core[b]} {core[c]} {_FILLER[i % 8]}"
        for i, (a, b, c) in enumerate(triples)
    ]


TOY_POSITIVE = _toy_texts(_POS_CORE)
TOY_NEGATIVE = _toy_texts(_NEG_CORE)
TOY_NEUTRAL = _toy_texts(_FILLER)


@pytest.fixture(scope="session")
def toy_corpus():
    tweets = []
    for text in TOY_POSITIVE:
        tweets.append(LabeledTweet(text, 1))
    for text in TOY_NEGATIVE:
        tweets.append(LabeledTweet(text, -1))
    for text in TOY_NEUTRAL:
        tweets.append(LabeledTweet(text, 0))
    return tweets

"""CSV ingestion for prices, tweet counts, EA dates and labeled tweets.

All readers validate the documented schemas and raise ParseError with the
file and 1-based line number on any violation.  Dates are ISO-8601; per-tweet
files are aggregated to daily counts at ingest.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

from .errors import ParseError
from .sentiment import LabeledTweet
from .timeseries import PriceSeries, TweetDailySeries

PRICE_HEADER = ["date", "ticker", "close"]
TWEET_DAILY_HEADER = ["date", "ticker", "neg", "neu", "pos"]
TWEET_RAW_HEADER = ["timestamp", "ticker", "label"]
EA_HEADER = ["ticker", "date"]


def _read_rows(path: str):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [(i + 1, row) for i, row in enumerate(reader)]
    rows = [(ln, row) for ln, row in rows if row and any(cell.strip() for cell in row)]
    return rows


def _header(path: str, rows) -> list[str]:
    if not rows:
        return []
    _, first = rows[0]
    return [cell.strip().lower() for cell in first]


def _parse_date(path: str, line: int, text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(path, line, f"bad ISO date {text!r}") from None


def _parse_timestamp_date(path: str, line: int, text: str) -> dt.date:
    text = text.strip()
    try:
        return dt.datetime.fromisoformat(text.replace("Z", "+00:00")).date()
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ParseError(path, line, f"bad ISO timestamp {text!r}") from None


def _parse_float(path: str, line: int, text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, line, f"bad {what} {text!r}") from None


def _parse_count(path: str, line: int, text: str, what: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(path, line, f"bad {what} {text!r}") from None
    if value < 0:
        raise ParseError(path, line, f"negative {what} {value}")
    return value


def read_prices(path: str) -> dict[str, PriceSeries]:
    """Read `date,ticker,close` rows into per-ticker price series."""
    rows = _read_rows(path)
    if not rows:
        return {}
    if _header(path, rows) != PRICE_HEADER:
        raise ParseError(path, rows[0][0], f"expected header {','.join(PRICE_HEADER)}")
    observations: dict[str, dict[dt.date, float]] = {}
    for line, row in rows[1:]:
        if len(row) != 3:
            raise ParseError(path, line, f"expected 3 columns, got {len(row)}")
        day = _parse_date(path, line, row[0])
        ticker = row[1].strip()
        if not ticker:
            raise ParseError(path, line, "empty ticker")
        close = _parse_float(path, line, row[2], "price")
        if close <= 0:
            raise ParseError(path, line, f"non-positive price {close}")
        per = observations.setdefault(ticker, {})
        if day in per:
            raise ParseError(path, line, f"duplicate price for {ticker} on {day}")
        per[day] = close
    out = {}
    for ticker, obs in observations.items():
        days = sorted(obs)
        out[ticker] = PriceSeries(ticker, tuple(days), [obs[d] for d in days])
    return out


def read_tweets(path: str) -> dict[str, TweetDailySeries]:
    """Read tweet counts; accepts daily aggregates or per-tweet rows."""
    rows = _read_rows(path)
    if not rows:
        return {}
    header = _header(path, rows)
    if header == TWEET_DAILY_HEADER:
        return _read_tweets_daily(path, rows[1:])
    if header == TWEET_RAW_HEADER:
        return _read_tweets_raw(path, rows[1:])
    raise ParseError(
        path,
        rows[0][0],
        f"expected header {','.join(TWEET_DAILY_HEADER)} or {','.join(TWEET_RAW_HEADER)}",
    )


def _read_tweets_daily(path, rows) -> dict[str, TweetDailySeries]:
    counts: dict[str, dict[dt.date, tuple[int, int, int]]] = {}
    for line, row in rows:
        if len(row) != 5:
            raise ParseError(path, line, f"expected 5 columns, got {len(row)}")
        day = _parse_date(path, line, row[0])
        ticker = row[1].strip()
        if not ticker:
            raise ParseError(path, line, "empty ticker")
        neg = _parse_count(path, line, row[2], "neg count")
        neu = _parse_count(path, line, row[3], "neu count")
        pos = _parse_count(path, line, row[4], "pos count")
        per = counts.setdefault(ticker, {})
        if day in per:
            raise ParseError(path, line, f"duplicate counts for {ticker} on {day}")
        per[day] = (neg, neu, pos)
    return {
        ticker: TweetDailySeries.from_daily_counts(ticker, per)
        for ticker, per in counts.items()
    }


def _read_tweets_raw(path, rows) -> dict[str, TweetDailySeries]:
    counts: dict[str, dict[dt.date, list[int]]] = {}
    for line, row in rows:
        if len(row) != 3:
            raise ParseError(path, line, f"expected 3 columns, got {len(row)}")
        day = _parse_timestamp_date(path, line, row[0])
        ticker = row[1].strip()
        if not ticker:
            raise ParseError(path, line, "empty ticker")
        label = row[2].strip()
        if label not in {"-1", "0", "1", "+1"}:
            raise ParseError(path, line, f"label must be -1/0/1, got {label!r}")
        triple = counts.setdefault(ticker, {}).setdefault(day, [0, 0, 0])
        triple[int(label) + 1] += 1
    return {
        ticker: TweetDailySeries.from_daily_counts(
            ticker, {day: tuple(c) for day, c in per.items()}
        )
        for ticker, per in counts.items()
    }


def read_ea_dates(path: str) -> list[tuple[str, dt.date]]:
    """Read `ticker,date` earnings-announcement rows."""
    rows = _read_rows(path)
    if not rows:
        return []
    if _header(path, rows) != EA_HEADER:
        raise ParseError(path, rows[0][0], f"expected header {','.join(EA_HEADER)}")
    out = []
    for line, row in rows[1:]:
        if len(row) != 2:
            raise ParseError(path, line, f"expected 2 columns, got {len(row)}")
        ticker = row[0].strip()
        if not ticker:
            raise ParseError(path, line, "empty ticker")
        out.append((ticker, _parse_date(path, line, row[1])))
    return out


def read_labeled_tweets(path: str) -> list[LabeledTweet]:
    """Read `text,label[,label2]` rows with labels in {-1, 0, 1}."""
    rows = _read_rows(path)
    if not rows:
        return []
    header = _header(path, rows)
    if header not in (["text", "label"], ["text", "label", "label2"]):
        raise ParseError(path, rows[0][0], "expected header text,label[,label2]")
    has_second = len(header) == 3
    out = []
    for line, row in rows[1:]:
        expected = 3 if has_second else 2
        if len(row) != expected:
            raise ParseError(path, line, f"expected {expected} columns, got {len(row)}")
        text = row[0]
        if not text.strip():
            raise ParseError(path, line, "empty text")
        label = _parse_label(path, line, row[1])
        label2 = None
        if has_second and row[2].strip():
            label2 = _parse_label(path, line, row[2])
        out.append(LabeledTweet(text, label, label2))
    return out


def _parse_label(path, line, text) -> int:
    text = text.strip()
    if text not in {"-1", "0", "1", "+1"}:
        raise ParseError(path, line, f"label must be -1/0/1, got {text!r}")
    return int(text)


@dataclass(frozen=True)
class TickerSummary:
    ticker: str
    first_date: dt.date
    last_date: dt.date
    days: int
    total_tweets: int
    negative: int
    neutral: int
    positive: int


def summarize_tweets(tweets: dict[str, TweetDailySeries]) -> list[TickerSummary]:
    """Per-ticker ingest summary, sorted by total tweet count ascending."""
    out = []
    for ticker in sorted(tweets):
        series = tweets[ticker]
        out.append(
            TickerSummary(
                ticker=ticker,
                first_date=series.dates[0],
                last_date=series.dates[-1],
                days=len(series),
                total_tweets=int(series.total.sum()),
                negative=int(series.negative.sum()),
                neutral=int(series.neutral.sum()),
                positive=int(series.positive.sum()),
            )
        )
    out.sort(key=lambda s: (s.total_tweets, s.ticker))
    return out

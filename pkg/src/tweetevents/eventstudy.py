"""Market-model event study: estimation, abnormal returns, CAR and the
theta significance statistic, aggregated per polarity class.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import EventWindowError, InsufficientHistoryError, ValidationError
from .events import CLASSES, Event
from .stats import ols
from .timeseries import AlignedPanel, ReturnSeries

SIG_5 = 1.96
SIG_1 = 2.58


@dataclass(frozen=True)
class StudyWindows:
    """Estimation length and event-window lag range.

    The estimation window is the ``estimation_length`` trading days ending the
    trading day before the event window opens, so it never overlaps the event
    period.
    """

    estimation_length: int = 120
    lag_min: int = -10
    lag_max: int = 10

    def __post_init__(self):
        if self.estimation_length < 30:
            raise ValidationError("StudyWindows: estimation_length must be >= 30")
        if not (self.lag_min <= 0 <= self.lag_max):
            raise ValidationError("StudyWindows: event window must contain lag 0")

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.lag_min, self.lag_max + 1)

    @property
    def n_lags(self) -> int:
        return self.lag_max - self.lag_min + 1


@dataclass(frozen=True)
class MarketModel:
    """Fitted market model for one event: R_stock = alpha + beta * R_market."""

    alpha: float
    beta: float
    resid_variance: float
    start: dt.date
    end: dt.date
    nobs: int

    def __post_init__(self):
        if self.resid_variance < 0:
            raise ValidationError("MarketModel: negative residual variance")


@dataclass(frozen=True)
class EventStudyResult:
    """Per-lag averages for one polarity class.

    ``car[j]`` accumulates abar from the window's first lag; ``var_car``
    follows (1/N^2) * k * sum_i sigma_i^2 with k lags accumulated; theta is
    car / sqrt(var_car).
    """

    polarity_class: str
    lags: np.ndarray
    abar: np.ndarray
    car: np.ndarray
    var_car: np.ndarray
    theta: np.ndarray
    sig5: np.ndarray
    sig1: np.ndarray
    n_events: int


@dataclass(frozen=True)
class DroppedEvent:
    ticker: str
    date: dt.date
    reason: str


@dataclass(frozen=True)
class StudyOutcome:
    mode: str
    results: dict          # polarity class -> EventStudyResult
    dropped: tuple = field(default_factory=tuple)


def _index_of(series: ReturnSeries, day: dt.date) -> int:
    lo, hi = 0, len(series.dates)
    while lo < hi:
        mid = (lo + hi) // 2
        if series.dates[mid] < day:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(series.dates) and series.dates[lo] == day:
        return lo
    raise ValidationError(f"{day} is not on the return-series index")


def estimate_market_model(
    stock: ReturnSeries,
    market: ReturnSeries,
    event_day: dt.date,
    windows: StudyWindows = StudyWindows(),
) -> MarketModel:
    """OLS of the stock on the market over the estimation window before the event."""
    if stock.dates != market.dates:
        raise ValidationError("estimate_market_model: series must share one index")
    i0 = _index_of(stock, event_day)
    est_end = i0 + windows.lag_min - 1      # day before the event window opens
    est_start = est_end - windows.estimation_length + 1
    if est_start < 0:
        raise InsufficientHistoryError(
            f"{stock.ticker} {event_day}: needs {windows.estimation_length} "
            f"trading days before lag {windows.lag_min}"
        )
    sl = slice(est_start, est_end + 1)
    fit = ols(stock.values[sl], market.values[sl], intercept=True)
    return MarketModel(
        alpha=float(fit.coef[0]),
        beta=float(fit.coef[1]),
        resid_variance=float(fit.resid_variance),
        start=stock.dates[est_start],
        end=stock.dates[est_end],
        nobs=fit.nobs,
    )


def abnormal_returns(
    stock: ReturnSeries,
    market: ReturnSeries,
    model: MarketModel,
    windows: StudyWindows,
    event_day: dt.date,
) -> np.ndarray:
    """Residual returns R - alpha - beta * R_market at each event-window lag."""
    if stock.dates != market.dates:
        raise ValidationError("abnormal_returns: series must share one index")
    i0 = _index_of(stock, event_day)
    lo, hi = i0 + windows.lag_min, i0 + windows.lag_max
    if lo < 0 or hi >= len(stock):
        raise EventWindowError(
            f"{stock.ticker} {event_day}: event window not fully covered"
        )
    r = stock.values[lo : hi + 1]
    m = market.values[lo : hi + 1]
    return r - model.alpha - model.beta * m


def significance(theta: np.ndarray, five: float = SIG_5, one: float = SIG_1):
    """Two-sided marks at the fixed normal critical values."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.abs(theta) > five, np.abs(theta) > one


def aggregate(
    per_event: list[tuple[Event, np.ndarray, float]],
    polarity_class: str,
    windows: StudyWindows = StudyWindows(),
) -> EventStudyResult:
    """Cross-event aggregation for one polarity class.

    ``per_event`` holds (event, per-lag AR, residual variance) triples; only
    rows matching ``polarity_class`` enter.  An empty class yields zero-filled
    arrays with n_events = 0.
    """
    rows = [
        (ar, var) for event, ar, var in per_event
        if event.polarity_class == polarity_class
    ]
    lags = windows.lags
    if not rows:
        z = np.zeros(windows.n_lags)
        return EventStudyResult(
            polarity_class, lags, z, z.copy(), z.copy(), z.copy(),
            np.zeros(windows.n_lags, bool), np.zeros(windows.n_lags, bool), 0,
        )
    ar_matrix = np.vstack([ar for ar, _ in rows])
    variances = np.array([var for _, var in rows])
    n = len(rows)
    abar = ar_matrix.mean(axis=0)
    car = np.cumsum(abar)
    accumulated = np.arange(1, windows.n_lags + 1, dtype=np.float64)
    var_car = accumulated * variances.sum() / (n * n)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(
            var_car > 0,
            car / np.sqrt(var_car),
            np.where(car == 0, 0.0, np.sign(car) * np.inf),
        )
    sig5, sig1 = significance(theta)
    return EventStudyResult(
        polarity_class, lags, abar, car, var_car, theta, sig5, sig1, n
    )


def run_study(
    panels: dict,
    events_by_mode: dict,
    windows: StudyWindows = StudyWindows(),
    mode: str = "all",
) -> StudyOutcome:
    """Full study for one event-list mode ("all" or "non_ea").

    ``panels`` maps ticker -> AlignedPanel.  Events land on the first trading
    day on/after their calendar date; events without enough estimation history
    or full window coverage are dropped with a reason in the outcome log.
    """
    if mode not in events_by_mode:
        raise ValidationError(
            f"run_study: mode {mode!r} not in {sorted(events_by_mode)}"
        )
    per_event: list[tuple[Event, np.ndarray, float]] = []
    dropped: list[DroppedEvent] = []
    cache: dict = {}
    for event in events_by_mode[mode]:
        panel: AlignedPanel | None = panels.get(event.ticker)
        if panel is None:
            dropped.append(DroppedEvent(event.ticker, event.date, "no panel"))
            continue
        if event.ticker not in cache:
            cache[event.ticker] = (
                ReturnSeries(event.ticker, panel.dates, panel.returns),
                ReturnSeries("market", panel.dates, panel.market_returns),
                panel.calendar,
            )
        stock, market, calendar = cache[event.ticker]
        trading_day = calendar.next_on_or_after(event.date)
        if trading_day is None:
            dropped.append(
                DroppedEvent(event.ticker, event.date, "beyond trading calendar")
            )
            continue
        try:
            model = estimate_market_model(stock, market, trading_day, windows)
            ar = abnormal_returns(stock, market, model, windows, trading_day)
        except InsufficientHistoryError:
            dropped.append(
                DroppedEvent(event.ticker, event.date, "insufficient history")
            )
            continue
        except EventWindowError:
            dropped.append(
                DroppedEvent(event.ticker, event.date, "incomplete event window")
            )
            continue
        per_event.append((event, ar, model.resid_variance))
    results = {
        cls: aggregate(per_event, cls, windows) for cls in CLASSES
    }
    return StudyOutcome(mode=mode, results=results, dropped=tuple(dropped))

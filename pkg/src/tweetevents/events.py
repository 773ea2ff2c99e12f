"""Twitter-volume peak detection and event construction.

Peaks are days whose volume exceeds the sliding-window median baseline by the
outlier-fraction threshold; surviving peaks are separation-filtered, tagged
against earnings-announcement dates, and assigned a sentiment class from the
peak day's polarity.  Detection runs on raw calendar days; mapping onto
trading days is the event study's concern.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import BoundaryError, ValidationError
from .timeseries import PolaritySeries, TweetDailySeries

NEGATIVE = "negative"
NEUTRAL = "neutral"
POSITIVE = "positive"
CLASSES = (NEGATIVE, NEUTRAL, POSITIVE)


@dataclass(frozen=True)
class PeakParams:
    """Sliding-window detector parameters."""

    half_window: int = 5        # window covers 2*half_window + 1 days
    min_activity: int = 10      # regularization floor for the denominator
    threshold: float = 2.0      # minimum outlier fraction for a peak
    min_separation: int = 21    # surviving peaks are >= this many days apart

    def __post_init__(self):
        if self.half_window < 1:
            raise ValidationError("PeakParams: half_window must be >= 1")
        if self.min_activity < 1:
            raise ValidationError("PeakParams: min_activity must be >= 1")
        if self.threshold <= 0:
            raise ValidationError("PeakParams: threshold must be > 0")
        if self.min_separation < 1:
            raise ValidationError("PeakParams: min_separation must be >= 1")


@dataclass(frozen=True)
class PolarityThresholds:
    """Class boundaries on the peak-day polarity: negative below ``lower``,
    positive above ``upper``, neutral on the closed interval between."""

    lower: float = 0.15
    upper: float = 0.7

    def __post_init__(self):
        if not (-1 <= self.lower < self.upper <= 1):
            raise ValidationError(
                f"PolarityThresholds: need -1 <= lower < upper <= 1, "
                f"got ({self.lower}, {self.upper})"
            )

    def classify(self, polarity: float) -> str:
        if np.isnan(polarity):
            return NEUTRAL
        if polarity < self.lower:
            return NEGATIVE
        if polarity <= self.upper:
            return NEUTRAL
        return POSITIVE


@dataclass(frozen=True)
class Event:
    """A detected Twitter-volume peak."""

    ticker: str
    date: dt.date
    phi: float
    polarity_value: float = float("nan")
    polarity_class: str | None = None
    is_ea: bool = False


def outlier_fraction(series: TweetDailySeries, day: dt.date, params: PeakParams) -> float:
    """Outlier fraction phi for one day; the centered window must fit."""
    first = series.dates[0]
    i = (day - first).days
    left, right = i - params.half_window, i + params.half_window
    if i < 0 or left < 0 or right >= len(series):
        raise BoundaryError(
            f"outlier_fraction[{series.ticker}]: window around {day} out of range"
        )
    window = series.total[left : right + 1].astype(np.float64)
    baseline = float(np.median(window))
    return (float(window[params.half_window]) - baseline) / max(
        baseline, float(params.min_activity)
    )


def _separation_filter(
    candidates: list[tuple[dt.date, float]], min_separation: int
) -> list[tuple[dt.date, float]]:
    """Greedy keep in descending phi (earlier date on ties); a candidate
    survives iff every kept peak is >= min_separation days away."""
    kept: list[tuple[dt.date, float]] = []
    for day, phi in sorted(candidates, key=lambda c: (-c[1], c[0])):
        if all(abs((day - k).days) >= min_separation for k, _ in kept):
            kept.append((day, phi))
    kept.sort()
    return kept


def _detect(dates, volume, ticker, params):
    """Detection core over an explicit (dates, volume) pair.

    ``dates`` need not be contiguous (the stitched non-EA series is not);
    the sliding window runs over positions while the separation filter
    measures distance in original calendar days.
    """
    if len(volume) < 2 * params.half_window + 1:
        raise ValidationError(
            f"detect_peaks[{ticker}]: series shorter than the "
            f"{2 * params.half_window + 1}-day window"
        )
    phi = kernels.phi_series(
        np.asarray(volume, dtype=np.float64),
        params.half_window,
        float(params.min_activity),
    )
    candidates = [
        (dates[i], float(phi[i]))
        for i in np.flatnonzero(np.nan_to_num(phi, nan=-np.inf) > params.threshold)
    ]
    kept = _separation_filter(candidates, params.min_separation)
    return [Event(ticker, day, phi) for day, phi in kept]


def detect_peaks(series: TweetDailySeries, params: PeakParams = PeakParams()) -> list[Event]:
    """All activity peaks (phi > threshold) after separation filtering.

    Days within half_window of either end have no full window and are
    undetectable by construction (no padding is applied).
    """
    return _detect(series.dates, series.total, series.ticker, params)


def tag_ea(events: list[Event], ea_dates: list[tuple[str, dt.date]]) -> list[Event]:
    """Flag events with an earnings announcement within one day."""
    by_ticker: dict[str, list[dt.date]] = {}
    for ticker, day in ea_dates:
        by_ticker.setdefault(ticker, []).append(day)
    out = []
    for event in events:
        near = any(
            abs((event.date - day).days) <= 1
            for day in by_ticker.get(event.ticker, ())
        )
        out.append(replace(event, is_ea=near))
    return out


def detect_non_ea(
    series: TweetDailySeries,
    ea_dates: list[tuple[str, dt.date]],
    params: PeakParams = PeakParams(),
) -> list[Event]:
    """Re-run detection with [d-1, d+1] around each same-ticker EA date removed.

    The timeline is stitched (removed days are cut out, not zero-filled), so
    the sliding median sees contiguous data; reported event dates stay in
    original calendar coordinates.
    """
    excluded = set()
    for ticker, day in ea_dates:
        if ticker != series.ticker:
            continue
        for off in (-1, 0, 1):
            excluded.add(day + dt.timedelta(days=off))
    keep = [i for i, day in enumerate(series.dates) if day not in excluded]
    dates = [series.dates[i] for i in keep]
    volume = series.total[keep]
    return _detect(dates, volume, series.ticker, params)


def assign_polarity(
    events: list[Event],
    polarity: PolaritySeries,
    thresholds: PolarityThresholds = PolarityThresholds(),
) -> list[Event]:
    """Attach the peak day's polarity value and its class to each event.

    Days without a polarity value (no non-neutral tweets) classify as neutral.
    """
    out = []
    for event in events:
        value = polarity.value_on(event.date)
        out.append(
            replace(
                event,
                polarity_value=value,
                polarity_class=thresholds.classify(value),
            )
        )
    return out


def derive_thresholds(peak_polarities) -> PolarityThresholds:
    """Tercile thresholds (33.3%/66.7% quantiles, linear interpolation) so the
    three classes come out approximately equal-sized.

    Degenerate spreads fall back to the fixed defaults with a warning.
    """
    arr = np.asarray(peak_polarities, dtype=np.float64)
    values = arr[~np.isnan(arr)]
    if len(values) < 3:
        raise ValidationError(
            f"derive_thresholds: need at least 3 polarity values, got {len(values)}"
        )
    lower, upper = np.quantile(values, [1.0 / 3.0, 2.0 / 3.0])
    if not lower < upper:
        warnings.warn(
            "derive_thresholds: degenerate polarity spread, using fixed defaults",
            stacklevel=2,
        )
        return PolarityThresholds()
    return PolarityThresholds(float(lower), float(upper))

"""Command-line pipeline: ingest, correlate, granger, events, study, sentiment.

Configuration is a flat ``key = value`` text file overridden by command-line
flags (flags > file > defaults); ``TWEETEVENTS_OUTDIR`` overrides the output
directory on top of everything.  Every CSV output starts with a comment line
carrying the tool version, config hash and seed; JSON outputs embed the same
fields under a leading ``_meta`` key.  Commands are deterministic given
(inputs, config, seed): per-ticker work may fan out over a bounded worker
pool, but results are always written in sorted ticker order.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import click
import numpy as np

from . import __version__
from .errors import (
    DegenerateInputError,
    PipelineError,
    TweetEventsError,
    ValidationError,
)
from .events import (
    CLASSES,
    Event,
    PeakParams,
    PolarityThresholds,
    assign_polarity,
    derive_thresholds,
    detect_non_ea,
    detect_peaks,
    tag_ea,
)
from .eventstudy import StudyWindows, run_study
from .ingest import (
    read_ea_dates,
    read_labeled_tweets,
    read_prices,
    read_tweets,
    summarize_tweets,
)
from .sentiment import (
    TrainConfig,
    agreement,
    cross_validate,
    evaluate,
    model_from_json,
    model_to_json,
    predict,
    train,
)
from .stats import granger_pipeline, pearson
from .timeseries import align, compute_polarity, compute_returns

log = logging.getLogger("tweetevents")

OUTDIR_ENV = "TWEETEVENTS_OUTDIR"


@dataclass
class RunConfig:
    """All knobs of the pipeline; field names double as config-file keys."""

    prices: str | None = None
    tweets: str | None = None
    market: str | None = None
    ea_dates: str | None = None
    labeled: str | None = None
    market_ticker: str = "DJIA"
    peak_half_window: int = 5
    peak_min_activity: int = 10
    peak_threshold: float = 2.0
    peak_min_separation: int = 21
    polarity_thresholds: str = "fixed"      # "fixed" or "derive"
    polarity_lower: float = 0.15
    polarity_upper: float = 0.7
    est_window: int = 120
    lag_min: int = -10
    lag_max: int = 10
    granger_max_order: int = 5
    level: float = 0.05
    missing_polarity: str = "zero"          # "zero" or "drop"
    outdir: str = "out"
    seed: int = 0
    workers: int = 1
    svm_reg: float = 0.05
    svm_epochs: int = 400
    cv_folds: int = 10

    def peak_params(self) -> PeakParams:
        return PeakParams(
            half_window=self.peak_half_window,
            min_activity=self.peak_min_activity,
            threshold=self.peak_threshold,
            min_separation=self.peak_min_separation,
        )

    def windows(self) -> StudyWindows:
        return StudyWindows(self.est_window, self.lag_min, self.lag_max)

    def train_config(self) -> TrainConfig:
        return TrainConfig(reg=self.svm_reg, epochs=self.svm_epochs)

    def config_hash(self) -> str:
        payload = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def require(self, *fields: str) -> None:
        for name in fields:
            path = getattr(self, name)
            if not path:
                raise ValidationError(f"config: {name} input path is required")
            if not os.path.exists(path):
                raise ValidationError(f"config: {name} path {path!r} does not exist")


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ValidationError(f"config: unknown key {key!r}")
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
    except ValueError:
        raise ValidationError(f"config: bad value {raw!r} for {key}") from None
    return raw


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Defaults < config file < flags; the outdir env var wins last."""
    config = RunConfig()
    if path:
        with open(path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValidationError(f"{path}:{ln}: expected key = value")
                key, _, raw = line.partition("=")
                key = key.strip()
                setattr(config, key, _coerce(key, raw))
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, _coerce(key, str(value)))
    env_outdir = os.environ.get(OUTDIR_ENV)
    if env_outdir:
        config.outdir = env_outdir
    return config


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _meta_line(config: RunConfig) -> str:
    return f"# tweetevents={__version__} config={config.config_hash()} seed={config.seed}"


def _fmt(value) -> str:
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return f"{value:.10g}"
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return str(value)


def _write_csv(config: RunConfig, name: str, header: list[str], rows) -> str:
    os.makedirs(config.outdir, exist_ok=True)
    path = os.path.join(config.outdir, name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_meta_line(config) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])
    return path


def _write_json(config: RunConfig, name: str, payload: dict) -> str:
    os.makedirs(config.outdir, exist_ok=True)
    path = os.path.join(config.outdir, name)
    document = {
        "_meta": {
            "tweetevents": __version__,
            "config": config.config_hash(),
            "seed": config.seed,
        }
    }
    document.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _pool_map(workers: int, fn, items):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# Data assembly
# ---------------------------------------------------------------------------

def _load_market(config: RunConfig):
    market_prices = read_prices(config.market)
    if config.market_ticker not in market_prices:
        raise ValidationError(
            f"market file has no ticker {config.market_ticker!r} "
            f"(found {sorted(market_prices)})"
        )
    return compute_returns(market_prices[config.market_ticker])


def build_panels(config: RunConfig):
    """Per-ticker aligned panels for every ticker with both prices and tweets."""
    config.require("prices", "tweets", "market")
    prices = read_prices(config.prices)
    tweets = read_tweets(config.tweets)
    market = _load_market(config)

    def per_ticker(ticker):
        returns = compute_returns(prices[ticker])
        polarity = compute_polarity(tweets[ticker])
        return ticker, align(returns, tweets[ticker], polarity, market)

    shared = sorted(set(prices) & set(tweets))
    panels = dict(sorted(_pool_map(config.workers, per_ticker, shared)))
    if not panels:
        raise ValidationError("no ticker appears in both the price and tweet inputs")
    return panels, tweets


def detect_all_events(config: RunConfig, tweets) -> dict:
    """Detect, EA-tag and classify events in both modes for every ticker."""
    params = config.peak_params()
    ea = read_ea_dates(config.ea_dates) if config.ea_dates else []

    def per_ticker(ticker):
        series = tweets[ticker]
        polarity = compute_polarity(series)
        all_events = tag_ea(detect_peaks(series, params), ea)
        non_ea = tag_ea(detect_non_ea(series, ea, params), ea)
        return ticker, all_events, non_ea, polarity

    rows = _pool_map(config.workers, per_ticker, sorted(tweets))
    all_events, non_ea_events = [], []
    polarity_by_ticker = {}
    for ticker, evs, non_evs, polarity in sorted(rows, key=lambda r: r[0]):
        all_events.extend(evs)
        non_ea_events.extend(non_evs)
        polarity_by_ticker[ticker] = polarity

    if config.polarity_thresholds == "derive":
        values = [
            polarity_by_ticker[e.ticker].value_on(e.date) for e in all_events
        ]
        thresholds = derive_thresholds(values)
    else:
        thresholds = PolarityThresholds(config.polarity_lower, config.polarity_upper)

    def classify(events_list):
        out = []
        for event in events_list:
            out.extend(
                assign_polarity([event], polarity_by_ticker[event.ticker], thresholds)
            )
        return out

    return {
        "all": classify(all_events),
        "non_ea": classify(non_ea_events),
        "thresholds": thresholds,
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_ingest(config: RunConfig) -> str:
    config.require("tweets")
    tweets = read_tweets(config.tweets)
    if not tweets:
        log.warning("ingest: %s parsed to zero rows", config.tweets)
    summaries = summarize_tweets(tweets)
    rows = [
        [s.ticker, s.first_date, s.last_date, s.days, s.negative, s.neutral,
         s.positive, s.total_tweets]
        for s in summaries
    ]
    rows.append(
        ["TOTAL", "", "", "", sum(s.negative for s in summaries),
         sum(s.neutral for s in summaries), sum(s.positive for s in summaries),
         sum(s.total_tweets for s in summaries)]
    )
    path = _write_csv(
        config, "ingest_summary.csv",
        ["ticker", "first_date", "last_date", "days", "neg", "neu", "pos", "total"],
        rows,
    )
    for row in rows:
        click.echo(f"{row[0]:>6}  {row[7]:>10} tweets")
    return path


def cmd_correlate(config: RunConfig) -> str:
    panels, _ = build_panels(config)

    def per_ticker(ticker):
        panel = panels[ticker]
        values, mask = panel.polarity_filled(config.missing_polarity)
        returns = panel.returns[mask]
        try:
            rho = pearson(values, returns)
        except (DegenerateInputError, ValidationError) as exc:
            log.warning("correlate: skipping %s: %s", ticker, exc)
            return ticker, None, int(mask.sum())
        return ticker, rho, int(mask.sum())

    results = _pool_map(config.workers, per_ticker, sorted(panels))
    rows = [
        [ticker, n, rho] for ticker, rho, n in sorted(results) if rho is not None
    ]
    return _write_csv(config, "correlations.csv", ["ticker", "n_days", "rho"], rows)


def cmd_granger(config: RunConfig) -> str:
    panels, _ = build_panels(config)

    def per_ticker(ticker):
        panel = panels[ticker]
        values, mask = panel.polarity_filled(config.missing_polarity)
        flags = {}
        status = []
        try:
            rep = granger_pipeline(
                values, panel.returns[mask], config.granger_max_order, config.level
            )
            flags["p_causes_r"] = rep.x_causes_y.reject
            flags["r_causes_p"] = rep.y_causes_x.reject
        except (PipelineError, TweetEventsError) as exc:
            log.warning("granger: %s P/R pair failed: %s", ticker, exc)
            status.append(f"pr:{getattr(exc, 'step', 'error')}")
        try:
            rep = granger_pipeline(
                panel.tweet_volume, panel.abs_returns,
                config.granger_max_order, config.level,
            )
            flags["tw_causes_absr"] = rep.x_causes_y.reject
            flags["absr_causes_tw"] = rep.y_causes_x.reject
        except (PipelineError, TweetEventsError) as exc:
            log.warning("granger: %s TW/|R| pair failed: %s", ticker, exc)
            status.append(f"tw:{getattr(exc, 'step', 'error')}")
        return ticker, flags, ";".join(status) if status else "ok"

    results = _pool_map(config.workers, per_ticker, sorted(panels))
    columns = ["p_causes_r", "r_causes_p", "tw_causes_absr", "absr_causes_tw"]
    rows = []
    totals = dict.fromkeys(columns, 0)
    for ticker, flags, status in sorted(results):
        row = [ticker]
        for col in columns:
            flag = flags.get(col)
            row.append("" if flag is None else int(flag))
            if flag:
                totals[col] += 1
        row.append(status)
        rows.append(row)
    rows.append(["TOTALS"] + [totals[c] for c in columns] + [""])
    return _write_csv(
        config, "granger.csv", ["ticker"] + columns + ["status"], rows
    )


_EVENT_HEADER = ["ticker", "date", "phi", "polarity_value", "polarity_class", "is_ea"]


def _event_rows(events_list: list[Event]):
    ordered = sorted(events_list, key=lambda e: (e.ticker, e.date))
    return [
        [e.ticker, e.date, e.phi, e.polarity_value, e.polarity_class, e.is_ea]
        for e in ordered
    ]


def cmd_events(config: RunConfig) -> list[str]:
    config.require("tweets")
    tweets = read_tweets(config.tweets)
    bundle = detect_all_events(config, tweets)
    paths = [
        _write_csv(config, "events_all.csv", _EVENT_HEADER, _event_rows(bundle["all"])),
        _write_csv(
            config, "events_non_ea.csv", _EVENT_HEADER, _event_rows(bundle["non_ea"])
        ),
    ]
    values = np.array(
        [e.polarity_value for e in bundle["all"]], dtype=np.float64
    )
    edges = np.linspace(-1.0, 1.0, 21)
    counts, _ = np.histogram(values[~np.isnan(values)], bins=edges)
    hist_rows = [
        [edges[i], edges[i + 1], int(counts[i])] for i in range(len(counts))
    ]
    hist_rows.append(["missing", "", int(np.isnan(values).sum())])
    paths.append(
        _write_csv(
            config, "polarity_hist.csv", ["bin_left", "bin_right", "count"], hist_rows
        )
    )
    click.echo(
        f"detected {len(bundle['all'])} events (all mode), "
        f"{len(bundle['non_ea'])} events (non-EA mode)"
    )
    return paths


def cmd_study(config: RunConfig) -> list[str]:
    panels, tweets = build_panels(config)
    bundle = detect_all_events(config, tweets)
    windows = config.windows()
    paths = []
    study_log: dict = {}
    for mode, file_tag in (("all", "all"), ("non_ea", "non_ea")):
        outcome = run_study(panels, bundle, windows, mode)
        rows = []
        for cls in CLASSES:
            result = outcome.results[cls]
            for j, lag in enumerate(result.lags):
                rows.append(
                    [cls, int(lag), result.abar[j], result.car[j],
                     result.var_car[j], result.theta[j],
                     bool(result.sig5[j]), bool(result.sig1[j]), result.n_events]
                )
        paths.append(
            _write_csv(
                config, f"study_{file_tag}.csv",
                ["class", "lag", "abar", "car", "var_car", "theta",
                 "sig5", "sig1", "n_events"],
                rows,
            )
        )
        curve_rows = []
        lags = windows.lags
        for j, lag in enumerate(lags):
            curve_rows.append(
                [int(lag)] + [outcome.results[cls].car[j] for cls in CLASSES]
            )
        paths.append(
            _write_csv(
                config, f"car_curves_{file_tag}.csv",
                ["lag", "car_negative", "car_neutral", "car_positive"],
                curve_rows,
            )
        )
        study_log[mode] = {
            "n_events": {cls: outcome.results[cls].n_events for cls in CLASSES},
            "dropped": [
                {"ticker": d.ticker, "date": d.date.isoformat(), "reason": d.reason}
                for d in outcome.dropped
            ],
        }
    paths.append(_write_json(config, "study_log.json", study_log))
    return paths


def _report_rows(report):
    rows = [
        ["accuracy", report.accuracy, report.ci95.get("accuracy", "")],
        ["accuracy_pm1", report.accuracy_pm1, report.ci95.get("accuracy_pm1", "")],
        ["f1_mean_extremes", report.f1_mean, report.ci95.get("f1_mean", "")],
    ]
    for label, tag in ((-1, "neg"), (0, "neu"), (1, "pos")):
        rows.append([f"precision_{tag}", report.precision[label], ""])
        rows.append([f"recall_{tag}", report.recall[label], ""])
        rows.append([f"f1_{tag}", report.f1[label], ""])
    rows.append(["n_examples", report.n_examples, ""])
    return rows


def cmd_sentiment_train(config: RunConfig, model_out: str) -> str:
    config.require("labeled")
    tweets = read_labeled_tweets(config.labeled)
    model = train(tweets, config.train_config())
    os.makedirs(os.path.dirname(os.path.abspath(model_out)), exist_ok=True)
    with open(model_out, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")
    click.echo(f"trained on {len(tweets)} tweets -> {model_out}")
    return model_out


def cmd_sentiment_eval(config: RunConfig, model_path: str | None) -> str:
    config.require("labeled")
    tweets = read_labeled_tweets(config.labeled)
    if model_path:
        with open(model_path, encoding="utf-8") as fh:
            model = model_from_json(fh.read())
        predicted = [predict(model, t.text) for t in tweets]
        report = evaluate(predicted, [t.label for t in tweets])
        name = "sentiment_eval.csv"
    else:
        report = cross_validate(
            tweets, folds=config.cv_folds, seed=config.seed,
            config=config.train_config(),
        )
        name = "sentiment_cv.csv"
    rows = _report_rows(report)
    if any(t.label2 is not None for t in tweets):
        agree = agreement(tweets)
        rows.append(["annotator_accuracy", agree.accuracy, ""])
        rows.append(["annotator_accuracy_pm1", agree.accuracy_pm1, ""])
        rows.append(["annotator_f1_mean", agree.f1_mean, ""])
    for row in rows:
        click.echo(f"{row[0]:<24} {_fmt(row[1])}")
    return _write_csv(config, name, ["measure", "value", "ci95"], rows)


def cmd_sentiment_predict(config: RunConfig, model_path: str, input_path: str) -> str:
    with open(model_path, encoding="utf-8") as fh:
        model = model_from_json(fh.read())
    with open(input_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows or rows[0][0].strip().lower() != "text":
        raise ValidationError(f"{input_path}: expected a CSV with a 'text' header column")
    out_rows = [[row[0], predict(model, row[0])] for row in rows[1:]]
    return _write_csv(config, "sentiment_predictions.csv", ["text", "label"], out_rows)


# ---------------------------------------------------------------------------
# Click wiring
# ---------------------------------------------------------------------------

_PATH_KEYS = ("prices", "tweets", "market", "ea_dates", "labeled")


def _common_options(fn):
    fn = click.option("--config", "-c", "config_path", type=click.Path(exists=True),
                      default=None, help="Flat key=value config file.")(fn)
    fn = click.option("--opt", "-O", "opts", multiple=True,
                      help="Override any config key, e.g. -O level=0.01.")(fn)
    for key in reversed(_PATH_KEYS):
        fn = click.option(f"--{key.replace('_', '-')}", key, default=None,
                          help=f"Path to the {key.replace('_', ' ')} CSV.")(fn)
    fn = click.option("--outdir", default=None, help="Output directory.")(fn)
    fn = click.option("--seed", default=None, type=int, help="Deterministic seed.")(fn)
    return fn


def _make_config(config_path, opts, **flags) -> RunConfig:
    overrides = {}
    for pair in opts:
        if "=" not in pair:
            raise ValidationError(f"-O expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value
    overrides.update({k: v for k, v in flags.items() if v is not None})
    return load_config(config_path, overrides)


@click.group()
@click.version_option(version=__version__)
def cli():
    """Twitter-volume event detection, sentiment and event-study analytics."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


@cli.command("ingest")
@_common_options
def ingest_cmd(config_path, opts, **flags):
    """Validate inputs and summarize per-ticker tweet coverage."""
    cmd_ingest(_make_config(config_path, opts, **flags))


@cli.command("correlate")
@_common_options
def correlate_cmd(config_path, opts, **flags):
    """Pearson correlation of daily polarity and returns per ticker."""
    cmd_correlate(_make_config(config_path, opts, **flags))


@cli.command("granger")
@_common_options
def granger_cmd(config_path, opts, **flags):
    """Granger-causality arrows for (polarity, returns) and (volume, |returns|)."""
    cmd_granger(_make_config(config_path, opts, **flags))


@cli.command("events")
@_common_options
def events_cmd(config_path, opts, **flags):
    """Detect Twitter-volume peaks (all and non-EA modes) with polarity."""
    cmd_events(_make_config(config_path, opts, **flags))


@cli.command("study")
@_common_options
def study_cmd(config_path, opts, **flags):
    """Market-model event study per polarity class, both event modes."""
    cmd_study(_make_config(config_path, opts, **flags))


@cli.group("sentiment")
def sentiment_group():
    """Train, evaluate or apply the ordinal sentiment classifier."""


@sentiment_group.command("train")
@click.option("--model-out", "-o", default="model.json", help="Model JSON path.")
@_common_options
def sent_train_cmd(config_path, opts, model_out, **flags):
    """Fit the ordinal classifier on a labeled CSV and write the model JSON."""
    cmd_sentiment_train(_make_config(config_path, opts, **flags), model_out)


@sentiment_group.command("eval")
@click.option("--model", "model_path", default=None,
              help="Evaluate this model file instead of cross-validating.")
@_common_options
def sent_eval_cmd(config_path, opts, model_path, **flags):
    """Evaluate a saved model, or cross-validate when no model is given."""
    cmd_sentiment_eval(_make_config(config_path, opts, **flags), model_path)


@sentiment_group.command("predict")
@click.option("--model", "model_path", required=True, help="Model JSON path.")
@click.option("--input", "-i", "input_path", required=True,
              help="CSV with a 'text' column.")
@_common_options
def sent_predict_cmd(config_path, opts, model_path, input_path, **flags):
    """Label a CSV of texts with a saved model."""
    cmd_sentiment_predict(
        _make_config(config_path, opts, **flags), model_path, input_path
    )


def main(argv=None) -> int:
    """Entry point: exit 0 on success, 2 with an error JSON on stderr otherwise."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        json.dump({"error": type(exc).__name__, "message": exc.format_message()},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    except click.exceptions.Abort:
        return 130
    except TweetEventsError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # keep the error-JSON contract even for bugs
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())

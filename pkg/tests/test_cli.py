import csv
import datetime as dt
import json
import math
import os

import numpy as np
import pytest

from tweetevents.cli import (
    RunConfig,
    build_panels,
    cmd_correlate,
    cmd_events,
    cmd_granger,
    cmd_ingest,
    cmd_sentiment_eval,
    cmd_sentiment_predict,
    cmd_sentiment_train,
    cmd_study,
    load_config,
    main,
)

from conftest import TOY_NEGATIVE, TOY_NEUTRAL, TOY_POSITIVE, weekday_dates

START = dt.date(2013, 1, 2)
N_TRADING = 441


def _prices_from_returns(first, returns):
    prices = [first]
    for r in returns:
        prices.append(prices[-1] * (1 + r))
    return prices


def _build_universe(root):
    """Two event stocks (AAA, BBB), one volume-coupled stock (CCC), a market
    index, EA dates and a labeled corpus.  Returns (paths dict, facts dict)."""
    rng = np.random.default_rng(99)
    trading = weekday_dates(START, N_TRADING)
    return_dates = trading[1:]
    n = len(return_dates)

    market_returns = rng.normal(0.0, 0.01, n)

    pos_idx, ea_idx, neg_idx = 200, 280, 240
    aaa = 1.0 * market_returns + rng.normal(0.0, 0.001, n)
    aaa[pos_idx] += 0.03
    bbb = 1.0 * market_returns + rng.normal(0.0, 0.001, n)
    bbb[neg_idx] -= 0.03

    # CCC: tweet volume on day t-1 drives the size of day-t returns
    ccc_vol = np.array(
        [
            max(int(25 + 15 * math.sin(2 * math.pi * t / 40) + rng.normal(0, 3)), 1)
            for t in range(n + 1)
        ]
    )
    z = rng.normal(0.0, 1.0, n)
    ccc = z * 0.001 * (1.0 + np.maximum(ccc_vol[:-1] - 10, 0) / 10.0)

    paths = {}

    def write(name, text):
        path = root / name
        path.write_text(text, encoding="utf-8")
        paths[name] = str(path)

    rows = ["date,ticker,close"]
    for ticker, returns in (("AAA", aaa), ("BBB", bbb), ("CCC", ccc)):
        for day, price in zip(trading, _prices_from_returns(100.0, returns)):
            rows.append(f"{day},{ticker},{price:.8f}")
    write("prices.csv", "\n".join(rows) + "\n")

    rows = ["date,ticker,close"]
    for day, price in zip(trading, _prices_from_returns(1000.0, market_returns)):
        rows.append(f"{day},DJIA,{price:.8f}")
    write("market.csv", "\n".join(rows) + "\n")

    pos_day, ea_day, neg_day = (
        return_dates[pos_idx], return_dates[ea_idx], return_dates[neg_idx],
    )
    calendar = []
    day = trading[0]
    while day <= trading[-1]:
        calendar.append(day)
        day += dt.timedelta(days=1)
    rows = ["date,ticker,neg,neu,pos"]
    for ticker, spikes in (
        ("AAA", {pos_day: (5, 80, 95), ea_day: (30, 80, 70)}),
        ("BBB", {neg_day: (90, 60, 30)}),
    ):
        for day in calendar:
            if day in spikes:
                neg_c, neu_c, pos_c = spikes[day]
            else:
                neg_c = int(rng.poisson(8))
                neu_c = int(rng.poisson(14))
                pos_c = int(rng.poisson(8))
            rows.append(f"{day},{ticker},{neg_c},{neu_c},{pos_c}")
    trading_index = {day: i for i, day in enumerate(trading)}
    for day in calendar:
        volume = int(ccc_vol[trading_index[day]]) if day in trading_index else 0
        pos_c = int(rng.integers(0, volume + 1))
        neg_c = int(rng.integers(0, volume - pos_c + 1))
        neu_c = volume - pos_c - neg_c
        rows.append(f"{day},CCC,{neg_c},{neu_c},{pos_c}")
    write("tweets.csv", "\n".join(rows) + "\n")

    write("ea.csv", f"ticker,date\nAAA,{ea_day}\n")

    rows = ["text,label"]
    for text in TOY_POSITIVE:
        rows.append(f'"{text}",1')
    for text in TOY_NEGATIVE:
        rows.append(f'"{text}",-1')
    for text in TOY_NEUTRAL:
        rows.append(f'"{text}",0')
    write("labeled.csv", "\n".join(rows) + "\n")

    facts = {
        "pos_day": pos_day,
        "ea_day": ea_day,
        "neg_day": neg_day,
        "trading": trading,
    }
    return paths, facts


@pytest.fixture(scope="module")
def universe(tmp_path_factory):
    root = tmp_path_factory.mktemp("universe")
    paths, facts = _build_universe(root)
    return root, paths, facts


def _config(root, paths, outdir_name="out", **kwargs):
    return RunConfig(
        prices=paths["prices.csv"],
        tweets=paths["tweets.csv"],
        market=paths["market.csv"],
        ea_dates=paths["ea.csv"],
        labeled=paths["labeled.csv"],
        outdir=str(root / outdir_name),
        **kwargs,
    )


def _read_output(path):
    with open(path, encoding="utf-8") as fh:
        meta = fh.readline()
        rows = list(csv.DictReader(fh))
    return meta, rows


class TestIngest:
    def test_summary_totals(self, universe):
        root, paths, _ = universe
        out = cmd_ingest(_config(root, paths, "out_ingest"))
        meta, rows = _read_output(out)
        assert meta.startswith("# tweetevents=")
        assert rows[-1]["ticker"] == "TOTAL"
        per_ticker = {r["ticker"]: int(r["total"]) for r in rows[:-1]}
        assert int(rows[-1]["total"]) == sum(per_ticker.values())
        assert set(per_ticker) == {"AAA", "BBB", "CCC"}

    def test_empty_file_gives_zero_rows(self, universe, tmp_path, caplog):
        root, paths, _ = universe
        empty = tmp_path / "empty.csv"
        empty.write_text("", encoding="utf-8")
        config = _config(root, paths, "out_ingest_empty")
        config.tweets = str(empty)
        out = cmd_ingest(config)
        _, rows = _read_output(out)
        assert len(rows) == 1 and rows[0]["ticker"] == "TOTAL"
        assert any("zero rows" in r.message for r in caplog.records)


class TestCorrelate:
    def test_one_row_per_ticker(self, universe):
        root, paths, _ = universe
        out = cmd_correlate(_config(root, paths, "out_corr"))
        _, rows = _read_output(out)
        assert [r["ticker"] for r in rows] == ["AAA", "BBB", "CCC"]
        for row in rows:
            assert -1.0 <= float(row["rho"]) <= 1.0

    def test_degenerate_ticker_skipped(self, universe, tmp_path, caplog):
        root, paths, _ = universe
        # constant polarity: every day has the same pos/neg split
        days = [START + dt.timedelta(days=i) for i in range(400)]
        rows = ["date,ticker,neg,neu,pos"]
        rows += [f"{d},DDD,5,10,5" for d in days]
        tweets = tmp_path / "tweets_ddd.csv"
        tweets.write_text("\n".join(rows) + "\n", encoding="utf-8")
        prices = tmp_path / "prices_ddd.csv"
        price_rows = ["date,ticker,close"]
        rng = np.random.default_rng(1)
        value = 100.0
        for d in days:
            if d.weekday() < 5:
                value *= 1 + rng.normal(0, 0.01)
                price_rows.append(f"{d},DDD,{value:.6f}")
        prices.write_text("\n".join(price_rows) + "\n", encoding="utf-8")
        config = _config(root, paths, "out_corr_deg")
        config.tweets = str(tweets)
        config.prices = str(prices)
        out = cmd_correlate(config)
        _, rows = _read_output(out)
        assert rows == []
        assert any("skipping DDD" in r.message for r in caplog.records)


class TestEvents:
    def test_detects_known_events(self, universe):
        root, paths, facts = universe
        outs = cmd_events(_config(root, paths, "out_events"))
        _, all_rows = _read_output(outs[0])
        by_key = {(r["ticker"], r["date"]): r for r in all_rows}
        assert set(by_key) == {
            ("AAA", str(facts["pos_day"])),
            ("AAA", str(facts["ea_day"])),
            ("BBB", str(facts["neg_day"])),
        }
        assert by_key[("AAA", str(facts["pos_day"]))]["polarity_class"] == "positive"
        assert by_key[("AAA", str(facts["pos_day"]))]["is_ea"] == "0"
        assert by_key[("AAA", str(facts["ea_day"]))]["polarity_class"] == "neutral"
        assert by_key[("AAA", str(facts["ea_day"]))]["is_ea"] == "1"
        assert by_key[("BBB", str(facts["neg_day"]))]["polarity_class"] == "negative"
        _, non_ea_rows = _read_output(outs[1])
        assert {(r["ticker"], r["date"]) for r in non_ea_rows} == {
            ("AAA", str(facts["pos_day"])),
            ("BBB", str(facts["neg_day"])),
        }
        _, hist_rows = _read_output(outs[2])
        assert len(hist_rows) == 21
        assert sum(int(r["count"]) for r in hist_rows) == 3

    def test_byte_identical_reruns(self, universe):
        root, paths, _ = universe
        outs1 = cmd_events(_config(root, paths, "out_events_rerun"))
        first = {}
        for path in outs1:
            with open(path, "rb") as fh:
                first[path] = fh.read()
        outs2 = cmd_events(_config(root, paths, "out_events_rerun"))
        assert outs1 == outs2
        for path in outs2:
            with open(path, "rb") as fh:
                assert fh.read() == first[path]


class TestStudy:
    def test_shock_recovery_and_log(self, universe):
        root, paths, facts = universe
        outs = cmd_study(_config(root, paths, "out_study"))
        named = {os.path.basename(p): p for p in outs}
        _, rows = _read_output(named["study_all.csv"])
        at_lag0 = {r["class"]: r for r in rows if r["lag"] == "0"}
        # the lag-0 average abnormal return carries the injected jump; the
        # CAR check is looser because it also accumulates 10 pre-event lags
        assert float(at_lag0["positive"]["abar"]) == pytest.approx(0.03, abs=0.004)
        assert float(at_lag0["positive"]["car"]) == pytest.approx(0.03, abs=0.01)
        assert at_lag0["positive"]["sig1"] == "1"
        assert float(at_lag0["negative"]["abar"]) == pytest.approx(-0.03, abs=0.004)
        assert float(at_lag0["negative"]["car"]) == pytest.approx(-0.03, abs=0.01)
        assert at_lag0["negative"]["sig1"] == "1"
        assert abs(float(at_lag0["neutral"]["car"])) < 0.01
        assert {r["class"] for r in rows} == {"negative", "neutral", "positive"}
        assert len(rows) == 3 * 21

        _, non_ea_rows = _read_output(named["study_non_ea.csv"])
        neutral_non_ea = [r for r in non_ea_rows if r["class"] == "neutral"]
        assert all(r["n_events"] == "0" for r in neutral_non_ea)

        with open(named["study_log.json"], encoding="utf-8") as fh:
            log = json.load(fh)
        assert "_meta" in log and log["_meta"]["tweetevents"]
        assert log["all"]["n_events"]["positive"] == 1
        assert log["non_ea"]["n_events"]["neutral"] == 0

        _, curve_rows = _read_output(named["car_curves_all.csv"])
        assert len(curve_rows) == 21
        assert {"lag", "car_negative", "car_neutral", "car_positive"} <= set(
            curve_rows[0]
        )

    def test_zero_abnormal_fixture_gives_zero_table(self, universe, tmp_path):
        root, paths, facts = universe
        # stock identical to the market: abnormal returns vanish identically
        with open(paths["market.csv"], encoding="utf-8") as fh:
            market_rows = fh.read().splitlines()[1:]
        rows = ["date,ticker,close"]
        rows += [line.replace("DJIA", "EEE") for line in market_rows]
        prices = tmp_path / "prices_eee.csv"
        prices.write_text("\n".join(rows) + "\n", encoding="utf-8")
        calendar = []
        day = facts["trading"][0]
        while day <= facts["trading"][-1]:
            calendar.append(day)
            day += dt.timedelta(days=1)
        spike_day = facts["trading"][300]
        tweet_rows = ["date,ticker,neg,neu,pos"]
        for day in calendar:
            if day == spike_day:
                tweet_rows.append(f"{day},EEE,10,100,90")
            else:
                tweet_rows.append(f"{day},EEE,5,20,5")
        tweets = tmp_path / "tweets_eee.csv"
        tweets.write_text("\n".join(tweet_rows) + "\n", encoding="utf-8")
        config = _config(root, paths, "out_study_zero")
        config.prices = str(prices)
        config.tweets = str(tweets)
        outs = cmd_study(config)
        named = {os.path.basename(p): p for p in outs}
        _, rows = _read_output(named["study_all.csv"])
        populated = [r for r in rows if r["n_events"] != "0"]
        assert populated, "spike should produce one event"
        for row in populated:
            assert abs(float(row["car"])) < 1e-10
            assert row["sig5"] == "0" and row["sig1"] == "0"


class TestGranger:
    def test_volume_drives_absolute_returns(self, universe):
        root, paths, _ = universe
        out = cmd_granger(_config(root, paths, "out_granger"))
        _, rows = _read_output(out)
        by_ticker = {r["ticker"]: r for r in rows}
        assert by_ticker["CCC"]["status"] == "ok"
        assert by_ticker["CCC"]["tw_causes_absr"] == "1"
        totals = by_ticker["TOTALS"]
        assert int(totals["tw_causes_absr"]) >= 1


class TestSentimentCommands:
    def test_train_eval_predict(self, universe, tmp_path):
        root, paths, _ = universe
        model_path = str(tmp_path / "model.json")
        cmd_sentiment_train(_config(root, paths, "out_sent"), model_path)
        assert os.path.exists(model_path)

        out = cmd_sentiment_eval(_config(root, paths, "out_sent"), model_path)
        _, rows = _read_output(out)
        measures = {r["measure"]: float(r["value"]) for r in rows}
        assert measures["accuracy"] >= 0.95
        assert measures["accuracy_pm1"] >= measures["accuracy"]

        inputs = tmp_path / "texts.csv"
        inputs.write_text(
            'text\n"great strong win today"\n"bad weak loss session"\n""\n',
            encoding="utf-8",
        )
        out = cmd_sentiment_predict(
            _config(root, paths, "out_sent"), model_path, str(inputs)
        )
        _, rows = _read_output(out)
        assert [r["label"] for r in rows] == ["1", "-1", "0"]

    def test_cross_validation_path(self, universe):
        root, paths, _ = universe
        config = _config(root, paths, "out_sent_cv")
        config.cv_folds = 5
        out = cmd_sentiment_eval(config, None)
        _, rows = _read_output(out)
        measures = {r["measure"]: r for r in rows}
        assert float(measures["accuracy"]["value"]) >= 0.95
        assert measures["accuracy"]["ci95"] != ""


class TestConfigHandling:
    def test_file_and_override_precedence(self, tmp_path):
        config_file = tmp_path / "run.cfg"
        config_file.write_text(
            "# comment line\npeak_threshold = 3.5\nseed = 7\noutdir = cfg_out\n",
            encoding="utf-8",
        )
        config = load_config(str(config_file), {})
        assert config.peak_threshold == 3.5 and config.seed == 7
        config = load_config(str(config_file), {"peak_threshold": "2.0"})
        assert config.peak_threshold == 2.0
        assert config.seed == 7

    def test_unknown_key_rejected(self, tmp_path):
        config_file = tmp_path / "run.cfg"
        config_file.write_text("no_such_key = 1\n", encoding="utf-8")
        from tweetevents.errors import ValidationError
        with pytest.raises(ValidationError):
            load_config(str(config_file), {})

    def test_bad_value_rejected(self):
        from tweetevents.errors import ValidationError
        with pytest.raises(ValidationError):
            load_config(None, {"peak_threshold": "abc"})
        with pytest.raises(ValidationError):
            load_config(None, {"seed": "1.5"})

    def test_outdir_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TWEETEVENTS_OUTDIR", str(tmp_path / "env_out"))
        config = load_config(None, {"outdir": str(tmp_path / "flag_out")})
        assert config.outdir == str(tmp_path / "env_out")

    def test_config_hash_stable(self):
        assert RunConfig().config_hash() == RunConfig().config_hash()
        assert RunConfig(seed=1).config_hash() != RunConfig().config_hash()


class TestMainEntry:
    def test_error_json_and_exit_code(self, capsys):
        code = main(["ingest", "--tweets", "/nonexistent/tweets.csv"])
        assert code == 2
        err = capsys.readouterr().err
        payload = json.loads(err)
        assert payload["error"] == "ValidationError"
        assert "tweets" in payload["message"]

    def test_happy_path_exit_zero(self, universe, tmp_path, capsys):
        root, paths, _ = universe
        code = main(
            ["ingest", "--tweets", paths["tweets.csv"],
             "--outdir", str(tmp_path / "main_out")]
        )
        assert code == 0

    def test_version_flag(self, capsys):
        code = main(["--version"])
        assert code == 0


def test_build_panels_requires_overlap(universe, tmp_path):
    root, paths, _ = universe
    from tweetevents.errors import ValidationError
    config = _config(root, paths, "out_panels")
    other = tmp_path / "tweets_other.csv"
    other.write_text(
        "date,ticker,neg,neu,pos\n2013-06-03,ZZZ,1,1,1\n", encoding="utf-8"
    )
    config.tweets = str(other)
    with pytest.raises(ValidationError):
        build_panels(config)

"""Optional parity checks against statsmodels (skipped when absent).

The hand-rolled oracles elsewhere are the primary evidence; this module adds
an independent reference implementation for the time-series test battery.
"""

import warnings

import numpy as np
import pytest

from tweetevents import stats

statsmodels = pytest.importorskip("statsmodels")

from statsmodels.stats.diagnostic import acorr_ljungbox          # noqa: E402
from statsmodels.tsa.api import VAR                              # noqa: E402
from statsmodels.tsa.stattools import adfuller, grangercausalitytests  # noqa: E402

warnings.filterwarnings("ignore", module="statsmodels")


def test_adf_statistic_parity():
    rng = np.random.default_rng(70)
    same_lag = 0
    for _ in range(10):
        x = (
            np.cumsum(rng.normal(size=400))
            if rng.random() < 0.5
            else rng.normal(size=400)
        )
        mine = stats.adf_test(x)
        sm_stat, _, sm_lag, *_ = adfuller(x, regression="c", autolag="AIC")
        if mine.detail["used_lag"] == sm_lag:
            same_lag += 1
            assert mine.statistic == pytest.approx(sm_stat, abs=1e-10)
    assert same_lag >= 8  # AIC variants agree on the lag almost always


def test_ljung_box_parity():
    rng = np.random.default_rng(71)
    for _ in range(10):
        x = rng.normal(size=500)
        mine = stats.ljung_box(x, 10)
        table = acorr_ljungbox(x, lags=[10])
        assert mine.statistic == pytest.approx(float(table["lb_stat"].iloc[0]),
                                               abs=1e-10)
        assert mine.p_value == pytest.approx(float(table["lb_pvalue"].iloc[0]),
                                             abs=1e-10)


def test_granger_f_parity():
    rng = np.random.default_rng(72)
    for _ in range(10):
        x = rng.normal(size=300)
        y = 0.3 * np.roll(x, 1) + rng.normal(size=300)
        mine = stats.granger_test(x, y, 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = grangercausalitytests(
                np.column_stack([y, x]), maxlag=[2], verbose=False
            )
        f_sm, p_sm, _, _ = res[2][0]["ssr_ftest"]
        assert mine.statistic == pytest.approx(f_sm, abs=1e-10)
        assert mine.p_value == pytest.approx(p_sm, abs=1e-10)


def test_var_bic_order_parity():
    rng = np.random.default_rng(73)
    a1 = np.array([[0.5, 0.1], [0.0, 0.4]])
    agree = 0
    for _ in range(10):
        data = np.zeros((600, 2))
        e = rng.normal(size=(600, 2))
        for t in range(1, 600):
            data[t] = a1 @ data[t - 1] + e[t]
        mine = stats.var_select_order(data, 5)
        sm_sel = VAR(data).select_order(5)
        agree += mine.by_criterion["bic"] == sm_sel.bic
    assert agree >= 9

"""Statistical primitives: correlation, OLS, distribution functions,
stationarity/autocorrelation tests, VAR order selection and the
Granger-causality pipeline.

Everything operates on plain float64 numpy arrays and returns frozen
dataclasses; no global state, safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import kernels
from .errors import (
    DegenerateInputError,
    NonStationaryError,
    PipelineError,
    SingularMatrixError,
    ValidationError,
)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test.

    ``reject`` is compared against the p-value (when present) or against the
    critical value (lower tail by default, as in the unit-root test).
    """

    name: str
    statistic: float
    level: float
    reject: bool
    p_value: float | None = None
    critical_value: float | None = None
    lower_tail: bool = True
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p_value is not None:
            consistent = self.reject == (self.p_value < self.level)
        elif self.critical_value is not None:
            if self.lower_tail:
                consistent = self.reject == (self.statistic < self.critical_value)
            else:
                consistent = self.reject == (self.statistic > self.critical_value)
        else:
            consistent = True
        if not consistent:
            raise ValidationError(f"TestReport[{self.name}]: decision inconsistent")


# ---------------------------------------------------------------------------
# Correlation and OLS
# ---------------------------------------------------------------------------

def pearson(x, y) -> float:
    """Pearson correlation in time-average form:
    (<xy> - <x><y>) / sqrt((<x^2> - <x>^2)(<y^2> - <y>^2)).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson: inputs must be 1-d of equal length")
    if len(x) < 3:
        raise ValidationError(f"pearson: need at least 3 observations, got {len(x)}")
    mx, my = x.mean(), y.mean()
    vx = np.mean(x * x) - mx * mx
    vy = np.mean(y * y) - my * my
    if vx <= 0 or vy <= 0:
        raise DegenerateInputError("pearson: zero variance input")
    rho = (np.mean(x * y) - mx * my) / np.sqrt(vx * vy)
    return float(min(1.0, max(-1.0, rho)))


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit; ``coef[0]`` is the intercept when one was included."""

    coef: np.ndarray
    residuals: np.ndarray
    resid_variance: float
    nobs: int

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=np.float64))
        object.__setattr__(
            self, "residuals", np.asarray(self.residuals, dtype=np.float64)
        )


def _design(X, intercept: bool) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if intercept:
        X = np.column_stack([np.ones(len(X)), X])
    return X


def ols(y, X, intercept: bool = True) -> OlsFit:
    """OLS by QR on the normal-equations problem; residual variance uses the
    unbiased 1/(n - k) correction (1/(L-2) for the two-parameter market model).
    """
    y = np.asarray(y, dtype=np.float64)
    design = _design(X, intercept)
    n, k = design.shape
    if n < k + 1:
        raise ValidationError(f"ols: need at least {k + 1} rows for {k} coefficients")
    coef, rss, rank_ind = kernels.qr_solve(np.ascontiguousarray(design), y)
    if rank_ind == 0.0:
        raise SingularMatrixError("ols: rank-deficient design matrix")
    resid = y - design @ coef
    return OlsFit(coef, resid, rss / (n - k), n)


def _ols_with_se(y, design):
    """(coef, se, rss, sigma2) for a prebuilt design matrix."""
    n, k = design.shape
    coef, rss, rank_ind = kernels.qr_solve(np.ascontiguousarray(design), y)
    if rank_ind == 0.0:
        raise SingularMatrixError("ols: rank-deficient design matrix")
    sigma2 = rss / (n - k)
    xtx_inv = np.linalg.inv(design.T @ design)
    se = np.sqrt(np.maximum(np.diag(xtx_inv), 0.0) * sigma2)
    return coef, se, rss, sigma2


def _lstsq_rss(design, y):
    """Minimum-norm least squares tolerant of collinear columns; returns
    (coef, rss).  Used where duplicated regressors must not abort (e.g. a
    Granger test on two identical series)."""
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(np.sum(resid * resid))


# ---------------------------------------------------------------------------
# Distribution functions
# ---------------------------------------------------------------------------

def cdf_normal(z: float) -> float:
    """Standard normal CDF via the error function."""
    return float(0.5 * (1.0 + special.erf(z / np.sqrt(2.0))))


def cdf_chi2(x: float, k: int) -> float:
    """Chi-square CDF via the regularized lower incomplete gamma function."""
    if k < 1:
        raise ValidationError(f"cdf_chi2: degrees of freedom must be >= 1, got {k}")
    if x <= 0:
        return 0.0
    return float(special.gammainc(k / 2.0, x / 2.0))


def cdf_f(x: float, d1: int, d2: int) -> float:
    """F CDF via the regularized incomplete beta function."""
    if d1 < 1 or d2 < 1:
        raise ValidationError(f"cdf_f: degrees of freedom must be >= 1, got {d1}, {d2}")
    if x <= 0:
        return 0.0
    if np.isinf(x):
        return 1.0
    return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


# ---------------------------------------------------------------------------
# Augmented Dickey-Fuller
# ---------------------------------------------------------------------------

# Critical values of the Dickey-Fuller t-statistic, constant-only regression
# (tau_mu), from the standard finite-sample tables (Fuller 1976, Table 8.5.2;
# widely reprinted).  Interpolated linearly in 1/n; the 0 row is the n -> inf
# limit.
_DF_SAMPLE_INV = np.array([0.0, 1 / 500, 1 / 250, 1 / 100, 1 / 50, 1 / 25])
_DF_CRITICAL = {
    0.01: np.array([-3.43, -3.44, -3.46, -3.51, -3.58, -3.75]),
    0.05: np.array([-2.86, -2.87, -2.88, -2.89, -2.93, -3.00]),
    0.10: np.array([-2.57, -2.57, -2.57, -2.58, -2.60, -2.63]),
}


def df_critical_value(level: float, nobs: int) -> float:
    """Dickey-Fuller critical value for the constant-only regression."""
    if level not in _DF_CRITICAL:
        raise ValidationError(
            f"adf: level must be one of {sorted(_DF_CRITICAL)}, got {level}"
        )
    inv = min(1.0 / max(nobs, 25), _DF_SAMPLE_INV[-1])
    return float(np.interp(inv, _DF_SAMPLE_INV, _DF_CRITICAL[level]))


def schwert_max_lag(n: int) -> int:
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(x, dx, lag, start):
    """Rows start..len(dx)-1 of the ADF regression with ``lag`` difference lags."""
    rows = len(dx) - start
    cols = [np.ones(rows), x[start : start + rows]]
    for j in range(1, lag + 1):
        cols.append(dx[start - j : start - j + rows])
    return dx[start:], np.column_stack(cols)


def adf_test(x, max_lag: int | None = None, level: float = 0.05) -> TestReport:
    """Augmented Dickey-Fuller unit-root test, constant-only specification.

    The difference-lag count is chosen by AIC over 0..max_lag (Schwert's
    12*(n/100)^0.25 bound when max_lag is None); the reject decision compares
    the t-ratio of the level coefficient against the embedded Dickey-Fuller
    table.  Rejection means the series looks stationary.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if max_lag is None:
        max_lag = min(schwert_max_lag(n), max(n // 2 - 3, 0))
    if max_lag < 0:
        raise ValidationError("adf: max_lag must be >= 0")
    if n < max_lag + 10:
        raise ValidationError(f"adf: series too short ({n}) for max_lag={max_lag}")
    if np.ptp(x) == 0:
        raise DegenerateInputError("adf: constant series")
    dx = np.diff(x)

    # Lag selection on the common sample so AIC values are comparable.
    best_lag, best_aic = 0, np.inf
    for lag in range(0, max_lag + 1):
        y, design = _adf_design(x, dx, lag, max_lag)
        _, rss, rank_ind = kernels.qr_solve(np.ascontiguousarray(design), y)
        if rank_ind == 0.0:
            raise SingularMatrixError("adf: rank-deficient lag design")
        nobs = len(y)
        aic = nobs * np.log(max(rss, 1e-300) / nobs) + 2 * design.shape[1]
        if aic < best_aic:
            best_aic, best_lag = aic, lag

    y, design = _adf_design(x, dx, best_lag, best_lag)
    coef, se, _, _ = _ols_with_se(y, design)
    if se[1] == 0:
        raise DegenerateInputError("adf: zero standard error on the level term")
    stat = float(coef[1] / se[1])
    crit = df_critical_value(level, len(y))
    return TestReport(
        name="adf",
        statistic=stat,
        level=level,
        reject=stat < crit,
        critical_value=crit,
        lower_tail=True,
        detail={"used_lag": best_lag, "nobs": len(y)},
    )


# ---------------------------------------------------------------------------
# Ljung-Box
# ---------------------------------------------------------------------------

def ljung_box(residuals, lags: int, level: float = 0.05) -> TestReport:
    """Ljung-Box portmanteau test: Q = n(n+2) sum_k acf_k^2 / (n-k), chi-square
    with ``lags`` degrees of freedom under no autocorrelation.
    """
    x = np.asarray(residuals, dtype=np.float64)
    n = len(x)
    if lags < 1:
        raise ValidationError("ljung_box: lags must be >= 1")
    if n <= lags + 1:
        raise ValidationError(f"ljung_box: series too short ({n}) for {lags} lags")
    if np.ptp(x) == 0:
        raise DegenerateInputError("ljung_box: constant series")
    rho = kernels.acf(x, lags)
    q = float(n * (n + 2) * np.sum(rho**2 / (n - np.arange(1, lags + 1))))
    p = 1.0 - cdf_chi2(q, lags)
    return TestReport(
        name="ljung_box",
        statistic=q,
        level=level,
        reject=p < level,
        p_value=p,
        detail={"lags": lags},
    )


# ---------------------------------------------------------------------------
# VAR model and order selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarModel:
    """VAR(p) fit: x_t = intercept + sum_l coef[l] @ x_{t-l} + e_t."""

    order: int
    intercept: np.ndarray
    coef: np.ndarray        # shape (order, K, K)
    resid_cov: np.ndarray   # unbiased estimate, (K, K)
    criteria: dict
    nobs: int
    residuals: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.coef.shape[0] != self.order:
            raise ValidationError("VarModel: coefficient matrix count != order")
        sym_gap = float(np.abs(self.resid_cov - self.resid_cov.T).max())
        if sym_gap > 1e-10 * (1.0 + float(np.abs(self.resid_cov).max())):
            raise ValidationError("VarModel: residual covariance not symmetric")


def _var_design(data, order, trim):
    """Stacked VAR regression on rows trim..T-1 (trim >= order)."""
    T, K = data.shape
    rows = T - trim
    Y = data[trim:]
    cols = [np.ones(rows)]
    for lag in range(1, order + 1):
        cols.append(data[trim - lag : T - lag])
    X = np.column_stack(cols)
    return Y, X


def fit_var(data, order: int, trim: int | None = None) -> VarModel:
    """Fit VAR(order) by per-equation OLS.

    ``trim`` drops that many leading rows instead of ``order`` so that fits of
    different orders can share one effective sample (used by order selection).
    Information criteria follow Lutkepohl with K*(K*order+1) free parameters:
        AIC  = ln det(Sigma_mle) + 2 m / T
        BIC  = ln det(Sigma_mle) + ln(T) m / T
        HQIC = ln det(Sigma_mle) + 2 ln(ln T) m / T
        FPE  = det(Sigma_mle) * ((T + q) / (T - q))^K,  q = K*order + 1
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValidationError("fit_var: data must be 2-d (time x variables)")
    T, K = data.shape
    if order < 1:
        raise ValidationError("fit_var: order must be >= 1")
    trim = order if trim is None else trim
    if trim < order:
        raise ValidationError("fit_var: trim must be >= order")
    q = K * order + 1
    if T - trim <= q + 1:
        raise ValidationError(
            f"fit_var: insufficient data (T={T}) for order {order}"
        )
    Y, X = _var_design(data, order, trim)
    nobs = len(Y)
    B, _ = _lstsq_rss(X, Y)                   # (q, K); tolerant of collinearity
    E = Y - X @ B
    cov_mle = E.T @ E / nobs
    dof = nobs - q
    cov = E.T @ E / dof
    sign, logdet = np.linalg.slogdet(cov_mle)
    if sign <= 0:
        # degenerate residual covariance (e.g. duplicated series): the fit
        # stands, criteria collapse so order selection stays deterministic
        logdet = -np.inf
    m = K * q
    criteria = {
        "aic": float(logdet + 2.0 * m / nobs),
        "bic": float(logdet + np.log(nobs) * m / nobs),
        "hqic": float(logdet + 2.0 * np.log(np.log(nobs)) * m / nobs),
        "fpe": float(np.exp(logdet) * ((nobs + q) / (nobs - q)) ** K),
    }
    coef = np.empty((order, K, K))
    for lag in range(order):
        # block rows 1 + lag*K .. 1 + (lag+1)*K of B, transposed per equation
        coef[lag] = B[1 + lag * K : 1 + (lag + 1) * K].T
    return VarModel(
        order=order,
        intercept=B[0].copy(),
        coef=coef,
        resid_cov=cov,
        criteria=criteria,
        nobs=nobs,
        residuals=E,
    )


_CRITERIA = ("aic", "bic", "fpe", "hqic")


@dataclass(frozen=True)
class OrderSelection:
    by_criterion: dict
    selected: int


def var_select_order(data, max_order: int) -> OrderSelection:
    """Arg-min VAR order per criterion over 1..max_order on a common sample;
    overall order by majority vote, ties toward the smaller order.
    """
    data = np.asarray(data, dtype=np.float64)
    T, K = data.shape
    if max_order < 1:
        raise ValidationError("var_select_order: max_order must be >= 1")
    if T <= max_order * K + K + 1:
        raise ValidationError(
            f"var_select_order: insufficient data (T={T}) for max_order={max_order}"
        )
    scores = {name: [] for name in _CRITERIA}
    for p in range(1, max_order + 1):
        model = fit_var(data, p, trim=max_order)
        for name in _CRITERIA:
            scores[name].append(model.criteria[name])
    by_criterion = {
        name: int(np.argmin(vals)) + 1 for name, vals in scores.items()
    }
    votes = np.zeros(max_order + 1, dtype=int)
    for order in by_criterion.values():
        votes[order] += 1
    selected = int(np.flatnonzero(votes == votes.max())[0])
    return OrderSelection(by_criterion=by_criterion, selected=selected)


# ---------------------------------------------------------------------------
# Granger causality
# ---------------------------------------------------------------------------

def _lagged_design(effect, cause, order, include_cause):
    rows = len(effect) - order
    cols = [np.ones(rows)]
    for lag in range(1, order + 1):
        cols.append(effect[order - lag : len(effect) - lag])
    if include_cause:
        for lag in range(1, order + 1):
            cols.append(cause[order - lag : len(cause) - lag])
    return effect[order:], np.column_stack(cols)


def granger_test(cause, effect, order: int, level: float = 0.05) -> TestReport:
    """F-test of the cause's lags in the effect's autoregression (nested OLS)."""
    cause = np.asarray(cause, dtype=np.float64)
    effect = np.asarray(effect, dtype=np.float64)
    if cause.shape != effect.shape or cause.ndim != 1:
        raise ValidationError("granger_test: series must be 1-d of equal length")
    if order < 1:
        raise ValidationError("granger_test: order must be >= 1")
    nobs = len(effect) - order
    df2 = nobs - (2 * order + 1)
    if df2 < 1:
        raise ValidationError(
            f"granger_test: insufficient observations ({len(effect)}) for order {order}"
        )
    y, x_restricted = _lagged_design(effect, cause, order, include_cause=False)
    _, x_full = _lagged_design(effect, cause, order, include_cause=True)
    _, rss_r = _lstsq_rss(x_restricted, y)
    _, rss_u = _lstsq_rss(x_full, y)
    if rss_u <= 0:
        f_stat = np.inf
        p = 0.0
    else:
        f_stat = max(0.0, (rss_r - rss_u) / order) / (rss_u / df2)
        p = 1.0 - cdf_f(f_stat, order, df2)
    return TestReport(
        name="granger",
        statistic=float(f_stat),
        level=level,
        reject=p < level,
        p_value=p,
        detail={"order": order, "df": (order, df2)},
    )


@dataclass(frozen=True)
class GrangerPipelineReport:
    """Everything the five-step procedure produced, both causal directions."""

    adf_x: TestReport
    adf_y: TestReport
    x_differenced: bool
    y_differenced: bool
    adf_x_after: TestReport | None
    adf_y_after: TestReport | None
    order_selection: OrderSelection
    var_model: VarModel
    ljung_box_reports: tuple
    x_causes_y: TestReport
    y_causes_x: TestReport


def granger_pipeline(
    x, y, max_order: int, level: float = 0.05, lb_lags: int = 10
) -> GrangerPipelineReport:
    """Run the five-step causality procedure on an aligned series pair.

    Steps: unit-root screen on both series (non-stationary series are
    first-differenced once and re-tested), VAR order selection by the four
    criteria, VAR fit, Ljung-Box on the fit's residuals (diagnostic, recorded
    per equation), then the nested-model F-test in both directions.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("granger_pipeline: series must be 1-d of equal length")

    def step(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, str(exc)) from exc

    adf_x = step("adf", adf_test, x, level=level)
    adf_y = step("adf", adf_test, y, level=level)
    x_used, y_used = x, y
    x_diff = not adf_x.reject
    y_diff = not adf_y.reject
    adf_x_after = adf_y_after = None
    if x_diff:
        x_used = np.diff(x_used)
    if y_diff:
        y_used = np.diff(y_used)
    if x_diff != y_diff:
        # keep the pair aligned: the undifferenced series loses its first day
        if x_diff:
            y_used = y_used[1:]
        else:
            x_used = x_used[1:]

    def _require_stationary(report: TestReport, label: str) -> None:
        if not report.reject:
            raise NonStationaryError(
                f"{label} remains non-stationary after one differencing"
            )

    if x_diff:
        adf_x_after = step("adf", adf_test, x_used, level=level)
        step("adf", _require_stationary, adf_x_after, "x")
    if y_diff:
        adf_y_after = step("adf", adf_test, y_used, level=level)
        step("adf", _require_stationary, adf_y_after, "y")

    panel = np.column_stack([x_used, y_used])
    selection = step("order_selection", var_select_order, panel, max_order)
    model = step("var_fit", fit_var, panel, selection.selected)
    lb = tuple(
        step("ljung_box", ljung_box, model.residuals[:, j], lb_lags, level)
        for j in range(panel.shape[1])
    )
    g_xy = step("granger", granger_test, x_used, y_used, selection.selected, level)
    g_yx = step("granger", granger_test, y_used, x_used, selection.selected, level)
    return GrangerPipelineReport(
        adf_x=adf_x,
        adf_y=adf_y,
        x_differenced=x_diff,
        y_differenced=y_diff,
        adf_x_after=adf_x_after,
        adf_y_after=adf_y_after,
        order_selection=selection,
        var_model=model,
        ljung_box_reports=lb,
        x_causes_y=g_xy,
        y_causes_x=g_yx,
    )


__all__ = [
    "TestReport",
    "pearson",
    "OlsFit",
    "ols",
    "cdf_normal",
    "cdf_chi2",
    "cdf_f",
    "df_critical_value",
    "schwert_max_lag",
    "adf_test",
    "ljung_box",
    "VarModel",
    "fit_var",
    "OrderSelection",
    "var_select_order",
    "granger_test",
    "GrangerPipelineReport",
    "granger_pipeline",
    "NonStationaryError",
]

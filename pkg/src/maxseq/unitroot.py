"""Max-type unit-root test over a panel of AR(1) series.

The statistic is n * max_i |phi_hat(i) - 1| over the first L_n series, with
an optional Phillips-style serial-correlation adjustment that subtracts
(1/2)(sigma2_hat - sigma2_eps_hat) / (n^-2 sum y_{t-1}^2) from each
n(phi_hat - 1) so the per-series limit is the pivotal Wiener functional
(1/2)(W(1)^2 - 1) / int_0^1 W^2. Critical values come from simulating the max
of independent copies of that functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .core import (
    DEFAULT_RULE,
    LagRule,
    PanelData,
    RngSeed,
    indexed_map,
    lag_sequence,
)
from .estimate import default_bandwidth, ols_ar1_no_intercept, variance_pair
from .validation import ValidationError, require

__all__ = [
    "LimitLawSample",
    "UnitRootMaxTest",
    "UnitRootResult",
    "simulate_limit_law",
    "t_stat_adjusted",
    "t_stat_raw",
    "unit_root_test",
    "wiener_coef_stats",
]


def _check_width(panel: PanelData, k: int) -> int:
    require(
        isinstance(k, (int, np.integer)) and 1 <= k <= panel.k,
        "k must be an integer in [1, panel width]",
    )
    return int(k)


def t_stat_raw(panel: PanelData, k: int) -> tuple[np.ndarray, float]:
    """Per-series n(phi_hat(i) - 1) for i = 1..k and their max absolute value.

    phi_hat is the no-intercept OLS slope of y_t on y_{t-1}.
    """
    k = _check_width(panel, k)
    n = panel.n
    per_series = np.empty(k)
    for i in range(k):
        per_series[i] = n * (ols_ar1_no_intercept(panel.series(i)) - 1.0)
    return per_series, float(np.max(np.abs(per_series)))


def t_stat_adjusted(panel: PanelData, k: int, bandwidth: int) -> tuple[np.ndarray, float]:
    """Phillips-adjusted per-series statistics and their max absolute value.

    Each entry is n(phi_hat - 1) minus
    (1/2)(sigma2_hat - sigma2_eps_hat) / (n^-2 sum_{t=2..n} y_{t-1}^2),
    with both variance estimates computed from the series' OLS residuals at
    the given Bartlett bandwidth. At bandwidth 0 the correction is exactly
    zero, so adjusted and raw statistics coincide bitwise.
    """
    k = _check_width(panel, k)
    n = panel.n
    require(
        isinstance(bandwidth, (int, np.integer)) and 0 <= bandwidth < n - 1,
        "bandwidth must be an integer in [0, n-1)",
    )
    bandwidth = int(bandwidth)
    per_series = np.empty(k)
    for i in range(k):
        y = panel.series(i)
        phi = ols_ar1_no_intercept(y)
        raw = n * (phi - 1.0)
        resid = y[1:] - phi * y[:-1]
        pair = variance_pair(resid, bandwidth)
        lagged = y[:-1]
        denom = float(lagged @ lagged) / n**2
        correction = 0.5 * (pair.sigma2_hat - pair.sigma2_eps_hat) / denom
        per_series[i] = raw - correction
    return per_series, float(np.max(np.abs(per_series)))


def wiener_coef_stats(increments: np.ndarray, ratio: float) -> np.ndarray:
    """Map rows of iid N(0,1) increments to draws of
    (1/2)(W(1)^2 - ratio) / int_0^1 W^2.

    With m columns: W(1) ~ S_m / sqrt(m) and
    int W^2 ~ m^-1 sum_j (S_j / sqrt(m))^2 for partial sums S_j.
    """
    increments = np.atleast_2d(np.asarray(increments, dtype=np.float64))
    m = increments.shape[1]
    require(m >= 1, "need at least one increment")
    partial = np.cumsum(increments, axis=1)
    w1 = partial[:, -1] / math.sqrt(m)
    int_w2 = np.einsum("ij,ij->i", partial, partial) / (m * m)
    return 0.5 * (w1 * w1 - ratio) / int_w2


@dataclass(frozen=True)
class LimitLawSample:
    """Simulated draws of the limiting max statistic.

    draws[r] = max_{i<=k} |stat_i| for replication r; signed_draws[r] is the
    signed statistic of the first coordinate, kept for quantile comparisons
    against signed finite-sample statistics.
    """

    draws: np.ndarray
    signed_draws: np.ndarray
    k: int
    m_steps: int
    reps: int
    ratio: float

    def __post_init__(self):
        require(bool(np.isfinite(self.draws).all()), "non-finite limit draw")
        require(len(self.draws) == self.reps, "draw count must equal reps")

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.draws, q))

    def signed_quantile(self, q: float) -> float:
        return float(np.quantile(self.signed_draws, q))

    def critical_value(self, level: float) -> float:
        """The ceil(level * reps)-th largest draw.

        Chosen so that (stat > critical_value) and
        (fraction of draws >= stat) < level agree exactly, ties included.
        """
        require(0.0 < level < 1.0, "level must be in (0, 1)")
        j = math.ceil(level * self.reps)
        ordered = np.sort(self.draws)[::-1]
        return float(ordered[j - 1])

    def p_value(self, stat: float) -> float:
        return float(np.count_nonzero(self.draws >= stat)) / self.reps


def simulate_limit_law(
    k: int,
    m_steps: int,
    reps: int,
    seed,
    ratio: float = 1.0,
    threads: int = 1,
) -> LimitLawSample:
    """Simulate reps draws of max_{i<=k} |(1/2)(W(i,1)^2 - ratio)/int W(i)^2|
    from k independent discretized Wiener processes per draw.

    ratio is the short-run to long-run variance ratio of the errors; 1 gives
    the pivotal law matched by the adjusted statistic. Replication r draws
    from the child stream seed.generator(r), so output is byte-identical for
    any thread count.
    """
    require(isinstance(k, (int, np.integer)) and k >= 1, "k must be an integer >= 1")
    require(isinstance(m_steps, (int, np.integer)) and m_steps >= 100, "m_steps must be >= 100")
    require(isinstance(reps, (int, np.integer)) and reps >= 1, "reps must be >= 1")
    require(float(ratio) > 0.0, "ratio must be positive")
    k, m_steps, reps, ratio = int(k), int(m_steps), int(reps), float(ratio)
    seed = RngSeed.coerce(seed)

    def one_rep(r: int) -> tuple[float, float]:
        increments = seed.generator(r).standard_normal((k, m_steps))
        stats = wiener_coef_stats(increments, ratio)
        return float(np.max(np.abs(stats))), float(stats[0])

    pairs = indexed_map(one_rep, reps, threads=threads)
    draws = np.array([p[0] for p in pairs])
    signed = np.array([p[1] for p in pairs])
    return LimitLawSample(
        draws=draws, signed_draws=signed, k=k, m_steps=m_steps, reps=reps, ratio=ratio
    )


@dataclass(frozen=True)
class UnitRootResult:
    """Outcome of the max-type unit-root test.

    per_series holds the statistic for every series in the panel; max_stat is
    the max absolute value over the first L_used entries only.
    """

    per_series: np.ndarray
    max_stat: float
    L_used: int
    critical_value: float
    p_value: float
    reject: bool
    level: float
    adjusted: bool
    bandwidth: int | None

    def __post_init__(self):
        require(0.0 <= self.p_value <= 1.0, "p_value must be in [0, 1]")
        require(1 <= self.L_used <= len(self.per_series), "L_used out of range")


def unit_root_test(
    panel: PanelData,
    rule: LagRule,
    level: float = 0.05,
    reps: int = 10_000,
    m_steps: int = 10_000,
    seed=0,
    bandwidth: int | None = None,
    adjusted: bool = True,
    ratio: float = 1.0,
    threads: int = 1,
) -> UnitRootResult:
    """Run the max unit-root test on a panel.

    The index-set size L comes from the lag rule at the panel's n and must
    not exceed the panel width. Critical value and p-value come from
    simulate_limit_law(L, ...); with adjusted=True the pivotal ratio 1 is
    used (the supplied ratio applies to the raw statistic only).
    """
    require(0.0 < float(level) < 1.0, "level must be in (0, 1)")
    level = float(level)
    L = lag_sequence(rule, panel.n)
    if L > panel.k:
        raise ValidationError("lag rule exceeds panel width")
    seed = RngSeed.coerce(seed)
    if adjusted:
        bw = default_bandwidth(panel.n) if bandwidth is None else int(bandwidth)
        per_series, _ = t_stat_adjusted(panel, panel.k, bw)
        law_ratio = 1.0
    else:
        bw = None
        per_series, _ = t_stat_raw(panel, panel.k)
        law_ratio = float(ratio)
    max_stat = float(np.max(np.abs(per_series[:L])))
    law = simulate_limit_law(L, m_steps, reps, seed, ratio=law_ratio, threads=threads)
    crit = law.critical_value(level)
    p_value = law.p_value(max_stat)
    return UnitRootResult(
        per_series=per_series,
        max_stat=max_stat,
        L_used=L,
        critical_value=crit,
        p_value=p_value,
        reject=bool(max_stat > crit),
        level=level,
        adjusted=bool(adjusted),
        bandwidth=bw,
    )


class UnitRootMaxTest(BaseEstimator):
    """Estimator wrapper around unit_root_test.

    fit(X) accepts a PanelData or an (n, k) array, one column per series,
    and exposes the result through fitted attributes (stat_, p_value_,
    reject_, critical_value_, per_series_, L_).
    """

    def __init__(
        self,
        rule: str | LagRule = "power:1:0.25",
        level: float = 0.05,
        reps: int = 10_000,
        m_steps: int = 10_000,
        bandwidth: int | None = None,
        adjusted: bool = True,
        ratio: float = 1.0,
        seed: int = 0,
        threads: int = 1,
    ):
        self.rule = rule
        self.level = level
        self.reps = reps
        self.m_steps = m_steps
        self.bandwidth = bandwidth
        self.adjusted = adjusted
        self.ratio = ratio
        self.seed = seed
        self.threads = threads

    def fit(self, X, y=None):
        panel = X if isinstance(X, PanelData) else PanelData.from_values(X)
        rule = LagRule.parse(self.rule) if isinstance(self.rule, str) else self.rule
        result = unit_root_test(
            panel,
            rule,
            level=self.level,
            reps=self.reps,
            m_steps=self.m_steps,
            seed=self.seed,
            bandwidth=self.bandwidth,
            adjusted=self.adjusted,
            ratio=self.ratio,
            threads=self.threads,
        )
        self.result_ = result
        self.stat_ = result.max_stat
        self.p_value_ = result.p_value
        self.critical_value_ = result.critical_value
        self.reject_ = result.reject
        self.per_series_ = result.per_series
        self.L_ = result.L_used
        self.n_features_in_ = panel.k
        return self

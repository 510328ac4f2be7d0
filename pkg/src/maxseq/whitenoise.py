"""Residual white-noise test: max absolute scaled autocorrelation over lags.

After fitting an AR(p) filter by OLS, the statistic is
max_{1<=h<=L} |sqrt(m) * sum_t e_t e_{t-h} / sum_t e_t^2| on the residuals.
Plug-in estimation of the filter shifts the limit away from the naive one;
the first-order expansion term
z_t(h) = [e_t e_{t-h} + D(h)' (E[x x'])^{-1} x_t e_t] / sigma2
carries that correction, and p-values come from a dependent wild bootstrap
over the fitted z terms (or from simulating a Gaussian vector with their
estimated long-run covariance kernel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .core import LagRule, RngSeed, indexed_map, lag_sequence
from .estimate import (
    ArFit,
    ar_design,
    default_bandwidth,
    long_run_variance,
    ols_arp,
    residual_autocorr,
)
from .validation import as_float_matrix, as_float_vector, require

__all__ = [
    "ExpansionComponents",
    "KernelMatrix",
    "WhiteNoiseMaxTest",
    "WnTestResult",
    "dwb_pvalue",
    "estimate_z_kernel",
    "expansion_gap",
    "expansion_terms",
    "gaussian_kernel_pvalue",
    "max_corr_stat",
    "oracle_corr_stats",
]

_METHODS = ("stats", "bootstrap", "gaussian_kernel")


@dataclass(frozen=True)
class WnTestResult:
    """Outcome of the white-noise max-correlation test.

    per_lag[h-1] holds the statistic at lag h. p_value and reject are None
    when method = "stats" (statistics only, no reference distribution).
    """

    per_lag: np.ndarray
    max_stat: float
    p_value: float | None
    reject: bool | None
    method: str
    L: int
    p: int
    block_len: int | None = None
    reps: int | None = None
    level: float | None = None

    def __post_init__(self):
        require(self.method in _METHODS, f"unknown method {self.method!r}")
        require(len(self.per_lag) == self.L, "per_lag length must equal L")
        if self.p_value is not None:
            require(0.0 < self.p_value <= 1.0, "p_value must be in (0, 1]")


@dataclass(frozen=True)
class ExpansionComponents:
    """First-order expansion pieces for one lag h.

    d_hat estimates D(h) = -E[e_t x_{t-h}] - E[e_{t-h} x_t]; z_hat holds
    z_t(h) for t = h+1..m (length m - h); xtx_inv inverts the scaled moment
    matrix of the fit.
    """

    h: int
    d_hat: np.ndarray
    z_hat: np.ndarray
    sigma2_eps: float
    xtx_inv: np.ndarray

    def __post_init__(self):
        require(self.h >= 1, "lag h must be >= 1")
        require(bool(np.isfinite(self.d_hat).all()), "non-finite value in d_hat")
        require(bool(np.isfinite(self.z_hat).all()), "non-finite value in z_hat")
        require(
            self.d_hat.shape == (self.xtx_inv.shape[0],),
            "d_hat length must match the moment matrix",
        )

    @property
    def m(self) -> int:
        """Length of the underlying residual series."""
        return len(self.z_hat) + self.h


@dataclass(frozen=True)
class KernelMatrix:
    """Bartlett long-run covariance matrix of the z terms across lags."""

    values: np.ndarray
    bandwidth: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        require(vals.ndim == 2 and vals.shape[0] == vals.shape[1], "kernel must be square")
        require(bool(np.isfinite(vals).all()), "non-finite value in kernel")
        require(bool(np.array_equal(vals, vals.T)), "kernel must be symmetric")
        require(bool((np.diag(vals) >= 0.0).all()), "kernel diagonal must be nonnegative")
        object.__setattr__(self, "values", vals)


def _fit_and_stats(series, p: int, L: int) -> tuple[ArFit, np.ndarray, float]:
    require(isinstance(L, (int, np.integer)) and L >= 1, "L must be an integer >= 1")
    L = int(L)
    fit = ols_arp(series, p)
    require(fit.m > 3 * L, f"series too short for {L} lags: need residual length > {3 * L}")
    per_lag = np.empty(L)
    for h in range(1, L + 1):
        per_lag[h - 1] = residual_autocorr(fit.residuals, h)
    return fit, per_lag, float(np.max(np.abs(per_lag)))


def max_corr_stat(series, p: int, L: int) -> WnTestResult:
    """Fit AR(p) by OLS and compute the max absolute residual autocorrelation
    statistic over lags 1..L. Statistics only: no p-value."""
    _, per_lag, max_stat = _fit_and_stats(series, p, L)
    return WnTestResult(
        per_lag=per_lag,
        max_stat=max_stat,
        p_value=None,
        reject=None,
        method="stats",
        L=len(per_lag),
        p=int(p),
    )


def expansion_terms(fit: ArFit, regressors, h: int) -> ExpansionComponents:
    """Estimate D(h) and the per-observation expansion terms z_t(h).

    D_hat(h) = -(1/m) sum_t e_t x_{t-h} - (1/m) sum_t e_{t-h} x_t over the
    overlap t = h+1..m;
    z_t(h) = [e_t e_{t-h} + D_hat(h)' xtx_inv x_t e_t] / sigma2_eps.
    """
    require(isinstance(h, (int, np.integer)) and h >= 1, "lag h must be >= 1")
    h = int(h)
    resid = fit.residuals
    design = as_float_matrix(regressors, name="regressors")
    m = len(resid)
    require(design.shape == (m, len(fit.theta_hat)), "regressors must match the fit dimensions")
    if h >= m:
        raise ValueError("lag exceeds sample")
    if fit.sigma2_eps_hat == 0.0:
        raise ValueError("degenerate residual variance")
    d_hat = -(resid[h:] @ design[: m - h]) / m - (resid[: m - h] @ design[h:]) / m
    # The estimation-effect correction enters with a plus: expanding
    # e_t(theta_hat) e_{t-h}(theta_hat) around theta_0 gives
    # sum e_t e_{t-h} + D(h)' sqrt(m)(theta_hat - theta_0) + o_p(1), and the
    # whole sum is scaled by the residual variance. The resulting per-lag
    # variance matches the classic residual-autocorrelation formula
    # 1 - (1 - phi^2) phi^(2(h-1)) for a correctly fitted AR(1).
    proj = design[h:] @ (fit.xtx_inv @ d_hat)
    z_hat = resid[h:] * (resid[: m - h] + proj) / fit.sigma2_eps_hat
    return ExpansionComponents(
        h=h,
        d_hat=d_hat,
        z_hat=z_hat,
        sigma2_eps=fit.sigma2_eps_hat,
        xtx_inv=fit.xtx_inv,
    )


def oracle_corr_stats(
    series,
    p: int,
    L: int,
    theta0,
    sigma2_eps0: float,
    xtx0,
    d0,
) -> np.ndarray:
    """Per-lag oracle expansion statistics m^{-1/2} sum_t z_t(h), h = 1..L,
    built from the errors at the true parameter theta0 with true innovation
    variance sigma2_eps0, true moment matrix xtx0 = E[x x'], and true d0
    whose row h-1 holds D(h)."""
    require(isinstance(L, (int, np.integer)) and L >= 1, "L must be an integer >= 1")
    L = int(L)
    theta0 = as_float_vector(theta0, name="theta0")
    xtx0 = as_float_matrix(xtx0, name="xtx0")
    d0 = np.asarray(d0, dtype=np.float64)
    if d0.ndim == 1:
        d0 = d0[None, :]
    require(d0.shape[0] >= L, "d0 must supply one row per lag")
    require(d0.shape[1] == len(theta0), "d0 rows must match the parameter dimension")
    require(xtx0.shape == (len(theta0), len(theta0)), "xtx0 must be (p+1) x (p+1)")
    sigma2_eps0 = float(sigma2_eps0)
    if sigma2_eps0 <= 0.0:
        raise ValueError("degenerate residual variance")
    design, resp = ar_design(series, p)
    eps0 = resp - design @ theta0
    m = len(eps0)
    require(L < m, "L must be below the residual length")
    m0_inv = np.linalg.inv(xtx0)
    oracle = np.empty(L)
    for h in range(1, L + 1):
        # same plus-signed, variance-scaled correction as expansion_terms
        proj = design[h:] @ (m0_inv @ d0[h - 1])
        z0 = eps0[h:] * (eps0[: m - h] + proj) / sigma2_eps0
        oracle[h - 1] = float(z0.sum()) / math.sqrt(m)
    return oracle


def expansion_gap(
    series,
    p: int,
    L: int,
    theta0,
    sigma2_eps0: float,
    xtx0,
    d0,
) -> float:
    """Absolute gap between the feasible max statistic and the oracle
    expansion max statistic over lags 1..L.

    The feasible side refits the model; the oracle side uses the supplied
    true moments (see oracle_corr_stats). Convergence of this gap to zero is
    what licenses bootstrap and kernel approximations built on the z terms.
    """
    _, _, max_feasible = _fit_and_stats(series, p, L)
    oracle = oracle_corr_stats(series, p, L, theta0, sigma2_eps0, xtx0, d0)
    max_oracle = float(np.max(np.abs(oracle)))
    return abs(max_feasible - max_oracle)


def estimate_z_kernel(components, bandwidth: int) -> KernelMatrix:
    """Bartlett long-run covariance matrix of the z terms across lags.

    Entry (i, j) uses the overlapping time range of the two lags' z series,
    demeaned over that range. Diagonal entries equal
    long_run_variance(z_hat, bandwidth) exactly.
    """
    comps = list(components)
    require(len(comps) >= 1, "need at least one component")
    m = comps[0].m
    require(all(c.m == m for c in comps), "components do not share a time range")
    L = len(comps)
    min_len = min(len(c.z_hat) for c in comps)
    require(
        isinstance(bandwidth, (int, np.integer)) and 0 <= bandwidth < min_len,
        "bandwidth must be an integer in [0, shortest z length)",
    )
    bandwidth = int(bandwidth)
    out = np.empty((L, L))
    for i in range(L):
        out[i, i] = long_run_variance(comps[i].z_hat, bandwidth)
        for j in range(i + 1, L):
            hi, hj = comps[i].h, comps[j].h
            start = max(hi, hj)
            za = comps[i].z_hat[start - hi :]
            zb = comps[j].z_hat[start - hj :]
            t = len(za)
            za = za - za.mean()
            zb = zb - zb.mean()
            acc = float(za @ zb) / t
            for lag in range(1, bandwidth + 1):
                w = 1.0 - lag / (bandwidth + 1.0)
                c_ab = float(za[lag:] @ zb[:-lag]) / t
                c_ba = float(zb[lag:] @ za[:-lag]) / t
                acc += w * (c_ab + c_ba)
            out[i, j] = acc
            out[j, i] = acc
    return KernelMatrix(values=out, bandwidth=bandwidth)


def _z_matrix(fit: ArFit, L: int) -> np.ndarray:
    """Stack z_hat rows for h = 1..L, zero-padded to the common length m."""
    z = np.zeros((L, fit.m))
    for h in range(1, L + 1):
        comp = expansion_terms(fit, fit.regressors, h)
        z[h - 1, h:] = comp.z_hat
    return z


def dwb_pvalue(
    series,
    p: int,
    L: int,
    block_len: int,
    reps: int,
    seed,
    level: float = 0.05,
    threads: int = 1,
) -> WnTestResult:
    """Dependent-wild-bootstrap p-value for the max-correlation statistic.

    Each bootstrap draw multiplies the fitted z terms by standard normal
    weights held constant over consecutive blocks of length block_len and
    takes max_h |m^{-1/2} sum_t z_t(h) xi_t|. The p-value uses the add-one
    convention (1 + #{draws >= stat}) / (1 + reps), so it is never zero.
    """
    if not isinstance(reps, (int, np.integer)) or reps < 1:
        raise ValueError("no bootstrap draws")
    reps = int(reps)
    require(0.0 < float(level) < 1.0, "level must be in (0, 1)")
    level = float(level)
    fit, per_lag, max_stat = _fit_and_stats(series, p, L)
    m = fit.m
    require(
        isinstance(block_len, (int, np.integer)) and 1 <= block_len < m,
        "block length must be an integer in [1, residual length)",
    )
    block_len = int(block_len)
    seed = RngSeed.coerce(seed)
    z = _z_matrix(fit, len(per_lag))
    n_blocks = math.ceil(m / block_len)
    root_m = math.sqrt(m)

    def one_rep(r: int) -> float:
        xi = np.repeat(seed.generator(r).standard_normal(n_blocks), block_len)[:m]
        return float(np.max(np.abs(z @ xi))) / root_m

    draws = np.array(indexed_map(one_rep, reps, threads=threads))
    p_value = (1.0 + float(np.count_nonzero(draws >= max_stat))) / (1.0 + reps)
    return WnTestResult(
        per_lag=per_lag,
        max_stat=max_stat,
        p_value=p_value,
        reject=bool(p_value < level),
        method="bootstrap",
        L=len(per_lag),
        p=int(p),
        block_len=block_len,
        reps=reps,
        level=level,
    )


def gaussian_kernel_pvalue(
    series,
    p: int,
    L: int,
    bandwidth: int | None = None,
    reps: int = 10_000,
    seed=0,
    level: float = 0.05,
    threads: int = 1,
) -> WnTestResult:
    """Cross-check p-value: simulate the max absolute entry of a mean-zero
    Gaussian vector with the estimated z covariance kernel."""
    if not isinstance(reps, (int, np.integer)) or reps < 1:
        raise ValueError("no bootstrap draws")
    reps = int(reps)
    require(0.0 < float(level) < 1.0, "level must be in (0, 1)")
    level = float(level)
    fit, per_lag, max_stat = _fit_and_stats(series, p, L)
    bw = default_bandwidth(fit.m) if bandwidth is None else int(bandwidth)
    comps = [expansion_terms(fit, fit.regressors, h) for h in range(1, len(per_lag) + 1)]
    kernel = estimate_z_kernel(comps, bw)
    eigvals, eigvecs = np.linalg.eigh(kernel.values)
    # small negative eigenvalues are rounding noise from the cross terms
    root = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    seed = RngSeed.coerce(seed)
    L_used = len(per_lag)

    def one_rep(r: int) -> float:
        return float(np.max(np.abs(root @ seed.generator(r).standard_normal(L_used))))

    draws = np.array(indexed_map(one_rep, reps, threads=threads))
    p_value = (1.0 + float(np.count_nonzero(draws >= max_stat))) / (1.0 + reps)
    return WnTestResult(
        per_lag=per_lag,
        max_stat=max_stat,
        p_value=p_value,
        reject=bool(p_value < level),
        method="gaussian_kernel",
        L=L_used,
        p=int(p),
        block_len=None,
        reps=reps,
        level=level,
    )


class WhiteNoiseMaxTest(BaseEstimator):
    """Estimator wrapper around the white-noise max-correlation test.

    fit(X) accepts a 1-D series (or single-column array). lags may be an
    integer L, a rule string like "power:1:0.25", or a LagRule evaluated at
    the series length. block = "auto" means floor(n^(1/3)).
    """

    def __init__(
        self,
        p: int = 1,
        lags: int | str | LagRule = "power:1:0.25",
        method: str = "bootstrap",
        block: int | str = "auto",
        reps: int = 500,
        level: float = 0.05,
        bandwidth: int | None = None,
        seed: int = 0,
        threads: int = 1,
    ):
        self.p = p
        self.lags = lags
        self.method = method
        self.block = block
        self.reps = reps
        self.level = level
        self.bandwidth = bandwidth
        self.seed = seed
        self.threads = threads

    def _resolve_lags(self, n: int) -> int:
        if isinstance(self.lags, (int, np.integer)) and not isinstance(self.lags, bool):
            return int(self.lags)
        rule = LagRule.parse(self.lags) if isinstance(self.lags, str) else self.lags
        return lag_sequence(rule, n)

    def fit(self, X, y=None):
        series = as_float_vector(X, name="series")
        require(self.method in _METHODS, f"unknown method {self.method!r}")
        n = len(series)
        L = self._resolve_lags(n)
        if self.method == "stats":
            result = max_corr_stat(series, self.p, L)
        elif self.method == "bootstrap":
            if self.block == "auto":
                block_len = int(math.floor(n ** (1.0 / 3.0)))
            else:
                block_len = int(self.block)
            result = dwb_pvalue(
                series,
                self.p,
                L,
                block_len,
                self.reps,
                self.seed,
                level=self.level,
                threads=self.threads,
            )
        else:
            result = gaussian_kernel_pvalue(
                series,
                self.p,
                L,
                bandwidth=self.bandwidth,
                reps=self.reps,
                seed=self.seed,
                level=self.level,
                threads=self.threads,
            )
        self.result_ = result
        self.stat_ = result.max_stat
        self.per_lag_ = result.per_lag
        self.p_value_ = result.p_value
        self.reject_ = result.reject
        self.L_ = result.L
        self.block_len_ = result.block_len
        self.n_features_in_ = 1
        return self

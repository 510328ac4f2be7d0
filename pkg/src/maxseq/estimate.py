"""Least-squares fits and variance estimators feeding the max-type tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import as_float_vector, require

__all__ = [
    "ArFit",
    "VariancePair",
    "ar_design",
    "default_bandwidth",
    "long_run_variance",
    "ols_ar1_no_intercept",
    "ols_arp",
    "residual_autocorr",
    "variance_pair",
]

# relative condition threshold past which the scaled moment matrix is treated
# as numerically singular
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ArFit:
    """OLS fit of y_t on x_t = (1, y_{t-1}, ..., y_{t-p}) over t = p+1..n.

    sigma2_eps_hat is the plain mean squared residual (no HAC correction),
    matching the denominator of the residual autocorrelation statistics.
    xtx_inv inverts the scaled moment matrix (1/m) sum x_t x_t'.
    """

    theta_hat: np.ndarray
    residuals: np.ndarray
    regressors: np.ndarray
    xtx_inv: np.ndarray
    sigma2_eps_hat: float

    @property
    def p(self) -> int:
        return len(self.theta_hat) - 1

    @property
    def m(self) -> int:
        return len(self.residuals)


def ar_design(y, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and response for an AR(p) regression with intercept.

    Row t - p - 1 of the design is (1, y_{t-1}, ..., y_{t-p}) for
    t = p+1..n, so both outputs have m = n - p rows.
    """
    y = as_float_vector(y, name="series")
    require(isinstance(p, (int, np.integer)) and p >= 0, "order p must be >= 0")
    p = int(p)
    n = len(y)
    require(n > p, "series too short for the requested order")
    m = n - p
    design = np.empty((m, p + 1))
    design[:, 0] = 1.0
    for j in range(1, p + 1):
        design[:, j] = y[p - j : n - j]
    return design, y[p:]


def ols_arp(y, p: int) -> ArFit:
    """Fit an AR(p) with intercept by least squares.

    Requires n > 3 * (p + 1) so the moment matrix has some slack; raises
    ValueError("singular moment matrix") when the scaled moment matrix is
    numerically singular (condition number above 1e12).
    """
    y = as_float_vector(y, name="series")
    require(isinstance(p, (int, np.integer)) and p >= 0, "order p must be >= 0")
    p = int(p)
    n = len(y)
    require(n > 3 * (p + 1), f"series too short for AR({p}) fit: need n > {3 * (p + 1)}")
    design, resp = ar_design(y, p)
    m = len(resp)
    gram = design.T @ design / m
    if not np.isfinite(gram).all() or np.linalg.cond(gram) > _COND_LIMIT:
        raise ValueError("singular moment matrix")
    theta = np.linalg.solve(gram, design.T @ resp / m)
    resid = resp - design @ theta
    sigma2 = float(resid @ resid / m)
    return ArFit(
        theta_hat=theta,
        residuals=resid,
        regressors=design,
        xtx_inv=np.linalg.inv(gram),
        sigma2_eps_hat=sigma2,
    )


def ols_ar1_no_intercept(y) -> float:
    """Slope of y_t on y_{t-1} with no intercept:
    sum(y_t y_{t-1}) / sum(y_{t-1}^2) over t = 2..n."""
    y = as_float_vector(y, name="series")
    require(len(y) >= 2, "series needs at least 2 observations")
    lagged = y[:-1]
    den = float(lagged @ lagged)
    if den == 0.0:
        raise ValueError("degenerate regressor")
    return float(y[1:] @ lagged) / den


def residual_autocorr(resid, h: int) -> float:
    """Scaled residual autocovariance ratio at lag h:
    sqrt(m) * sum_{t=h+1..m} e_t e_{t-h} / sum_{t=1..m} e_t^2.

    The denominator is the raw (uncentered) sum of squares.
    """
    resid = as_float_vector(resid, name="residuals")
    require(isinstance(h, (int, np.integer)) and h >= 1, "lag h must be >= 1")
    h = int(h)
    m = len(resid)
    if h >= m:
        raise ValueError("lag exceeds sample")
    den = float(resid @ resid)
    if den == 0.0:
        raise ValueError("degenerate residual variance")
    num = float(resid[h:] @ resid[:-h])
    return math.sqrt(m) * num / den


def default_bandwidth(n: int) -> int:
    """Newey-West rule of thumb: floor(4 * (n / 100)^(2/9))."""
    require(isinstance(n, (int, np.integer)) and n >= 2, "n must be an integer >= 2")
    return int(math.floor(4.0 * (int(n) / 100.0) ** (2.0 / 9.0)))


def long_run_variance(x, bandwidth: int) -> float:
    """Bartlett-kernel long-run variance of a demeaned series.

    gamma_hat_j = (1/n) sum_{t=j+1..n} (x_t - xbar)(x_{t-j} - xbar);
    the estimate is gamma_0 + 2 sum_{j=1..b} (1 - j/(b+1)) gamma_j.
    bandwidth = 0 returns the demeaned sample variance exactly.
    """
    x = as_float_vector(x, name="series")
    n = len(x)
    require(
        isinstance(bandwidth, (int, np.integer)) and 0 <= bandwidth < n,
        "bandwidth must be an integer in [0, n)",
    )
    bandwidth = int(bandwidth)
    xc = x - x.mean()
    gamma0 = float(xc @ xc) / n
    if bandwidth == 0:
        return gamma0
    acc = gamma0
    for j in range(1, bandwidth + 1):
        gamma_j = float(xc[j:] @ xc[:-j]) / n
        acc += 2.0 * (1.0 - j / (bandwidth + 1.0)) * gamma_j
    # Bartlett weights make the quadratic form nonnegative; clamp rounding
    return max(acc, 0.0)


@dataclass(frozen=True)
class VariancePair:
    """Short-run and long-run residual variance estimates.

    sigma2_eps_hat is the demeaned sample variance (bandwidth 0); sigma2_hat
    adds Bartlett-weighted autocovariances up to the stated bandwidth. At
    bandwidth 0 the two are the same float, so their difference is exactly 0.
    """

    sigma2_hat: float
    sigma2_eps_hat: float
    bandwidth: int

    def __post_init__(self):
        require(self.sigma2_hat >= 0.0, "sigma2_hat must be >= 0")
        require(self.sigma2_eps_hat >= 0.0, "sigma2_eps_hat must be >= 0")
        require(self.bandwidth >= 0, "bandwidth must be >= 0")


def variance_pair(resid, bandwidth: int) -> VariancePair:
    """Compute both residual variance estimates from one residual series."""
    sigma2_eps = long_run_variance(resid, 0)
    if bandwidth == 0:
        sigma2 = sigma2_eps
    else:
        sigma2 = long_run_variance(resid, bandwidth)
    return VariancePair(sigma2_hat=sigma2, sigma2_eps_hat=sigma2_eps, bandwidth=int(bandwidth))

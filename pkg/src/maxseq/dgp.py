"""Data generating processes for the simulation harness and tests.

Panels of AR(1) series (unit-root or stationary), single AR(p) series with an
intercept, and a small family of error processes: gaussian or scaled
student-t innovations, optionally AR(1)-dependent over time, optionally
sharing a common factor across series. All draws are derived from an RngSeed
so a (seed, spec) pair pins the output bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .core import PanelData, RngSeed
from .validation import ValidationError, require

__all__ = [
    "ArpSpec",
    "ErrorSpec",
    "PanelSpec",
    "ar1_population_moments",
    "simulate_ar1_panel",
    "simulate_arp",
    "simulate_errors",
]

# Burn-in lengths: stationary AR(1) error/temporal recursions discard 200
# start-up draws; AR(p) level recursions discard 500 (slow roots decay more
# slowly through p lags).
ERROR_BURN_IN = 200
PANEL_BURN_IN = 200
ARP_BURN_IN = 500

_DISTS = ("gaussian", "student_t")
_DEPENDENCE = ("iid", "ar1")
_CROSS = ("independent", "common_factor")


@dataclass(frozen=True)
class ErrorSpec:
    """Error process for one series.

    scale is the marginal standard deviation of one innovation; student_t
    draws are rescaled by sqrt((df - 2) / df) so the variance matches the
    gaussian case. dependence = "ar1" passes innovations through a stationary
    AR(1) filter with coefficient rho.
    """

    dist: str = "gaussian"
    df: float | None = None
    dependence: str = "iid"
    rho: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        require(self.dist in _DISTS, f"unknown error distribution {self.dist!r}")
        require(self.dependence in _DEPENDENCE, f"unknown dependence {self.dependence!r}")
        if self.dist == "student_t":
            require(self.df is not None, "student_t errors require df")
            df = float(self.df)
            require(df > 4.0, "df must exceed 4")
            object.__setattr__(self, "df", df)
        else:
            require(self.df is None, "df applies to student_t errors only")
        rho = float(self.rho)
        if self.dependence == "iid":
            require(rho == 0.0, "rho applies to ar1 dependence only")
        else:
            require(abs(rho) < 1.0, "rho must satisfy |rho| < 1")
        object.__setattr__(self, "rho", rho)
        scale = float(self.scale)
        require(scale >= 0.0 and np.isfinite(scale), "scale must be finite and >= 0")
        object.__setattr__(self, "scale", scale)


def _innovations(spec: ErrorSpec, count: int, gen: np.random.Generator) -> np.ndarray:
    if spec.dist == "gaussian":
        return spec.scale * gen.standard_normal(count)
    # variance-normalized student-t: sd equals scale for any df > 4
    adj = spec.scale * np.sqrt((spec.df - 2.0) / spec.df)
    return adj * gen.standard_t(spec.df, size=count)


def _filter_errors(spec: ErrorSpec, innov: np.ndarray) -> np.ndarray:
    """Turn an innovation stream into the error process, dropping burn-in."""
    if spec.dependence == "iid":
        return innov
    filtered = signal.lfilter([1.0], [1.0, -spec.rho], innov, axis=0)
    return filtered[ERROR_BURN_IN:]


def _innovation_count(spec: ErrorSpec, n: int) -> int:
    return n + (ERROR_BURN_IN if spec.dependence == "ar1" else 0)


def simulate_errors(spec: ErrorSpec, n: int, seed: RngSeed) -> np.ndarray:
    """Draw one error series of length n."""
    require(isinstance(n, (int, np.integer)) and n >= 1, "n must be a positive integer")
    n = int(n)
    innov = _innovations(spec, _innovation_count(spec, n), seed.generator())
    return _filter_errors(spec, innov)


@dataclass(frozen=True)
class PanelSpec:
    """Panel of k AR(1) series y_t(i) = phi_i * y_{t-1}(i) + eps_t(i).

    phi_i = 1 encodes a unit root: the series is the running sum of its
    errors with no burn-in. |phi_i| < 1 series start from a 200-step burn-in.
    common_factor mixes each series' innovations with a shared stream at
    weight factor_weight, which leaves the marginal law unchanged (gaussian
    errors only).
    """

    n: int
    k: int
    phis: tuple[float, ...]
    errors: ErrorSpec = field(default_factory=ErrorSpec)
    cross_dependence: str = "independent"
    factor_weight: float = 0.0

    def __post_init__(self):
        require(isinstance(self.n, (int, np.integer)) and self.n >= 2, "n must be an integer >= 2")
        require(isinstance(self.k, (int, np.integer)) and self.k >= 1, "k must be an integer >= 1")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        phis = tuple(float(p) for p in self.phis)
        require(len(phis) == self.k, "phis must have one entry per series")
        require(all(abs(p) <= 1.0 for p in phis), "each phi must satisfy |phi| <= 1")
        object.__setattr__(self, "phis", phis)
        require(
            self.cross_dependence in _CROSS,
            f"unknown cross dependence {self.cross_dependence!r}",
        )
        w = float(self.factor_weight)
        if self.cross_dependence == "independent":
            require(w == 0.0, "factor_weight applies to common_factor panels only")
        else:
            require(0.0 <= w < 1.0, "factor_weight must be in [0, 1)")
            require(
                self.errors.dist == "gaussian",
                "common_factor mixing requires gaussian errors to preserve the marginal law",
            )
        object.__setattr__(self, "factor_weight", w)

    @classmethod
    def uniform(cls, n: int, k: int, phi: float, **kwargs) -> "PanelSpec":
        """All k series share one AR coefficient."""
        return cls(n=n, k=k, phis=(float(phi),) * int(k), **kwargs)


def simulate_ar1_panel(spec: PanelSpec, seed: RngSeed) -> PanelData:
    """Draw a panel per spec. Series i uses the child stream seed.child(i);
    the common factor, when present, uses seed.child(k)."""
    n, k = spec.n, spec.k
    count = _innovation_count(spec.errors, n + PANEL_BURN_IN)
    innov = np.empty((count, k))
    for i in range(k):
        innov[:, i] = _innovations(spec.errors, count, seed.generator(i))
    if spec.cross_dependence == "common_factor":
        w = spec.factor_weight
        factor = _innovations(spec.errors, count, seed.generator(k))
        innov = np.sqrt(1.0 - w) * innov + np.sqrt(w) * factor[:, None]
    errors = _filter_errors(spec.errors, innov)  # (n + PANEL_BURN_IN, k)

    values = np.empty((n, k))
    for i, phi in enumerate(spec.phis):
        eps = errors[:, i]
        if phi == 1.0:
            # unit root: the series is exactly the running sum of the last n
            # error draws, started at zero
            values[:, i] = np.cumsum(eps[PANEL_BURN_IN:])
        elif abs(phi) < 1.0:
            full = signal.lfilter([1.0], [1.0, -phi], eps)
            values[:, i] = full[PANEL_BURN_IN:]
        else:
            # phi = -1: nonstationary, so no burn-in; recurse from zero over
            # the last n errors
            values[:, i] = signal.lfilter([1.0], [1.0, -phi], eps[PANEL_BURN_IN:])
    labels = tuple(f"s{i + 1}" for i in range(k))
    return PanelData(values=values, labels=labels)


@dataclass(frozen=True)
class ArpSpec:
    """Stationary AR(p) series with intercept:
    y_t = intercept + sum_j coeffs[j] * y_{t-j} + eps_t.

    Stationarity requires every root of 1 - sum_j coeffs[j] z^j to lie
    strictly outside the unit circle (modulus > 1 + 1e-8).
    """

    intercept: float
    coeffs: tuple[float, ...]
    errors: ErrorSpec = field(default_factory=ErrorSpec)

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        coeffs = tuple(float(c) for c in self.coeffs)
        require(len(coeffs) >= 1, "coeffs must be nonempty")
        require(all(np.isfinite(c) for c in coeffs), "non-finite value in coeffs")
        object.__setattr__(self, "coeffs", coeffs)
        require(np.isfinite(self.intercept), "intercept must be finite")
        # characteristic polynomial 1 - c1 z - ... - cp z^p, highest power first
        poly = np.array(tuple(-c for c in reversed(coeffs)) + (1.0,))
        roots = np.roots(poly)
        if roots.size and np.min(np.abs(roots)) <= 1.0 + 1e-8:
            raise ValidationError("nonstationary coefficient vector")

    @property
    def p(self) -> int:
        return len(self.coeffs)


def simulate_arp(spec: ArpSpec, n: int, seed: RngSeed) -> np.ndarray:
    """Draw one AR(p) series of length n after a 500-step burn-in."""
    require(isinstance(n, (int, np.integer)) and n >= 1, "n must be a positive integer")
    n = int(n)
    total = n + ARP_BURN_IN
    innov = _innovations(spec.errors, _innovation_count(spec.errors, total), seed.generator())
    eps = _filter_errors(spec.errors, innov)
    a = np.concatenate(([1.0], [-c for c in spec.coeffs]))
    y = signal.lfilter([1.0], a, spec.intercept + eps)
    return y[ARP_BURN_IN:]


def ar1_population_moments(spec: ArpSpec, n_lags: int) -> dict:
    """Population moments of a stationary AR(1) with iid errors, for use as
    oracles in the feasible-vs-true expansion comparison.

    Returns theta0 = (intercept, phi), sigma2_eps, xtx = E[x_t x_t'] for
    x_t = (1, y_{t-1}), and d0 with row h-1 holding
    D(h) = -E[eps_t x_{t-h}] - E[eps_{t-h} x_t] = -(0, phi^(h-1) sigma2_eps)
    for h = 1..n_lags.
    """
    require(spec.p == 1, "analytic moments available for AR(1) specs only")
    require(spec.errors.dependence == "iid", "analytic moments require iid errors")
    require(isinstance(n_lags, (int, np.integer)) and n_lags >= 1, "n_lags must be >= 1")
    n_lags = int(n_lags)
    c0, phi = spec.intercept, spec.coeffs[0]
    s2 = spec.errors.scale**2
    mu = c0 / (1.0 - phi)
    ey2 = mu**2 + s2 / (1.0 - phi**2)
    xtx = np.array([[1.0, mu], [mu, ey2]])
    d0 = np.zeros((n_lags, 2))
    d0[:, 1] = -(phi ** np.arange(n_lags, dtype=np.float64)) * s2
    return {
        "theta0": np.array([c0, phi]),
        "sigma2_eps": s2,
        "xtx": xtx,
        "d0": d0,
    }

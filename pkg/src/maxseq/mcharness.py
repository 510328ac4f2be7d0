"""Monte Carlo harness: coupling decay, expansion convergence, size/power,
and empirical calibration of the index-set growth rule.

Every experiment returns an McReport whose rows summarize one metric at one
(cell, n) point. Replication r of cell c draws from the child seed stream
(c, 0, r), so reports are byte-identical for a fixed (config, master seed)
regardless of thread count or scheduling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from ._serialize import dump_json, fmt_float
from .core import (
    DEFAULT_RULE,
    LagRule,
    RngSeed,
    bounded_max_transform,
    indexed_map,
    lag_sequence,
    running_max_abs,
)
from .dgp import ArpSpec, PanelSpec, ar1_population_moments, simulate_ar1_panel, simulate_arp
from .estimate import default_bandwidth
from .unitroot import simulate_limit_law, t_stat_adjusted, t_stat_raw
from .validation import ValidationError, require
from .whitenoise import dwb_pvalue, expansion_gap, max_corr_stat, oracle_corr_stats

__all__ = [
    "McReport",
    "McRow",
    "PAIR_SELECTORS",
    "calibrate_Ln",
    "size_power_experiment",
    "verify_expansion",
    "verify_max_coupling",
]

PAIR_SELECTORS = ("means_vs_zero", "feasible_vs_oracle_corr", "raw_vs_adjusted_unitroot")

# child-key namespaces under each cell index: replication draws vs. shared
# auxiliary draws (e.g. one limit-law sample per cell)
_REP_KEY = 0
_AUX_KEY = 1

_CSV_COLUMNS = (
    "experiment",
    "cell",
    "metric",
    "n",
    "L",
    "reps",
    "median",
    "mean",
    "q05",
    "q95",
    "se",
    "note",
)


@dataclass(frozen=True)
class McRow:
    """One summarized metric at one (cell, n) grid point.

    reps is the configured replication count; failed replications are
    excluded from the summary statistics and counted in note.
    """

    cell: str
    metric: str
    n: int
    L: int
    reps: int
    median: float
    mean: float
    q05: float
    q95: float
    se: float
    note: str = ""

    def __post_init__(self):
        if math.isfinite(self.median):
            require(
                self.q05 <= self.median <= self.q95,
                "quantiles must be ordered q05 <= median <= q95",
            )


@dataclass(frozen=True)
class McReport:
    """A table of McRows plus the experiment descriptor and master seed."""

    experiment: str
    master_seed: int
    rows: tuple[McRow, ...]

    def rows_for(self, metric: str | None = None, n: int | None = None, cell: str | None = None):
        out = []
        for row in self.rows:
            if metric is not None and row.metric != metric:
                continue
            if n is not None and row.n != n:
                continue
            if cell is not None and row.cell != cell:
                continue
            out.append(row)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(
                    [
                        self.experiment,
                        row.cell,
                        row.metric,
                        row.n,
                        row.L,
                        row.reps,
                        fmt_float(row.median),
                        fmt_float(row.mean),
                        fmt_float(row.q05),
                        fmt_float(row.q95),
                        fmt_float(row.se),
                        row.note,
                    ]
                )

    def to_json(self, path) -> None:
        dump_json(
            path,
            {
                "schema_version": 1,
                "experiment": self.experiment,
                "master_seed": self.master_seed,
                "rows": [
                    {
                        "cell": r.cell,
                        "metric": r.metric,
                        "n": r.n,
                        "L": r.L,
                        "reps": r.reps,
                        "median": r.median,
                        "mean": r.mean,
                        "q05": r.q05,
                        "q95": r.q95,
                        "se": r.se,
                        "note": r.note,
                    }
                    for r in self.rows
                ],
            },
        )


def _check_grid(n_grid) -> tuple[int, ...]:
    grid = tuple(int(n) for n in n_grid)
    require(len(grid) >= 1, "n_grid must be nonempty")
    require(all(n >= 2 for n in grid), "every n must be >= 2")
    require(all(a < b for a, b in zip(grid, grid[1:])), "n_grid must be strictly increasing")
    return grid


def _summarize(
    cell: str,
    metric: str,
    n: int,
    L: int,
    reps: int,
    values: list[float],
    errors: list[str],
    binomial: bool = False,
) -> McRow:
    note = ""
    if errors:
        note = f"{len(errors)} failed replications: {errors[0]}"
    if not values:
        nan = float("nan")
        return McRow(
            cell=cell, metric=metric, n=n, L=L, reps=reps,
            median=nan, mean=nan, q05=nan, q95=nan, se=nan,
            note=note or "no successful replications",
        )
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if binomial:
        se = math.sqrt(max(mean * (1.0 - mean), 0.0) / len(arr))
    else:
        se = float(arr.std()) / math.sqrt(len(arr))
    return McRow(
        cell=cell,
        metric=metric,
        n=n,
        L=L,
        reps=reps,
        median=float(np.median(arr)),
        mean=mean,
        q05=float(np.quantile(arr, 0.05)),
        q95=float(np.quantile(arr, 0.95)),
        se=se,
        note=note,
    )


def _collect(fn, reps: int, threads: int) -> tuple[list, list[str]]:
    """Run fn over replication indices, separating values from failures."""

    def guarded(r: int):
        try:
            return (fn(r), None)
        except (ValidationError, ValueError) as exc:
            return (None, str(exc))

    results = indexed_map(guarded, reps, threads=threads)
    values = [v for v, e in results if e is None]
    errors = [e for _, e in results if e is not None]
    return values, errors


def _pair_vectors(
    pair: str,
    spec,
    n: int,
    L: int,
    seed: RngSeed,
    bandwidth: int | None,
) -> tuple[np.ndarray, np.ndarray]:
    """One replication of a coupled statistic pair (X, Y), both length L."""
    if pair == "means_vs_zero":
        panel = simulate_ar1_panel(replace(spec, n=n), seed)
        means = panel.values.mean(axis=0)[:L]
        return means, np.zeros(L)
    if pair == "raw_vs_adjusted_unitroot":
        panel = simulate_ar1_panel(replace(spec, n=n), seed)
        bw = default_bandwidth(n) if bandwidth is None else bandwidth
        raw, _ = t_stat_raw(panel, L)
        adjusted, _ = t_stat_adjusted(panel, L, bw)
        return raw, adjusted
    if pair == "feasible_vs_oracle_corr":
        moments = ar1_population_moments(spec, L)
        series = simulate_arp(spec, n, seed)
        feasible = max_corr_stat(series, spec.p, L).per_lag
        oracle = oracle_corr_stats(
            series,
            spec.p,
            L,
            moments["theta0"],
            moments["sigma2_eps"],
            moments["xtx"],
            moments["d0"],
        )
        return feasible, oracle
    raise ValidationError(f"unknown pair selector {pair!r}")


def _pair_width(pair: str, spec, n: int) -> int:
    """Largest usable index-set size for a pair at sample size n."""
    if pair == "feasible_vs_oracle_corr":
        return max((n - spec.p) // 3 - 1, 1)
    return spec.k


def _check_pair_spec(pair: str, spec) -> None:
    require(pair in PAIR_SELECTORS, f"unknown pair selector {pair!r}")
    if pair == "feasible_vs_oracle_corr":
        require(isinstance(spec, ArpSpec), "feasible_vs_oracle_corr needs an AR spec")
        # fail fast if analytic moments are unavailable
        ar1_population_moments(spec, 1)
    else:
        require(isinstance(spec, PanelSpec), f"{pair} needs a panel spec")


def verify_max_coupling(
    spec,
    pair: str,
    n_grid,
    rule: LagRule,
    reps: int,
    seed,
    bandwidth: int | None = None,
    threads: int = 1,
) -> McReport:
    """Measure how tightly a coupled statistic pair tracks in the max.

    Per (n, replication) this draws the pair (X, Y) over L = rule(n) indices
    and records the coupling gap |max|X| - max|Y||, the pointwise gap
    max|X - Y| that bounds it, the raw max|X|, and the bounded transform
    1 - exp(-max|X|) whose mean is the decay diagnostic.
    """
    _check_pair_spec(pair, spec)
    grid = _check_grid(n_grid)
    require(isinstance(reps, (int, np.integer)) and reps >= 50, "reps must be >= 50")
    reps = int(reps)
    seed = RngSeed.coerce(seed)
    rows: list[McRow] = []
    for ci, n in enumerate(grid):
        L = min(lag_sequence(rule, n), _pair_width(pair, spec, n))
        if pair == "raw_vs_adjusted_unitroot" and lag_sequence(rule, n) > spec.k:
            raise ValidationError("lag rule exceeds panel width")

        def one_rep(r: int, n=n, L=L, ci=ci):
            x, y = _pair_vectors(pair, spec, n, L, seed.child(ci, _REP_KEY, r), bandwidth)
            coupling = abs(float(np.max(np.abs(x))) - float(np.max(np.abs(y))))
            pointwise = float(np.max(np.abs(x - y)))
            max_abs = float(np.max(np.abs(x)))
            bounded = bounded_max_transform(x)
            return coupling, pointwise, max_abs, bounded

        values, errors = _collect(one_rep, reps, threads)
        for idx, metric in enumerate(("coupling_gap", "pointwise_gap", "max_abs_stat", "bounded_max")):
            rows.append(
                _summarize(pair, metric, n, L, reps, [v[idx] for v in values], errors)
            )
    return McReport(experiment="coupling", master_seed=seed.master, rows=tuple(rows))


def verify_expansion(
    spec: ArpSpec,
    n_grid,
    rule: LagRule,
    reps: int,
    seed,
    threads: int = 1,
) -> McReport:
    """Tabulate the feasible-vs-oracle expansion gap across sample sizes."""
    grid = _check_grid(n_grid)
    require(isinstance(reps, (int, np.integer)) and reps >= 1, "reps must be >= 1")
    reps = int(reps)
    ar1_population_moments(spec, 1)  # fail fast when moments are not analytic
    seed = RngSeed.coerce(seed)
    rows: list[McRow] = []
    for ci, n in enumerate(grid):
        L = lag_sequence(rule, n)
        moments = ar1_population_moments(spec, L)

        def one_rep(r: int, n=n, L=L, ci=ci):
            series = simulate_arp(spec, n, seed.child(ci, _REP_KEY, r))
            return expansion_gap_from_moments(series, spec.p, L, moments)

        values, errors = _collect(one_rep, reps, threads)
        rows.append(_summarize("expansion", "expansion_gap", n, L, reps, values, errors))
    return McReport(experiment="expansion", master_seed=seed.master, rows=tuple(rows))


def expansion_gap_from_moments(series, p: int, L: int, moments: dict) -> float:
    """expansion_gap with the moment dict from ar1_population_moments."""
    return expansion_gap(
        series,
        p,
        L,
        moments["theta0"],
        moments["sigma2_eps"],
        moments["xtx"],
        moments["d0"],
    )


def size_power_experiment(
    test: str,
    dgps,
    n_grid,
    level: float,
    reps: int,
    seed,
    rule: LagRule | None = None,
    bandwidth: int | None = None,
    p: int = 1,
    block: int | str = "auto",
    boot_reps: int = 500,
    limit_reps: int = 10_000,
    m_steps: int = 10_000,
    threads: int = 1,
) -> McReport:
    """Empirical rejection rates per (DGP, n) cell.

    test = "unitroot": each dgp is a PanelSpec; the panel statistic is the
    adjusted max compared against one limit-law critical value per cell.
    test = "whitenoise": each dgp is an ArpSpec simulated at each n; the fit
    order p and block rule describe the test, not the DGP.
    """
    require(test in ("unitroot", "whitenoise"), f"unknown test selector {test!r}")
    grid = _check_grid(n_grid)
    require(0.0 < float(level) < 1.0, "level must be in (0, 1)")
    level = float(level)
    require(isinstance(reps, (int, np.integer)) and reps >= 1, "reps must be >= 1")
    reps = int(reps)
    dgps = list(dgps)
    require(len(dgps) >= 1, "need at least one DGP cell")
    rule = DEFAULT_RULE if rule is None else rule
    seed = RngSeed.coerce(seed)
    rows: list[McRow] = []
    ci = 0
    for name, spec in dgps:
        for n in grid:
            L = lag_sequence(rule, n)
            if test == "unitroot":
                require(isinstance(spec, PanelSpec), "unitroot cells need panel specs")
                if L > spec.k:
                    raise ValidationError("lag rule exceeds panel width")
                bw = default_bandwidth(n) if bandwidth is None else bandwidth
                law = simulate_limit_law(
                    L, m_steps, limit_reps, seed.child(ci, _AUX_KEY), threads=threads
                )
                crit = law.critical_value(level)

                def one_rep(r: int, n=n, L=L, ci=ci, bw=bw, crit=crit, spec=spec):
                    panel = simulate_ar1_panel(replace(spec, n=n), seed.child(ci, _REP_KEY, r))
                    per_series, _ = t_stat_adjusted(panel, L, bw)
                    return 1.0 if float(np.max(np.abs(per_series))) > crit else 0.0

            else:
                require(isinstance(spec, ArpSpec), "whitenoise cells need AR specs")
                block_len = int(math.floor(n ** (1.0 / 3.0))) if block == "auto" else int(block)

                def one_rep(r: int, n=n, L=L, ci=ci, block_len=block_len, spec=spec):
                    series = simulate_arp(spec, n, seed.child(ci, _REP_KEY, r, 0))
                    result = dwb_pvalue(
                        series,
                        p,
                        L,
                        block_len,
                        boot_reps,
                        seed.child(ci, _REP_KEY, r, 1),
                        level=level,
                    )
                    return 1.0 if result.reject else 0.0

            values, errors = _collect(one_rep, reps, threads)
            rows.append(
                _summarize(name, "rejection_rate", n, L, reps, values, errors, binomial=True)
            )
            ci += 1
    return McReport(experiment=f"size_power_{test}", master_seed=seed.master, rows=tuple(rows))


def calibrate_Ln(
    spec: PanelSpec,
    tolerance: float,
    n_grid,
    reps: int,
    seed,
    pair: str = "means_vs_zero",
    bandwidth: int | None = None,
    threads: int = 1,
) -> McReport:
    """Empirical probe of how wide the index set can grow at each n.

    For each n the coupled pair (X, Y) is drawn at full panel width and the
    median coupling gap |max_{i<=l}|X| - max_{i<=l}|Y|| is computed for every
    prefix width l = 1..k; the calibrated width is the largest l whose median
    gap is within tolerance (0 when none qualifies, noted as "none").
    """
    require(pair in ("means_vs_zero", "raw_vs_adjusted_unitroot"), f"unknown pair selector {pair!r}")
    _check_pair_spec(pair, spec)
    tolerance = float(tolerance)
    require(tolerance >= 0.0, "tolerance must be >= 0")
    grid = _check_grid(n_grid)
    require(isinstance(reps, (int, np.integer)) and reps >= 1, "reps must be >= 1")
    reps = int(reps)
    seed = RngSeed.coerce(seed)
    k = spec.k
    rows: list[McRow] = []
    for ci, n in enumerate(grid):

        def one_rep(r: int, n=n, ci=ci):
            x, y = _pair_vectors(pair, spec, n, k, seed.child(ci, _REP_KEY, r), bandwidth)
            return np.abs(running_max_abs(x) - running_max_abs(y))

        values, errors = _collect(one_rep, reps, threads)
        if values:
            medians = np.median(np.vstack(values), axis=0)
            qualifying = np.nonzero(medians <= tolerance)[0]
            l_hat = int(qualifying[-1] + 1) if qualifying.size else 0
        else:
            l_hat = 0
        note = "none" if l_hat == 0 else ""
        if errors:
            note = (note + "; " if note else "") + f"{len(errors)} failed replications: {errors[0]}"
        rows.append(
            McRow(
                cell=pair,
                metric="calibrated_L",
                n=n,
                L=l_hat,
                reps=reps,
                median=float(l_hat),
                mean=float(l_hat),
                q05=float(l_hat),
                q95=float(l_hat),
                se=0.0,
                note=note,
            )
        )
    return McReport(experiment="calibrate", master_seed=seed.master, rows=tuple(rows))

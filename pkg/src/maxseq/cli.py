"""Command-line entry point.

Subcommands: simulate (draw a panel to CSV), unitroot / whitenoise (run a
test on CSV data, JSON result), montecarlo (run a configured experiment,
CSV/JSON report), limits (tabulate the simulated limit law). Exit codes:
0 success, 1 validation error (bad flags, files, or config), 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ._serialize import dump_json, fmt_float
from .core import DEFAULT_RULE, LagRule, PanelData, RngSeed, lag_sequence
from .dgp import ArpSpec, ErrorSpec, PanelSpec, simulate_ar1_panel
from .mcharness import (
    PAIR_SELECTORS,
    calibrate_Ln,
    size_power_experiment,
    verify_expansion,
    verify_max_coupling,
)
from .unitroot import simulate_limit_law, unit_root_test
from .validation import ValidationError, require
from .whitenoise import dwb_pvalue, gaussian_kernel_pvalue, max_corr_stat

__all__ = [
    "ExperimentConfig",
    "load_panel_csv",
    "main",
    "parse_experiment_config",
    "run",
    "save_panel_csv",
]

_EXPERIMENT_KINDS = ("coupling", "expansion", "size_power", "calibrate")


def load_panel_csv(path) -> PanelData:
    """Read a panel from CSV: first row labels, then one row per time point,
    oldest first. Data rows and columns are numbered from 1 in error
    messages; the header is row 0."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row != []]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from None
    if not rows:
        raise ValidationError("empty input")
    labels = [cell.strip() for cell in rows[0]]
    body = rows[1:]
    if not body:
        raise ValidationError("empty input")
    k = len(labels)
    values = np.empty((len(body), k))
    for r, row in enumerate(body, start=1):
        if len(row) != k:
            raise ValidationError(f"malformed CSV row {r}")
        for c, cell in enumerate(row, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise ValidationError(f"parse error at ({r},{c})") from None
            if not math.isfinite(value):
                raise ValidationError(f"parse error at ({r},{c})")
            values[r - 1, c - 1] = value
    return PanelData(values=values, labels=tuple(labels))


def save_panel_csv(panel: PanelData, path) -> None:
    """Write a panel to CSV with 17 significant digits, so a load round-trips
    to the exact same floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(panel.labels)
        for row in panel.values:
            writer.writerow([fmt_float(v) for v in row])


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated contents of a montecarlo experiment config file."""

    kind: str
    n_grid: tuple[int, ...]
    reps: int
    seed: int
    rule: LagRule
    level: float
    pair: str
    tolerance: float | None
    dgps: tuple[tuple[str, object], ...]
    test: dict
    out: str | None


def _take(section: dict, name: str, keys: set) -> dict:
    unknown = set(section) - keys
    if unknown:
        raise ValidationError(f"unknown config key {sorted(unknown)[0]!r} in [{name}]")
    return section


def _parse_errors(section: dict) -> ErrorSpec:
    _take(section, "dgp.errors", {"dist", "df", "dependence", "rho", "scale"})
    return ErrorSpec(
        dist=section.get("dist", "gaussian"),
        df=section.get("df"),
        dependence=section.get("dependence", "iid"),
        rho=section.get("rho", 0.0),
        scale=section.get("scale", 1.0),
    )


def _parse_dgp(section: dict, placeholder_n: int) -> tuple[str, object]:
    require(isinstance(section, dict), "each [dgp] section must be a table")
    kind = section.get("kind")
    if kind == "ar1_panel":
        _take(
            section,
            "dgp",
            {"kind", "name", "k", "phi", "phis", "cross", "factor_weight", "errors"},
        )
        errors = _parse_errors(section.get("errors", {}))
        k = section.get("k")
        require(k is not None, "[dgp] ar1_panel requires k")
        if "phis" in section:
            phis = tuple(float(p) for p in section["phis"])
        else:
            phis = (float(section.get("phi", 1.0)),) * int(k)
        spec = PanelSpec(
            n=placeholder_n,
            k=int(k),
            phis=phis,
            errors=errors,
            cross_dependence=section.get("cross", "independent"),
            factor_weight=section.get("factor_weight", 0.0),
        )
    elif kind == "arp":
        _take(section, "dgp", {"kind", "name", "intercept", "coeffs", "errors"})
        errors = _parse_errors(section.get("errors", {}))
        coeffs = section.get("coeffs")
        require(coeffs is not None, "[dgp] arp requires coeffs")
        spec = ArpSpec(
            intercept=section.get("intercept", 0.0),
            coeffs=tuple(float(c) for c in coeffs),
            errors=errors,
        )
    else:
        raise ValidationError(f"unknown dgp kind {kind!r}; expected ar1_panel or arp")
    return str(section.get("name", kind)), spec


def parse_experiment_config(path) -> ExperimentConfig:
    """Load and fully validate a TOML experiment config.

    Every referenced field is checked here, before any computation starts;
    unknown keys are rejected so typos fail loudly.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"malformed config: {exc}") from None

    _take(data, "config", {"experiment", "dgp", "test"})
    exp = data.get("experiment")
    require(isinstance(exp, dict), "config must have an [experiment] section")
    _take(
        exp,
        "experiment",
        {"kind", "n_grid", "reps", "seed", "rule", "level", "pair", "tolerance", "out"},
    )
    kind = exp.get("kind")
    require(kind in _EXPERIMENT_KINDS, f"unknown experiment kind {kind!r}")
    n_grid = exp.get("n_grid")
    require(isinstance(n_grid, list) and len(n_grid) >= 1, "[experiment] requires n_grid")
    n_grid = tuple(int(n) for n in n_grid)
    require(all(n >= 2 for n in n_grid), "every n in n_grid must be >= 2")
    require(
        all(a < b for a, b in zip(n_grid, n_grid[1:])), "n_grid must be strictly increasing"
    )
    reps = int(exp.get("reps", 500))
    require(reps >= 1, "reps must be >= 1")
    seed = int(exp.get("seed", 0))
    rule = LagRule.parse(exp.get("rule", DEFAULT_RULE.spec_string()))
    level = float(exp.get("level", 0.05))
    require(0.0 < level < 1.0, "level must be in (0, 1)")
    pair = exp.get("pair", "means_vs_zero")
    require(pair in PAIR_SELECTORS, f"unknown pair selector {pair!r}")
    tolerance = exp.get("tolerance")
    if tolerance is not None:
        tolerance = float(tolerance)
        require(tolerance >= 0.0, "tolerance must be >= 0")
    if kind == "calibrate":
        require(tolerance is not None, "calibrate requires tolerance")

    raw_dgp = data.get("dgp")
    require(raw_dgp is not None, "config must have a [dgp] section")
    sections = raw_dgp if isinstance(raw_dgp, list) else [raw_dgp]
    dgps = tuple(_parse_dgp(s, placeholder_n=n_grid[0]) for s in sections)
    if kind != "size_power":
        require(len(dgps) == 1, f"{kind} experiments take exactly one [dgp]")
    names = [name for name, _ in dgps]
    require(len(set(names)) == len(names), "dgp names must be unique")

    test_raw = data.get("test", {})
    _take(
        test_raw,
        "test",
        {"type", "rule", "p", "block", "reps", "limit_reps", "m_steps", "bandwidth"},
    )
    test = {
        "type": test_raw.get("type", "unitroot"),
        "rule": LagRule.parse(test_raw["rule"]) if "rule" in test_raw else rule,
        "p": int(test_raw.get("p", 1)),
        "block": test_raw.get("block", "auto"),
        "boot_reps": int(test_raw.get("reps", 500)),
        "limit_reps": int(test_raw.get("limit_reps", 10_000)),
        "m_steps": int(test_raw.get("m_steps", 10_000)),
        "bandwidth": test_raw.get("bandwidth", "auto"),
    }
    require(test["type"] in ("unitroot", "whitenoise"), f"unknown test type {test['type']!r}")
    if test["block"] != "auto":
        test["block"] = int(test["block"])
    if test["bandwidth"] == "auto":
        test["bandwidth"] = None
    else:
        test["bandwidth"] = int(test["bandwidth"])
        require(test["bandwidth"] >= 0, "bandwidth must be >= 0")
    if kind == "size_power":
        for name, spec in dgps:
            if test["type"] == "unitroot":
                require(
                    isinstance(spec, PanelSpec), f"unitroot cells need ar1_panel dgps ({name})"
                )
            else:
                require(isinstance(spec, ArpSpec), f"whitenoise cells need arp dgps ({name})")

    out = exp.get("out")
    return ExperimentConfig(
        kind=kind,
        n_grid=n_grid,
        reps=reps,
        seed=seed,
        rule=rule,
        level=level,
        pair=pair,
        tolerance=tolerance,
        dgps=dgps,
        test=test,
        out=str(out) if out is not None else None,
    )


def run_experiment(config: ExperimentConfig, threads: int = 1):
    """Dispatch a validated config to the matching harness operation."""
    seed = RngSeed(config.seed)
    if config.kind == "coupling":
        return verify_max_coupling(
            config.dgps[0][1],
            config.pair,
            config.n_grid,
            config.rule,
            config.reps,
            seed,
            bandwidth=config.test["bandwidth"],
            threads=threads,
        )
    if config.kind == "expansion":
        return verify_expansion(
            config.dgps[0][1], config.n_grid, config.rule, config.reps, seed, threads=threads
        )
    if config.kind == "calibrate":
        return calibrate_Ln(
            config.dgps[0][1],
            config.tolerance,
            config.n_grid,
            config.reps,
            seed,
            pair=config.pair,
            bandwidth=config.test["bandwidth"],
            threads=threads,
        )
    return size_power_experiment(
        config.test["type"],
        config.dgps,
        config.n_grid,
        config.level,
        config.reps,
        seed,
        rule=config.test["rule"],
        bandwidth=config.test["bandwidth"],
        p=config.test["p"],
        block=config.test["block"],
        boot_reps=config.test["boot_reps"],
        limit_reps=config.test["limit_reps"],
        m_steps=config.test["m_steps"],
        threads=threads,
    )


class _UsageError(Exception):
    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract here is usage
    # text and exit code 1, so parse errors are turned into exceptions
    def error(self, message):
        raise _UsageError(message, self.format_usage())


def _int_or_auto(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="maxseq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="draw an AR(1) panel and write it to CSV")
    sim.add_argument("--n", type=int, required=True, help="time points per series")
    sim.add_argument("--k", type=int, required=True, help="number of series")
    sim.add_argument("--phi", type=float, default=1.0, help="AR coefficient for every series")
    sim.add_argument("--phis", help="comma-separated per-series AR coefficients (overrides --phi)")
    sim.add_argument("--dist", default="gaussian", choices=["gaussian", "student_t"])
    sim.add_argument("--df", type=float, help="degrees of freedom for student_t")
    sim.add_argument("--dependence", default="iid", choices=["iid", "ar1"])
    sim.add_argument("--rho", type=float, default=0.0, help="error AR(1) coefficient")
    sim.add_argument("--scale", type=float, default=1.0, help="innovation standard deviation")
    sim.add_argument("--cross", default="independent", choices=["independent", "common_factor"])
    sim.add_argument("--factor-weight", type=float, default=0.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")

    ur = sub.add_parser("unitroot", help="max unit-root test on a CSV panel")
    ur.add_argument("--in", dest="infile", required=True, help="input panel CSV")
    ur.add_argument("--rule", default=DEFAULT_RULE.spec_string(), help="lag rule form:c[:delta]")
    ur.add_argument("--level", type=float, default=0.05)
    ur.add_argument("--reps", type=int, default=10_000, help="limit-law draws")
    ur.add_argument("--m-steps", type=int, default=10_000, help="Wiener discretization steps")
    ur.add_argument("--bandwidth", type=_int_or_auto, default="auto")
    ur.add_argument("--raw", action="store_true", help="skip the serial-correlation adjustment")
    ur.add_argument("--ratio", type=float, default=1.0, help="variance ratio for the raw limit law")
    ur.add_argument("--seed", type=int, default=0)
    ur.add_argument("--threads", type=int)
    ur.add_argument("--out", help="output JSON path")

    wn = sub.add_parser("whitenoise", help="residual white-noise test on a CSV series")
    wn.add_argument("--in", dest="infile", required=True, help="input series CSV")
    wn.add_argument("--column", help="series label or 0-based index (panels with k > 1)")
    wn.add_argument("--p", type=int, default=1, help="AR filter order")
    wn.add_argument("--L", type=int, help="number of lags (overrides --rule)")
    wn.add_argument("--rule", default=DEFAULT_RULE.spec_string(), help="lag rule form:c[:delta]")
    wn.add_argument(
        "--method", default="bootstrap", choices=["bootstrap", "gaussian_kernel", "stats"]
    )
    wn.add_argument("--block", type=_int_or_auto, default="auto", help="bootstrap block length")
    wn.add_argument("--reps", type=int, default=500, help="bootstrap or simulation draws")
    wn.add_argument("--bandwidth", type=_int_or_auto, default="auto", help="kernel bandwidth")
    wn.add_argument("--level", type=float, default=0.05)
    wn.add_argument("--seed", type=int, default=0)
    wn.add_argument("--threads", type=int)
    wn.add_argument("--out", help="output JSON path")

    mc = sub.add_parser("montecarlo", help="run a configured Monte Carlo experiment")
    mc.add_argument("--config", required=True, help="TOML experiment config")
    mc.add_argument("--out", help="report path (.csv or .json); overrides config out")
    mc.add_argument("--threads", type=int)

    lim = sub.add_parser("limits", help="tabulate the simulated limit law")
    lim.add_argument("--k", type=int, default=1, help="number of independent coordinates")
    lim.add_argument("--m-steps", type=int, default=10_000)
    lim.add_argument("--reps", type=int, default=10_000)
    lim.add_argument("--ratio", type=float, default=1.0)
    lim.add_argument("--level", type=float, default=0.05)
    lim.add_argument("--seed", type=int, default=0)
    lim.add_argument("--threads", type=int)
    lim.add_argument("--out", help="output JSON path")

    return parser


def _resolve_threads(value) -> int:
    if value is not None:
        require(int(value) >= 1, "threads must be >= 1")
        return int(value)
    env = os.environ.get("MAXSEQ_THREADS")
    if env:
        try:
            parsed = int(env)
        except ValueError:
            raise ValidationError("MAXSEQ_THREADS must be an integer") from None
        require(parsed >= 1, "MAXSEQ_THREADS must be >= 1")
        return parsed
    return os.cpu_count() or 1


def _cmd_simulate(args) -> int:
    if args.phis is not None:
        phis = tuple(float(tok) for tok in args.phis.split(","))
    else:
        phis = (args.phi,) * args.k
    errors = ErrorSpec(
        dist=args.dist,
        df=args.df,
        dependence=args.dependence,
        rho=args.rho,
        scale=args.scale,
    )
    spec = PanelSpec(
        n=args.n,
        k=args.k,
        phis=phis,
        errors=errors,
        cross_dependence=args.cross,
        factor_weight=args.factor_weight,
    )
    panel = simulate_ar1_panel(spec, RngSeed(args.seed))
    save_panel_csv(panel, args.out)
    print(f"simulate: wrote panel n={panel.n} k={panel.k} -> {args.out}")
    return 0


def _cmd_unitroot(args) -> int:
    panel = load_panel_csv(args.infile)
    rule = LagRule.parse(args.rule)
    bandwidth = None if args.bandwidth == "auto" else args.bandwidth
    result = unit_root_test(
        panel,
        rule,
        level=args.level,
        reps=args.reps,
        m_steps=args.m_steps,
        seed=args.seed,
        bandwidth=bandwidth,
        adjusted=not args.raw,
        ratio=args.ratio,
        threads=_resolve_threads(args.threads),
    )
    if args.out:
        dump_json(
            args.out,
            {
                "schema_version": 1,
                "test": "unitroot",
                "n": panel.n,
                "k": panel.k,
                "series_labels": list(panel.labels),
                "rule": rule.spec_string(),
                "L": result.L_used,
                "level": result.level,
                "adjusted": result.adjusted,
                "bandwidth": result.bandwidth,
                "ratio": args.ratio,
                "reps": args.reps,
                "m_steps": args.m_steps,
                "seed": args.seed,
                "stat": result.max_stat,
                "critical_value": result.critical_value,
                "p_value": result.p_value,
                "reject": result.reject,
                "per_series": list(result.per_series),
            },
        )
    print(
        f"unitroot: stat={result.max_stat:.6g} L={result.L_used} "
        f"crit={result.critical_value:.6g} p={result.p_value:.4g} reject={result.reject}"
    )
    return 0


def _pick_series(panel: PanelData, column) -> tuple[np.ndarray, str]:
    if column is None:
        require(panel.k == 1, f"panel has {panel.k} series; pass --column")
        return panel.series(0), panel.labels[0]
    if column in panel.labels:
        idx = panel.labels.index(column)
    else:
        try:
            idx = int(column)
        except ValueError:
            raise ValidationError(f"unknown column {column!r}") from None
        require(0 <= idx < panel.k, f"column index {idx} out of range")
    return panel.series(idx), panel.labels[idx]


def _cmd_whitenoise(args) -> int:
    panel = load_panel_csv(args.infile)
    series, label = _pick_series(panel, args.column)
    n = len(series)
    if args.L is not None:
        L = args.L
    else:
        L = lag_sequence(LagRule.parse(args.rule), n)
    threads = _resolve_threads(args.threads)
    block_len = None
    if args.method == "bootstrap":
        block_len = int(math.floor(n ** (1.0 / 3.0))) if args.block == "auto" else args.block
        result = dwb_pvalue(
            series, args.p, L, block_len, args.reps, args.seed, level=args.level, threads=threads
        )
    elif args.method == "gaussian_kernel":
        bandwidth = None if args.bandwidth == "auto" else args.bandwidth
        result = gaussian_kernel_pvalue(
            series,
            args.p,
            L,
            bandwidth=bandwidth,
            reps=args.reps,
            seed=args.seed,
            level=args.level,
            threads=threads,
        )
    else:
        result = max_corr_stat(series, args.p, L)
    if args.out:
        dump_json(
            args.out,
            {
                "schema_version": 1,
                "test": "whitenoise",
                "n": n,
                "column": label,
                "p": result.p,
                "L": result.L,
                "method": result.method,
                "block_len": result.block_len,
                "reps": result.reps,
                "level": result.level,
                "seed": args.seed,
                "stat": result.max_stat,
                "p_value": result.p_value,
                "reject": result.reject,
                "per_lag": list(result.per_lag),
            },
        )
    if result.p_value is None:
        tail = "p=n/a reject=n/a"
    else:
        tail = f"p={result.p_value:.4g} reject={result.reject}"
    print(f"whitenoise: stat={result.max_stat:.6g} L={result.L} method={result.method} {tail}")
    return 0


def _cmd_montecarlo(args) -> int:
    config = parse_experiment_config(args.config)
    out = args.out or config.out
    require(out is not None, "output path required: pass --out or set out in [experiment]")
    report = run_experiment(config, threads=_resolve_threads(args.threads))
    if str(out).endswith(".json"):
        report.to_json(out)
    else:
        report.to_csv(out)
    print(f"montecarlo[{config.kind}]: {len(report.rows)} rows -> {out}")
    return 0


def _cmd_limits(args) -> int:
    law = simulate_limit_law(
        args.k,
        args.m_steps,
        args.reps,
        args.seed,
        ratio=args.ratio,
        threads=_resolve_threads(args.threads),
    )
    crit = law.critical_value(args.level)
    quantiles = {f"{q:.2f}": law.quantile(q) for q in (0.90, 0.95, 0.99)}
    if args.out:
        dump_json(
            args.out,
            {
                "schema_version": 1,
                "kind": "limit_law",
                "k": law.k,
                "m_steps": law.m_steps,
                "reps": law.reps,
                "ratio": law.ratio,
                "level": args.level,
                "seed": args.seed,
                "critical_value": crit,
                "quantiles": quantiles,
            },
        )
    rendered = " ".join(f"q{q}={v:.6g}" for q, v in quantiles.items())
    print(f"limits: k={law.k} crit({args.level:g})={crit:.6g} {rendered}")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "unitroot": _cmd_unitroot,
    "whitenoise": _cmd_whitenoise,
    "montecarlo": _cmd_montecarlo,
    "limits": _cmd_limits,
}


def run(argv=None) -> int:
    """Parse argv and execute one subcommand, returning the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(exc.usage)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))

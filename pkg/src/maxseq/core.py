"""Shared primitives: panel container, lag rules, seeding, prefix-max helpers.

The statistics in this package take the maximum of a growing collection of
per-index quantities (series or lags), with the collection size tied to the
sample size through a slowly increasing rule. Everything here is deliberately
deterministic: identical seeds and arguments produce identical bytes, no
matter how the work is scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .validation import ValidationError, require

__all__ = [
    "DEFAULT_RULE",
    "LagRule",
    "PanelData",
    "RngSeed",
    "bounded_max_transform",
    "indexed_map",
    "lag_sequence",
    "running_max_abs",
]

T = TypeVar("T")

_RULE_FORMS = ("power", "log", "fixed")


@dataclass(frozen=True)
class LagRule:
    """Rule mapping a sample size n to an index-set size L_n.

    Forms:
      power: L = floor(c * n**delta), delta in (0, 1)
      log:   L = floor(c * ln(n))
      fixed: L = round(c)

    The result is floored at 1 and capped at min(cap, n - 1).
    """

    form: str
    c: float
    delta: float | None = None
    cap: int | None = None

    def __post_init__(self):
        require(self.form in _RULE_FORMS, f"unknown rule form {self.form!r}")
        require(float(self.c) > 0.0, "rule constant c must be positive")
        object.__setattr__(self, "c", float(self.c))
        if self.form == "power":
            require(self.delta is not None, "power rule requires delta")
            delta = float(self.delta)
            require(0.0 < delta < 1.0, "delta must be in (0, 1)")
            object.__setattr__(self, "delta", delta)
        else:
            require(self.delta is None, f"{self.form} rule takes no delta")
        if self.cap is not None:
            require(
                isinstance(self.cap, int) and not isinstance(self.cap, bool) and self.cap >= 1,
                "cap must be a positive integer",
            )

    @classmethod
    def parse(cls, text: str) -> "LagRule":
        """Parse 'form:c' or 'form:c:delta', e.g. 'power:1:0.25' or 'fixed:5'."""
        parts = str(text).strip().split(":")
        if len(parts) not in (2, 3) or parts[0] not in _RULE_FORMS:
            raise ValidationError(f"malformed lag rule {text!r}; expected form:c[:delta]")
        form = parts[0]
        try:
            c = float(parts[1])
            delta = float(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise ValidationError(f"malformed lag rule {text!r}; expected form:c[:delta]") from None
        if form != "power" and delta is not None:
            raise ValidationError(f"{form} rule takes no delta")
        return cls(form=form, c=c, delta=delta)

    def spec_string(self) -> str:
        c = format(self.c, "g")
        if self.form == "power":
            return f"power:{c}:{format(self.delta, 'g')}"
        return f"{self.form}:{c}"


DEFAULT_RULE = LagRule(form="power", c=1.0, delta=0.25)


def lag_sequence(rule: LagRule, n: int) -> int:
    """Evaluate a lag rule at sample size n (n >= 2)."""
    require(isinstance(n, (int, np.integer)) and n >= 2, "n must be an integer >= 2")
    n = int(n)
    if rule.form == "power":
        base = math.floor(rule.c * n**rule.delta)
    elif rule.form == "log":
        base = math.floor(rule.c * math.log(n))
    else:
        base = round(rule.c)
    out = max(1, base)
    out = min(out, n - 1)
    if rule.cap is not None:
        out = min(out, rule.cap)
    return out


@dataclass(frozen=True)
class RngSeed:
    """Master seed plus a derivation key for reproducible child streams.

    Children are derived by extending the key, never by drawing from a shared
    generator, so (master, key) identifies a stream independently of
    evaluation order or thread schedule.
    """

    master: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        require(
            isinstance(self.master, (int, np.integer)) and not isinstance(self.master, bool),
            "master seed must be an integer",
        )
        require(0 <= int(self.master) < 2**64, "master seed must be in [0, 2**64)")
        object.__setattr__(self, "master", int(self.master))
        key = tuple(int(k) for k in self.key)
        require(all(k >= 0 for k in key), "seed key entries must be nonnegative")
        object.__setattr__(self, "key", key)

    def child(self, *key: int) -> "RngSeed":
        return RngSeed(self.master, self.key + tuple(int(k) for k in key))

    @classmethod
    def coerce(cls, seed) -> "RngSeed":
        """Accept an RngSeed or a plain integer master seed."""
        if isinstance(seed, RngSeed):
            return seed
        return cls(master=seed)

    def generator(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master, spawn_key=self.key + tuple(int(k) for k in key))
        return np.random.default_rng(seq)


def running_max_abs(values) -> np.ndarray:
    """Prefix maxima of absolute values: out[j] = max(|values[:j+1]|).

    The output is nondecreasing by construction.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("empty sequence")
    require(arr.ndim == 1, "sequence must be one-dimensional")
    require(bool(np.isfinite(arr).all()), "non-finite value in sequence")
    return np.maximum.accumulate(np.abs(arr))


def bounded_max_transform(values) -> float:
    """Map max(|values|) through 1 - exp(-x), a bounded monotone diagnostic.

    Comparing these transformed maxima is equivalent to comparing the raw
    maxima, but differences stay in [0, 1) even when the raw statistics
    diverge.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("empty sequence")
    require(arr.ndim == 1, "sequence must be one-dimensional")
    require(bool(np.isfinite(arr).all()), "non-finite value in sequence")
    peak = float(np.max(np.abs(arr)))
    # -expm1(-x) rounds to 1.0 once x exceeds ~36.7; keep the value strictly
    # below 1 so the documented range [0, 1) holds for every input
    return min(-math.expm1(-peak), 1.0 - 2.0**-53)


def indexed_map(
    fn: Callable[[int], T],
    count: int,
    threads: int = 1,
) -> list[T]:
    """Evaluate fn(0..count-1), writing fn(i) into slot i.

    With threads > 1 the index range is split into contiguous chunks run on a
    thread pool; each result lands in its own slot, so the output is
    byte-identical to the sequential run for any thread count. fn must derive
    any randomness from its index, not from shared state.
    """
    require(isinstance(count, (int, np.integer)) and count >= 0, "count must be >= 0")
    require(isinstance(threads, (int, np.integer)) and threads >= 1, "threads must be >= 1")
    count = int(count)
    threads = int(threads)
    out: list = [None] * count
    if threads == 1 or count <= 1:
        for i in range(count):
            out[i] = fn(i)
        return out

    def run_range(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            out[i] = fn(i)

    step = max(1, math.ceil(count / (4 * threads)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(run_range, lo, min(lo + step, count)) for lo in range(0, count, step)
        ]
        for fut in futures:
            fut.result()
    return out


@dataclass(frozen=True)
class PanelData:
    """A panel of k series observed over n common time points.

    values has shape (n, k), one column per series; labels name the columns.
    """

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        require(arr.ndim == 2, "panel values must be two-dimensional")
        require(arr.shape[0] >= 2, "panel needs at least 2 time points")
        require(arr.shape[1] >= 1, "panel needs at least 1 series")
        require(bool(np.isfinite(arr).all()), "non-finite value in panel")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        labels = tuple(str(s) for s in self.labels)
        require(len(labels) == arr.shape[1], "labels must match the number of series")
        require(len(set(labels)) == len(labels), "series labels must be unique")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_values(cls, values, labels: Sequence[str] | None = None) -> "PanelData":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if labels is None:
            labels = tuple(f"s{i + 1}" for i in range(arr.shape[1] if arr.ndim == 2 else 0))
        return cls(values=arr, labels=tuple(labels))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def series(self, i: int) -> np.ndarray:
        require(0 <= i < self.k, "series index out of range")
        return self.values[:, i]

"""Domain types shared across the package.

A :class:`Dataset` holds either subject-level observations or per-group
summaries ``(n, mean, sd)``.  Group order is the order of appearance and every
group index used elsewhere (``selected_index``, conditioning targets) refers to
it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np


class SelbiasError(Exception):
    """Base class for all package errors."""


class ValidationError(SelbiasError, ValueError):
    """A dataset or configuration violates a type invariant."""


class PreconditionError(SelbiasError, ValueError):
    """An estimator was called on data it cannot handle."""


class BudgetError(SelbiasError, RuntimeError):
    """An exact enumeration would exceed its state budget."""


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GroupObservations:
    label: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        _check_observations(self)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, GroupObservations):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.label, self.values.tobytes()))


@dataclass(frozen=True)
class GroupSummary:
    label: str
    n: int
    mean: float
    sd: float

    def __post_init__(self):
        _check_summary(self)


Group = Union[GroupObservations, GroupSummary]


def _check_observations(g: GroupObservations) -> None:
    if g.values.size == 0:
        raise ValidationError(f"empty group {g.label}")
    if not np.all(np.isfinite(g.values)):
        raise ValidationError(f"non-finite value in group {g.label}")


def _check_summary(g: GroupSummary) -> None:
    if isinstance(g.n, bool) or int(g.n) != g.n or g.n < 1:
        raise ValidationError(f"n < 1 in group {g.label}")
    if not math.isfinite(g.mean):
        raise ValidationError(f"non-finite mean in group {g.label}")
    if not math.isfinite(g.sd) or g.sd < 0:
        raise ValidationError(f"sd < 0 in group {g.label}")


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of groups, all subject-level or all summary-level."""

    groups: tuple

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        _check_dataset(self)

    @classmethod
    def from_values(cls, data: dict) -> "Dataset":
        """Build a subject-level dataset from ``{label: values}`` (insertion order kept)."""
        return cls(tuple(GroupObservations(str(k), v) for k, v in data.items()))

    @classmethod
    def from_summaries(cls, rows: Sequence[tuple]) -> "Dataset":
        """Build a summary-level dataset from ``(label, n, mean, sd)`` rows."""
        return cls(tuple(GroupSummary(str(lab), int(n), float(m), float(s)) for lab, n, m, s in rows))

    @property
    def subject_level(self) -> bool:
        return isinstance(self.groups[0], GroupObservations)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.groups]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g.n for g in self.groups], dtype=np.int64)

    def means(self) -> np.ndarray:
        if self.subject_level:
            return np.array([g.values.mean() for g in self.groups])
        return np.array([g.mean for g in self.groups], dtype=np.float64)

    def variances(self) -> np.ndarray:
        """Per-group sample variances (denominator n - 1); NaN where n = 1 for subject data."""
        if self.subject_level:
            return np.array([g.values.var(ddof=1) if g.n > 1 else np.nan for g in self.groups])
        return np.array([g.sd for g in self.groups], dtype=np.float64) ** 2

    def concatenated(self) -> np.ndarray:
        """All observations in group order (subject-level only)."""
        if not self.subject_level:
            raise PreconditionError("subject-level data required")
        return np.concatenate([g.values for g in self.groups])

    def affine(self, a: float, c: float) -> "Dataset":
        """The dataset under ``x -> a*x + c`` (summary sd scales by ``|a|``)."""
        if self.subject_level:
            return Dataset(tuple(GroupObservations(g.label, a * g.values + c) for g in self.groups))
        return Dataset(tuple(GroupSummary(g.label, g.n, a * g.mean + c, abs(a) * g.sd) for g in self.groups))


def _check_dataset(d: Dataset) -> None:
    if len(d.groups) == 0:
        raise ValidationError("dataset needs at least one group")
    kinds = {type(g) for g in d.groups}
    if len(kinds) != 1 or not kinds <= {GroupObservations, GroupSummary}:
        raise ValidationError("groups must be all subject-level or all summary-level")
    seen = set()
    for g in d.groups:
        if g.label in seen:
            raise ValidationError(f"duplicate label {g.label}")
        seen.add(g.label)


def validate(d: Dataset) -> Dataset:
    """Re-check every invariant of ``d`` and return it unchanged."""
    _check_dataset(d)
    for g in d.groups:
        if isinstance(g, GroupObservations):
            _check_observations(g)
        else:
            _check_summary(g)
    return d


@dataclass(frozen=True)
class Trace:
    raw: float
    selected_index: int
    bias_estimates: tuple = ()
    shrink_c: Optional[float] = None
    shrink_c_plus: Optional[float] = None


@dataclass(frozen=True)
class Estimate:
    value: float
    trace: Optional[Trace] = None

    def lower_order(self, k: int) -> "Estimate":
        """The order-``k`` correction implied by this estimate's bias trace.

        Successive corrections subtract one bias estimate each, so any lower
        order is recoverable from a higher-order run on the same resamples.
        """
        if self.trace is None or k > len(self.trace.bias_estimates):
            raise ValueError(f"order {k} not available from this estimate")
        value = self.trace.raw
        for a in self.trace.bias_estimates[:k]:
            value = value - a
        return Estimate(value, Trace(self.trace.raw, self.trace.selected_index, self.trace.bias_estimates[:k]))


SAMPLERS = ("pb", "nb")
JK_CONVENTIONS = ("total", "paired")
_KINDS = ("traditional", "jackknife", "shrinkage", "bootstrap", "hybrid")
_SHORT = {"traditional": "traditional", "jk": "jackknife", "jackknife": "jackknife",
          "shrink": "shrinkage", "shrinkage": "shrinkage"}


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to run.

    ``kind`` is one of traditional, jackknife, shrinkage, bootstrap, hybrid.
    Bootstrap and hybrid carry ``order`` (1..3) and ``sampler`` ('pb' or 'nb');
    a hybrid applies the shrinkage combination to the bootstrap-corrected value.
    """

    kind: str
    order: Optional[int] = None
    sampler: Optional[str] = None
    B: int = 80
    seed: int = 0
    convention: Optional[str] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "jackknife":
            if self.convention is None:
                object.__setattr__(self, "convention", "total")
            if self.convention not in JK_CONVENTIONS:
                raise ValidationError(f"jackknife convention must be one of {JK_CONVENTIONS}")
        if self.kind in ("bootstrap", "hybrid"):
            if self.order not in (1, 2, 3):
                raise ValidationError("bootstrap order must be 1, 2 or 3")
            if self.sampler not in SAMPLERS:
                raise ValidationError(f"sampler must be one of {SAMPLERS}")
        if int(self.B) < 1:
            raise ValidationError("B must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    @classmethod
    def parse(cls, code: str, B: int = 80, seed: int = 0) -> "EstimatorSpec":
        """Parse short codes such as ``traditional``, ``jk``, ``jkp``, ``shrink``, ``nb1``, ``pb2``, ``pb2s``."""
        c = code.strip().lower()
        if c in _SHORT:
            return cls(_SHORT[c], B=B, seed=seed)
        if c == "jkp":
            return cls("jackknife", B=B, seed=seed, convention="paired")
        if len(c) >= 3 and c[:2] in SAMPLERS and c[2].isdigit():
            rest = c[3:]
            if rest in ("", "s"):
                kind = "hybrid" if rest == "s" else "bootstrap"
                return cls(kind, int(c[2]), c[:2], B=B, seed=seed)
        raise ValidationError(f"unknown method {code!r}")

    @property
    def code(self) -> str:
        if self.kind == "bootstrap":
            return f"{self.sampler}{self.order}"
        if self.kind == "hybrid":
            return f"{self.sampler}{self.order}s"
        if self.kind == "jackknife" and self.convention == "paired":
            return "jkp"
        return {"traditional": "traditional", "jackknife": "jk", "shrinkage": "shrink"}[self.kind]

"""Closed-form estimators of the largest group mean.

All functions are pure.  Ties in the argmax go to the lowest group index.
"""

from __future__ import annotations

import numpy as np

from .model import (
    Dataset,
    Estimate,
    GroupObservations,
    GroupSummary,
    PreconditionError,
    Trace,
)


def group_mean(g: GroupObservations | GroupSummary) -> float:
    if isinstance(g, GroupObservations):
        return float(g.values.mean())
    return float(g.mean)


def traditional_max(d: Dataset) -> Estimate:
    means = d.means()
    idx = int(np.argmax(means))
    value = float(means[idx])
    return Estimate(value, Trace(raw=value, selected_index=idx))


def pooled_mean(d: Dataset) -> float:
    """Mean of all observations; the n-weighted mean of group means for summaries."""
    if d.subject_level:
        return float(d.concatenated().mean())
    n = d.sizes.astype(np.float64)
    return float(np.dot(n, d.means()) / n.sum())


def avg_variance(d: Dataset) -> float:
    """Unweighted average of the per-group sample variances."""
    if d.subject_level:
        small = [g.label for g in d.groups if g.n < 2]
        if small:
            raise PreconditionError(f"sample variance needs n >= 2 (group {small[0]})")
    return float(np.mean(d.variances()))


def shrinkage_coefficient(d: Dataset) -> tuple[float, float]:
    """Return ``(C, C_plus)`` for the shrinkage combination.

    When every group mean equals the pooled mean the denominator vanishes;
    ``C`` is then reported as ``-inf`` and ``C_plus`` as 0.
    """
    if d.n_groups < 2:
        raise PreconditionError("shrinkage requires >= 2 groups")
    sigma2 = avg_variance(d)
    spread = float(np.dot(d.sizes.astype(np.float64), (d.means() - pooled_mean(d)) ** 2))
    if spread == 0.0:
        return float("-inf"), 0.0
    c = 1.0 - (d.n_groups - 1) * sigma2 / spread
    return c, max(0.0, c)


def _shrink(d: Dataset, base: float, raw: float, selected: int, bias=()) -> Estimate:
    c, c_plus = shrinkage_coefficient(d)
    value = c_plus * base + (1.0 - c_plus) * pooled_mean(d)
    return Estimate(float(value), Trace(raw, selected, tuple(bias), c, c_plus))


def shrinkage_estimate(d: Dataset) -> Estimate:
    t = traditional_max(d)
    return _shrink(d, t.value, t.value, t.trace.selected_index)


def hybrid_estimate(d: Dataset, base: Estimate) -> Estimate:
    """Shrinkage combination with ``base.value`` in place of the max of means."""
    t = traditional_max(d)
    bias = base.trace.bias_estimates if base.trace is not None else ()
    return _shrink(d, base.value, t.value, t.trace.selected_index, bias)


def jackknife_estimate(d: Dataset, convention: str = "total") -> Estimate:
    """Leave-one-out bias correction.

    ``convention="total"`` deletes one observation at a time over all N
    observations and uses N as the sample size.  Deleting observation j only
    changes the mean of its own group, so each leave-one-out maximum is the
    max of that updated mean and the largest of the other group means.

    ``convention="paired"`` needs equal group sizes n and deletes the j-th
    observation of every group at once, for j = 1..n, using n as the sample
    size.
    """
    if not d.subject_level:
        raise PreconditionError("jackknife requires subject-level data")
    if convention not in ("total", "paired"):
        raise ValueError(f"unknown jackknife convention {convention!r}")
    for g in d.groups:
        if g.n < 2:
            raise PreconditionError(f"cannot delete sole observation of group {g.label}")
    t = traditional_max(d)

    if convention == "paired":
        if len(set(d.sizes.tolist())) != 1:
            raise PreconditionError("paired jackknife requires equal group sizes")
        X = np.stack([g.values for g in d.groups])
        n = X.shape[1]
        loo = (X.sum(axis=1, keepdims=True) - X) / (n - 1)
        theta_dot = loo.max(axis=0).mean()
        value = n * t.value - (n - 1) * theta_dot
    else:
        means = d.means()
        total = int(d.sizes.sum())
        loo_sum = 0.0
        for i, g in enumerate(d.groups):
            others = np.delete(means, i)
            rest = others.max() if others.size else -np.inf
            loo = (g.values.sum() - g.values) / (g.n - 1)
            loo_sum += np.maximum(loo, rest).sum()
        theta_dot = loo_sum / total
        value = total * t.value - (total - 1) * theta_dot
    return Estimate(float(value), Trace(raw=t.value, selected_index=t.trace.selected_index))

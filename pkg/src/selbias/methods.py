"""Dispatch an :class:`EstimatorSpec` to the matching estimator."""

from __future__ import annotations

from typing import Sequence

from .bootstrap import corrected_estimate
from .estimators import hybrid_estimate, jackknife_estimate, shrinkage_estimate, traditional_max
from .model import Dataset, Estimate, EstimatorSpec


def estimate(d: Dataset, spec: EstimatorSpec, replication: int = 0, workers: int | None = None) -> Estimate:
    if spec.kind == "traditional":
        return traditional_max(d)
    if spec.kind == "jackknife":
        return jackknife_estimate(d, spec.convention)
    if spec.kind == "shrinkage":
        return shrinkage_estimate(d)
    boot = corrected_estimate(d, spec.order, spec.sampler, spec.B, spec.seed, replication, workers)
    if spec.kind == "hybrid":
        return hybrid_estimate(d, boot)
    return boot


def estimate_many(d: Dataset, specs: Sequence[EstimatorSpec], replication: int = 0,
                  workers: int | None = None) -> list[Estimate]:
    """Run several estimators on the same dataset.

    Bootstrap-based specs sharing sampler, B and seed are served by a single
    run at the highest requested order; lower orders and hybrids are read off
    that run.  Each spec therefore sees the same resamples it would if run
    alone at that highest order.
    """
    top: dict[tuple, int] = {}
    for s in specs:
        if s.kind in ("bootstrap", "hybrid"):
            key = (s.sampler, s.B, s.seed)
            top[key] = max(top.get(key, 0), s.order)
    runs = {key: corrected_estimate(d, k, key[0], key[1], key[2], replication, workers)
            for key, k in top.items()}

    out = []
    for s in specs:
        if s.kind in ("bootstrap", "hybrid"):
            run = runs[(s.sampler, s.B, s.seed)]
            boot = run if s.order == len(run.trace.bias_estimates) else run.lower_order(s.order)
            out.append(hybrid_estimate(d, boot) if s.kind == "hybrid" else boot)
        else:
            out.append(estimate(d, s))
    return out

"""Parametric and nonparametric resampling and k-th order bootstrap bias correction.

The order-k estimator is defined recursively from the max of group means
``T0``::

    T_k(X) = T_{k-1}(X) - A_k,   A_k = mean_b T_{k-1}(X*_b) - T_{k-1}(X)

One set of outer resamples ``X*_1..X*_B`` serves every level: evaluating
``T_{k-1}`` on each ``X*_b`` yields ``T_0..T_{k-1}`` there as by-products, so
all lower-order corrections of ``X`` come for free and the total cost stays
of order ``B**k``.  Inner levels resample from the outer resample (the PB fit
of mean and sd is redone on it).

At the innermost level only the max of group means of each resample is
needed.  For PB the mean of ``n`` i.i.d. ``Normal(m, s)`` draws is exactly
``Normal(m, s / sqrt(n))``, so that level draws one normal per group instead
of ``n``; NB draws full index resamples everywhere.

Outer indices are processed in fixed blocks (:data:`BLOCK`), each with its own
random stream addressed by ``(sampler, replication, block)``, which is what
makes results independent of the number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimators import traditional_max
from .model import Dataset, Estimate, GroupObservations, PreconditionError, Trace
from .rng import BOOT_NB, BOOT_PB, RngStream

BLOCK = {1: 4096, 2: 16, 3: 1}
MAX_ORDER = 3


@dataclass(frozen=True)
class _Layout:
    sizes: np.ndarray
    offsets: np.ndarray
    group_of: np.ndarray

    @classmethod
    def of(cls, sizes) -> "_Layout":
        sizes = np.asarray(sizes, dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        return cls(sizes, offsets, np.repeat(np.arange(sizes.size), sizes))

    @property
    def total(self) -> int:
        return int(self.sizes.sum())

    def group_means(self, x: np.ndarray) -> np.ndarray:
        return np.add.reduceat(x, self.offsets, axis=-1) / self.sizes


class _Normal:
    """Batch of fitted Normal populations, one (mean, sd) per group."""

    def __init__(self, mean: np.ndarray, sd: np.ndarray, layout: _Layout):
        self.mean, self.sd, self.layout = mean, sd, layout

    def tmax(self) -> np.ndarray:
        return self.mean.max(axis=1)

    def sample(self, B: int, draws) -> np.ndarray:
        lay = self.layout
        z = draws.normal((self.mean.shape[0], B, lay.total))
        z *= self.sd[:, None, lay.group_of]
        z += self.mean[:, None, lay.group_of]
        return z.reshape(-1, lay.total)

    def resample(self, B: int, draws) -> "_Normal":
        lay = self.layout
        if np.any(lay.sizes < 2):
            raise PreconditionError("PB refit needs n >= 2 in every group")
        x = self.sample(B, draws)
        m = lay.group_means(x)
        dev = x - m[:, lay.group_of]
        s = np.sqrt(np.add.reduceat(dev * dev, lay.offsets, axis=1) / (lay.sizes - 1))
        return _Normal(m, s, lay)

    def resample_max(self, B: int, draws) -> np.ndarray:
        M, I = self.mean.shape
        z = draws.normal((M, B, I))
        z *= (self.sd / np.sqrt(self.layout.sizes))[:, None, :]
        z += self.mean[:, None, :]
        return z.max(axis=2)


class _Empirical:
    """Batch of observed samples resampled with replacement within groups."""

    def __init__(self, values: np.ndarray, layout: _Layout):
        self.values, self.layout = values, layout

    def tmax(self) -> np.ndarray:
        return self.layout.group_means(self.values).max(axis=1)

    def sample(self, B: int, draws) -> np.ndarray:
        lay = self.layout
        M, N = self.values.shape
        idx = draws.index(lay.sizes[lay.group_of], (M, B, N))
        idx += lay.offsets[lay.group_of]
        idx += (np.arange(M, dtype=np.int64) * N)[:, None, None]
        return self.values.reshape(-1)[idx].reshape(M * B, N)

    def resample(self, B: int, draws) -> "_Empirical":
        return _Empirical(self.sample(B, draws), self.layout)

    def resample_max(self, B: int, draws) -> np.ndarray:
        M = self.values.shape[0]
        return self.layout.group_means(self.sample(B, draws)).max(axis=1).reshape(M, B)


def _population(d: Dataset, kind: str, order: int):
    lay = _Layout.of(d.sizes)
    if kind == "nb":
        if not d.subject_level:
            raise PreconditionError("NB requires subject-level data")
        return _Empirical(d.concatenated()[None, :], lay)
    if kind != "pb":
        raise ValueError(f"unknown sampler {kind!r}")
    if d.subject_level:
        small = [g.label for g in d.groups if g.n < 2]
        if small:
            raise PreconditionError(f"PB needs n >= 2 to fit sd (group {small[0]})")
        sd = np.sqrt(d.variances())
    else:
        if order >= 2 and np.any(d.sizes < 2):
            raise PreconditionError("nested PB refits sd and needs n >= 2 in every group")
        sd = np.array([g.sd for g in d.groups], dtype=np.float64)
    return _Normal(d.means()[None, :], sd[None, :], lay)


def _step(t_prev: np.ndarray, v: np.ndarray):
    a = v - t_prev
    return t_prev - a, a


def _orders(pop, depth: int, B: int, draws) -> np.ndarray:
    """``T_0..T_depth`` for every population in the batch, shape (M, depth + 1)."""
    t = pop.tmax()
    if depth == 0:
        return t[:, None]
    M = t.shape[0]
    if depth == 1:
        v = pop.resample_max(B, draws).mean(axis=1)[:, None]
    else:
        inner = _orders(pop.resample(B, draws), depth - 1, B, draws)
        v = inner.reshape(M, B, depth).mean(axis=1)
    cols = [t]
    for j in range(depth):
        cols.append(_step(cols[j], v[:, j])[0])
    return np.stack(cols, axis=1)


def _block(pop, order: int, B: int, start: int, stop: int, stream: RngStream) -> np.ndarray:
    """``T_0..T_{order-1}`` on outer resamples ``start..stop-1``, shape (stop - start, order)."""
    draws = stream.draws()
    m = stop - start
    if order == 1:
        return pop.resample_max(m, draws).reshape(m, 1)
    return _orders(pop.resample(m, draws), order - 1, B, draws)


def _block_task(args):
    return _block(*args)


def default_workers() -> int:
    return max(1, int(os.environ.get("SELBIAS_WORKERS", "1")))


def corrected_estimate(d: Dataset, k: int, kind: str, B: int, seed: int,
                       replication: int = 0, workers: int | None = None) -> Estimate:
    """Order-``k`` bootstrap bias-corrected max of group means.

    ``trace.bias_estimates`` holds ``A_1..A_k`` of the outermost correction;
    ``Estimate.lower_order(j)`` recovers the order-j value from the same run.
    """
    if k not in range(1, MAX_ORDER + 1):
        raise ValueError(f"bootstrap order must be in 1..{MAX_ORDER}")
    if B < 1:
        raise ValueError("B must be >= 1")
    pop = _population(d, kind, k)
    base = traditional_max(d)
    stream = RngStream(seed, (BOOT_PB if kind == "pb" else BOOT_NB, replication))

    size = BLOCK[k]
    jobs = [(pop, k, B, s, min(s + size, B), stream.child(i))
            for i, s in enumerate(range(0, B, size))]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            parts = list(ex.map(_block_task, jobs))
    else:
        parts = [_block(*job) for job in jobs]
    v = np.concatenate(parts, axis=0).mean(axis=0)

    t = base.value
    bias = []
    for j in range(k):
        t, a = _step(t, v[j])
        bias.append(float(a))
    return Estimate(float(t), Trace(raw=base.value, selected_index=base.trace.selected_index,
                                    bias_estimates=tuple(bias)))


def resample(d: Dataset, kind: str, rng: RngStream) -> Dataset:
    """One full bootstrap replicate of ``d`` as a subject-level dataset."""
    pop = _population(d, kind, 1)
    x = pop.sample(1, rng.draws())[0]
    lay = pop.layout
    return Dataset(tuple(GroupObservations(g.label, x[o:o + n])
                         for g, o, n in zip(d.groups, lay.offsets, lay.sizes)))

"""Exact nonparametric-bootstrap expectations by enumerating every resample.

A within-group resample of size n is determined by how many times each
distinct observed value is drawn, so each group contributes its multisets
(compositions of n over the distinct values) with multinomial weights, and
the joint resample law is the product across groups.  Used as ground truth
for the Monte Carlo engine on tiny datasets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import BudgetError, Dataset, PreconditionError


@dataclass(frozen=True)
class EnumerationBudget:
    max_joint_states: int = 2_000_000

    def __post_init__(self):
        if self.max_joint_states < 1:
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class _GroupLaw:
    probs: np.ndarray      # (S,)
    means: np.ndarray      # (S,)
    samples: tuple         # S arrays, each a resample of size n


def _group_law(values: np.ndarray) -> _GroupLaw:
    distinct, counts = np.unique(values, return_counts=True)
    n = values.size
    p = counts / n
    probs, means, samples = [], [], []
    for combo in itertools.combinations_with_replacement(range(distinct.size), n):
        k = np.bincount(combo, minlength=distinct.size)
        coef = math.factorial(n)
        for kv in k:
            coef //= math.factorial(int(kv))
        probs.append(coef * float(np.prod(p ** k)))
        means.append(float(np.dot(k, distinct)) / n)
        samples.append(np.repeat(distinct, k))
    return _GroupLaw(np.array(probs), np.array(means), tuple(samples))


def _n_states(sizes, distinct) -> int:
    return math.prod(math.comb(m + n - 1, n) for n, m in zip(sizes, distinct))


def _joint(laws):
    """Joint probabilities and max-of-means over the product of group laws (C order)."""
    I = len(laws)
    shape = [1] * I
    prob, tmax = np.ones(()), np.full((), -np.inf)
    for i, law in enumerate(laws):
        s = list(shape)
        s[i] = law.probs.size
        prob = prob * law.probs.reshape(s)
        tmax = np.maximum(tmax, law.means.reshape(s))
    return prob.reshape(-1), tmax.reshape(-1)


def _level1(groups) -> tuple[float, float, float]:
    """``(E*[T0(X*)], Var*[T0(X*)], total probability)``."""
    p, t = _joint([_group_law(g) for g in groups])
    e = float(np.dot(p, t))
    return e, float(np.dot(p, (t - e) ** 2)), float(p.sum())


@dataclass(frozen=True)
class ExactNB:
    level: int
    theta_hat: float
    bias: tuple              # exact A_1 (and A_2)
    corrected: float         # exact order-`level` estimate
    var_t0_star: float       # Var* of the max of resample means
    var_t1_star: float | None
    total_prob: float


def exact_nb_bias(d: Dataset, level: int = 1, budget: EnumerationBudget = EnumerationBudget()) -> ExactNB:
    """Exact NB bias estimate(s) and corrected value at ``level`` 1 or 2."""
    if not d.subject_level:
        raise PreconditionError("exact enumeration requires subject-level data")
    if level not in (1, 2):
        raise ValueError("level must be 1 or 2")
    groups = [np.asarray(g.values) for g in d.groups]
    sizes = [g.size for g in groups]
    outer = _n_states(sizes, [np.unique(g).size for g in groups])
    cost = outer if level == 1 else outer * (1 + _n_states(sizes, sizes))
    if cost > budget.max_joint_states:
        raise BudgetError(f"instance too large to enumerate ({cost} states > {budget.max_joint_states})")

    t0 = float(max(g.mean() for g in groups))
    e0, var0, total = _level1(groups)
    a1 = e0 - t0
    t1 = t0 - a1
    if level == 1:
        return ExactNB(1, t0, (a1,), t1, var0, None, total)

    laws = [_group_law(g) for g in groups]
    probs, _ = _joint(laws)
    t1_star = np.empty(probs.size)
    for j, combo in enumerate(itertools.product(*(range(law.probs.size) for law in laws))):
        inner = [law.samples[c] for law, c in zip(laws, combo)]
        t0s = max(float(x.mean()) for x in inner)
        e_inner = _level1(inner)[0]
        t1_star[j] = t0s - (e_inner - t0s)
    e1 = float(np.dot(probs, t1_star))
    var1 = float(np.dot(probs, (t1_star - e1) ** 2))
    a2 = e1 - t1
    return ExactNB(2, t0, (a1, a2), t1 - a2, var0, var1, total)


def level1_probabilities(d: Dataset) -> np.ndarray:
    """Joint resample probabilities in enumeration order (for checking they sum to 1)."""
    return _joint([_group_law(np.asarray(g.values)) for g in d.groups])[0]

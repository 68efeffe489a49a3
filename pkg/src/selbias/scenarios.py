"""Generative models for simulation studies.

Each group draws from Normal(theta, sigma) or from a per-observation mixture
in which an observation comes from a moment-matched Gamma or Uniform with
probability ``w`` and from Normal(theta, sigma) otherwise.  Both mixture
components have mean ``theta`` and sd ``sigma``, hence so does the mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaincinv

from .model import Dataset, GroupObservations, ValidationError
from .rng import Draws

SQRT3 = math.sqrt(3.0)


def gamma_params(theta: float, sigma: float) -> tuple[float, float]:
    """Gamma (shape, scale) with mean ``theta`` and sd ``sigma``."""
    if theta <= 0:
        raise ValidationError("Gamma mean must be positive")
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    return theta**2 / sigma**2, sigma**2 / theta


def uniform_params(theta: float, sigma: float) -> tuple[float, float]:
    """Uniform (low, high) with mean ``theta`` and sd ``sigma``."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    half = sigma * SQRT3
    return theta - half, theta + half


@dataclass(frozen=True)
class Normal:
    theta: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("sigma must be positive")


@dataclass(frozen=True)
class GammaNormalMix:
    theta: float
    sigma: float
    w: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("sigma must be positive")
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError("w must lie in [0, 1]")
        if not self.theta > 0:
            raise ValidationError("GammaNormalMix requires theta > 0")


@dataclass(frozen=True)
class UniformNormalMix:
    theta: float
    sigma: float
    w: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("sigma must be positive")
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError("w must lie in [0, 1]")


GroupGenerator = Union[Normal, GammaNormalMix, UniformNormalMix]


def draw_group(g: GroupGenerator, n: int, draws: Draws) -> np.ndarray:
    """``n`` independent draws.

    Stream layout: Normal consumes ``n`` variates; a mixture consumes ``n``
    membership uniforms, then ``n`` normals, then ``n`` outlier uniforms,
    whatever ``w`` is.
    """
    if isinstance(g, Normal):
        return g.theta + g.sigma * draws.normal(n)
    member = draws.uniform(n) < g.w
    x = g.theta + g.sigma * draws.normal(n)
    u = draws.uniform(n)
    if member.any():
        if isinstance(g, GammaNormalMix):
            shape, scale = gamma_params(g.theta, g.sigma)
            x[member] = gammaincinv(shape, u[member]) * scale
        else:
            lo, hi = uniform_params(g.theta, g.sigma)
            x[member] = lo + (hi - lo) * u[member]
    return x


@dataclass(frozen=True)
class Scenario:
    name: str
    generators: tuple
    n_per_group: tuple
    family: str = ""
    param: str = ""
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "n_per_group", tuple(int(n) for n in self.n_per_group))
        if not self.generators:
            raise ValidationError("scenario needs at least one group")
        if len(self.generators) != len(self.n_per_group):
            raise ValidationError("generators and n_per_group lengths differ")
        if any(n < 1 for n in self.n_per_group):
            raise ValidationError("n must be positive")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"g{i + 1}" for i in range(len(self.generators))))
        elif len(self.labels) != len(self.generators):
            raise ValidationError("labels and generators lengths differ")

    @property
    def n_groups(self) -> int:
        return len(self.generators)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([g.theta for g in self.generators])

    @property
    def true_theta_max(self) -> float:
        return float(self.thetas.max())

    def draw(self, draws: Draws) -> Dataset:
        """One dataset; groups consume the stream in order."""
        return Dataset(tuple(GroupObservations(lab, draw_group(g, n, draws))
                             for lab, g, n in zip(self.labels, self.generators, self.n_per_group)))


def _fmt(v: Sequence[float]) -> str:
    return "(" + ", ".join(f"{x:g}" for x in v) + ")"


def normal_scenario(theta, sigma, n, family="custom") -> Scenario:
    theta = [float(t) for t in theta]
    sigma = list(sigma) if np.ndim(sigma) else [sigma] * len(theta)
    n = list(n) if np.ndim(n) else [n] * len(theta)
    gens = tuple(Normal(t, float(s)) for t, s in zip(theta, sigma))
    param = _fmt(theta)
    return Scenario(f"{family} theta={param}", gens, n, family, param)


def toy(n: int) -> Scenario:
    s = normal_scenario((0.9, 1.0), 5.0, n, "toy")
    return Scenario(f"toy n={n}", s.generators, s.n_per_group, "toy", str(n))


def s1(theta) -> Scenario:
    return normal_scenario(theta, (5, 5, 5), 40, "S1")


def s2(theta) -> Scenario:
    return normal_scenario(theta, (3, 4, 5), 40, "S2")


def _mix(cls, family, w, theta=(1.0, 1.1, 1.2), sigma=5.0, n=40) -> Scenario:
    gens = tuple(cls(float(t), sigma, float(w)) for t in theta)
    return Scenario(f"{family} w={w:g}", gens, (n,) * len(gens), family, f"{w:g}")


def s3(w: float) -> Scenario:
    return _mix(GammaNormalMix, "S3", w)


def s4(w: float) -> Scenario:
    return _mix(UniformNormalMix, "S4", w)


def four_arm(theta) -> Scenario:
    return normal_scenario(theta, 5.0, 40, "four_arm")


TOY_N = (40, 4000, 40000)
MAIN_THETAS = ((1, 1, 1), (1, 1, 1.2), (1, 1.1, 1.2), (1, 1.2, 1.2))
MIX_WEIGHTS = (0.1, 0.2, 0.3, 0.5)
FOUR_ARM_THETAS = ((1, 1, 1, 1), (1, 1, 1, 1.2), (1, 1.05, 1.1, 1.2), (1, 1.1, 1.2, 1.2))

FAMILIES = {
    "toy": (toy, TOY_N),
    "S1": (s1, MAIN_THETAS),
    "S2": (s2, MAIN_THETAS),
    "S3": (s3, MIX_WEIGHTS),
    "S4": (s4, MIX_WEIGHTS),
    "four_arm": (four_arm, FOUR_ARM_THETAS),
}


def family(name: str) -> list[Scenario]:
    if name not in FAMILIES:
        raise ValidationError(f"unknown builtin scenario {name!r}; choose from {sorted(FAMILIES)}")
    make, params = FAMILIES[name]
    return [make(p) for p in params]


def builtin_scenarios() -> list[Scenario]:
    return [s for name in ("S1", "S2", "S3", "S4", "four_arm", "toy") for s in family(name)]

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selbias import scenarios as sc
from selbias.model import ValidationError
from selbias.rng import TEST, RngStream


def test_gamma_params_examples():
    assert sc.gamma_params(1, 5) == pytest.approx((0.04, 25.0), rel=1e-15)
    shape, scale = sc.gamma_params(1.2, 5)
    assert shape == pytest.approx(0.0576, rel=1e-14) and scale == pytest.approx(125 / 6, rel=1e-14)
    with pytest.raises(ValidationError):
        sc.gamma_params(0, 5)
    with pytest.raises(ValidationError):
        sc.gamma_params(1, 0)


def test_uniform_params_examples():
    lo, hi = sc.uniform_params(1, 5)
    assert (lo, hi) == pytest.approx((1 - 5 * math.sqrt(3), 1 + 5 * math.sqrt(3)), rel=1e-15)
    assert sc.uniform_params(0, 1 / math.sqrt(3)) == pytest.approx((-1, 1), rel=1e-15)


pos = st.floats(1e-3, 1e3)


@given(pos, pos)
@settings(max_examples=200, deadline=None)
def test_gamma_inverse_identity(k, s):
    shape, scale = sc.gamma_params(k * s, math.sqrt(k) * s)
    assert shape == pytest.approx(k, rel=1e-12) and scale == pytest.approx(s, rel=1e-12)


@given(pos, pos)
@settings(max_examples=200, deadline=None)
def test_gamma_moments_roundtrip(theta, sigma):
    shape, scale = sc.gamma_params(theta, sigma)
    assert shape * scale == pytest.approx(theta, rel=1e-12)
    assert shape * scale**2 == pytest.approx(sigma**2, rel=1e-12)


@given(st.floats(-1e3, 1e3), pos)
@settings(max_examples=200, deadline=None)
def test_uniform_moments_roundtrip(theta, sigma):
    lo, hi = sc.uniform_params(theta, sigma)
    assert (lo + hi) / 2 == pytest.approx(theta, rel=1e-12, abs=1e-12 * sigma)
    assert (hi - lo) ** 2 / 12 == pytest.approx(sigma**2, rel=1e-12)


def test_generator_invariants():
    with pytest.raises(ValidationError):
        sc.Normal(0, 0)
    with pytest.raises(ValidationError):
        sc.GammaNormalMix(1, 5, 1.5)
    with pytest.raises(ValidationError):
        sc.GammaNormalMix(-1, 5, 0.1)
    with pytest.raises(ValidationError):
        sc.UniformNormalMix(1, 5, -0.1)
    sc.UniformNormalMix(-1, 5, 0.5)


def test_mixture_w0_matches_normal_draws():
    # with w = 0 every value comes from the normal component, drawn after n membership uniforms
    n = 50
    x = sc.draw_group(sc.GammaNormalMix(1, 5, 0.0), n, RngStream(1, (TEST,)).draws())
    d = RngStream(1, (TEST,)).draws()
    d.uniform(n)
    assert np.array_equal(x, 1 + 5 * d.normal(n))


def test_uniform_w1_bounded():
    x = sc.draw_group(sc.UniformNormalMix(1, 5, 1.0), 100_000, RngStream(2, (TEST,)).draws())
    assert x.min() > -7.6604 and x.max() < 9.6604


def test_gamma_w1_positive():
    x = sc.draw_group(sc.GammaNormalMix(1, 5, 1.0), 10_000, RngStream(2, (TEST,)).draws())
    assert np.all(x >= 0)


def test_normal_grand_mean_clt_bound():
    s = sc.normal_scenario((1.0,), (5.0,), 40)
    d = RngStream(3, (TEST,)).draws()
    grand = np.mean([s.draw(d).groups[0].values.mean() for _ in range(10_000)])
    assert abs(grand - 1) < 4 * 5 / math.sqrt(40 * 10_000)


def test_builtin_scenarios():
    s1 = sc.family("S1")[1]
    assert tuple(s1.thetas) == (1, 1, 1.2) and s1.n_per_group == (40, 40, 40)
    assert all(isinstance(g, sc.Normal) and g.sigma == 5 for g in s1.generators)
    assert [g.sigma for g in sc.family("S2")[0].generators] == [3, 4, 5]
    toy = sc.family("toy")
    assert [s.n_per_group[0] for s in toy] == [40, 4000, 40000]
    assert tuple(toy[0].thetas) == (0.9, 1.0) and toy[0].true_theta_max == 1.0
    assert tuple(sc.family("four_arm")[2].thetas) == (1, 1.05, 1.1, 1.2)
    s3 = sc.family("S3")
    assert [g.w for g in (s.generators[0] for s in s3)] == [0.1, 0.2, 0.3, 0.5]
    assert all(isinstance(g, sc.GammaNormalMix) for g in s3[0].generators)
    assert all(isinstance(g, sc.UniformNormalMix) for g in sc.family("S4")[0].generators)
    assert len(sc.builtin_scenarios()) == 3 + 4 * 5
    with pytest.raises(ValidationError):
        sc.family("S9")


def test_scenario_validation():
    with pytest.raises(ValidationError):
        sc.Scenario("x", (sc.Normal(0, 1),), (1, 2))
    with pytest.raises(ValidationError):
        sc.Scenario("x", (sc.Normal(0, 1),), (0,))
    with pytest.raises(ValidationError):
        sc.Scenario("x", (), ())

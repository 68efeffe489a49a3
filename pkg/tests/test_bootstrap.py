import numpy as np
import pytest

from selbias.bootstrap import corrected_estimate, resample
from selbias.estimators import hybrid_estimate, traditional_max
from selbias.methods import estimate, estimate_many
from selbias.model import Dataset, EstimatorSpec, PreconditionError
from selbias.rng import TEST, RngStream

AB = Dataset.from_values({"A": [0.0, 2.0], "B": [3.0, 5.0]})
S3 = Dataset.from_values({"A": [0.1, 0.5, -0.3, 1.0], "B": [0.2, 0.9, 0.4, 0.0], "C": [0.6, -0.2, 0.3, 0.8]})


def test_nb_constant_group_resamples_to_itself():
    d = Dataset.from_values({"A": [7.0, 7.0, 7.0]})
    for i in range(5):
        r = resample(d, "nb", RngStream(1, (TEST, i)))
        assert list(r.groups[0].values) == [7.0, 7.0, 7.0]


def test_pb_zero_sd_summary():
    d = Dataset.from_summaries([("A", 3, 0.0, 0.0)])
    r = resample(d, "pb", RngStream(1, (TEST,)))
    assert r.subject_level and list(r.groups[0].values) == [0.0, 0.0, 0.0]


def test_nb_two_point_resample_frequencies():
    d = Dataset.from_values({"A": [0.0, 2.0]})
    counts = {}
    n = 4000
    for i in range(n):
        key = tuple(resample(d, "nb", RngStream(2, (TEST, i))).groups[0].values)
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == {(0.0, 0.0), (0.0, 2.0), (2.0, 0.0), (2.0, 2.0)}
    se = np.sqrt(n * 0.25 * 0.75)
    assert all(abs(c - n / 4) < 4 * se for c in counts.values())


def test_resample_keeps_labels_and_sizes():
    d = Dataset.from_summaries([("x", 4, 1.0, 2.0), ("y", 2, 0.0, 1.0)])
    r = resample(d, "pb", RngStream(3, (TEST,)))
    assert r.labels == ["x", "y"] and list(r.sizes) == [4, 2]


def test_sampler_preconditions():
    summ = Dataset.from_summaries([("A", 3, 0.0, 1.0), ("B", 3, 1.0, 1.0)])
    with pytest.raises(PreconditionError, match="NB requires subject-level data"):
        corrected_estimate(summ, 1, "nb", 10, 0)
    with pytest.raises(PreconditionError):
        corrected_estimate(Dataset.from_values({"A": [1.0], "B": [0.0, 2.0]}), 1, "pb", 10, 0)
    with pytest.raises(PreconditionError):
        corrected_estimate(Dataset.from_summaries([("A", 1, 0.0, 1.0), ("B", 3, 0.0, 1.0)]), 2, "pb", 10, 0)
    # a single summary observation is fine for one level: nothing is refitted
    corrected_estimate(Dataset.from_summaries([("A", 1, 0.0, 1.0), ("B", 3, 0.0, 1.0)]), 1, "pb", 10, 0)
    with pytest.raises(ValueError):
        corrected_estimate(AB, 4, "pb", 10, 0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_nb_fixed_point_constant_groups(k):
    d = Dataset.from_values({"A": [1.5, 1.5, 1.5], "B": [2.0, 2.0]})
    e = corrected_estimate(d, k, "nb", 6, 9)
    assert e.value == 2.0
    assert e.trace.bias_estimates == (0.0,) * k


@pytest.mark.parametrize("kind", ["pb", "nb"])
def test_single_group_first_order_near_mean(kind):
    x = np.array([0.3, 1.7, -0.4, 2.2, 0.9, 1.1])
    d = Dataset.from_values({"A": x})
    B = 10_000
    e = corrected_estimate(d, 1, kind, B, 4)
    assert abs(e.value - x.mean()) <= 4 * x.std(ddof=1) / np.sqrt(x.size * B)


@pytest.mark.parametrize("kind", ["pb", "nb"])
def test_first_level_bias_not_negative(kind):
    B = 2000
    e = corrected_estimate(S3, 1, kind, B, 5)
    # Var of the max of resample means is at most the sum of the mean variances
    se = np.sqrt(np.sum(S3.variances() / S3.sizes) / B)
    assert e.trace.bias_estimates[0] >= -3 * se


@pytest.mark.parametrize("k,kind", [(2, "pb"), (2, "nb"), (3, "pb")])
def test_workers_do_not_change_result(k, kind):
    ref = corrected_estimate(S3, k, kind, 20, 123, replication=4, workers=1)
    for w in (2, 8):
        e = corrected_estimate(S3, k, kind, 20, 123, replication=4, workers=w)
        assert e.value == ref.value and e.trace == ref.trace


def test_workers_env_default(monkeypatch):
    monkeypatch.setenv("SELBIAS_WORKERS", "2")
    a = corrected_estimate(S3, 2, "pb", 20, 1)
    monkeypatch.setenv("SELBIAS_WORKERS", "1")
    assert corrected_estimate(S3, 2, "pb", 20, 1) == a


def test_seed_and_replication_change_draws():
    a = corrected_estimate(S3, 1, "pb", 50, 1)
    assert corrected_estimate(S3, 1, "pb", 50, 2).value != a.value
    assert corrected_estimate(S3, 1, "pb", 50, 1, replication=1).value != a.value
    assert corrected_estimate(S3, 1, "nb", 50, 1).value != a.value


def test_lower_orders_follow_recursion():
    e = corrected_estimate(S3, 3, "nb", 8, 2)
    a = e.trace.bias_estimates
    t0 = traditional_max(S3).value
    assert e.trace.raw == t0
    assert e.value == pytest.approx(t0 - a[0] - a[1] - a[2], abs=1e-12)
    assert e.lower_order(1).value == t0 - a[0]


def test_estimate_many_shares_runs():
    specs = [EstimatorSpec.parse(c, B=12, seed=8) for c in ("pb2", "pb1", "pb2s", "nb1", "traditional", "pb2")]
    out = estimate_many(S3, specs)
    pb2 = estimate(S3, specs[0])
    assert out[0] == pb2 and out[5] == pb2
    assert out[1].value == pb2.lower_order(1).value
    assert out[2] == hybrid_estimate(S3, pb2)
    assert out[3] == estimate(S3, specs[3])
    assert out[4] == traditional_max(S3)

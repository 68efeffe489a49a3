import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selbias.model import (
    Dataset,
    Estimate,
    EstimatorSpec,
    GroupObservations,
    GroupSummary,
    PreconditionError,
    Trace,
    ValidationError,
    validate,
)


def test_subject_level_valid():
    d = Dataset.from_values({"A": [1.0, 2.0], "B": [0.5]})
    assert d.subject_level
    assert d.n_groups == 2
    assert list(d.sizes) == [2, 1]
    assert validate(d) is d


def test_summary_level_valid():
    d = Dataset.from_summaries([("A", 13, 0.82, 0.55)])
    assert not d.subject_level
    assert d.means()[0] == 0.82
    assert d.variances()[0] == pytest.approx(0.55**2)


@pytest.mark.parametrize("values,msg", [
    ([], "empty group A"),
    ([1.0, np.nan], "non-finite value in group A"),
    ([np.inf], "non-finite value in group A"),
])
def test_bad_observations(values, msg):
    with pytest.raises(ValidationError, match=msg):
        GroupObservations("A", values)


def test_bad_summaries():
    with pytest.raises(ValidationError, match="n < 1 in group A"):
        GroupSummary("A", 0, 1.0, 1.0)
    with pytest.raises(ValidationError, match="sd < 0 in group A"):
        GroupSummary("A", 3, 1.0, -0.1)
    with pytest.raises(ValidationError):
        GroupSummary("A", 3, np.nan, 1.0)


def test_duplicate_labels_and_mixed_levels():
    with pytest.raises(ValidationError, match="duplicate label A"):
        Dataset((GroupObservations("A", [1.0]), GroupObservations("A", [2.0])))
    with pytest.raises(ValidationError):
        Dataset((GroupObservations("A", [1.0]), GroupSummary("B", 2, 1.0, 1.0)))
    with pytest.raises(ValidationError):
        Dataset(())


def test_values_are_read_only_copies():
    src = np.array([1.0, 2.0])
    g = GroupObservations("A", src)
    src[0] = 99.0
    assert g.values[0] == 1.0
    with pytest.raises(ValueError):
        g.values[0] = 5.0


def test_variances_nan_for_singleton():
    d = Dataset.from_values({"A": [1.0, 3.0], "B": [4.0]})
    v = d.variances()
    assert v[0] == 2.0 and np.isnan(v[1])


def test_concatenated_requires_subject_level():
    d = Dataset.from_summaries([("A", 3, 0.0, 1.0)])
    with pytest.raises(PreconditionError):
        d.concatenated()


def test_affine_summary_scales_sd_by_abs():
    d = Dataset.from_summaries([("A", 3, 1.0, 2.0)]).affine(-2.0, 1.0)
    g = d.groups[0]
    assert (g.mean, g.sd) == (-1.0, 4.0)


def test_lower_order():
    e = Estimate(0.4, Trace(raw=1.0, selected_index=0, bias_estimates=(0.5, 0.1)))
    assert e.lower_order(1).value == 0.5
    assert e.lower_order(2).value == pytest.approx(0.4)
    with pytest.raises(ValueError):
        e.lower_order(3)


@pytest.mark.parametrize("code,kind,order,sampler", [
    ("traditional", "traditional", None, None),
    ("jk", "jackknife", None, None),
    ("jkp", "jackknife", None, None),
    ("shrink", "shrinkage", None, None),
    ("pb1", "bootstrap", 1, "pb"),
    ("nb3", "bootstrap", 3, "nb"),
    ("pb2s", "hybrid", 2, "pb"),
    ("NB2S", "hybrid", 2, "nb"),
])
def test_spec_parse_roundtrip(code, kind, order, sampler):
    s = EstimatorSpec.parse(code, B=10, seed=3)
    assert (s.kind, s.order, s.sampler, s.B, s.seed) == (kind, order, sampler, 10, 3)
    assert EstimatorSpec.parse(s.code, B=10, seed=3) == s


@pytest.mark.parametrize("code", ["pb4", "xb1", "pb", "pb1x", "", "jk2"])
def test_spec_parse_rejects(code):
    with pytest.raises(ValidationError):
        EstimatorSpec.parse(code)


def test_spec_field_checks():
    with pytest.raises(ValidationError):
        EstimatorSpec("bootstrap", 1, "pb", B=0)
    with pytest.raises(ValidationError):
        EstimatorSpec("bootstrap", 1, "pb", seed=2**64)
    with pytest.raises(ValidationError):
        EstimatorSpec("jackknife", convention="weird")
    assert EstimatorSpec("jackknife").convention == "total"


groups = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=8)


@given(st.dictionaries(st.text(min_size=1, max_size=4), groups, min_size=1, max_size=5))
@settings(max_examples=100, deadline=None)
def test_validate_idempotent(data):
    d = Dataset.from_values(data)
    assert validate(validate(d)) is d
    assert d.labels == list(data)

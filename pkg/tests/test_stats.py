from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cascade_interaction.cascades import CascadeSet
from cascade_interaction.stats import (
    OutageDistribution,
    ccdf_table,
    compare_distributions,
    estimate_lambda,
    initial_distribution,
    normalize_weights,
    outage_distribution,
    similarity,
)

from conftest import cascade_lists


def test_outage_distribution_small():
    cs = CascadeSet.from_lists(3, [[[0]], [[1]], [[0], [2]]])
    d = outage_distribution(cs)
    assert d.probabilities == {1: pytest.approx(2 / 3), 2: pytest.approx(1 / 3)}
    assert d.mean() == pytest.approx(4 / 3)
    assert initial_distribution(cs).probabilities == {1: 1.0}
    assert d.samples().tolist() == [1.0, 1.0, 2.0]


def test_lambda_examples():
    cs = CascadeSet.from_lists(4, [[[0, 1], [2]], [[3]]])
    assert estimate_lambda(cs) == 0.25
    assert estimate_lambda(CascadeSet.from_lists(3, [[[0]], [[1, 2]]])) == 0.0


def test_normalize_weights():
    w = {(0, 1): 41000.0, (1, 2): 5.125}
    assert normalize_weights(w, 8000, 8000) == w
    scaled = normalize_weights(w, 41000, 8000)
    assert scaled[(0, 1)] == pytest.approx(41000 / 5.125)
    back = normalize_weights(scaled, 8000, 41000)
    assert back == {k: pytest.approx(v) for k, v in w.items()}
    assert normalize_weights(np.array([5.125]), 41000, 8000) == pytest.approx([1.0])
    with pytest.raises(ValueError):
        normalize_weights(w, 0, 10)


def test_similarity_hand_example():
    r = similarity({"l1": 10, "l2": 5}, {"l1": 8, "l3": 2})
    # rational evaluation of the index definitions
    exact = {
        "S1": Fraction(10, 15),
        "S2": Fraction(10, 15),
        "S3": Fraction(8, 10),
        "S4": Fraction(8, 10),
        "S5": Fraction(18, 18) * Fraction(8, 10),
    }
    for key, value in exact.items():
        assert getattr(r, key) == pytest.approx(float(value), abs=1e-12)
    assert (r.n_shared, r.n_original_only, r.n_simulated_only) == (1, 1, 1)


def test_similarity_undefined_cases():
    r = similarity({"a": 1.0}, {"b": 2.0})
    assert r.S4 is None and r.S5 is None
    assert r.S2 == 0.0 and r.S3 == 0.0
    z = similarity({"a": 0.0}, {"a": 1.0})
    assert z.S1 is None and z.S2 is None and z.S5 is None
    assert similarity({"a": 2.0}, {"a": 2.0}).as_dict()["card_L1"] == 1


def test_ccdf_table():
    rows = ccdf_table([1, 1, 2, 40, 50, 70], n_zero=2)
    assert rows[0] == (0.0, 1.0)
    assert rows[1] == (1.0, 6 / 8)
    assert rows[2] == (2.0, 4 / 8)
    # 40 and 50 share the [32, 64) bin, 70 sits in [64, 128)
    assert rows[3] == (45.0, 3 / 8)
    assert rows[4] == (70.0, 1 / 8)
    assert ccdf_table([]) == []


def test_compare_distributions():
    a = OutageDistribution({1: 900, 2: 100}, 1000)
    b = OutageDistribution({1: 890, 2: 105, 3: 5}, 1000)
    rows = compare_distributions(a, b)
    assert [r["total"] for r in rows] == [1, 2, 3]
    assert rows[0]["agrees"] and rows[1]["agrees"]
    # bin 3 is empty on one side: se comes only from the other sample
    assert rows[2]["std_error"] == pytest.approx(np.sqrt(0.005 * 0.995 / 1000))
    swapped = compare_distributions(b, a)
    assert [r["agrees"] for r in swapped] == [r["agrees"] for r in rows]
    assert [r["z"] for r in swapped] == pytest.approx([-r["z"] for r in rows])


weight_maps = st.dictionaries(st.integers(0, 12), st.floats(0.01, 1e4), min_size=1, max_size=8)


@settings(max_examples=100, deadline=None)
@given(weight_maps)
def test_identical_maps_give_ones(w):
    r = similarity(w, dict(w))
    for v in (r.S1, r.S2, r.S3, r.S4, r.S5):
        assert v == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(weight_maps, st.floats(0.05, 20.0))
def test_scaling_law(w, c):
    r = similarity(w, {k: c * v for k, v in w.items()})
    assert r.S1 == pytest.approx(c) and r.S4 == pytest.approx(c) and r.S5 == pytest.approx(c)
    assert r.S2 == pytest.approx(1.0) and r.S3 == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(weight_maps, weight_maps)
def test_swap_symmetry_and_bounds(w1, w2):
    r, s = similarity(w1, w2), similarity(w2, w1)
    assert 0.0 <= r.S2 <= 1.0 + 1e-12 and 0.0 <= r.S3 <= 1.0 + 1e-12
    assert s.S2 == pytest.approx(r.S3) and s.S3 == pytest.approx(r.S2)
    assert s.S1 == pytest.approx(1.0 / r.S1)
    assume(r.n_shared > 0)
    assert s.S4 == pytest.approx(1.0 / r.S4)


@settings(max_examples=60, deadline=None)
@given(cascade_lists(), st.randoms(use_true_random=False))
def test_lambda_bounded_and_order_free(data, rnd):
    n, lists = data
    lam = estimate_lambda(CascadeSet.from_lists(n, lists))
    assert 0.0 <= lam < 1.0
    shuffled = list(lists)
    rnd.shuffle(shuffled)
    assert estimate_lambda(CascadeSet.from_lists(n, shuffled)) == lam

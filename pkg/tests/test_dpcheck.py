import math

import numpy as np
import pytest

from privkit.dpcheck import (
    ENUMERATION_CAP,
    MechanismDistribution,
    exact_epsilon,
    prr_distribution,
    report_distribution,
)
from privkit.errors import FilterTooLarge, SpaceMismatch
from privkit.rappor import BloomFilter, RapporParams, epsilon_infinity, epsilon_one, lemma1

PAPER = RapporParams(k=8, h=2, f=0.5, q=0.75, p=0.5)


def params_with(k, **kw):
    base = dict(k=k, h=2, f=0.5, q=0.75, p=0.5)
    base.update(kw)
    return RapporParams(**base)


def test_prr_point_mass_when_deterministic():
    params = params_with(2, f=0.0)
    bloom = BloomFilter.from_indices(2, [0])
    dist = prr_distribution(bloom, params)
    assert dist.prob(0b01) == pytest.approx(1.0)
    assert dist.prob(0b00) == dist.prob(0b10) == dist.prob(0b11) == 0.0


def test_prr_uniform_when_fully_random():
    params = params_with(2, f=1.0)
    dist = prr_distribution(BloomFilter.from_indices(2, [0]), params)
    for outcome in range(4):
        assert dist.prob(outcome) == pytest.approx(0.25)


def test_prr_single_bit_value():
    params = params_with(1, h=1, f=0.5)
    dist = prr_distribution(BloomFilter.from_indices(1, [0]), params)
    # f/2 + (1-f) = 0.75 by direct substitution
    assert dist.as_dict() == pytest.approx({1: 0.75, 0: 0.25})


def test_report_single_bit_matches_marginal():
    params = params_with(1, h=1)
    q_star, p_star = lemma1(params)
    set_bit = report_distribution(BloomFilter.from_indices(1, [0]), params)
    assert set_bit.prob(1) == pytest.approx(q_star)
    unset_bit = report_distribution(BloomFilter.from_indices(1, []), params)
    assert unset_bit.prob(1) == pytest.approx(p_star)


def test_report_noiseless_point_mass():
    params = params_with(3, f=0.0, q=1.0, p=0.0)
    dist = report_distribution(BloomFilter.from_indices(3, [0, 2]), params)
    assert dist.prob(0b101) == pytest.approx(1.0)


def test_product_structure():
    params = params_with(2)
    joint = report_distribution(BloomFilter.from_indices(2, [0]), params)
    single_set = report_distribution(BloomFilter.from_indices(1, [0]), params_with(1, h=1))
    single_unset = report_distribution(BloomFilter.from_indices(1, []), params_with(1, h=1))
    for b0 in (0, 1):
        for b1 in (0, 1):
            assert joint.prob(b0 | (b1 << 1)) == pytest.approx(
                single_set.prob(b0) * single_unset.prob(b1)
            )


def test_exact_epsilon_identical_is_zero():
    dist = prr_distribution(BloomFilter.from_indices(4, [1]), params_with(4))
    assert exact_epsilon(dist, dist) == 0.0


def test_exact_epsilon_symmetric_nonnegative():
    d1 = prr_distribution(BloomFilter.from_indices(4, [0, 1]), params_with(4))
    d2 = prr_distribution(BloomFilter.from_indices(4, [2, 3]), params_with(4))
    eps = exact_epsilon(d1, d2)
    assert eps == exact_epsilon(d2, d1)
    assert eps >= 0.0


def test_exact_epsilon_matches_closed_forms():
    b1 = BloomFilter.from_indices(8, [0, 1])
    b2 = BloomFilter.from_indices(8, [2, 3])
    assert exact_epsilon(
        prr_distribution(b1, PAPER), prr_distribution(b2, PAPER)
    ) == pytest.approx(epsilon_infinity(PAPER), abs=1e-9)
    assert exact_epsilon(
        report_distribution(b1, PAPER), report_distribution(b2, PAPER)
    ) == pytest.approx(epsilon_one(PAPER), abs=1e-9)


def test_overlapping_filters_leak_less():
    params = params_with(8)
    disjoint = exact_epsilon(
        prr_distribution(BloomFilter.from_indices(8, [0, 1]), params),
        prr_distribution(BloomFilter.from_indices(8, [2, 3]), params),
    )
    overlapping = exact_epsilon(
        prr_distribution(BloomFilter.from_indices(8, [0, 1]), params),
        prr_distribution(BloomFilter.from_indices(8, [1, 2]), params),
    )
    assert overlapping <= disjoint + 1e-12
    assert overlapping == pytest.approx(disjoint / 2, abs=1e-9)


def test_one_sided_zero_probability_is_infinite():
    params = params_with(2, f=0.0)
    d1 = prr_distribution(BloomFilter.from_indices(2, [0]), params)
    d2 = prr_distribution(BloomFilter.from_indices(2, [1]), params)
    assert exact_epsilon(d1, d2) == math.inf


def test_space_mismatch():
    d1 = prr_distribution(BloomFilter.from_indices(2, [0]), params_with(2))
    d2 = prr_distribution(BloomFilter.from_indices(3, [0]), params_with(3))
    with pytest.raises(SpaceMismatch):
        exact_epsilon(d1, d2)


def test_enumeration_cap():
    k = ENUMERATION_CAP + 1
    params = params_with(k)
    with pytest.raises(FilterTooLarge):
        prr_distribution(BloomFilter.from_indices(k, [0, 1]), params)
    with pytest.raises(FilterTooLarge):
        MechanismDistribution.product_of_bits([0.5] * k)


def test_distribution_validates_total():
    with pytest.raises(ValueError):
        MechanismDistribution(1, np.log(np.array([0.4, 0.4])))


def test_distribution_probabilities_sum_to_one():
    dist = report_distribution(BloomFilter.from_indices(6, [0, 3]), params_with(6))
    assert sum(dist.as_dict().values()) == pytest.approx(1.0, abs=1e-9)

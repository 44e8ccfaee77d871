"""Exact differential-privacy oracle for small bit-vector mechanisms.

The randomized-response stages treat bits independently, so the full output
distribution over k-bit patterns is a product measure that can be enumerated
exactly for small k. The tight privacy parameter between two inputs is then
the largest absolute log-ratio of outcome probabilities, which is what the
privacy definition bounds. Probabilities live in log space to stay exact-ish
at the enumeration cap.

The cap is 2^20 outcomes; larger filters are rejected rather than
approximated, because an approximate oracle cannot arbitrate closed forms.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import FilterTooLarge, SpaceMismatch
from .rappor import BloomFilter, RapporParams, lemma1

ENUMERATION_CAP = 20


class MechanismDistribution:
    """Exact distribution over all 2^k outcome bit patterns.

    Outcome ``o`` is the integer whose bit i equals output bit i. Stored as
    log-probabilities; exactly-zero mass is -inf.
    """

    def __init__(self, k: int, log_probs: np.ndarray):
        if k < 0 or log_probs.shape != (1 << k,):
            raise SpaceMismatch(
                f"log_probs has shape {log_probs.shape}, expected ({1 << k},)"
            )
        total = _logsumexp(log_probs)
        if abs(math.expm1(total)) > 1e-9:
            raise ValueError(f"probabilities sum to {math.exp(total)}, not 1")
        self.k = k
        self.log_probs = log_probs
        self.log_probs.setflags(write=False)

    def prob(self, outcome: int) -> float:
        return float(np.exp(self.log_probs[outcome]))

    def as_dict(self) -> dict[int, float]:
        return {o: self.prob(o) for o in range(1 << self.k)}

    @classmethod
    def product_of_bits(cls, p_one: Sequence[float]) -> "MechanismDistribution":
        """Joint distribution of independent bits with P(bit i = 1) = p_one[i]."""
        k = len(p_one)
        if k > ENUMERATION_CAP:
            raise FilterTooLarge(
                f"{k} bits exceed the exact enumeration cap of {ENUMERATION_CAP}"
            )
        log_probs = np.zeros(1)
        with np.errstate(divide="ignore"):
            for p in p_one:
                lo = np.log(1.0 - p) if p < 1.0 else -np.inf
                hi = np.log(p) if p > 0.0 else -np.inf
                log_probs = np.concatenate([log_probs + lo, log_probs + hi])
        return cls(k, log_probs)


def prr_distribution(
    bloom: BloomFilter, params: RapporParams
) -> MechanismDistribution:
    """Exact distribution of the permanent response for a given true filter:
    per bit, P(1) = f/2 + (1-f) * b."""
    _check_size(bloom, params)
    f = params.f
    return MechanismDistribution.product_of_bits(
        [f / 2.0 + (1.0 - f) * b for b in bloom.bits]
    )


def report_distribution(
    bloom: BloomFilter, params: RapporParams
) -> MechanismDistribution:
    """Exact distribution of a sent report for a given true filter: per bit,
    P(1) = q* where the filter bit is set and p* elsewhere."""
    _check_size(bloom, params)
    q_star, p_star = lemma1(params)
    return MechanismDistribution.product_of_bits(
        [q_star if b else p_star for b in bloom.bits]
    )


def exact_epsilon(
    d1: MechanismDistribution, d2: MechanismDistribution
) -> float:
    """Tight privacy parameter: max over outcomes of |ln(P1(o)/P2(o))|.

    Outcomes with zero mass on both sides are ignored; an outcome with zero
    mass on exactly one side makes every finite bound fail, reported as
    +infinity.
    """
    if d1.k != d2.k:
        raise SpaceMismatch(f"outcome spaces differ: k={d1.k} vs k={d2.k}")
    l1, l2 = d1.log_probs, d2.log_probs
    zero1 = np.isneginf(l1)
    zero2 = np.isneginf(l2)
    if np.any(zero1 != zero2):
        return math.inf
    live = ~zero1
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(l1[live] - l2[live])))


def _check_size(bloom: BloomFilter, params: RapporParams) -> None:
    if len(bloom.bits) != params.k:
        raise SpaceMismatch(
            f"filter has {len(bloom.bits)} bits, params say {params.k}"
        )
    if params.k > ENUMERATION_CAP:
        raise FilterTooLarge(
            f"k={params.k} exceeds the exact enumeration cap of {ENUMERATION_CAP}"
        )


def _logsumexp(log_probs: np.ndarray) -> float:
    m = np.max(log_probs)
    if np.isneginf(m):
        return -math.inf
    return float(m + np.log(np.sum(np.exp(log_probs - m))))

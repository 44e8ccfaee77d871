"""Support / certainty rule mining over transaction sets.

Support counts are integers and every threshold comparison is done by
integer cross-multiplication, so rules sitting exactly on a threshold are
classified without floating-point wobble. The float ``support`` and
``certainty`` on returned rules are for display only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .dataset import AttributeRole, Dataset, render_cell
from .errors import (
    BadThreshold,
    DisjointnessViolation,
    UnknownItem,
    ZeroSupportAntecedent,
)

ItemSet = frozenset[str]


@dataclass(frozen=True)
class TransactionSet:
    """Transactions over a fixed item universe."""

    transactions: tuple[ItemSet, ...]
    items: ItemSet

    def __post_init__(self):
        for t in self.transactions:
            stray = t - self.items
            if stray:
                raise UnknownItem(f"transaction items {sorted(stray)} outside universe")

    @classmethod
    def from_iterables(
        cls,
        transactions: Iterable[Iterable[str]],
        items: Optional[Iterable[str]] = None,
    ) -> "TransactionSet":
        txs = tuple(frozenset(t) for t in transactions)
        universe = (
            frozenset(items)
            if items is not None
            else frozenset().union(*txs) if txs else frozenset()
        )
        return cls(txs, universe)

    def __len__(self):
        return len(self.transactions)


@dataclass(frozen=True)
class Rule:
    """A -> B with its support (of A union B) and certainty P(B | A)."""

    antecedent: ItemSet
    consequent: ItemSet
    support: float
    certainty: float


def support_count(transactions: TransactionSet, itemset: Iterable[str]) -> int:
    """Number of transactions containing every item of the itemset."""
    wanted = frozenset(itemset)
    stray = wanted - transactions.items
    if stray:
        raise UnknownItem(f"items {sorted(stray)} outside universe")
    return sum(1 for t in transactions.transactions if wanted <= t)


def support(transactions: TransactionSet, itemset: Iterable[str]) -> float:
    """Fraction of transactions containing the itemset; 1.0 when it is empty."""
    if not len(transactions):
        return 0.0
    return support_count(transactions, itemset) / len(transactions)


def certainty(
    transactions: TransactionSet, antecedent: Iterable[str], consequent: Iterable[str]
) -> float:
    """P(consequent | antecedent) as the ratio of support counts."""
    a = frozenset(antecedent)
    b = frozenset(consequent)
    if a & b:
        raise DisjointnessViolation(
            f"antecedent and consequent share {sorted(a & b)}"
        )
    count_a = support_count(transactions, a)
    if count_a == 0:
        raise ZeroSupportAntecedent(f"{sorted(a)} occurs in no transaction")
    return support_count(transactions, a | b) / count_a


def solid_rules(
    transactions: TransactionSet,
    min_support: float = 0.35,
    min_certainty: float = 0.60,
    max_itemset: int = 3,
) -> list[Rule]:
    """All rules A -> B meeting both thresholds, from itemsets of at most
    max_itemset items.

    Frequent itemsets are enumerated levelwise (candidates are joins of
    frequent sets, pruned by support anti-monotonicity), then every disjoint
    split of each frequent itemset is scored. Rules are ordered by certainty
    descending, then support descending, then lexicographically.
    """
    if not 0.0 < min_support <= 1.0 or not 0.0 < min_certainty <= 1.0:
        raise BadThreshold(
            f"thresholds must be in (0, 1], got support={min_support}, "
            f"certainty={min_certainty}"
        )
    if max_itemset < 2:
        raise BadThreshold(f"max_itemset must be >= 2, got {max_itemset}")
    n = len(transactions)
    if n == 0:
        return []
    sup_thr = Fraction(min_support)
    cert_thr = Fraction(min_certainty)

    def frequent(count: int) -> bool:
        return count * sup_thr.denominator >= sup_thr.numerator * n

    counts: dict[ItemSet, int] = {}
    level = [
        frozenset({item})
        for item in sorted(transactions.items)
    ]
    level = [c for c in level if _count_and_keep(transactions, c, counts, frequent)]
    all_frequent = list(level)
    size = 1
    while level and size < max_itemset:
        size += 1
        candidates = _join_candidates(level, size)
        prev = set(level)
        level = []
        for cand in candidates:
            if any(cand - {item} not in prev for item in cand):
                continue  # a subset is infrequent, so cand cannot be frequent
            if _count_and_keep(transactions, cand, counts, frequent):
                level.append(cand)
        all_frequent.extend(level)

    rules = []
    for itemset in all_frequent:
        if len(itemset) < 2:
            continue
        whole = counts[itemset]
        for r in range(1, len(itemset)):
            for antecedent in combinations(sorted(itemset), r):
                a = frozenset(antecedent)
                count_a = counts[a]
                if whole * cert_thr.denominator < cert_thr.numerator * count_a:
                    continue
                rules.append(
                    (
                        Fraction(whole, count_a),
                        Fraction(whole, n),
                        tuple(sorted(a)),
                        tuple(sorted(itemset - a)),
                    )
                )
    rules.sort(key=lambda r: (-r[0], -r[1], r[2], r[3]))
    return [
        Rule(
            antecedent=frozenset(a),
            consequent=frozenset(b),
            support=float(sup),
            certainty=float(cert),
        )
        for cert, sup, a, b in rules
    ]


def _count_and_keep(transactions, itemset, counts, frequent) -> bool:
    c = support_count(transactions, itemset)
    if frequent(c):
        counts[itemset] = c
        return True
    return False


def _join_candidates(level: list[ItemSet], size: int) -> list[ItemSet]:
    """Join frequent (size-1)-itemsets sharing a (size-2)-prefix."""
    ordered = sorted(tuple(sorted(s)) for s in level)
    out = []
    seen = set()
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if a[:-1] != b[:-1]:
                break
            cand = frozenset(a) | frozenset(b)
            if len(cand) == size and cand not in seen:
                seen.add(cand)
                out.append(cand)
    return out


def transactions_from_dataset(
    dataset: Dataset, include_qi: Sequence[str] = ()
) -> TransactionSet:
    """Map each record to the set of its sensitive values, optionally joined
    by selected quasi-identifier categories. Items read ``Attribute=value``."""
    names = [
        a.name for a in dataset.schema.attributes if a.role is AttributeRole.SENSITIVE
    ]
    for name in include_qi:
        if dataset.schema.attribute(name).role is not AttributeRole.QUASI_IDENTIFIER:
            raise UnknownItem(f"{name!r} is not a quasi-identifier")
    picked = names + list(include_qi)
    txs = []
    for rec in dataset.records:
        items = set()
        for name in picked:
            idx = dataset.schema.index(name)
            items.add(f"{name}={render_cell(rec[idx])}")
        txs.append(items)
    return TransactionSet.from_iterables(txs)

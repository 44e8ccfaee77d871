"""Secret summation by polynomial shares and Lagrange reconstruction.

Each of n parties hides its vote as the constant term of a random
degree-(n-1) polynomial, evaluates it at the fixed points 1..n, and sends
one evaluation to every peer. Each party sums what it received; the sums are
n points of the summed polynomial, whose value at 0 is the vote total.

Arithmetic runs over a prime field so that the interpolation coefficients
are exact and every share is uniformly distributed whatever the secret. The
protocol is simulated in-process with a synchronous share table; parties are
assumed honest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .errors import BadModulus, DuplicateX

DEFAULT_MODULUS = 2**31 - 1


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def gen_polynomial(
    secret: int, degree: int, modulus: int, rng: random.Random
) -> list[int]:
    """Coefficients [c0..c_degree] with c0 = secret and the rest uniform."""
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    return [secret % modulus] + [rng.randrange(modulus) for _ in range(degree)]


def evaluate(coeffs: Sequence[int], x: int, modulus: int) -> int:
    """Horner evaluation of the polynomial at x, mod the field modulus."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % modulus
    return acc


def lagrange_at(
    points: Sequence[tuple[int, int]], target: int, modulus: int
) -> int:
    """Interpolate through the points and evaluate at target, mod modulus.

    Exact whenever the underlying polynomial has degree < len(points).
    """
    if not points:
        raise ValueError("need at least one interpolation point")
    xs = [x % modulus for x, _ in points]
    if len(set(xs)) != len(xs):
        raise DuplicateX(f"interpolation points share an x coordinate: {xs}")
    total = 0
    for i, (xi, yi) in enumerate(points):
        num, den = 1, 1
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            num = num * (target - xj) % modulus
            den = den * (xi - xj) % modulus
        total = (total + yi * num * pow(den, modulus - 2, modulus)) % modulus
    return total


@dataclass(frozen=True)
class SecretSumTranscript:
    """Everything exchanged during one protocol run, for inspection."""

    modulus: int
    votes: tuple[int, ...]
    # shares[i][j] = party i's polynomial evaluated at party j's point (j+1)
    shares: tuple[tuple[int, ...], ...]
    # aggregated[j] = sum of column j = the summed polynomial at point j+1
    aggregated: tuple[int, ...]
    total: int


def secret_sum_transcript(
    votes: Sequence[int],
    modulus: int = DEFAULT_MODULUS,
    rng: random.Random | None = None,
) -> SecretSumTranscript:
    """Run the full protocol among len(votes) simulated parties."""
    n = len(votes)
    if n < 2:
        raise ValueError(f"need at least 2 parties, got {n}")
    if not is_prime(modulus):
        raise BadModulus(f"{modulus} is not prime")
    if any(v < 0 or v >= modulus for v in votes):
        raise ValueError("votes must lie in [0, modulus)")
    if sum(votes) >= modulus:
        raise BadModulus(
            f"modulus {modulus} does not exceed the reachable sum {sum(votes)}"
        )
    if rng is None:
        rng = random.Random()
    polys = [gen_polynomial(v, n - 1, modulus, rng) for v in votes]
    shares = tuple(
        tuple(evaluate(poly, j, modulus) for j in range(1, n + 1))
        for poly in polys
    )
    aggregated = tuple(
        sum(shares[i][j] for i in range(n)) % modulus for j in range(n)
    )
    points = [(j + 1, aggregated[j]) for j in range(n)]
    total = lagrange_at(points, 0, modulus)
    return SecretSumTranscript(modulus, tuple(votes), shares, aggregated, total)


def run_secret_sum(
    votes: Sequence[int],
    modulus: int = DEFAULT_MODULUS,
    rng: random.Random | None = None,
) -> int:
    """Sum the votes without any party revealing its own."""
    return secret_sum_transcript(votes, modulus, rng).total

"""Randomized-response reporting pipeline and its privacy calculators.

Client side: a value is hashed onto a Bloom filter, passed through a
permanent randomized response (PRR, flip mass ``f``) that is a deterministic
function of the client secret and the value, then through a fresh
instantaneous randomized response (IRR, probabilities ``q``/``p``) for every
report sent.

Server side: ``estimate_counts`` inverts the per-bit randomization using the
marginal probabilities ``q*``/``p*`` of observing a set bit, and scores each
candidate string by the most pessimistic of its Bloom indices.

All hashing is keyed BLAKE2b, so encodings and permanent responses are
bit-identical across processes and platforms for fixed parameters.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    DegenerateParams,
    DomainError,
    InvalidParams,
    LengthMismatch,
    ReportFormatError,
)

_MASK64 = (1 << 64) - 1

Bits = tuple[int, ...]


@dataclass(frozen=True)
class RapporParams:
    """Tuning knobs of the reporting pipeline.

    k: Bloom filter size in bits.
    h: number of hash functions.
    f: PRR flip mass in [0, 1]; the permanent bit keeps its true value with
       probability 1-f.
    q: probability a report bit is 1 given the permanent bit is 1.
    p: probability a report bit is 1 given the permanent bit is 0.
    hash_seed: keys the Bloom hash family, making indices reproducible.

    Set bits stay informative only while q > p; q = p is accepted (it is the
    no-signal edge) but the count estimator rejects it as degenerate, and the
    privacy calculators reject parameters at which their formulas are
    undefined. The boundaries p=0 and q=1 describe a noiseless channel.
    """

    k: int
    h: int
    f: float
    q: float
    p: float
    hash_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParams(f"filter size must be >= 1, got {self.k}")
        if not 1 <= self.h <= self.k:
            raise InvalidParams(f"need 1 <= h <= k, got h={self.h}, k={self.k}")
        if not 0.0 <= self.f <= 1.0:
            raise InvalidParams(f"f must be in [0, 1], got {self.f}")
        if not 0.0 <= self.p <= 1.0 or not 0.0 <= self.q <= 1.0:
            raise InvalidParams(f"p and q must be in [0, 1], got p={self.p}, q={self.q}")
        if self.q < self.p:
            raise InvalidParams(f"need q >= p, got q={self.q}, p={self.p}")

    def digest(self) -> str:
        """Short stable fingerprint used to bind serialized reports."""
        canonical = json.dumps(
            {
                "k": self.k,
                "h": self.h,
                "f": self.f,
                "q": self.q,
                "p": self.p,
                "hash_seed": self.hash_seed,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("ascii")).hexdigest()[:16]

    @classmethod
    def from_json(cls, obj: Union[str, Mapping]) -> "RapporParams":
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise InvalidParams(f"params are not valid JSON: {exc}") from exc
        if not isinstance(obj, Mapping):
            raise InvalidParams("params JSON must be an object")
        try:
            return cls(
                k=int(obj["k"]),
                h=int(obj["h"]),
                f=float(obj["f"]),
                q=float(obj["q"]),
                p=float(obj["p"]),
                hash_seed=int(obj.get("hash_seed", 0)),
            )
        except KeyError as exc:
            raise InvalidParams(f"params JSON missing field {exc}") from exc


@dataclass(frozen=True)
class BloomFilter:
    bits: Bits

    @classmethod
    def from_indices(cls, k: int, indices: Iterable[int]) -> "BloomFilter":
        bits = [0] * k
        for i in indices:
            if not 0 <= i < k:
                raise LengthMismatch(f"bit index {i} outside filter of size {k}")
            bits[i] = 1
        return cls(tuple(bits))

    @property
    def set_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)


@dataclass(frozen=True)
class PermanentResponse:
    """Memorized noisy filter; identical for every report of the same value."""

    value: str
    bits: Bits


@dataclass(frozen=True)
class Report:
    """The k-bit vector actually sent to the aggregator."""

    bits: Bits

    def to_hex(self) -> str:
        """Lowercase hex of ceil(k/8) bytes; bit i is bit (i%8) of byte i//8."""
        out = bytearray((len(self.bits) + 7) // 8)
        for i, b in enumerate(self.bits):
            if b:
                out[i // 8] |= 1 << (i % 8)
        return out.hex()

    @classmethod
    def from_hex(cls, text: str, k: int) -> "Report":
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise ReportFormatError(f"bad report hex: {exc}") from exc
        if len(raw) != (k + 7) // 8:
            raise ReportFormatError(
                f"report holds {len(raw)} bytes, expected {(k + 7) // 8}"
            )
        bits = tuple((raw[i // 8] >> (i % 8)) & 1 for i in range(k))
        for i in range(k, 8 * len(raw)):
            if (raw[i // 8] >> (i % 8)) & 1:
                raise ReportFormatError("padding bits beyond k must be zero")
        return cls(bits)

    def envelope(self, params: RapporParams) -> dict:
        return {"params_digest": params.digest(), "report_hex": self.to_hex()}

    @classmethod
    def from_envelope(cls, obj: Mapping, params: RapporParams) -> "Report":
        try:
            digest, text = obj["params_digest"], obj["report_hex"]
        except (KeyError, TypeError) as exc:
            raise ReportFormatError(f"malformed report envelope: {exc}") from exc
        if digest != params.digest():
            raise ReportFormatError(
                f"report bound to params {digest}, expected {params.digest()}"
            )
        return cls.from_hex(text, params.k)


def bloom_indices(value: str, params: RapporParams) -> tuple[int, ...]:
    """The h filter positions of a value, one per keyed hash function."""
    out = []
    for j in range(1, params.h + 1):
        key = struct.pack("<QI", params.hash_seed & _MASK64, j)
        digest = hashlib.blake2b(
            value.encode("utf-8"), key=key, digest_size=8, person=b"privkit.bloom"
        ).digest()
        out.append(int.from_bytes(digest, "little") % params.k)
    return tuple(out)


def bloom_encode(
    values: Union[str, Iterable[str]], params: RapporParams
) -> BloomFilter:
    """Hash one value (reporting) or several (membership demos) onto a filter."""
    if isinstance(values, str):
        values = [values]
    indices: set[int] = set()
    for v in values:
        indices.update(bloom_indices(v, params))
    return BloomFilter.from_indices(params.k, indices)


def bloom_check(filter: BloomFilter, value: str, params: RapporParams) -> bool:
    """True iff every hashed index of the value is set. May report membership
    for never-inserted values (false positive), never the reverse."""
    if len(filter.bits) != params.k:
        raise LengthMismatch(
            f"filter has {len(filter.bits)} bits, params say {params.k}"
        )
    return all(filter.bits[i] for i in bloom_indices(value, params))


def _prr_uniforms(
    client_secret: bytes, value: str, params: RapporParams
) -> list[float]:
    """Deterministic per-bit uniforms keyed by (secret, value, params)."""
    key = hashlib.blake2b(
        client_secret, digest_size=32, person=b"privkit.prrkey"
    ).digest()
    ctx = params.digest().encode("ascii") + b"\x00" + value.encode("utf-8")
    uniforms: list[float] = []
    block = 0
    while len(uniforms) < params.k:
        digest = hashlib.blake2b(
            ctx + struct.pack("<I", block),
            key=key,
            digest_size=64,
            person=b"privkit.prruni",
        ).digest()
        for off in range(0, 64, 8):
            word = int.from_bytes(digest[off : off + 8], "little")
            uniforms.append(word / 2.0**64)
        block += 1
    return uniforms[: params.k]


def prr(
    filter: BloomFilter,
    client_secret: bytes,
    value: str,
    params: RapporParams,
) -> PermanentResponse:
    """Permanent randomized response: per bit, 1 w.p. f/2, 0 w.p. f/2, else
    the true bit.

    The randomness is re-derived from (client_secret, value, params), so
    repeated calls return bit-identical responses -- equivalent to memorizing
    the first draw, without client-side state.
    """
    if len(filter.bits) != params.k:
        raise LengthMismatch(
            f"filter has {len(filter.bits)} bits, params say {params.k}"
        )
    half_f = params.f / 2.0
    bits = []
    for b, u in zip(filter.bits, _prr_uniforms(client_secret, value, params)):
        if u < half_f:
            bits.append(1)
        elif u < params.f:
            bits.append(0)
        else:
            bits.append(b)
    return PermanentResponse(value, tuple(bits))


def irr(
    perm: PermanentResponse, params: RapporParams, rng: random.Random
) -> Report:
    """Instantaneous randomized response: fresh per-call randomization with
    P(1) = q where the permanent bit is 1 and P(1) = p where it is 0."""
    if len(perm.bits) != params.k:
        raise LengthMismatch(
            f"permanent response has {len(perm.bits)} bits, params say {params.k}"
        )
    return Report(
        tuple(
            1 if rng.random() < (params.q if b else params.p) else 0
            for b in perm.bits
        )
    )


def make_report(
    value: str,
    client_secret: bytes,
    params: RapporParams,
    rng: random.Random,
) -> Report:
    """Full pipeline: Bloom encode, then PRR, then IRR."""
    return irr(prr(bloom_encode(value, params), client_secret, value, params), params, rng)


def epsilon_infinity(params: RapporParams) -> float:
    """Longitudinal privacy bound of the permanent response: 2h ln((1-f/2)/(f/2))."""
    if not 0.0 < params.f < 1.0:
        raise DomainError(f"bound needs 0 < f < 1, got f={params.f}")
    half_f = params.f / 2.0
    return 2.0 * params.h * math.log((1.0 - half_f) / half_f)


def lemma1(params: RapporParams) -> tuple[float, float]:
    """Marginal report-bit probabilities (q*, p*).

    q* is P(report bit = 1 | true Bloom bit = 1) and p* the same for an unset
    bit, marginalizing over the permanent response.
    """
    base = 0.5 * params.f * (params.p + params.q)
    q_star = base + (1.0 - params.f) * params.q
    p_star = base + (1.0 - params.f) * params.p
    return q_star, p_star


def epsilon_one(params: RapporParams) -> float:
    """Single-report privacy bound: h ln(q*(1-p*) / (p*(1-q*)))."""
    q_star, p_star = lemma1(params)
    if not 0.0 < p_star < 1.0 or not 0.0 < q_star < 1.0:
        raise DomainError(
            f"bound needs marginals strictly inside (0, 1), got "
            f"q*={q_star}, p*={p_star}"
        )
    return params.h * math.log(
        q_star * (1.0 - p_star) / (p_star * (1.0 - q_star))
    )


def estimate_counts(
    reports: Sequence[Report],
    candidates: Sequence[str],
    params: RapporParams,
) -> dict[str, float]:
    """Estimate how many reports encoded each candidate value.

    Per bit i the set-count c_i over N reports is inverted to
    t_i = (c_i - p* N) / (q* - p*), clamped to [0, N]; a candidate scores the
    minimum of t_i over its Bloom indices, since every index is a necessary
    condition for carrying that value.
    """
    if not reports:
        raise LengthMismatch("need at least one report")
    k = params.k
    counts = [0] * k
    for r in reports:
        if len(r.bits) != k:
            raise LengthMismatch(
                f"report has {len(r.bits)} bits, params say {k}"
            )
        for i, b in enumerate(r.bits):
            counts[i] += b
    q_star, p_star = lemma1(params)
    denom = q_star - p_star
    if denom == 0.0:
        raise DegenerateParams("q* equals p*, reports carry no signal")
    n = len(reports)
    t = [min(max((c - p_star * n) / denom, 0.0), float(n)) for c in counts]
    return {
        v: min(t[i] for i in bloom_indices(v, params)) for v in candidates
    }


def allocate_counts(
    distribution: Mapping[str, float], clients: int
) -> dict[str, int]:
    """Split a client population across values by largest remainder, so the
    realized counts match the target shares as closely as integers allow."""
    total = sum(distribution.values())
    if not math.isclose(total, 1.0, abs_tol=1e-9):
        raise InvalidParams(f"distribution sums to {total}, expected 1")
    if any(share < 0 for share in distribution.values()):
        raise InvalidParams("distribution shares must be non-negative")
    exact = {v: share * clients for v, share in sorted(distribution.items())}
    counts = {v: int(x) for v, x in exact.items()}
    leftover = clients - sum(counts.values())
    by_remainder = sorted(
        exact, key=lambda v: (-(exact[v] - counts[v]), v)
    )
    for v in by_remainder[:leftover]:
        counts[v] += 1
    return counts


def client_secret(seed: int, client_index: int) -> bytes:
    """Per-client secret for simulations, derived from the run seed."""
    return hashlib.blake2b(
        struct.pack("<QQ", seed & _MASK64, client_index),
        digest_size=16,
        person=b"privkit.client",
    ).digest()


def simulate_reports(
    counts: Mapping[str, int], params: RapporParams, seed: int
) -> list[Report]:
    """One report per simulated client, deterministic for a fixed seed.

    Client i reports the value assigned by iterating ``counts`` in sorted
    order; each client has its own derived secret, and all IRR draws come
    from a single seeded stream.
    """
    rng = random.Random(seed)
    reports = []
    index = 0
    for value in sorted(counts):
        filter = bloom_encode(value, params)
        for _ in range(counts[value]):
            secret = client_secret(seed, index)
            perm = prr(filter, secret, value, params)
            reports.append(irr(perm, params, rng))
            index += 1
    return reports

"""Threshold sharing over Z_q: polynomial sampling, evaluation, interpolation at zero."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import DuplicateIndex, IndexOutOfRange, ParameterError


@dataclass(frozen=True)
class SharePolynomial:
    """F(x) = coeffs[0] + coeffs[1] x + ... over Z_q; coeffs[0] is the secret."""

    coeffs: tuple[int, ...]
    q: int

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise ParameterError("polynomial needs at least one coefficient")
        if any(not 0 <= c < self.q for c in self.coeffs):
            raise ParameterError(f"coefficients must lie in [0, {self.q - 1}]")

    @property
    def k(self) -> int:
        return len(self.coeffs)

    @property
    def secret(self) -> int:
        return self.coeffs[0]


class IndexedShare(NamedTuple):
    index: int
    share: int


def sample_polynomial(secret: int, k: int, q: int, rng: random.Random) -> SharePolynomial:
    if not 1 <= k <= q:
        raise ParameterError(f"threshold k={k} outside [1, {q}]")
    if not 0 <= secret < q:
        raise ParameterError(f"secret outside [0, {q - 1}]")
    # randrange draws with rejection, so there is no modulo bias.
    coeffs = [secret] + [rng.randrange(q) for _ in range(k - 1)]
    return SharePolynomial(tuple(coeffs), q)


def eval_share(poly: SharePolynomial, i: int) -> IndexedShare:
    if i < 0:
        raise IndexOutOfRange(f"share index must be >= 0, got {i}")
    acc = 0
    for c in reversed(poly.coeffs):
        acc = (acc * i + c) % poly.q
    return IndexedShare(i, acc)


def lagrange_weights(indices: Iterable[int], q: int) -> list[int]:
    """Coefficients w_i with sum(w_i * F(i)) = F(0) for deg F < len(indices).

    w_i = prod_{j != i} j / (j - i) mod q, returned in the order given.
    """
    idx = list(indices)
    if len(set(idx)) != len(idx):
        raise DuplicateIndex(f"indices must be distinct: {idx}")
    for i in idx:
        if not 0 < i < q:
            raise IndexOutOfRange(f"index {i} outside [1, {q - 1}]")
    weights = []
    for i in idx:
        num, den = 1, 1
        for j in idx:
            if j != i:
                num = num * j % q
                den = den * (j - i) % q
        weights.append(num * pow(den, -1, q) % q)
    return weights


def interpolate_secret(shares: Iterable[IndexedShare], q: int) -> int:
    shares = list(shares)
    weights = lagrange_weights([s.index for s in shares], q)
    return sum(w * s.share for w, s in zip(weights, shares)) % q

"""Prime-order subgroup arithmetic in Z_p*.

Group elements and scalars are plain Python ints; :class:`GroupParams`
carries the modulus, the subgroup order and the generator, and every
operation takes it explicitly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any

from . import opcount
from .errors import DegenerateExponent, ParameterError, SearchExhausted, ZeroInverse

MR_ROUNDS = 40
MAX_Q_CANDIDATES = 10_000
MAX_R_CANDIDATES = 10_000
MAX_H_CANDIDATES = 10_000

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


def is_probable_prime(n: int, rounds: int = MR_ROUNDS) -> bool:
    """Miller-Rabin with `rounds` bases; error bound 4**-rounds for composites.

    Bases come from an RNG seeded with `n`, so the answer for a given `n`
    never changes between runs.
    """
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = random.Random(n)
    for _ in range(rounds):
        a = bases.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int

    @property
    def byte_len(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def to_json(self) -> dict[str, Any]:
        return {
            "p": format(self.p, "x"),
            "q": format(self.q, "x"),
            "g": format(self.g, "x"),
            "byte_len": self.byte_len,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> GroupParams:
        try:
            params = cls(p=int(obj["p"], 16), q=int(obj["q"], 16), g=int(obj["g"], 16))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed params object: {exc}") from exc
        if "byte_len" in obj and obj["byte_len"] != params.byte_len:
            raise ParameterError(
                f"byte_len {obj['byte_len']} does not match p ({params.byte_len})"
            )
        return params


TOY_PARAMS = GroupParams(p=23, q=11, g=2)


def validate_params(candidate: GroupParams) -> str | None:
    """Return None when all invariants hold, else a description of the first failure."""
    p, q, g = candidate.p, candidate.q, candidate.g
    if not is_probable_prime(p):
        return "p not prime"
    if not is_probable_prime(q):
        return "q not prime"
    if (p - 1) % q != 0:
        return "q does not divide p-1"
    if g == 1:
        return "generator is identity"
    if not 1 < g < p:
        return "generator out of range"
    if pow(g, q, p) != 1:
        return "generator order is not q"
    return None


def generate_params(q_bits: int, seed: int | str) -> GroupParams:
    """Deterministically derive (p, q, g) with q a `q_bits`-bit prime.

    p is the first prime of the form r*q + 1 for r = 2, 4, 6, ...; g is
    h^((p-1)/q) for the first h = 2, 3, ... that does not give 1.
    """
    if q_bits < 4:
        raise ParameterError(f"q_bits must be >= 4, got {q_bits}")
    rng = random.Random(seed)
    top = 1 << (q_bits - 1)
    for _ in range(MAX_Q_CANDIDATES):
        q = rng.getrandbits(q_bits) | top | 1
        if is_probable_prime(q):
            break
    else:
        raise SearchExhausted(f"no {q_bits}-bit prime q in {MAX_Q_CANDIDATES} candidates")

    for r in range(2, 2 * MAX_R_CANDIDATES + 1, 2):
        p = r * q + 1
        if is_probable_prime(p):
            break
    else:
        raise SearchExhausted(f"no prime p = r*q + 1 within {MAX_R_CANDIDATES} values of r")

    cofactor = (p - 1) // q
    for h in range(2, min(p, MAX_H_CANDIDATES + 2)):
        g = pow(h, cofactor, p)
        if g != 1:
            return GroupParams(p=p, q=q, g=g)
    raise SearchExhausted("no generator candidate h produced a non-identity element")


def in_group(params: GroupParams, x: int) -> bool:
    return 1 <= x < params.p and pow(x, params.q, params.p) == 1


def mod_exp(params: GroupParams, base: int, exp: int) -> int:
    """base^exp mod p, with the exponent reduced mod q (bases have order q)."""
    opcount.tick("exp")
    return pow(base, exp % params.q, params.p)


def g_exp(params: GroupParams, exp: int) -> int:
    return mod_exp(params, params.g, exp)


def inv_mod_q(params: GroupParams, x: int) -> int:
    opcount.tick("inv")
    if x % params.q == 0:
        raise ZeroInverse(f"{x} has no inverse mod {params.q}")
    return pow(x, -1, params.q)


def masked_inverse_exp(params: GroupParams, h: int) -> int:
    """g^((h mod q)^-1): a group element pushed through the exponent field.

    Raises DegenerateExponent when h is 0 mod q.
    """
    if h % params.q == 0:
        raise DegenerateExponent(h)
    return g_exp(params, inv_mod_q(params, h))


def encode(params: GroupParams, value: int) -> bytes:
    """Big-endian, zero-padded to byte_len."""
    try:
        return value.to_bytes(params.byte_len, "big")
    except OverflowError as exc:
        raise ParameterError(f"{value} does not fit in {params.byte_len} bytes") from exc


def decode(data: bytes) -> int:
    return int.from_bytes(data, "big")

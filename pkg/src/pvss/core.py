"""Dealing, share encryption, public verification and reconstruction.

A share s_i travels as E_i = s_i XOR (pk_i)^{s_i}. Both operands are encoded
big-endian at the width of p, so the mask is never truncated. The holder of
sk_i strips the mask with (g^{s_i})^{sk_i} taken from the public share image.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from . import group, opcount
from .errors import (
    InsufficientValidShares,
    NonCanonicalShare,
    ParameterError,
)
from .group import GroupParams, g_exp, mod_exp
from .shamir import IndexedShare, SharePolynomial, eval_share, interpolate_secret, sample_polynomial


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: int


def keypair_from_sk(params: GroupParams, sk: int) -> KeyPair:
    if not 1 <= sk < params.q:
        raise ParameterError(f"private key outside [1, {params.q - 1}]")
    return KeyPair(sk, g_exp(params, sk))


def keygen(params: GroupParams, rng: random.Random) -> KeyPair:
    return keypair_from_sk(params, rng.randrange(1, params.q))


def xor_mask(params: GroupParams, value: int, mask: int) -> bytes:
    """Encode both operands at byte_len and XOR them; applying it twice is the identity."""
    opcount.tick("xor")
    a, b = group.encode(params, value), group.encode(params, mask)
    return bytes(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class DealOutput:
    commitments: tuple[int, ...]
    share_images: tuple[int, ...]
    encrypted_shares: Mapping[int, bytes] = field(default_factory=dict)


@dataclass(frozen=True)
class BulletinBoard:
    """Immutable snapshot of everything published during dealing."""

    params: GroupParams
    k: int
    n: int
    deal: DealOutput
    pubkeys: Mapping[int, int]

    def __post_init__(self) -> None:
        if len(self.deal.commitments) != self.k:
            raise ParameterError(f"expected {self.k} commitments, got {len(self.deal.commitments)}")
        if len(self.deal.share_images) != self.n + 1:
            raise ParameterError(
                f"expected {self.n + 1} share images, got {len(self.deal.share_images)}"
            )
        if sorted(self.pubkeys) != list(range(1, self.n + 1)):
            raise ParameterError("pubkeys must cover exactly the indices 1..n")
        width = self.params.byte_len
        for i, e in self.deal.encrypted_shares.items():
            if not 1 <= i <= self.n:
                raise ParameterError(f"encrypted share for unknown index {i}")
            if len(e) != width:
                raise ParameterError(f"encrypted share {i} is {len(e)} bytes, expected {width}")

    def to_json(self) -> dict[str, Any]:
        return {
            "params": self.params.to_json(),
            "k": self.k,
            "n": self.n,
            "commitments": [format(c, "x") for c in self.deal.commitments],
            "share_images": [format(y, "x") for y in self.deal.share_images],
            "encrypted_shares": {str(i): e.hex() for i, e in sorted(self.deal.encrypted_shares.items())},
            "pubkeys": {str(i): format(pk, "x") for i, pk in sorted(self.pubkeys.items())},
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> BulletinBoard:
        try:
            deal = DealOutput(
                commitments=tuple(int(c, 16) for c in obj["commitments"]),
                share_images=tuple(int(y, 16) for y in obj["share_images"]),
                encrypted_shares={int(i): bytes.fromhex(e) for i, e in obj["encrypted_shares"].items()},
            )
            return cls(
                params=GroupParams.from_json(obj["params"]),
                k=int(obj["k"]),
                n=int(obj["n"]),
                deal=deal,
                pubkeys={int(i): int(pk, 16) for i, pk in obj["pubkeys"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed bulletin board: {exc}") from exc

    def fixture_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def image(self, i: int) -> int:
        return self.deal.share_images[i]


def deal_polynomial(
    params: GroupParams, poly: SharePolynomial, n: int, pubkeys: Mapping[int, int]
) -> DealOutput:
    """Publish commitments and share images for `poly`, encrypt s_1..s_n."""
    if not 1 <= poly.k <= n < params.q:
        raise ParameterError(f"need 1 <= k <= n < q, got k={poly.k}, n={n}, q={params.q}")
    missing = [i for i in range(1, n + 1) if i not in pubkeys]
    if missing:
        raise ParameterError(f"no public key for participants {missing}")
    commitments = tuple(g_exp(params, c) for c in poly.coeffs)
    shares = [eval_share(poly, i).share for i in range(n + 1)]
    images = tuple(g_exp(params, s) for s in shares)
    encrypted = {
        i: xor_mask(params, shares[i], mod_exp(params, pubkeys[i], shares[i]))
        for i in range(1, n + 1)
    }
    return DealOutput(commitments, images, encrypted)


def deal(
    params: GroupParams,
    secret: int,
    k: int,
    n: int,
    pubkeys: Mapping[int, int],
    rng: random.Random,
) -> tuple[SharePolynomial, DealOutput]:
    if not 1 <= k <= n < params.q:
        raise ParameterError(f"need 1 <= k <= n < q, got k={k}, n={n}, q={params.q}")
    poly = sample_polynomial(secret, k, params.q, rng)
    return poly, deal_polynomial(params, poly, n, pubkeys)


def expected_share_image(params: GroupParams, commitments: Iterable[int], i: int) -> int:
    """prod_j C_j^(i^j) mod p, which is g^F(i) for honest commitments."""
    if i < 0:
        raise ParameterError(f"index must be >= 0, got {i}")
    acc = 1
    for j, c in enumerate(commitments):
        term = c if j == 0 else mod_exp(params, c, pow(i, j, params.q))
        acc = acc * term % params.p
    return acc


def decrypt_share(params: GroupParams, encrypted: bytes, sk: int, share_image: int) -> int:
    if len(encrypted) != params.byte_len:
        raise ParameterError(f"encrypted share is {len(encrypted)} bytes, expected {params.byte_len}")
    mask = mod_exp(params, share_image, sk)
    value = group.decode(xor_mask_bytes(params, encrypted, mask))
    if value >= params.q:
        raise NonCanonicalShare(value, params.q)
    return value


def xor_mask_bytes(params: GroupParams, data: bytes, mask: int) -> bytes:
    """XOR an already-encoded byte string with the encoding of `mask`."""
    opcount.tick("xor")
    return bytes(x ^ y for x, y in zip(data, group.encode(params, mask)))


def verify_share(params: GroupParams, share: int, commitments: Iterable[int], i: int) -> bool:
    if not 0 <= share < params.q:
        return False
    return g_exp(params, share) == expected_share_image(params, commitments, i)


def verify_bulletin(board: BulletinBoard) -> list[int]:
    """Indices i in 0..n whose published g^{s_i} disagrees with the commitments.

    An empty list means the board is consistent.
    """
    with opcount.paused():
        return [
            i
            for i in range(board.n + 1)
            if board.image(i) != expected_share_image(board.params, board.deal.commitments, i)
        ]


def encrypt_for_submission(params: GroupParams, share: IndexedShare, reconstructor_pk: int) -> bytes:
    if not 0 <= share.share < params.q:
        raise ParameterError("share must be canonical")
    return xor_mask(params, share.share, mod_exp(params, reconstructor_pk, share.share))


def open_submissions(
    submissions: Iterable[tuple[int, bytes]], reconstructor_sk: int, board: BulletinBoard
) -> tuple[list[IndexedShare], list[int]]:
    """Decrypt and check each submission; returns (valid shares, rejected indices)."""
    params = board.params
    valid: list[IndexedShare] = []
    rejected: list[int] = []
    seen: set[int] = set()
    for i, encrypted in submissions:
        if i in seen or not 1 <= i <= board.n:
            rejected.append(i)
            continue
        seen.add(i)
        try:
            s = decrypt_share(params, encrypted, reconstructor_sk, board.image(i))
        except (NonCanonicalShare, ParameterError):
            rejected.append(i)
            continue
        if verify_share(params, s, board.deal.commitments, i):
            valid.append(IndexedShare(i, s))
        else:
            rejected.append(i)
    return valid, rejected


def reconstruct(
    submissions: Iterable[tuple[int, bytes]], reconstructor_sk: int, board: BulletinBoard
) -> int:
    valid, rejected = open_submissions(submissions, reconstructor_sk, board)
    if len(valid) < board.k:
        raise InsufficientValidShares(board.k, [s.index for s in valid], rejected)
    return interpolate_secret(valid[: board.k], board.params.q)

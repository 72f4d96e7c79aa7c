"""Publicly verifiable secret sharing with XOR-masked shares.

Dealing, public verification, dealer/participant dispute arbitration, an
interactive membership proof and reconstruction over a prime-order subgroup
of Z_p*, plus a deterministic adversary simulator.
"""

from .core import (
    BulletinBoard,
    DealOutput,
    KeyPair,
    deal,
    decrypt_share,
    encrypt_for_submission,
    expected_share_image,
    keygen,
    reconstruct,
    verify_bulletin,
    verify_share,
    xor_mask,
)
from .errors import (
    DegenerateExponent,
    InsufficientValidShares,
    NonCanonicalShare,
    ProtocolError,
    PVSSError,
    SearchExhausted,
    ZeroInverse,
)
from .group import GroupParams, TOY_PARAMS, generate_params, validate_params

__version__ = "0.1.0"

__all__ = [
    "BulletinBoard",
    "DealOutput",
    "KeyPair",
    "deal",
    "decrypt_share",
    "encrypt_for_submission",
    "expected_share_image",
    "keygen",
    "reconstruct",
    "verify_bulletin",
    "verify_share",
    "xor_mask",
    "DegenerateExponent",
    "InsufficientValidShares",
    "NonCanonicalShare",
    "ProtocolError",
    "PVSSError",
    "SearchExhausted",
    "ZeroInverse",
    "GroupParams",
    "TOY_PARAMS",
    "generate_params",
    "validate_params",
]

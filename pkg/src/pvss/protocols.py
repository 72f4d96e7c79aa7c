"""Interactive protocols: the dealer/participant/arbiter dispute and the membership proof.

Both run over the public bulletin board. The disputed value in every step is
the "masked inverse" g^((h mod q)^-1) of the shared Diffie-Hellman value
h = g^(a_i s_i), which dealer and participant can each compute from their own
secret and the other's public value.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Any, Union

from . import group, opcount
from .core import BulletinBoard, expected_share_image, xor_mask
from .errors import DegenerateExponent, ParameterError, ProtocolError
from .group import GroupParams, g_exp, masked_inverse_exp, mod_exp


class Phase(enum.Enum):
    INIT = "init"
    MASKED_PUBLISHED = "masked_published"
    KEY_REVEAL_BRANCH = "key_reveal_branch"
    LAMBDA_PUBLISHED = "lambda_published"
    RESPONDED = "responded"
    CLOSED = "closed"


class Outcome(enum.Enum):
    DEALER_LIED = "dealer_lied"
    PARTICIPANT_LIED = "participant_lied"
    RESOLVED = "resolved"
    UNRESOLVABLE = "unresolvable"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    reason: str = ""

    @property
    def accuses(self) -> str | None:
        return {Outcome.DEALER_LIED: "dealer", Outcome.PARTICIPANT_LIED: "participant"}.get(
            self.outcome
        )


@dataclass(frozen=True)
class Accept:
    """Step-4 acknowledgement: the participant recovered a valid share and withdraws."""


@dataclass(frozen=True)
class Alpha:
    value: int


Response = Union[Accept, Alpha]


def _in_group(params: GroupParams, x: int) -> bool:
    opcount.tick("exp")
    return group.in_group(params, x)


# -- disputation: single steps ------------------------------------------------


def dispute_publish_masked(params: GroupParams, role: str, key: int, value: int) -> int:
    """Step-2 value g^([h]^-1).

    dealer: key = pk_i, value = s_i (h = pk_i^s_i);
    participant: key = a_i, value = g^{s_i} (h = (g^{s_i})^a_i).
    """
    if role == "dealer":
        h = mod_exp(params, key, value)
    elif role == "participant":
        h = mod_exp(params, value, key)
    else:
        raise ParameterError(f"unknown role {role!r}")
    return masked_inverse_exp(params, h)


def dispute_check_masked(dealer_masked: int, participant_masked: int) -> bool:
    """True when the protocol may proceed; False enters the key-reveal branch."""
    return dealer_masked == participant_masked


def dispute_key_reveal_adjudicate(
    params: GroupParams,
    revealed_sk: int,
    registered_pk: int,
    dealer_masked: int,
    participant_masked: int,
    share_image: int,
) -> Verdict:
    if g_exp(params, revealed_sk) != registered_pk:
        return Verdict(Outcome.PARTICIPANT_LIED, "revealed key does not match registered public key")
    try:
        expected = masked_inverse_exp(params, mod_exp(params, share_image, revealed_sk))
    except DegenerateExponent as exc:
        return Verdict(Outcome.UNRESOLVABLE, str(exc))
    if dealer_masked != expected:
        return Verdict(Outcome.DEALER_LIED, "dealer's masked value differs from arbiter's recomputation")
    if participant_masked != expected:
        return Verdict(
            Outcome.PARTICIPANT_LIED, "participant's masked value differs from arbiter's recomputation"
        )
    return Verdict(Outcome.RESOLVED, "both masked values match the arbiter's recomputation")


def dispute_dealer_lambda(params: GroupParams, share: int, pk: int) -> bytes:
    return xor_mask(params, share, mod_exp(params, pk, share))


def dispute_participant_respond(
    params: GroupParams, lam: bytes, sk: int, board: BulletinBoard, i: int
) -> Response:
    image = expected_share_image(params, board.deal.commitments, i)
    mask = mod_exp(params, image, sk)
    alpha = group.decode(_xor(params, lam, mask))
    if alpha < params.q and g_exp(params, alpha) == image:
        return Accept()
    return Alpha(alpha)


def dispute_adjudicate(
    params: GroupParams, lam: bytes, alpha: int, masked: int, board: BulletinBoard, i: int
) -> Verdict:
    """Step 5: decide who lied from lambda, alpha and the agreed step-2 value."""
    if not 0 <= alpha < 1 << (8 * params.byte_len):
        return Verdict(Outcome.PARTICIPANT_LIED, "alpha does not fit the share encoding")
    image = expected_share_image(params, board.deal.commitments, i)
    if alpha < params.q and g_exp(params, alpha) == image:
        return Verdict(Outcome.RESOLVED, "alpha is the valid share; complaint is vacuous")
    t = group.decode(_xor(params, lam, alpha))
    # An honest participant's lambda XOR alpha is the DH value itself, always a group element.
    if not _in_group(params, t):
        return Verdict(Outcome.PARTICIPANT_LIED, "lambda XOR alpha is not a group element")
    try:
        recomputed = masked_inverse_exp(params, t)
    except DegenerateExponent as exc:
        return Verdict(Outcome.UNRESOLVABLE, str(exc))
    if recomputed == masked:
        return Verdict(Outcome.DEALER_LIED, "lambda XOR alpha unmasks to the agreed value")
    return Verdict(Outcome.PARTICIPANT_LIED, "lambda XOR alpha does not unmask to the agreed value")


def _xor(params: GroupParams, data: bytes, value: int) -> bytes:
    opcount.tick("xor")
    return bytes(x ^ y for x, y in zip(data, group.encode(params, value)))


# -- disputation: state machine -----------------------------------------------


@dataclass
class DisputeState:
    """One dispute over index i, driven step by step by a single owner.

    Every method checks the phase first; calling one out of order raises
    ProtocolError. Each accepted message is appended to ``transcript``.
    """

    board: BulletinBoard
    i: int
    phase: Phase = Phase.INIT
    dealer_masked: int | None = None
    participant_masked: int | None = None
    revealed_sk: int | None = None
    lam: bytes | None = None
    response: Response | None = None
    verdict: Verdict | None = None
    transcript: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 1 <= self.i <= self.board.n:
            raise ParameterError(f"no participant with index {self.i}")
        self._log(1, "P", "pubkey", _hex(self.registered_pk), index=self.i)

    @property
    def params(self) -> GroupParams:
        return self.board.params

    @property
    def registered_pk(self) -> int:
        return self.board.pubkeys[self.i]

    def _expect(self, *phases: Phase) -> None:
        if self.phase not in phases:
            names = ", ".join(p.value for p in phases)
            raise ProtocolError(f"dispute is in phase {self.phase.value}, expected {names}")

    def _log(self, step: int, actor: str, name: str, message: str, **extra: Any) -> None:
        self.transcript.append({"step": step, "actor": actor, "field": name, "message": message, **extra})

    def _close(self, verdict: Verdict) -> Verdict:
        self.verdict = verdict
        self.phase = Phase.CLOSED
        self.transcript.append({"verdict": verdict.outcome.value})
        return verdict

    def publish_masked(self, dealer_value: int, participant_value: int) -> bool:
        """Record both step-2 values; True when they agree and the dispute proceeds."""
        self._expect(Phase.INIT)
        self.dealer_masked = dealer_value
        self.participant_masked = participant_value
        self._log(2, "D", "masked", _hex(dealer_value))
        self._log(2, "P", "masked", _hex(participant_value))
        proceed = dispute_check_masked(dealer_value, participant_value)
        self.phase = Phase.MASKED_PUBLISHED if proceed else Phase.KEY_REVEAL_BRANCH
        self._log(2, "R", "check", "proceed" if proceed else "key_reveal_required")
        return proceed

    def reveal_key(self, sk: int) -> Verdict:
        self._expect(Phase.KEY_REVEAL_BRANCH)
        self.revealed_sk = sk
        self._log(2, "P", "key", _hex(sk))
        assert self.dealer_masked is not None and self.participant_masked is not None
        image = expected_share_image(self.params, self.board.deal.commitments, self.i)
        return self._close(
            dispute_key_reveal_adjudicate(
                self.params, sk, self.registered_pk, self.dealer_masked, self.participant_masked, image
            )
        )

    def publish_lambda(self, lam: bytes) -> None:
        self._expect(Phase.MASKED_PUBLISHED)
        if len(lam) != self.params.byte_len:
            raise ProtocolError(f"lambda must be {self.params.byte_len} bytes")
        self.lam = lam
        self.phase = Phase.LAMBDA_PUBLISHED
        self._log(3, "D", "lambda", lam.hex())

    def respond(self, response: Response) -> Verdict | None:
        """Step 4. An Accept closes the dispute as resolved; Alpha awaits adjudication."""
        self._expect(Phase.LAMBDA_PUBLISHED)
        self.response = response
        self.phase = Phase.RESPONDED
        if isinstance(response, Accept):
            self._log(4, "P", "accept", "accept")
            return self._close(Verdict(Outcome.RESOLVED, "participant accepted lambda"))
        self._log(4, "P", "alpha", _hex(response.value))
        return None

    def forfeit(self, actor: str, reason: str) -> Verdict:
        """A party failed to send its next message; the arbiter rules against it."""
        if self.phase is Phase.CLOSED:
            raise ProtocolError("dispute already closed")
        outcome = {"dealer": Outcome.DEALER_LIED, "participant": Outcome.PARTICIPANT_LIED}[actor]
        self._log(5, "R", "decision", outcome.value)
        return self._close(Verdict(outcome, reason))

    def adjudicate(self) -> Verdict:
        self._expect(Phase.RESPONDED)
        if not isinstance(self.response, Alpha):
            raise ProtocolError("adjudication needs an alpha response")
        assert self.lam is not None and self.dealer_masked is not None
        verdict = dispute_adjudicate(
            self.params, self.lam, self.response.value, self.dealer_masked, self.board, self.i
        )
        self._log(5, "R", "decision", verdict.outcome.value)
        return self._close(verdict)


def _hex(value: int) -> str:
    return format(value, "x")


def replay_dispute(transcript: list[dict[str, Any]], board: BulletinBoard) -> Verdict:
    """Feed a recorded dispute back through the arbiter and re-derive the verdict.

    Only public messages are consumed; arbiter entries in the recording are
    ignored and recomputed. Raises ProtocolError on a malformed transcript.
    """
    entries = [e for e in transcript if "verdict" not in e]
    if not entries or entries[0].get("field") != "pubkey" or "index" not in entries[0]:
        raise ProtocolError("transcript must open with the participant's step-1 pubkey entry")
    i = int(entries[0]["index"])
    if int(entries[0]["message"], 16) != board.pubkeys.get(i):
        raise ProtocolError("transcript pubkey does not match the bulletin board")
    state = DisputeState(board, i)
    by_field: dict[tuple[str, str], str] = {}
    for e in entries[1:]:
        by_field[(e["actor"], e["field"])] = e["message"]
    try:
        proceed = state.publish_masked(int(by_field["D", "masked"], 16), int(by_field["P", "masked"], 16))
        if not proceed:
            return state.reveal_key(int(by_field["P", "key"], 16))
        state.publish_lambda(bytes.fromhex(by_field["D", "lambda"]))
        if ("P", "accept") in by_field:
            verdict = state.respond(Accept())
        else:
            verdict = state.respond(Alpha(int(by_field["P", "alpha"], 16)))
    except KeyError as exc:
        raise ProtocolError(f"transcript is missing message {exc.args[0]}") from exc
    return verdict if verdict is not None else state.adjudicate()


def recorded_verdict(transcript: list[dict[str, Any]]) -> str | None:
    for e in reversed(transcript):
        if "verdict" in e:
            return e["verdict"]
    return None


# -- membership proof ---------------------------------------------------------


@dataclass(frozen=True)
class MembershipChallenge:
    a: int
    g_a: int


def challenge_from_secret(params: GroupParams, a: int) -> MembershipChallenge:
    # a = 0 would make every response g^(1^-1) = g regardless of the share.
    if not 1 <= a < params.q:
        raise ParameterError(f"challenge exponent outside [1, {params.q - 1}]")
    return MembershipChallenge(a, g_exp(params, a))


def membership_challenge(params: GroupParams, rng: random.Random) -> MembershipChallenge:
    return challenge_from_secret(params, rng.randrange(1, params.q))


def membership_respond(params: GroupParams, share: int, g_a: int) -> int:
    if not 0 <= share < params.q:
        raise ParameterError("share must be canonical")
    return masked_inverse_exp(params, mod_exp(params, g_a, share))


def membership_verify(params: GroupParams, a: int, share_image: int, r_p: int) -> bool:
    return masked_inverse_exp(params, mod_exp(params, share_image, a)) == r_p


@dataclass
class MembershipResult:
    outcome: str  # "accept" | "reject" | "degenerate"
    transcript: list[dict[str, Any]]
    cause: str = ""

    @property
    def accepted(self) -> bool:
        return self.outcome == "accept"


def run_membership(
    board: BulletinBoard, i: int, prover_share: int, challenge: MembershipChallenge
) -> MembershipResult:
    """Run all four steps with the verifier recomputing g^{s_i} from the commitments."""
    params = board.params
    transcript: list[dict[str, Any]] = [
        {"step": 1, "actor": "V", "field": "challenge", "message": _hex(challenge.g_a), "index": i}
    ]
    try:
        r_p = membership_respond(params, prover_share, challenge.g_a)
        transcript.append({"step": 2, "actor": "P", "field": "response", "message": _hex(r_p)})
        image = expected_share_image(params, board.deal.commitments, i)
        r_v = masked_inverse_exp(params, mod_exp(params, image, challenge.a))
    except DegenerateExponent as exc:
        transcript.append({"verdict": "degenerate"})
        return MembershipResult("degenerate", transcript, str(exc))
    transcript.append(
        {"step": 3, "actor": "V", "field": "recomputed", "message": _hex(r_v), "opening": _hex(challenge.a)}
    )
    outcome = "accept" if r_v == r_p else "reject"
    transcript.append({"step": 4, "actor": "V", "field": "decision", "message": outcome})
    transcript.append({"verdict": outcome})
    return MembershipResult(outcome, transcript)


def replay_membership(transcript: list[dict[str, Any]], board: BulletinBoard) -> str:
    """Re-derive accept/reject from the challenge opening and the prover's response."""
    entries = {(e["actor"], e["field"]): e for e in transcript if "verdict" not in e}
    try:
        first = entries["V", "challenge"]
        i = int(first["index"])
        if ("P", "response") not in entries:
            return "degenerate"
        a = int(entries["V", "recomputed"]["opening"], 16)
        r_p = int(entries["P", "response"]["message"], 16)
    except KeyError as exc:
        raise ProtocolError(f"membership transcript is missing {exc.args[0]}") from exc
    params = board.params
    if g_exp(params, a) != int(first["message"], 16):
        raise ProtocolError("challenge opening does not match the published challenge")
    image = expected_share_image(params, board.deal.commitments, i)
    try:
        return "accept" if membership_verify(params, a, image, r_p) else "reject"
    except DegenerateExponent:
        return "degenerate"

import pytest

import oracle
from pvss import protocols, sim
from pvss.group import generate_params, in_group
from pvss.errors import DegenerateExponent, ParameterError, ProtocolError
from pvss.protocols import (
    Accept,
    Alpha,
    DisputeState,
    Outcome,
    Phase,
    challenge_from_secret,
    dispute_adjudicate,
    dispute_check_masked,
    dispute_dealer_lambda,
    dispute_key_reveal_adjudicate,
    dispute_participant_respond,
    dispute_publish_masked,
    membership_respond,
    membership_verify,
    run_membership,
)


def test_masked_value_both_paths(toy):
    assert dispute_publish_masked(toy, "dealer", 16, 10) == 18
    assert dispute_publish_masked(toy, "participant", 4, 12) == 18
    assert oracle.dispute_masked(4, 10) == 18


def test_masked_value_wrong_pk(toy):
    assert dispute_publish_masked(toy, "dealer", 4, 10) == 4


def test_masked_value_unknown_role(toy):
    with pytest.raises(ParameterError):
        dispute_publish_masked(toy, "arbiter", 4, 10)


@pytest.mark.parametrize("d, p, proceed", [(18, 18, True), (4, 18, False), (9, 9, True)])
def test_check_masked(d, p, proceed):
    assert dispute_check_masked(d, p) is proceed


@pytest.mark.parametrize(
    "sk, dealer, participant, expected",
    [
        (4, 4, 18, Outcome.DEALER_LIED),
        (4, 18, 4, Outcome.PARTICIPANT_LIED),
        (5, 18, 4, Outcome.PARTICIPANT_LIED),
    ],
)
def test_key_reveal(toy, sk, dealer, participant, expected):
    verdict = dispute_key_reveal_adjudicate(toy, sk, 16, dealer, participant, 12)
    assert verdict.outcome is expected


def test_key_reveal_pk_mismatch_reason(toy):
    verdict = dispute_key_reveal_adjudicate(toy, 5, 16, 18, 4, 12)
    assert "registered" in verdict.reason


def test_dealer_lambda(toy, fx):
    assert dispute_dealer_lambda(toy, 10, 16) == b"\x07" == fx.board.deal.encrypted_shares[1]
    assert sim.forged_lambda(toy, 1, 10, 16, s_prime=6) == b"\x0b"
    assert dispute_dealer_lambda(toy, 0, 16) == b"\x01"


def test_participant_respond(toy, fx):
    assert dispute_participant_respond(toy, b"\x07", 4, fx.board, 1) == Accept()
    assert dispute_participant_respond(toy, b"\x0b", 4, fx.board, 1) == Alpha(6)


def test_participant_respond_non_canonical_alpha_is_not_accepted(toy, fx):
    # alpha = s_1 + q = 21 has g^(21 mod q) = image but is not a canonical share.
    lam = bytes([21 ^ 13])
    assert dispute_participant_respond(toy, lam, 4, fx.board, 1) == Alpha(21)
    assert dispute_adjudicate(toy, lam, 21, 18, fx.board, 1).outcome is Outcome.DEALER_LIED


@pytest.mark.parametrize(
    "lam, alpha, expected",
    [
        (b"\x0b", 6, Outcome.DEALER_LIED),
        (b"\x07", 3, Outcome.PARTICIPANT_LIED),
        (b"\x07", 10, Outcome.RESOLVED),
        (b"\x07", 7, Outcome.PARTICIPANT_LIED),  # 7 xor 7 = 0 is not a group element
        (b"\x07", 256, Outcome.PARTICIPANT_LIED),  # does not fit one byte
    ],
)
def test_adjudicate(toy, fx, lam, alpha, expected):
    assert dispute_adjudicate(toy, lam, alpha, 18, fx.board, 1).outcome is expected


def test_adjudicate_alias_frames_dealer_at_toy_scale(toy, fx):
    # 7 xor 5 = 2 and the true mask 13 are distinct group elements with 2 = 13 mod 11.
    assert oracle.masked_inverse(2) == oracle.masked_inverse(13) == 18
    assert dispute_adjudicate(toy, b"\x07", 5, 18, fx.board, 1).outcome is Outcome.DEALER_LIED


def _honest(fx, i=1):
    return sim.honest_dealer_moves(fx, i), sim.honest_participant_moves(fx, i)


def test_honest_dispute_resolves(fx):
    for i in (1, 2, 3):
        dealer, participant = _honest(fx, i)
        state = sim.run_dispute(fx.board, i, dealer, participant)
        assert state.verdict.outcome is Outcome.RESOLVED
        assert state.phase is Phase.CLOSED
        assert state.transcript[-1] == {"verdict": "resolved"}


def test_state_machine_rejects_out_of_order(fx):
    state = DisputeState(fx.board, 1)
    with pytest.raises(ProtocolError):
        state.publish_lambda(b"\x07")
    with pytest.raises(ProtocolError):
        state.reveal_key(4)
    with pytest.raises(ProtocolError):
        state.adjudicate()
    assert state.publish_masked(18, 18)
    with pytest.raises(ProtocolError):
        state.publish_masked(18, 18)
    with pytest.raises(ProtocolError):
        state.reveal_key(4)
    with pytest.raises(ProtocolError):
        state.respond(Accept())
    state.publish_lambda(b"\x07")
    assert state.respond(Accept()).outcome is Outcome.RESOLVED
    with pytest.raises(ProtocolError):
        state.adjudicate()
    with pytest.raises(ProtocolError):
        state.forfeit("dealer", "late")


def test_state_machine_key_reveal_branch(fx):
    state = DisputeState(fx.board, 1)
    assert not state.publish_masked(4, 18)
    assert state.phase is Phase.KEY_REVEAL_BRANCH
    with pytest.raises(ProtocolError):
        state.publish_lambda(b"\x07")
    assert state.reveal_key(4).outcome is Outcome.DEALER_LIED
    assert state.phase is Phase.CLOSED


def test_lambda_width_checked(fx):
    state = DisputeState(fx.board, 1)
    state.publish_masked(18, 18)
    with pytest.raises(ProtocolError):
        state.publish_lambda(b"\x00\x07")


def test_unknown_index(fx):
    with pytest.raises(ParameterError):
        DisputeState(fx.board, 4)


def test_forfeit(fx):
    dealer, participant = _honest(fx)
    state = sim.run_dispute(fx.board, 1, sim.DealerMoves(dealer.masked, None), participant)
    assert state.verdict.outcome is Outcome.DEALER_LIED


@pytest.mark.parametrize(
    "dealer_cheat, alpha_override, expected",
    [
        ({"lam": b"\x0b"}, None, "dealer_lied"),
        ({"masked": 4}, None, "dealer_lied"),
        ({}, 3, "participant_lied"),
        ({}, None, "resolved"),
    ],
)
def test_replay_reproduces_verdict(fx, dealer_cheat, alpha_override, expected):
    dealer, participant = _honest(fx)
    dealer = sim.DealerMoves(dealer_cheat.get("masked", dealer.masked), dealer_cheat.get("lam", dealer.lam))
    participant = sim.ParticipantMoves(participant.sk, participant.masked, alpha_override)
    state = sim.run_dispute(fx.board, 1, dealer, participant)
    assert state.verdict.outcome.value == expected
    assert protocols.replay_dispute(state.transcript, fx.board).outcome.value == expected
    assert protocols.recorded_verdict(state.transcript) == expected


def test_replay_rejects_foreign_transcript(fx):
    dealer, participant = _honest(fx)
    state = sim.run_dispute(fx.board, 1, dealer, participant)
    transcript = [dict(e) for e in state.transcript]
    transcript[0]["message"] = "9"
    with pytest.raises(ProtocolError):
        protocols.replay_dispute(transcript, fx.board)
    with pytest.raises(ProtocolError):
        protocols.replay_dispute(state.transcript[:2], fx.board)


def test_membership_examples(toy):
    assert challenge_from_secret(toy, 5).g_a == 9
    assert membership_respond(toy, 10, 9) == 3 == oracle.membership_response(10, 5)
    assert membership_respond(toy, 4, 9) == 4
    assert membership_respond(toy, 0, 9) == toy.g
    assert membership_verify(toy, 5, 12, 3)
    assert not membership_verify(toy, 5, 12, 4)


def test_challenge_zero_excluded(toy):
    with pytest.raises(ParameterError):
        challenge_from_secret(toy, 0)


def _group_with_degenerate_element():
    for seed in range(200):
        params = generate_params(6, seed=seed)
        for h in range(params.q, params.p, params.q):
            if in_group(params, h):
                return params, h
    raise AssertionError("no small group with an element divisible by q")


def test_membership_degenerate():
    params, h = _group_with_degenerate_element()
    with pytest.raises(DegenerateExponent):
        membership_respond(params, 1, h)


def test_replayed_response_against_other_challenges(toy, fx):
    recorded = membership_respond(toy, 10, challenge_from_secret(toy, 5).g_a)
    accepted = [a for a in range(1, 11) if membership_verify(toy, a, 12, recorded)]
    # The replay only passes where the fresh challenge lands on the same exponent.
    assert 5 in accepted
    for a in accepted:
        h_a = oracle.power(12, a)
        assert h_a % 11 == oracle.power(12, 5) % 11


def test_run_membership_and_replay(fx, toy):
    honest = run_membership(fx.board, 1, 10, challenge_from_secret(toy, 5))
    assert honest.accepted
    assert protocols.replay_membership(honest.transcript, fx.board) == "accept"
    impostor = run_membership(fx.board, 1, 4, challenge_from_secret(toy, 5))
    assert impostor.outcome == "reject"
    assert protocols.replay_membership(impostor.transcript, fx.board) == "reject"
    bad = [dict(e) for e in honest.transcript]
    bad[0]["message"] = "3"
    with pytest.raises(ProtocolError):
        protocols.replay_membership(bad, fx.board)

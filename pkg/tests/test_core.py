import itertools
import random

import pytest

import oracle
from pvss import core, group, opcount
from pvss.core import BulletinBoard, DealOutput
from pvss.errors import InsufficientValidShares, NonCanonicalShare, ParameterError
from pvss.shamir import IndexedShare, SharePolynomial


def test_keygen_forced(toy):
    assert core.keypair_from_sk(toy, 4).pk == 16
    assert core.keypair_from_sk(toy, 7).pk == 13
    with pytest.raises(ParameterError):
        core.keypair_from_sk(toy, 0)


def test_keygen_range_and_relation(toy):
    rng = random.Random(3)
    for _ in range(200):
        kp = core.keygen(toy, rng)
        assert 1 <= kp.sk <= 10 and group.g_exp(toy, kp.sk) == kp.pk


@pytest.mark.parametrize("value, mask, expected", [(10, 13, b"\x07"), (2, 8, b"\x0a"), (5, 0, b"\x05")])
def test_xor_mask(toy, value, mask, expected):
    assert core.xor_mask(toy, value, mask) == expected
    assert core.xor_mask(toy, value, mask)[0] == oracle.xor(value, mask)


def test_xor_mask_self_inverse_wide():
    params = group.generate_params(64, seed=2)
    mask = group.g_exp(params, 12345)
    once = core.xor_mask(params, 999, mask)
    assert len(once) == params.byte_len
    assert group.decode(core.xor_mask_bytes(params, once, mask)) == 999


def test_toy_deal_matches_oracle(fx):
    deal = fx.board.deal
    assert deal.commitments == (13, 8) == tuple(oracle.commitments([7, 3]))
    assert deal.share_images == (13, 12, 4, 9) == tuple(oracle.share_images([7, 3], 3))
    assert deal.encrypted_shares == {1: b"\x07", 2: b"\x0a", 3: b"\x09"}
    assert 0 not in deal.encrypted_shares


def test_deal_sampled_invariants(toy):
    pubkeys = {i: group.g_exp(toy, i + 1) for i in range(1, 6)}
    for seed in range(50):
        poly, deal = core.deal(toy, seed % 11, 3, 5, pubkeys, random.Random(seed))
        assert poly.secret == seed % 11 and len(deal.commitments) == 3 and len(deal.share_images) == 6
        assert deal.share_images[0] == deal.commitments[0]
        board = BulletinBoard(toy, 3, 5, deal, pubkeys)
        assert core.verify_bulletin(board) == []


@pytest.mark.parametrize("k, n", [(0, 3), (4, 3), (2, 11)])
def test_deal_range_errors(toy, k, n):
    pubkeys = {i: 2 for i in range(1, 12)}
    with pytest.raises(ParameterError):
        core.deal(toy, 1, k, n, pubkeys, random.Random(0))


def test_deal_requires_all_pubkeys(toy):
    with pytest.raises(ParameterError):
        core.deal(toy, 1, 2, 3, {1: 2, 2: 4}, random.Random(0))


@pytest.mark.parametrize("i, expected", [(2, 4), (0, 13), (3, 9), (1, 12)])
def test_expected_share_image(toy, i, expected):
    assert core.expected_share_image(toy, (13, 8), i) == expected == oracle.product_image([13, 8], i)


@pytest.mark.parametrize(
    "encrypted, sk, image, expected", [(b"\x07", 4, 12, 10), (b"\x0a", 7, 4, 2), (b"\x09", 2, 9, 5)]
)
def test_decrypt_share(toy, encrypted, sk, image, expected):
    assert core.decrypt_share(toy, encrypted, sk, image) == expected


def test_decrypt_rejects_non_canonical(toy):
    # mask 12^4 = 13; 13 xor 0x1f = 18 >= q
    with pytest.raises(NonCanonicalShare):
        core.decrypt_share(toy, bytes([13 ^ 18]), 4, 12)


def test_decrypt_rejects_wrong_width(toy):
    with pytest.raises(ParameterError):
        core.decrypt_share(toy, b"\x00\x07", 4, 12)


def test_round_trip_and_dual_path_exhaustive(toy):
    for s in range(11):
        for sk in range(1, 11):
            pk = group.g_exp(toy, sk)
            image = group.g_exp(toy, s)
            dealer_mask = group.mod_exp(toy, pk, s)
            assert dealer_mask == group.mod_exp(toy, image, sk) == oracle.power(oracle.power(2, s), sk)
            assert core.decrypt_share(toy, core.xor_mask(toy, s, dealer_mask), sk, image) == s


@pytest.mark.parametrize("share, i, ok", [(10, 1, True), (6, 1, False), (7, 0, True), (11, 1, False)])
def test_verify_share(toy, share, i, ok):
    assert core.verify_share(toy, share, (13, 8), i) is ok


def test_verify_soundness_exhaustive(fx, toy):
    for i in range(0, 4):
        accepted = [s for s in range(11) if core.verify_share(toy, s, fx.board.deal.commitments, i)]
        assert accepted == [oracle.poly_at([7, 3], i)]


def test_verify_bulletin(fx, toy):
    assert core.verify_bulletin(fx.board) == []
    images = list(fx.board.deal.share_images)
    images[2] = 5
    tampered = BulletinBoard(
        toy, 2, 3, DealOutput(fx.board.deal.commitments, tuple(images), fx.board.deal.encrypted_shares), fx.board.pubkeys
    )
    assert core.verify_bulletin(tampered) == [2]


def test_verify_bulletin_n_zero(toy):
    ok = BulletinBoard(toy, 1, 0, DealOutput((13,), (13,), {}), {})
    bad = BulletinBoard(toy, 1, 0, DealOutput((13,), (12,), {}), {})
    assert core.verify_bulletin(ok) == [] and core.verify_bulletin(bad) == [0]


def test_board_json_round_trip(fx):
    obj = fx.board.to_json()
    assert obj["commitments"] == ["d", "8"]
    assert obj["encrypted_shares"] == {"1": "07", "2": "0a", "3": "09"}
    assert BulletinBoard.from_json(obj) == fx.board
    assert fx.board.fixture_hash() == BulletinBoard.from_json(obj).fixture_hash()


@pytest.mark.parametrize(
    "mutate",
    [
        lambda o: o.update(commitments=o["commitments"][:1]),
        lambda o: o.update(share_images=o["share_images"][:2]),
        lambda o: o["pubkeys"].pop("3"),
        lambda o: o["encrypted_shares"].update({"1": "0007"}),
        lambda o: o.pop("k"),
    ],
)
def test_board_json_structure_errors(fx, mutate):
    obj = fx.board.to_json()
    mutate(obj)
    with pytest.raises(ParameterError):
        BulletinBoard.from_json(obj)


def test_encrypt_for_submission(toy):
    e = core.encrypt_for_submission(toy, IndexedShare(1, 10), 9)
    assert e == b"\x18" == bytes([oracle.xor(10, oracle.power(9, 10))])
    assert core.decrypt_share(toy, e, 5, 12) == 10


def test_submission_of_zero_share_is_unmasked(toy):
    assert core.encrypt_for_submission(toy, IndexedShare(4, 0), 9) == b"\x01"


def _submit(fx, indices, reconstructor):
    return [
        (i, core.encrypt_for_submission(fx.params, IndexedShare(i, fx.share(i)), reconstructor.pk)) for i in indices
    ]


def test_reconstruct_toy(fx, toy):
    r = core.keypair_from_sk(toy, 5)
    assert core.reconstruct(_submit(fx, [1, 2], r), r.sk, fx.board) == 7


def test_reconstruct_skips_corrupted(fx, toy):
    r = core.keypair_from_sk(toy, 5)
    subs = _submit(fx, [1, 2, 3], r)
    subs[0] = (1, bytes([subs[0][1][0] ^ 0x01]))
    valid, rejected = core.open_submissions(subs, r.sk, fx.board)
    assert rejected == [1] and [s.index for s in valid] == [2, 3]
    assert core.reconstruct(subs, r.sk, fx.board) == 7


def test_reconstruct_insufficient(fx, toy):
    r = core.keypair_from_sk(toy, 5)
    subs = _submit(fx, [1, 2], r)
    subs[1] = (2, b"\xff")
    with pytest.raises(InsufficientValidShares):
        core.reconstruct(subs, r.sk, fx.board)


def test_reconstruct_every_subset_large_group():
    params = group.generate_params(64, seed=9)
    rng = random.Random(9)
    keys = {i: core.keygen(params, rng) for i in range(1, 6)}
    poly, deal = core.deal(params, 123456789, 3, 5, {i: kp.pk for i, kp in keys.items()}, rng)
    board = BulletinBoard(params, 3, 5, deal, {i: kp.pk for i, kp in keys.items()})
    r = core.keygen(params, rng)
    for subset in itertools.combinations(range(1, 6), 3):
        subs = []
        for i in subset:
            s = core.decrypt_share(params, deal.encrypted_shares[i], keys[i].sk, board.image(i))
            subs.append((i, core.encrypt_for_submission(params, IndexedShare(i, s), r.pk)))
        assert core.reconstruct(subs, r.sk, board) == 123456789


def test_deal_and_verify_op_counts(toy):
    poly = SharePolynomial((7, 3), 11)
    pubkeys = {1: 16, 2: 13, 3: 4}
    with opcount.counting() as counter:
        with counter.in_phase("deal"):
            deal = core.deal_polynomial(toy, poly, 3, pubkeys)
        with counter.in_phase("verify"):
            s = core.decrypt_share(toy, deal.encrypted_shares[1], 4, deal.share_images[1])
            core.verify_share(toy, s, deal.commitments, 1)
    counts = counter.as_dict()
    assert counts["deal"]["exp"] == 2 + 4 + 3
    assert counts["verify"]["exp"] == 1 + 1 + (2 - 1)

import json

import pytest

from pvss.cli import main


def run(ws, capsys, *argv):
    code = main(["-w", str(ws), *argv])
    return code, capsys.readouterr().out.strip()


@pytest.fixture
def toy_ws(tmp_path, capsys):
    run(tmp_path, capsys, "params", "--fixed-toy")
    for i, sk in ((1, 4), (2, 7), (3, 2)):
        assert run(tmp_path, capsys, "keygen", "--index", str(i), "--sk", str(sk))[0] == 0
    assert run(tmp_path, capsys, "keygen", "--index", "0", "--sk", "5", "--out", str(tmp_path / "keys" / "reconstructor.json"))[0] == 0
    code, out = run(tmp_path, capsys, "deal", "--coeffs", "7,3", "--n", "3")
    assert code == 0, out
    return tmp_path


def test_params_fixed_toy(tmp_path, capsys):
    code, out = run(tmp_path, capsys, "params", "--fixed-toy")
    assert code == 0 and out.startswith("OK params")
    params = json.loads((tmp_path / "params.json").read_text())
    assert (params["p"], params["q"], params["g"]) == ("17", "b", "2")


def test_params_generated_deterministic(tmp_path, capsys):
    run(tmp_path, capsys, "params", "--q-bits", "64", "--seed", "s")
    first = (tmp_path / "params.json").read_bytes()
    run(tmp_path, capsys, "params", "--q-bits", "64", "--seed", "s")
    assert (tmp_path / "params.json").read_bytes() == first


@pytest.mark.parametrize("argv", [["params", "--q-bits", "1", "--seed", "x"], ["params"], ["verify", "--index", "1"]])
def test_usage_errors(tmp_path, capsys, argv):
    code, out = run(tmp_path, capsys, *argv)
    assert code == 2 and out.startswith("ERROR")


def test_keygen_needs_seed_or_key(tmp_path, capsys):
    run(tmp_path, capsys, "params", "--fixed-toy")
    assert run(tmp_path, capsys, "keygen", "--index", "1")[0] == 2
    assert run(tmp_path, capsys, "keygen", "--index", "1", "--seed", "a")[0] == 0
    first = (tmp_path / "keys" / "1.json").read_text()
    run(tmp_path, capsys, "keygen", "--index", "1", "--seed", "a")
    assert (tmp_path / "keys" / "1.json").read_text() == first


def test_lock_held(toy_ws, capsys):
    (toy_ws / ".lock").write_text("123")
    code, out = run(toy_ws, capsys, "verify", "--index", "1")
    assert code == 4 and "locked" in out


def test_board_matches_fixture(toy_ws):
    board = json.loads((toy_ws / "board.json").read_text())
    assert board["commitments"] == ["d", "8"]
    assert board["share_images"] == ["d", "c", "4", "9"]
    assert board["encrypted_shares"] == {"1": "07", "2": "0a", "3": "09"}


def test_verify_and_decrypt(toy_ws, capsys):
    assert run(toy_ws, capsys, "verify", "--index", "1") == (0, "OK share=10 verified")
    assert run(toy_ws, capsys, "decrypt", "--index", "2") == (0, "OK share=2")
    code, out = run(toy_ws, capsys, "verify")
    assert code == 0 and out.startswith("OK")


def test_dispute_honest_and_cheats(toy_ws, capsys):
    assert run(toy_ws, capsys, "dispute", "--index", "1") == (0, "VERDICT resolved")
    assert run(toy_ws, capsys, "dispute", "--index", "1", "--dealer-cheat", "lambda1:6") == (1, "VERDICT dealer_lied")
    assert run(toy_ws, capsys, "dispute", "--index", "1", "--participant-cheat", "3") == (1, "VERDICT participant_lied")
    assert run(toy_ws, capsys, "dispute", "--index", "2", "--dealer-cheat", "withhold") == (1, "VERDICT dealer_lied")
    code, out = run(toy_ws, capsys, "dispute", "--index", "3", "--participant-cheat", "false-complaint")
    assert (code, out) == (1, "VERDICT participant_lied")


def test_dispute_replay(toy_ws, capsys):
    run(toy_ws, capsys, "dispute", "--index", "1", "--dealer-cheat", "lambda1:6")
    path = toy_ws / "transcripts" / "dispute-1.json"
    assert path.exists()
    code, out = run(toy_ws, capsys, "dispute", "--index", "1", "--replay", str(path))
    assert code == 1 and "dealer_lied" in out


def test_membership(toy_ws, capsys):
    code, out = run(toy_ws, capsys, "membership", "--index", "1", "--challenge-seed", "c")
    assert code == 0 and out == "OK membership accept index=1"
    code, out = run(toy_ws, capsys, "membership", "--index", "1", "--impostor-share", "1", "--challenge-seed", "c")
    assert code == 1 and out.startswith("REJECT")


def test_reconstruct(toy_ws, capsys):
    assert run(toy_ws, capsys, "reconstruct", "--indices", "2,3") == (0, "OK secret=7")
    code, out = run(toy_ws, capsys, "reconstruct", "--indices", "2")
    assert code == 1 and out.startswith("REJECT")


def test_simulate_byte_identical(tmp_path, capsys):
    config = {
        "name": "demo",
        "k": 2,
        "n": 3,
        "seed": 3,
        "strategies": [{"role": "dealer", "variant": "dealer_lambda_variant", "target": 1, "form": 5}],
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    code, out = run(tmp_path, capsys, "simulate", "--config", str(cfg), "--out", str(a))
    assert code == 0 and "fixture_hash=" in out
    run(tmp_path, capsys, "simulate", "--config", str(cfg), "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    assert run(tmp_path, capsys, "simulate", "--config", str(tmp_path / "none.json"))[0] == 2

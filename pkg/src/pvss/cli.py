"""Command-line front end over a file-based workspace.

Layout::

    params.json          group parameters
    keys/<i>.json        participant key pairs (keys/reconstructor.json by convention)
    dealer.json          the dealer's polynomial, kept for disputes
    board.json           the published bulletin board
    transcripts/*.json   dispute and membership transcripts
    reports/*.json       scenario reports

Every command prints one line to stdout (``OK ...``, ``REJECT ...`` or
``VERDICT ...``) and details to stderr. Exit codes: 0 success, 1 protocol
reject or lie verdict, 2 usage or missing files, 3 parameter search
exhausted, 4 workspace locked.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import random
import sys
import tempfile
from pathlib import Path
from typing import Any, Iterator, Sequence

from . import core, group, protocols, sim
from .core import BulletinBoard
from .errors import NonCanonicalShare, ParameterError, PVSSError, SearchExhausted
from .group import GroupParams
from .shamir import IndexedShare, SharePolynomial, eval_share, interpolate_secret

log = logging.getLogger("pvss")

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_LOCKED = 0, 1, 2, 3, 4


class UsageError(Exception):
    """Bad flags, missing workspace files, or unseeded randomness."""


def _int(text: str) -> int:
    text = text.strip().lower()
    return int(text, 16) if text.startswith("0x") else int(text)


def _int_list(text: str) -> list[int]:
    return [_int(x) for x in text.split(",") if x.strip()]


# -- workspace ----------------------------------------------------------------


class Workspace:
    def __init__(self, root: Path) -> None:
        self.root = root

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def read(self, *parts: str) -> Any:
        path = self.path(*parts)
        try:
            return json.loads(path.read_text())
        except FileNotFoundError:
            raise UsageError(f"missing workspace file {path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path} is not valid JSON: {exc}") from None

    def write(self, obj: Any, *parts: str) -> Path:
        """Pretty-printed, sorted keys; temp file + rename so readers never see a partial file."""
        path = self.path(*parts)
        write_json_atomic(path, obj)
        return path

    def params(self) -> GroupParams:
        try:
            return GroupParams.from_json(self.read("params.json"))
        except ParameterError as exc:
            raise UsageError(str(exc)) from None

    def board(self) -> BulletinBoard:
        try:
            return BulletinBoard.from_json(self.read("board.json"))
        except ParameterError as exc:
            raise UsageError(str(exc)) from None

    def key(self, i: int) -> core.KeyPair:
        return load_key(self.path("keys", f"{i}.json"))

    def write_board(self, board: BulletinBoard) -> Path:
        bad = core.verify_bulletin(board)
        if bad:
            raise PVSSError(f"refusing to write an inconsistent board (indices {bad})")
        return self.write(board.to_json(), "board.json")

    @contextlib.contextmanager
    def lock(self) -> Iterator[None]:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path(".lock")
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WorkspaceLocked(f"workspace {self.root} is locked by another invocation") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            path.unlink(missing_ok=True)


class WorkspaceLocked(Exception):
    pass


def write_json_atomic(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def load_key(path: Path) -> core.KeyPair:
    try:
        obj = json.loads(path.read_text())
        return core.KeyPair(sk=int(obj["sk"], 16), pk=int(obj["pk"], 16))
    except FileNotFoundError:
        raise UsageError(f"missing key file {path}") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"malformed key file {path}: {exc}") from None


def _key_json(i: int | None, kp: core.KeyPair) -> dict[str, Any]:
    out: dict[str, Any] = {"sk": format(kp.sk, "x"), "pk": format(kp.pk, "x")}
    if i is not None:
        out["index"] = i
    return out


def _require_index(board: BulletinBoard, i: int) -> None:
    if not 1 <= i <= board.n:
        raise UsageError(f"index {i} outside 1..{board.n}")


def _dealer_fixture(ws: Workspace, board: BulletinBoard, indices: Sequence[int]) -> sim.Fixture:
    obj = ws.read("dealer.json")
    poly = SharePolynomial(tuple(int(c, 16) for c in obj["coefficients"]), board.params.q)
    keys = {i: ws.key(i) for i in indices}
    return sim.Fixture(board.params, poly, keys, board)


# -- commands -----------------------------------------------------------------


def cmd_params(ws: Workspace, args: argparse.Namespace) -> int:
    if args.fixed_toy:
        params = group.TOY_PARAMS
    elif args.q_bits is not None and args.seed is not None:
        if args.q_bits < 4:
            raise UsageError("--q-bits must be at least 4")
        params = group.generate_params(args.q_bits, args.seed)
    else:
        raise UsageError("give either --fixed-toy or both --q-bits and --seed")
    ws.write(params.to_json(), "params.json")
    log.info("q has %d bits, p has %d bits", params.q.bit_length(), params.p.bit_length())
    print(f"OK params p={params.p:x} q={params.q:x} g={params.g:x}")
    return EXIT_OK


def cmd_keygen(ws: Workspace, args: argparse.Namespace) -> int:
    params = ws.params()
    if args.sk is not None:
        kp = core.keypair_from_sk(params, args.sk)
    elif args.seed is not None:
        kp = core.keygen(params, random.Random(f"{args.seed}:keygen:{args.index}"))
    else:
        raise UsageError("keygen needs --seed (or an explicit --sk); there is no ambient randomness")
    out = Path(args.out) if args.out else ws.path("keys", f"{args.index}.json")
    write_json_atomic(out, _key_json(args.index, kp))
    print(f"OK key index={args.index} pk={kp.pk:x}")
    return EXIT_OK


def cmd_deal(ws: Workspace, args: argparse.Namespace) -> int:
    params = ws.params()
    pubkeys = {i: ws.key(i).pk for i in range(1, args.n + 1)}
    if args.coeffs is not None:
        poly = SharePolynomial(tuple(args.coeffs), params.q)
        deal = core.deal_polynomial(params, poly, args.n, pubkeys)
    elif None not in (args.secret, args.k, args.seed):
        poly, deal = core.deal(params, args.secret, args.k, args.n, pubkeys, random.Random(f"{args.seed}:deal"))
    else:
        raise UsageError("deal needs --secret, --k and --seed (or explicit --coeffs)")
    board = BulletinBoard(params, poly.k, args.n, deal, pubkeys)
    ws.write({"coefficients": [format(c, "x") for c in poly.coeffs]}, "dealer.json")
    ws.write_board(board)
    zeros = [i for i in range(1, args.n + 1) if eval_share(poly, i).share == 0]
    if zeros:
        log.warning("participants %s hold share 0; their encryption mask is the identity", zeros)
    print(f"OK dealt k={poly.k} n={args.n} fixture_hash={board.fixture_hash()}")
    return EXIT_OK


def cmd_verify(ws: Workspace, args: argparse.Namespace) -> int:
    board = ws.board()
    if args.index is None:
        bad = core.verify_bulletin(board)
        if bad:
            print(f"REJECT inconsistent={','.join(map(str, bad))}")
            return EXIT_REJECT
        print(f"OK board consistent n={board.n}")
        return EXIT_OK
    i = args.index
    _require_index(board, i)
    encrypted = board.deal.encrypted_shares.get(i)
    if encrypted is None:
        print(f"REJECT index={i} reason=no_encrypted_share")
        return EXIT_REJECT
    try:
        s = core.decrypt_share(board.params, encrypted, ws.key(i).sk, board.image(i))
    except NonCanonicalShare as exc:
        log.info("%s", exc)
        print(f"REJECT index={i} reason=non_canonical_share")
        return EXIT_REJECT
    if not core.verify_share(board.params, s, board.deal.commitments, i):
        print(f"REJECT index={i} reason=commitment_mismatch")
        return EXIT_REJECT
    print(f"OK share={s} verified")
    return EXIT_OK


def cmd_decrypt(ws: Workspace, args: argparse.Namespace) -> int:
    board = ws.board()
    _require_index(board, args.index)
    encrypted = board.deal.encrypted_shares.get(args.index)
    if encrypted is None:
        print(f"REJECT index={args.index} reason=no_encrypted_share")
        return EXIT_REJECT
    try:
        s = core.decrypt_share(board.params, encrypted, ws.key(args.index).sk, board.image(args.index))
    except NonCanonicalShare as exc:
        log.info("%s", exc)
        print(f"REJECT index={args.index} reason=non_canonical_share")
        return EXIT_REJECT
    print(f"OK share={s}")
    return EXIT_OK


def parse_dealer_cheat(text: str) -> sim.AdversaryStrategy:
    """lambda<N>[:s'][:pk'] (form 4 takes only pk'), invalid:<s'>, or withhold."""
    head, _, rest = text.partition(":")
    args = [_int(x) for x in rest.split(":") if x] if rest else []
    if head == "withhold":
        return sim.AdversaryStrategy("dealer", "dealer_withhold_share", target=0)
    if head == "invalid":
        if len(args) != 1:
            raise UsageError("invalid:<s'> takes exactly one value")
        return sim.AdversaryStrategy("dealer", "dealer_invalid_share", target=0, s_prime=args[0])
    if head.startswith("lambda") and head[6:].isdigit():
        form = int(head[6:])
        if form not in sim.LAMBDA_FORMS:
            raise UsageError("lambda form must be 1..7")
        needs_s, needs_pk = sim.form_needs(form)
        expected = int(needs_s) + int(needs_pk)
        if len(args) != expected:
            raise UsageError(f"lambda{form} takes {expected} value(s)")
        s_prime = args[0] if needs_s else None
        pk_prime = args[-1] if needs_pk else None
        return sim.AdversaryStrategy(
            "dealer", "dealer_lambda_variant", target=0, form=form, s_prime=s_prime, pk_prime=pk_prime
        )
    raise UsageError(f"unrecognised dealer cheat {text!r}")


def _dealer_moves(fx: sim.Fixture, i: int, cheat: sim.AdversaryStrategy | None) -> sim.DealerMoves:
    if cheat is None:
        return sim.honest_dealer_moves(fx, i)
    params, s, pk = fx.params, fx.share(i), fx.board.pubkeys[i]
    honest = sim.honest_dealer_moves(fx, i)
    if cheat.variant == "dealer_withhold_share":
        return sim.DealerMoves(honest.masked, None)
    if cheat.variant == "dealer_invalid_share":
        s_prime = cheat.s_prime
        lam = core.xor_mask(params, s_prime, group.mod_exp(params, pk, s_prime))
        return sim.DealerMoves(protocols.dispute_publish_masked(params, "dealer", pk, s_prime), lam)
    lam = sim.forged_lambda(params, cheat.form, s, pk, cheat.s_prime, cheat.pk_prime)
    return sim.DealerMoves(honest.masked, lam)


def _participant_moves(fx: sim.Fixture, i: int, cheat: str | None) -> sim.ParticipantMoves:
    honest = sim.honest_participant_moves(fx, i)
    if cheat is None:
        return honest
    head, _, rest = cheat.partition(":")
    if head == "false-complaint":
        params = fx.params
        fake = _int(rest) if rest else params.g
        if fake == honest.masked:
            fake = group.g_exp(params, 2)
        return sim.ParticipantMoves(honest.sk, fake)
    try:
        alpha = _int(cheat)
    except ValueError:
        raise UsageError(f"unrecognised participant cheat {cheat!r}") from None
    return sim.ParticipantMoves(honest.sk, honest.masked, alpha_override=alpha)


def cmd_dispute(ws: Workspace, args: argparse.Namespace) -> int:
    board = ws.board()
    i = args.index
    _require_index(board, i)
    if args.replay:
        try:
            transcript = json.loads(Path(args.replay).read_text())
        except FileNotFoundError:
            raise UsageError(f"missing transcript {args.replay}") from None
        derived = protocols.replay_dispute(transcript, board).outcome.value
        recorded = protocols.recorded_verdict(transcript)
        if recorded != derived:
            print(f"REJECT replay recorded={recorded} derived={derived}")
            return EXIT_REJECT
        print(f"VERDICT {derived}")
        return EXIT_OK if derived == "resolved" else EXIT_REJECT

    fx = _dealer_fixture(ws, board, [i])
    cheat = parse_dealer_cheat(args.dealer_cheat) if args.dealer_cheat else None
    state, verdict = sim.dispute_or_abort(
        fx, i, lambda: _dealer_moves(fx, i, cheat), lambda: _participant_moves(fx, i, args.participant_cheat)
    )
    transcript = state.transcript if state is not None else [{"verdict": verdict.outcome.value}]
    path = ws.write(transcript, "transcripts", f"dispute-{i}.json")
    log.info("transcript written to %s; %s", path, verdict.reason)
    print(f"VERDICT {verdict.outcome.value}")
    return EXIT_OK if verdict.outcome is protocols.Outcome.RESOLVED else EXIT_REJECT


def cmd_membership(ws: Workspace, args: argparse.Namespace) -> int:
    board = ws.board()
    i = args.index
    _require_index(board, i)
    if args.replay:
        try:
            transcript = json.loads(Path(args.replay).read_text())
        except FileNotFoundError:
            raise UsageError(f"missing transcript {args.replay}") from None
        derived = protocols.replay_membership(transcript, board)
        recorded = protocols.recorded_verdict(transcript)
        if recorded != derived:
            print(f"REJECT replay recorded={recorded} derived={derived}")
            return EXIT_REJECT
        print(f"{'OK' if derived == 'accept' else 'REJECT'} membership {derived} index={i}")
        return EXIT_OK if derived == "accept" else EXIT_REJECT

    if args.challenge_seed is None:
        raise UsageError("membership needs --challenge-seed")
    params = board.params
    if args.impostor_share is not None:
        share = args.impostor_share
    else:
        encrypted = board.deal.encrypted_shares.get(i)
        if encrypted is None:
            raise UsageError(f"participant {i} holds no encrypted share")
        share = core.decrypt_share(params, encrypted, ws.key(i).sk, board.image(i))
    challenge = protocols.membership_challenge(params, random.Random(f"{args.challenge_seed}:challenge"))
    result = protocols.run_membership(board, i, share, challenge)
    ws.write(result.transcript, "transcripts", f"membership-{i}.json")
    if result.outcome == "degenerate":
        log.warning("%s", result.cause)
    if result.accepted:
        print(f"OK membership accept index={i}")
        return EXIT_OK
    print(f"REJECT membership {result.outcome} index={i}")
    return EXIT_REJECT


def cmd_reconstruct(ws: Workspace, args: argparse.Namespace) -> int:
    board = ws.board()
    params = board.params
    key_path = Path(args.reconstructor_key) if args.reconstructor_key else ws.path("keys", "reconstructor.json")
    reconstructor = load_key(key_path)
    submissions = []
    for i in args.indices:
        _require_index(board, i)
        encrypted = board.deal.encrypted_shares.get(i)
        if encrypted is None:
            log.warning("participant %d has no share to submit", i)
            continue
        try:
            s = core.decrypt_share(params, encrypted, ws.key(i).sk, board.image(i))
        except NonCanonicalShare as exc:
            log.warning("participant %d: %s", i, exc)
            continue
        submissions.append((i, core.encrypt_for_submission(params, IndexedShare(i, s), reconstructor.pk)))
    valid, rejected = core.open_submissions(submissions, reconstructor.sk, board)
    if rejected:
        log.warning("rejected submissions from %s", rejected)
    if len(valid) < board.k:
        print(f"REJECT insufficient_valid_shares valid={len(valid)} k={board.k}")
        return EXIT_REJECT
    secret = interpolate_secret(valid[: board.k], params.q)
    print(f"OK secret={secret}")
    return EXIT_OK


def cmd_simulate(ws: Workspace, args: argparse.Namespace) -> int:
    try:
        config = sim.ScenarioConfig.from_json(json.loads(Path(args.config).read_text()))
    except FileNotFoundError:
        raise UsageError(f"missing config {args.config}") from None
    except (json.JSONDecodeError, sim.ConfigError) as exc:
        raise UsageError(f"bad scenario config: {exc}") from None
    report = sim.run_scenario(config)
    out = Path(args.out) if args.out else ws.path("reports", f"{config.name}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(sim.dump_report(report))
    os.replace(tmp, out)
    log.info("\n%s", sim.op_count_report(report))
    print(f"OK report={out} fixture_hash={report.get('fixture_hash', '-')}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvss", description="XOR-masked publicly verifiable secret sharing")
    parser.add_argument("-w", "--workspace", default=".", help="workspace directory (default: .)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="write params.json")
    p.add_argument("--q-bits", type=int)
    p.add_argument("--seed")
    p.add_argument("--fixed-toy", action="store_true", help="p=23, q=11, g=2")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("keygen", help="create a participant key pair")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--seed")
    p.add_argument("--sk", type=_int, help="use this private key instead of drawing one")
    p.add_argument("--out", help="write the key here instead of keys/<index>.json")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("deal", help="share a secret among participants 1..n")
    p.add_argument("--secret", type=_int)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed")
    p.add_argument("--coeffs", type=_int_list, help="explicit polynomial, constant term first")
    p.set_defaults(func=cmd_deal)

    p = sub.add_parser("verify", help="verify a participant's share, or audit the whole board")
    p.add_argument("--index", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("decrypt", help="decrypt a participant's share")
    p.add_argument("--index", type=int, required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("dispute", help="run or replay the dealer/participant dispute")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--dealer-cheat", help="lambda<N>[:s'][:pk'] | invalid:<s'> | withhold")
    p.add_argument("--participant-cheat", help="<alpha'> | false-complaint[:<masked>]")
    p.add_argument("--replay", help="re-derive the verdict of a recorded transcript")
    p.set_defaults(func=cmd_dispute)

    p = sub.add_parser("membership", help="run or replay a membership proof")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--impostor-share", type=_int)
    p.add_argument("--challenge-seed")
    p.add_argument("--replay")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("reconstruct", help="pool encrypted shares and recover the secret")
    p.add_argument("--indices", type=_int_list, required=True)
    p.add_argument("--reconstructor-key")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("simulate", help="run a scenario config and write its report")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    ws = Workspace(Path(args.workspace))
    try:
        with ws.lock():
            return args.func(ws, args)
    except WorkspaceLocked as exc:
        print(f"ERROR {exc}")
        return EXIT_LOCKED
    except SearchExhausted as exc:
        print(f"ERROR {exc}")
        return EXIT_EXHAUSTED
    except (UsageError, ParameterError) as exc:
        print(f"ERROR {exc}")
        return EXIT_USAGE
    except PVSSError as exc:
        print(f"ERROR {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

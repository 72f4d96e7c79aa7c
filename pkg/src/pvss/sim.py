"""Deterministic multi-party scenario engine.

A scenario wires a dealer, n participants, an arbiter, a membership verifier
and a reconstructor through the protocol. Adversarial behaviour is injected
through :class:`AdversaryStrategy` entries. All randomness is drawn from
named sub-streams of the configured seed, so a config always yields the same
report byte for byte.
"""

from __future__ import annotations

import json
import logging
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

from . import core, group, opcount
from .core import BulletinBoard, KeyPair, decrypt_share, verify_bulletin, verify_share, xor_mask
from .errors import (
    DegenerateExponent,
    InsufficientValidShares,
    NonCanonicalShare,
    ParameterError,
    PVSSError,
)
from .group import TOY_PARAMS, GroupParams, g_exp, mod_exp
from .protocols import (
    Alpha,
    DisputeState,
    Outcome,
    Verdict,
    challenge_from_secret,
    dispute_dealer_lambda,
    dispute_participant_respond,
    dispute_publish_masked,
    membership_challenge,
    run_membership,
)
from .shamir import SharePolynomial, eval_share, interpolate_secret, sample_polynomial

log = logging.getLogger(__name__)

PHASES = ("deal", "verify", "dispute", "membership", "reconstruct")
EXHAUST = "exhaust"
EXHAUST_MAX_Q = 64


class ConfigError(PVSSError, ValueError):
    pass


# -- lambda forgeries ----------------------------------------------------------

# form -> (value uses s', exponent uses s', base uses pk')
LAMBDA_FORMS: dict[int, tuple[bool, bool, bool]] = {
    1: (True, False, False),  # s' xor pk^s
    2: (False, True, False),  # s  xor pk^s'
    3: (True, True, False),  # s' xor pk^s'
    4: (False, False, True),  # s  xor pk'^s
    5: (True, False, True),  # s' xor pk'^s
    6: (False, True, True),  # s  xor pk'^s'
    7: (True, True, True),  # s' xor pk'^s'
}


def form_needs(form: int) -> tuple[bool, bool]:
    """(needs s', needs pk') for a lambda form."""
    value_fake, exp_fake, pk_fake = LAMBDA_FORMS[form]
    return value_fake or exp_fake, pk_fake


def forged_lambda(
    params: GroupParams,
    form: int,
    share: int,
    pk: int,
    s_prime: int | None = None,
    pk_prime: int | None = None,
) -> bytes:
    if form not in LAMBDA_FORMS:
        raise ParameterError(f"lambda form must be 1..7, got {form}")
    value_fake, exp_fake, pk_fake = LAMBDA_FORMS[form]
    needs_s, needs_pk = form_needs(form)
    if needs_s and s_prime is None:
        raise ParameterError(f"lambda form {form} needs a substitute share")
    if needs_pk and pk_prime is None:
        raise ParameterError(f"lambda form {form} needs a substitute public key")
    value = s_prime if value_fake else share
    exponent = s_prime if exp_fake else share
    base = pk_prime if pk_fake else pk
    return xor_mask(params, value, mod_exp(params, base, exponent))


# -- strategies ---------------------------------------------------------------

_VARIANT_ROLES = {
    "honest": {"dealer", "participant", "outsider"},
    "dealer_invalid_share": {"dealer"},
    "dealer_lambda_variant": {"dealer"},
    "dealer_withhold_share": {"dealer"},
    "participant_fake_alpha": {"participant"},
    "participant_false_complaint": {"participant"},
    "outsider_impostor": {"outsider"},
}

Substitution = int | str | None


@dataclass(frozen=True)
class AdversaryStrategy:
    role: str
    variant: str = "honest"
    target: int | None = None
    form: int | None = None
    s_prime: Substitution = None
    pk_prime: Substitution = None
    alpha_prime: Substitution = None
    fake_share: Substitution = None
    fake_masked: int | None = None

    def __post_init__(self) -> None:
        roles = _VARIANT_ROLES.get(self.variant)
        if roles is None:
            raise ConfigError(f"unknown strategy variant {self.variant!r}")
        if self.role not in roles:
            raise ConfigError(f"variant {self.variant} is not available to role {self.role}")
        if self.variant != "honest" and self.target is None:
            raise ConfigError(f"variant {self.variant} needs a target index")
        if self.variant == "dealer_lambda_variant" and self.form not in LAMBDA_FORMS:
            raise ConfigError("dealer_lambda_variant needs form in 1..7")
        for name in ("s_prime", "pk_prime", "alpha_prime", "fake_share"):
            value = getattr(self, name)
            if isinstance(value, str) and value != EXHAUST:
                raise ConfigError(f"{name} must be an integer or {EXHAUST!r}")

    @property
    def cheats(self) -> bool:
        return self.variant != "honest"

    def to_json(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> AdversaryStrategy:
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"bad strategy entry {dict(obj)}: {exc}") from exc


@dataclass(frozen=True)
class ScenarioConfig:
    k: int
    n: int
    seed: int | str
    params: Mapping[str, Any] = field(default_factory=lambda: {"source": "fixed"})
    secret: int | None = None
    strategies: tuple[AdversaryStrategy, ...] = ()
    phases: tuple[str, ...] = PHASES
    coefficients: tuple[int, ...] | None = None
    private_keys: Mapping[int, int] | None = None
    extra_disputes: tuple[int, ...] = ()
    membership_indices: tuple[int, ...] | None = None
    name: str = "scenario"

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        unknown = set(self.phases) - set(PHASES)
        if unknown:
            raise ConfigError(f"unknown phases {sorted(unknown)}")
        if self.phases and "deal" not in self.phases:
            raise ConfigError("every phase depends on the deal phase")
        dealers = [s for s in self.strategies if s.role == "dealer" and s.cheats]
        if len(dealers) > 1:
            raise ConfigError("at most one dealer strategy")
        source = self.params.get("source")
        if source not in ("fixed", "generated"):
            raise ConfigError("params.source must be 'fixed' or 'generated'")
        if source == "generated" and not isinstance(self.params.get("q_bits"), int):
            raise ConfigError("generated params need an integer q_bits")
        for idx in self.extra_disputes:
            if not 1 <= idx <= self.n:
                raise ConfigError(f"dispute index {idx} outside 1..{self.n}")
        for s in self.strategies:
            if s.role in ("dealer", "participant") and s.cheats and not 1 <= s.target <= self.n:
                raise ConfigError(f"strategy target {s.target} outside 1..{self.n}")

    @property
    def dealer_strategy(self) -> AdversaryStrategy | None:
        return next((s for s in self.strategies if s.role == "dealer" and s.cheats), None)

    def participant_strategy(self, i: int) -> AdversaryStrategy | None:
        return next(
            (s for s in self.strategies if s.role == "participant" and s.cheats and s.target == i), None
        )

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "k": self.k,
            "n": self.n,
            "seed": self.seed,
            "params": dict(self.params),
            "secret": self.secret,
            "strategies": [s.to_json() for s in self.strategies],
            "phases": list(self.phases),
            "extra_disputes": list(self.extra_disputes),
        }
        if self.coefficients is not None:
            out["coefficients"] = list(self.coefficients)
        if self.private_keys is not None:
            out["private_keys"] = {str(i): sk for i, sk in sorted(self.private_keys.items())}
        if self.membership_indices is not None:
            out["membership_indices"] = list(self.membership_indices)
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> ScenarioConfig:
        try:
            keys = obj.get("private_keys")
            members = obj.get("membership_indices")
            coeffs = obj.get("coefficients")
            return cls(
                k=int(obj["k"]),
                n=int(obj["n"]),
                seed=obj["seed"],
                params=obj.get("params", {"source": "fixed"}),
                secret=obj.get("secret"),
                strategies=tuple(AdversaryStrategy.from_json(s) for s in obj.get("strategies", [])),
                phases=tuple(obj.get("phases", PHASES)),
                coefficients=tuple(coeffs) if coeffs is not None else None,
                private_keys={int(i): int(sk) for i, sk in keys.items()} if keys is not None else None,
                extra_disputes=tuple(obj.get("extra_disputes", ())),
                membership_indices=tuple(members) if members is not None else None,
                name=obj.get("name", "scenario"),
            )
        except KeyError as exc:
            raise ConfigError(f"config is missing {exc.args[0]!r}") from exc


# -- fixtures -----------------------------------------------------------------


@dataclass(frozen=True)
class Fixture:
    """A dealt board together with the private state the simulator plays from."""

    params: GroupParams
    poly: SharePolynomial
    keys: Mapping[int, KeyPair]
    board: BulletinBoard

    def share(self, i: int) -> int:
        return eval_share(self.poly, i).share


def make_fixture(params: GroupParams, coeffs: Iterable[int], sks: Mapping[int, int]) -> Fixture:
    poly = SharePolynomial(tuple(coeffs), params.q)
    keys = {i: core.keypair_from_sk(params, sk) for i, sk in sks.items()}
    pubkeys = {i: kp.pk for i, kp in keys.items()}
    deal = core.deal_polynomial(params, poly, len(keys), pubkeys)
    return Fixture(params, poly, keys, BulletinBoard(params, poly.k, len(keys), deal, pubkeys))


def toy_fixture() -> Fixture:
    """p=23, q=11, g=2, F(x) = 7 + 3x, private keys (4, 7, 2)."""
    return make_fixture(TOY_PARAMS, (7, 3), {1: 4, 2: 7, 3: 2})


# -- dispute driver -----------------------------------------------------------


@dataclass(frozen=True)
class DealerMoves:
    masked: int
    lam: bytes | None  # None: the dealer never answers step 3


@dataclass(frozen=True)
class ParticipantMoves:
    sk: int
    masked: int
    alpha_override: int | None = None


def honest_dealer_moves(fx: Fixture, i: int) -> DealerMoves:
    s, pk = fx.share(i), fx.board.pubkeys[i]
    return DealerMoves(
        dispute_publish_masked(fx.params, "dealer", pk, s), dispute_dealer_lambda(fx.params, s, pk)
    )


def honest_participant_moves(fx: Fixture, i: int) -> ParticipantMoves:
    sk = fx.keys[i].sk
    return ParticipantMoves(sk, dispute_publish_masked(fx.params, "participant", sk, fx.board.image(i)))


def run_dispute(
    board: BulletinBoard, i: int, dealer: DealerMoves, participant: ParticipantMoves
) -> DisputeState:
    """Drive one dispute to a verdict over an in-process, ordered channel."""
    state = DisputeState(board, i)
    if not state.publish_masked(dealer.masked, participant.masked):
        state.reveal_key(participant.sk)
        return state
    if dealer.lam is None:
        state.forfeit("dealer", "dealer did not publish lambda")
        return state
    state.publish_lambda(dealer.lam)
    response = dispute_participant_respond(board.params, dealer.lam, participant.sk, board, i)
    if participant.alpha_override is not None:
        response = Alpha(participant.alpha_override)
    if state.respond(response) is None:
        state.adjudicate()
    return state


def dispute_or_abort(
    fx: Fixture, i: int, make_dealer, make_participant
) -> tuple[DisputeState | None, Verdict]:
    """Build both parties' moves and run; a degenerate step-2 value aborts as unresolvable."""
    try:
        dealer, participant = make_dealer(), make_participant()
    except DegenerateExponent as exc:
        return None, Verdict(Outcome.UNRESOLVABLE, str(exc))
    state = run_dispute(fx.board, i, dealer, participant)
    assert state.verdict is not None
    return state, state.verdict


# -- exhaustive matrices ------------------------------------------------------


def _require_toy(params: GroupParams) -> None:
    if params.q > EXHAUST_MAX_Q:
        raise ParameterError(f"exhaustive enumeration is limited to q <= {EXHAUST_MAX_Q}")


def _fake_pubkeys(
    params: GroupParams, pk: int, samples: int | None, rng: random.Random | None
) -> list[int]:
    candidates = [g_exp(params, a) for a in range(1, params.q)]
    candidates = [c for c in candidates if c != pk]
    if samples is None or rng is None or samples >= len(candidates):
        return candidates
    return sorted(rng.sample(candidates, samples))


def enumerate_lambda_matrix(
    fx: Fixture, i: int, pk_samples: int | None = None, seed: int | str = 0
) -> list[dict[str, Any]]:
    """One row per (lambda form, substitute share, substitute key), plus an honest control row.

    The dealer publishes the honest step-2 value and cheats only in lambda.
    Rows whose forgery coincides with the honest lambda, or whose dispute hits
    a degenerate exponent, carry a ``degenerate`` cause.
    """
    params = fx.params
    _require_toy(params)
    s, pk = fx.share(i), fx.board.pubkeys[i]
    honest = honest_dealer_moves(fx, i)
    participant = honest_participant_moves(fx, i)
    fake_shares = [x for x in range(params.q) if x != s]
    fake_pks = _fake_pubkeys(params, pk, pk_samples, random.Random(f"{seed}:lambda-pk"))

    rows = [_lambda_row(fx, i, 0, None, None, honest, participant)]
    for form in sorted(LAMBDA_FORMS):
        needs_s, needs_pk = form_needs(form)
        for s_prime in fake_shares if needs_s else [None]:
            for pk_prime in fake_pks if needs_pk else [None]:
                lam = forged_lambda(params, form, s, pk, s_prime, pk_prime)
                moves = DealerMoves(honest.masked, lam)
                rows.append(_lambda_row(fx, i, form, s_prime, pk_prime, moves, participant))
    return rows


def _lambda_row(fx, i, form, s_prime, pk_prime, dealer, participant) -> dict[str, Any]:
    state = run_dispute(fx.board, i, dealer, participant)
    verdict = state.verdict
    degenerate = None
    if form and dealer.lam == honest_dealer_moves(fx, i).lam:
        degenerate = "forged lambda equals the honest lambda"
    elif verdict.outcome is Outcome.UNRESOLVABLE:
        degenerate = verdict.reason
    return {
        "form": form,
        "s_prime": s_prime,
        "pk_prime": pk_prime,
        "verdict": verdict.outcome.value,
        "degenerate": degenerate,
    }


def enumerate_alpha_matrix(fx: Fixture, i: int) -> list[dict[str, Any]]:
    """Honest dealer, participant answering every alpha' != alpha at step 4."""
    params = fx.params
    _require_toy(params)
    dealer = honest_dealer_moves(fx, i)
    honest = honest_participant_moves(fx, i)
    alpha = fx.share(i)
    rows = []
    for alpha_prime in range(params.q):
        if alpha_prime == alpha:
            continue
        moves = ParticipantMoves(honest.sk, honest.masked, alpha_override=alpha_prime)
        state = run_dispute(fx.board, i, dealer, moves)
        t = group.decode(dealer.lam) ^ alpha_prime
        rows.append(
            {
                "alpha_prime": alpha_prime,
                "verdict": state.verdict.outcome.value,
                "vacuous": alpha_prime < params.q and g_exp(params, alpha_prime) == fx.board.image(i),
                "aliases_mask": _aliases(params, t, mod_exp(params, fx.board.image(i), honest.sk)),
            }
        )
    return rows


def _aliases(params: GroupParams, x: int, y: int) -> bool:
    """Distinct values that collapse to the same exponent once reduced mod q."""
    return x != y and x % params.q == y % params.q


def enumerate_membership_matrix(fx: Fixture, i: int) -> list[dict[str, Any]]:
    """Every challenge against the true share and against every wrong share."""
    params = fx.params
    _require_toy(params)
    s = fx.share(i)
    rows = []
    for a in range(1, params.q):
        challenge = challenge_from_secret(params, a)
        for share in range(params.q):
            result = run_membership(fx.board, i, share, challenge)
            degenerate = result.cause or None
            if share == 0 and share != s:
                degenerate = "zero share: mask is the identity"
            rows.append(
                {
                    "challenge": a,
                    "share": share,
                    "impostor": share != s,
                    "outcome": result.outcome,
                    "degenerate": degenerate,
                    "aliased": _aliases(
                        params, mod_exp(params, challenge.g_a, share), mod_exp(params, challenge.g_a, s)
                    ),
                }
            )
    return rows


# -- scenarios ----------------------------------------------------------------


def _stream(seed: int | str, label: str) -> random.Random:
    return random.Random(f"{seed}:{label}")


def _resolve_params(config: ScenarioConfig) -> GroupParams:
    if config.params["source"] == "fixed":
        return TOY_PARAMS
    return group.generate_params(config.params["q_bits"], config.seed)


def _substitutions(value: Substitution, candidates, params: GroupParams) -> list[int]:
    """Expand a substitution rule; `candidates` is only called in exhaust mode."""
    if value == EXHAUST:
        _require_toy(params)
        return candidates()
    return [value] if value is not None else []


def _wrong_shares(params: GroupParams, s: int):
    return lambda: [x for x in range(params.q) if x != s]


class _Run:
    """Mutable bookkeeping for one scenario; never shared across threads."""

    def __init__(self, config: ScenarioConfig) -> None:
        self.config = config
        self.counter = opcount.OpCounter()
        self.degenerate: list[dict[str, Any]] = []
        self.report: dict[str, Any] = {"config": config.to_json()}
        self.forgeries: list[tuple[dict[str, int], bytes]] = []

    def event(self, phase: str, kind: str, detail: str) -> None:
        self.degenerate.append({"phase": phase, "kind": kind, "detail": detail})

    def phase(self, name: str) -> Iterator[None]:
        return self.counter.in_phase(name)


def run_scenario(config: ScenarioConfig) -> dict[str, Any]:
    """Execute the configured phases in order and return a JSON-ready report."""
    run = _Run(config)
    with opcount.counting(run.counter):
        params = _resolve_params(config)
        run.report["params"] = params.to_json()
        if not config.phases:
            run.report["op_counts"] = {p: dict.fromkeys(opcount.KINDS, 0) for p in PHASES}
            run.report["degenerate_events"] = []
            return run.report
        fx, secret = _deal_phase(run, params)
        shares = _verify_phase(run, fx) if "verify" in config.phases else {}
        if "dispute" in config.phases:
            _dispute_phase(run, fx, shares)
        if "membership" in config.phases:
            _membership_phase(run, fx, shares)
        if "reconstruct" in config.phases:
            _reconstruct_phase(run, fx, shares, secret)
    counts = run.counter.as_dict()
    run.report["op_counts"] = {
        p: counts.get(p, dict.fromkeys(opcount.KINDS, 0)) for p in PHASES
    }
    run.report["degenerate_events"] = run.degenerate
    run.report["detection"] = _detection_summary(run.report)
    run.report["structural_check"] = structural_check(run.report, fx)
    return run.report


def _deal_phase(run: _Run, params: GroupParams) -> tuple[Fixture, int]:
    config = run.config
    if config.n >= params.q:
        raise ConfigError(f"n={config.n} must be below q={params.q}")
    with run.phase("keygen"):
        if config.private_keys is not None:
            keys = {i: core.keypair_from_sk(params, config.private_keys[i]) for i in range(1, config.n + 1)}
        else:
            rng = _stream(config.seed, "keys")
            keys = {i: core.keygen(params, rng) for i in range(1, config.n + 1)}
    if config.coefficients is not None:
        if len(config.coefficients) != config.k:
            raise ConfigError(f"{len(config.coefficients)} coefficients given for k={config.k}")
        if config.secret is not None and config.secret != config.coefficients[0]:
            raise ConfigError("secret disagrees with coefficients[0]")
        try:
            poly = SharePolynomial(tuple(config.coefficients), params.q)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        secret = config.secret
        if secret is None:
            secret = _stream(config.seed, "secret").randrange(params.q)
        if not 0 <= secret < params.q:
            raise ConfigError(f"secret must lie in [0, {params.q - 1}]")
        poly = sample_polynomial(secret, config.k, params.q, _stream(config.seed, "deal"))
        zeros = _zero_shares(poly, config.n)
        if zeros:
            run.event("deal", "zero_share", f"indices {zeros} drew share 0; re-seeding once")
            poly = sample_polynomial(secret, config.k, params.q, _stream(config.seed, "deal:reseed"))
    zeros = _zero_shares(poly, config.n)
    if zeros:
        run.event("deal", "zero_share", f"indices {zeros} hold share 0; their mask is the identity")

    pubkeys = {i: kp.pk for i, kp in keys.items()}
    with run.phase("deal"):
        deal = core.deal_polynomial(params, poly, config.n, pubkeys)
    deal = _apply_dealer_strategy(run, params, poly, pubkeys, deal)
    board = BulletinBoard(params, poly.k, config.n, deal, pubkeys)
    fx = Fixture(params, poly, keys, board)
    run.report["secret"] = poly.secret
    run.report["fixture_hash"] = board.fixture_hash()
    run.report["bulletin_audit"] = verify_bulletin(board)
    return fx, poly.secret


def _zero_shares(poly: SharePolynomial, n: int) -> list[int]:
    return [i for i in range(1, n + 1) if eval_share(poly, i).share == 0]


def _apply_dealer_strategy(run, params, poly, pubkeys, deal):
    strategy = run.config.dealer_strategy
    if strategy is None:
        return deal
    i = strategy.target
    s = eval_share(poly, i).share
    encrypted = dict(deal.encrypted_shares)
    with opcount.paused():
        if strategy.variant == "dealer_withhold_share":
            del encrypted[i]
        else:
            run.forgeries = list(_dealer_forgeries(run, params, strategy, s, pubkeys[i]))
            if run.forgeries:
                encrypted[i] = run.forgeries[0][1]
            else:
                run.event("deal", "no_forgery", "every substitution reproduced the honest share")
    return core.DealOutput(deal.commitments, deal.share_images, encrypted)


def _dealer_forgeries(run, params, strategy, s, pk) -> Iterator[tuple[dict[str, int], bytes]]:
    """(substitution, forged ciphertext/lambda) pairs for a cheating dealer."""
    seed = run.config.seed
    if strategy.variant == "dealer_invalid_share":
        needs_s, needs_pk = True, False
    else:
        needs_s, needs_pk = form_needs(strategy.form)
    s_primes: list[int | None] = [None]
    if needs_s:
        s_primes = _substitutions(strategy.s_prime, _wrong_shares(params, s), params)
        if not s_primes:
            s_primes = [_random_wrong_share(params, s, _stream(seed, "s-prime"))]
    pk_primes: list[int | None] = [None]
    if needs_pk:
        pk_primes = _substitutions(
            strategy.pk_prime, lambda: _fake_pubkeys(params, pk, None, None), params
        )
        if not pk_primes:
            pk_primes = [_random_fake_pubkey(params, pk, _stream(seed, "pk-prime"))]

    honest = dispute_dealer_lambda(params, s, pk)
    for s_prime in s_primes:
        for pk_prime in pk_primes:
            sub = {k: v for k, v in (("s_prime", s_prime), ("pk_prime", pk_prime)) if v is not None}
            if strategy.variant == "dealer_invalid_share":
                lam = xor_mask(params, s_prime, mod_exp(params, pk, s_prime))
            else:
                lam = forged_lambda(params, strategy.form, s, pk, s_prime, pk_prime)
            if lam == honest:
                run.event("deal", "forgery_equals_honest", f"substitution {sub} reproduces lambda")
                continue
            yield sub, lam


def _random_fake_pubkey(params: GroupParams, pk: int, rng: random.Random) -> int:
    while True:
        candidate = g_exp(params, rng.randrange(1, params.q))
        if candidate != pk:
            return candidate


def _verify_phase(run: _Run, fx: Fixture) -> dict[int, int]:
    """Each participant decrypts and checks its share; returns the shares that verified."""
    params, board = fx.params, fx.board
    results: dict[str, str] = {}
    valid: dict[int, int] = {}
    with run.phase("verify"):
        for i in range(1, board.n + 1):
            encrypted = board.deal.encrypted_shares.get(i)
            if encrypted is None:
                results[str(i)] = "reject: no encrypted share received"
                continue
            try:
                s = decrypt_share(params, encrypted, fx.keys[i].sk, board.image(i))
            except NonCanonicalShare as exc:
                results[str(i)] = f"reject: {exc}"
                continue
            if verify_share(params, s, board.deal.commitments, i):
                results[str(i)] = "accept"
                valid[i] = s
            else:
                results[str(i)] = "reject: share does not match commitments"
    run.report["verification"] = results
    return valid


def _dispute_phase(run: _Run, fx: Fixture, shares: dict[int, int]) -> None:
    config = run.config
    disputes: list[dict[str, Any]] = []
    dealer_strategy = config.dealer_strategy
    complaints = [i for i in range(1, fx.board.n + 1) if i not in shares] if "verify" in config.phases else []
    indices = sorted(
        set(complaints)
        | set(config.extra_disputes)
        | {s.target for s in config.strategies if s.role == "participant" and s.cheats}
    )
    with run.phase("dispute"):
        for i in indices:
            trigger = "complaint" if i in complaints else "forced"
            p_strategy = config.participant_strategy(i)
            expected = []
            if dealer_strategy is not None and dealer_strategy.target == i:
                expected.append("dealer")
            if p_strategy is not None:
                expected.append("participant")
            for sub, make_dealer in _dealer_variants(run, fx, i, dealer_strategy):
                for psub, make_participant in _participant_variants(fx, i, p_strategy):
                    state, verdict = dispute_or_abort(fx, i, make_dealer, make_participant)
                    if verdict.outcome is Outcome.UNRESOLVABLE:
                        run.event("dispute", "degenerate_exponent", f"index {i}: {verdict.reason}")
                    disputes.append(
                        {
                            "index": i,
                            "trigger": trigger,
                            "substitution": {**sub, **psub},
                            "expected_cheater": expected,
                            "ruled_cheater": verdict.accuses,
                            "verdict": verdict.outcome.value,
                            "reason": verdict.reason,
                            "transcript": state.transcript if state is not None else [],
                        }
                    )
    run.report["disputes"] = disputes


def _dealer_variants(run, fx: Fixture, i: int, strategy: AdversaryStrategy | None):
    params = fx.params
    if strategy is None or strategy.target != i:
        yield {}, lambda: honest_dealer_moves(fx, i)
        return
    if strategy.variant == "dealer_withhold_share":
        yield {}, lambda: DealerMoves(honest_dealer_moves(fx, i).masked, None)
        return
    pk = fx.board.pubkeys[i]
    for sub, lam in run.forgeries:
        if strategy.variant == "dealer_invalid_share":
            # Stays consistent with the wrong share at step 2 as well.
            yield sub, (
                lambda s_prime=sub["s_prime"], lam=lam: DealerMoves(
                    dispute_publish_masked(params, "dealer", pk, s_prime), lam
                )
            )
        else:
            yield sub, (lambda lam=lam: DealerMoves(honest_dealer_moves(fx, i).masked, lam))


def _participant_variants(fx: Fixture, i: int, strategy: AdversaryStrategy | None):
    params = fx.params
    if strategy is None:
        yield {}, lambda: honest_participant_moves(fx, i)
        return
    if strategy.variant == "participant_false_complaint":
        def lying():
            honest = honest_participant_moves(fx, i)
            fake = strategy.fake_masked
            if fake is None or fake == honest.masked:
                fake = next(g_exp(params, a) for a in range(1, params.q) if g_exp(params, a) != honest.masked)
            return ParticipantMoves(honest.sk, fake)

        yield {"fake_masked": strategy.fake_masked}, lying
        return
    for alpha_prime in _substitutions(strategy.alpha_prime, _wrong_shares(params, fx.share(i)), params):
        yield {"alpha_prime": alpha_prime}, (
            lambda a=alpha_prime: ParticipantMoves(
                fx.keys[i].sk, honest_participant_moves(fx, i).masked, alpha_override=a
            )
        )


def _membership_phase(run: _Run, fx: Fixture, shares: dict[int, int]) -> None:
    config, params = run.config, fx.params
    rng = _stream(config.seed, "membership")
    attempts: list[dict[str, Any]] = []
    indices = config.membership_indices
    if indices is None:
        indices = tuple(sorted(shares))
    with run.phase("membership"):
        for i in indices:
            if i not in shares:
                continue
            attempts.append(_attempt(run, fx, i, shares[i], "participant", None, rng))
        for strategy in config.strategies:
            if strategy.variant != "outsider_impostor":
                continue
            i = strategy.target
            s = fx.share(i)
            fakes = _substitutions(strategy.fake_share, _wrong_shares(params, s), params)
            if not fakes:
                fakes = [_random_wrong_share(params, s, rng)]
            for fake in fakes:
                attempts.append(_attempt(run, fx, i, fake, "outsider", fake, rng))
    run.report["membership"] = attempts


def _random_wrong_share(params: GroupParams, s: int, rng: random.Random) -> int:
    while True:
        x = rng.randrange(params.q)
        if x != s:
            return x


def _attempt(run, fx, i, share, claimant, fake, rng) -> dict[str, Any]:
    params = fx.params
    challenge = membership_challenge(params, rng)
    result = run_membership(fx.board, i, share, challenge)
    retried = False
    if result.outcome == "degenerate":
        run.event("membership", "degenerate_exponent", f"index {i}: {result.cause}; new challenge")
        challenge = membership_challenge(params, rng)
        result = run_membership(fx.board, i, share, challenge)
        retried = True
        if result.outcome == "degenerate":
            run.event("membership", "degenerate_exponent", f"index {i}: {result.cause}; giving up")
    entry = {
        "index": i,
        "claimant": claimant,
        "outcome": result.outcome,
        "challenge": format(challenge.g_a, "x"),
        "retried": retried,
        "transcript": result.transcript,
    }
    if fake is not None:
        entry["fake_share"] = fake
        if fake == 0:
            run.event("membership", "zero_share", f"impostor at index {i} used share 0")
    return entry


def _reconstruct_phase(run: _Run, fx: Fixture, shares: dict[int, int], secret: int) -> None:
    params, board = fx.params, fx.board
    rng = _stream(run.config.seed, "reconstructor")
    with run.phase("reconstruct"):
        reconstructor = core.keygen(params, rng)
        submissions = [
            (i, core.encrypt_for_submission(params, eval_share(fx.poly, i), reconstructor.pk))
            for i in sorted(shares)
        ]
        valid, rejected = core.open_submissions(submissions, reconstructor.sk, board)
        entry: dict[str, Any] = {
            "submitted": [i for i, _ in submissions],
            "rejected": rejected,
            "used": [s.index for s in valid[: board.k]],
        }
        if len(valid) >= board.k:
            value = interpolate_secret(valid[: board.k], params.q)
            entry.update(value=value, matches_secret=value == secret)
        else:
            error = InsufficientValidShares(board.k, [s.index for s in valid], rejected)
            entry.update(value=None, matches_secret=False, error=str(error))
    run.report["reconstruction"] = entry


def _detection_summary(report: dict[str, Any]) -> dict[str, Any]:
    disputes = report.get("disputes", [])
    summary = {
        "disputes": len(disputes),
        "correct": 0,
        "false_accusations": 0,
        "missed": 0,
        "unresolvable": 0,
    }
    for d in disputes:
        ruled, expected = d["ruled_cheater"], d["expected_cheater"]
        if d["verdict"] == Outcome.UNRESOLVABLE.value:
            summary["unresolvable"] += 1
        elif ruled is None:
            summary["correct" if not expected else "missed"] += 1
        elif ruled in expected:
            summary["correct"] += 1
        else:
            summary["false_accusations"] += 1
    attempts = report.get("membership", [])
    summary["impostor_attempts"] = sum(a["claimant"] == "outsider" for a in attempts)
    summary["impostor_accepted"] = sum(
        a["claimant"] == "outsider" and a["outcome"] == "accept" for a in attempts
    )
    summary["honest_membership_rejected"] = sum(
        a["claimant"] == "participant" and a["outcome"] == "reject" for a in attempts
    )
    return summary


# -- structural secrecy check -------------------------------------------------

_DISPUTE_FIELDS = {"pubkey", "masked", "check", "key", "lambda", "accept", "alpha", "decision"}
_MEMBERSHIP_FIELDS = {"challenge", "response", "recomputed", "decision"}


def structural_check(report: Mapping[str, Any], fx: Fixture) -> dict[str, Any]:
    """Confirm no transcript carries a plaintext share outside masked fields or a key reveal.

    Every entry must use a known field. A private key may appear only after
    the arbiter asked for it, and an alpha may never be the valid share.
    """
    params = fx.params
    violations: list[str] = []
    with opcount.paused():
        for d in report.get("disputes", []):
            key_requested = False
            for e in d["transcript"]:
                if "verdict" in e:
                    continue
                name = e.get("field")
                if name not in _DISPUTE_FIELDS:
                    violations.append(f"dispute {d['index']}: unexpected field {name!r}")
                elif name == "check" and e["message"] == "key_reveal_required":
                    key_requested = True
                elif name == "key" and not key_requested:
                    violations.append(f"dispute {d['index']}: private key sent outside key-reveal branch")
                elif name == "alpha":
                    alpha = int(e["message"], 16)
                    if alpha < params.q and g_exp(params, alpha) == fx.board.image(d["index"]):
                        violations.append(f"dispute {d['index']}: alpha discloses the valid share")
        for m in report.get("membership", []):
            for e in m["transcript"]:
                if "verdict" not in e and e.get("field") not in _MEMBERSHIP_FIELDS:
                    violations.append(f"membership {m['index']}: unexpected field {e.get('field')!r}")
    return {"ok": not violations, "violations": violations}


# -- cost table and batch runs -----------------------------------------------


def op_count_report(report: Mapping[str, Any]) -> str:
    counts = report.get("op_counts", {})
    header = f"{'phase':<12}{'exp':>8}{'inv':>8}{'xor':>8}"
    lines = [header, "-" * len(header)]
    totals = dict.fromkeys(opcount.KINDS, 0)
    for phase in PHASES:
        row = counts.get(phase, {})
        for kind in opcount.KINDS:
            totals[kind] += row.get(kind, 0)
        lines.append(f"{phase:<12}" + "".join(f"{row.get(k, 0):>8}" for k in opcount.KINDS))
    lines.append("-" * len(header))
    lines.append(f"{'total':<12}" + "".join(f"{totals[k]:>8}" for k in opcount.KINDS))
    return "\n".join(lines)


def dump_report(report: Mapping[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


class ReportSink:
    """Thread-safe collector for reports from independent scenarios."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._reports: dict[str, dict[str, Any]] = {}

    def append(self, name: str, report: dict[str, Any]) -> None:
        with self._lock:
            self._reports[name] = report

    def snapshot(self) -> dict[str, dict[str, Any]]:
        with self._lock:
            return dict(sorted(self._reports.items()))


def run_batch(configs: Iterable[ScenarioConfig], workers: int = 4) -> dict[str, dict[str, Any]]:
    sink = ReportSink()

    def one(cfg: ScenarioConfig) -> None:
        sink.append(cfg.name, run_scenario(cfg))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(one, configs))
    return sink.snapshot()

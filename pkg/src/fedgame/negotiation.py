"""Synchronous multi-round negotiation over an in-process message bus.

Each round has two phases separated by a barrier. First every agent posts
its current quota for each partner as a :class:`PolicyOffer`. Then every
agent reads its own mailbox (offers addressed to it), takes one projected
gradient step on its own policy, and casts a :class:`ConvergenceVote`.
Agents never hold a reference to each other or to the full quota matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import rng_for
from .estimation import RegressionModel
from .game import RewardParams, policy_delta, project_policy, reward, step

log = logging.getLogger(__name__)

TRANSCRIPT_HEADER = """\
# fedgame negotiation transcript v1
# offer <round> <from> <to> <amount>
# vote <round> <platform> <delta> <converged:0|1>
# read <round> <reader> <from> <to>
"""


@dataclass(frozen=True)
class PolicyOffer:
    round: int
    sender: int
    recipient: int
    amount: float

    def __post_init__(self):
        if self.sender == self.recipient:
            raise ValueError("a platform cannot make an offer to itself")
        if not self.amount >= 0:
            raise ValueError(f"offer amount must be >= 0, got {self.amount}")


@dataclass(frozen=True)
class ConvergenceVote:
    round: int
    platform: int
    delta: float
    converged: bool


@dataclass(frozen=True)
class ReadRecord:
    round: int
    reader: int
    sender: int
    recipient: int


@dataclass
class RoundRecord:
    round: int
    quota_matrix: np.ndarray
    deltas: list
    rewards: list


@dataclass
class Transcript:
    n: int
    rounds: list = field(default_factory=list)
    offers: list = field(default_factory=list)
    votes: list = field(default_factory=list)
    reads: list = field(default_factory=list)

    def offers_in_round(self, t: int) -> list:
        return [o for o in self.offers if o.round == t]

    def to_text(self) -> str:
        lines = [TRANSCRIPT_HEADER.rstrip("\n"), f"platforms {self.n}"]
        by_round: dict = {}
        for kind, items in (("offer", self.offers), ("read", self.reads), ("vote", self.votes)):
            for item in items:
                by_round.setdefault(item.round, []).append((kind, item))
        order = {"offer": 0, "read": 1, "vote": 2}
        for t in sorted(by_round):
            for kind, item in sorted(by_round[t], key=lambda x: order[x[0]]):
                if kind == "offer":
                    lines.append(f"offer {item.round} {item.sender} {item.recipient} {item.amount!r}")
                elif kind == "read":
                    lines.append(f"read {item.round} {item.reader} {item.sender} {item.recipient}")
                else:
                    lines.append(f"vote {item.round} {item.platform} {item.delta!r} {int(item.converged)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        tr = cls(n=0)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                kind = parts[0]
                if kind == "platforms":
                    tr.n = int(parts[1])
                elif kind == "offer":
                    tr.offers.append(PolicyOffer(int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])))
                elif kind == "read":
                    tr.reads.append(ReadRecord(int(parts[1]), int(parts[2]), int(parts[3]), int(parts[4])))
                elif kind == "vote":
                    tr.votes.append(ConvergenceVote(int(parts[1]), int(parts[2]), float(parts[3]), parts[4] == "1"))
                else:
                    raise ValueError(f"unknown record {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"transcript line {lineno}: {exc}") from None
        return tr


class MessageBus:
    """Per-recipient mailboxes; every read is logged for the visibility audit."""

    def __init__(self, n: int, transcript: Transcript):
        self.n = n
        self.transcript = transcript
        self._mailboxes = [[] for _ in range(n)]
        self._posted: dict = {}

    def post(self, offer: PolicyOffer) -> None:
        self._mailboxes[offer.recipient].append(offer)
        self._posted[(offer.sender, offer.recipient)] = offer
        self.transcript.offers.append(offer)

    def collect(self, reader: int, round: int) -> list:
        offers = [o for o in self._mailboxes[reader] if o.round == round]
        for o in offers:
            self.transcript.reads.append(ReadRecord(round, reader, o.sender, o.recipient))
        return offers

    def request(self, reader: int, sender: int, recipient: int, round: int):
        """Ask for an arbitrary entry ``c_{sender,recipient}``. Logged, so misuse shows up in audits."""
        self.transcript.reads.append(ReadRecord(round, reader, sender, recipient))
        offer = self._posted.get((sender, recipient))
        return None if offer is None else offer.amount

    def vote(self, vote: ConvergenceVote) -> None:
        self.transcript.votes.append(vote)

    def end_round(self) -> None:
        self._mailboxes = [[] for _ in range(self.n)]


class Agent:
    """A platform in the negotiation; sees its own model and policy plus its mailbox."""

    def __init__(self, platform: int, model: RegressionModel, policy, budget: float, game, bus: MessageBus):
        self.platform = platform
        self.model = model
        self.policy = np.array(policy, dtype=float)
        self.budget = budget
        self.game = game
        self.params = RewardParams(game.gamma, game.epsilon)
        self._bus = bus
        self._n = len(self.policy)

    def send_offers(self, round: int) -> None:
        for j in range(self._n):
            if j != self.platform:
                self._bus.post(PolicyOffer(round, self.platform, j, float(self.policy[j])))

    def incoming(self, round: int) -> np.ndarray:
        amounts = np.zeros(self._n)
        for offer in self._bus.collect(self.platform, round):
            amounts[offer.sender] = offer.amount
        return amounts

    def update(self, round: int):
        received = self.incoming(round)
        current = reward(self.model, received, self.policy, self.params)
        new = step(self.model, received, self.policy, self.budget, self.game.eta, self.params)
        delta = policy_delta(self.policy, new, self.game.mu, self.game.norm, self.platform)
        self.policy = new
        self._bus.vote(ConvergenceVote(round, self.platform, delta.norm_value, delta.converged))
        return delta, current


@dataclass
class NegotiationOutcome:
    final_policies: np.ndarray
    rounds_used: int
    converged: bool
    transcript: Transcript

    def summary(self) -> dict:
        return {"rounds_used": self.rounds_used, "converged": self.converged}


def init_policies(scenario, mode: str = "uniform", seed: int = 0) -> np.ndarray:
    n = scenario.n_platforms
    budgets = scenario.effective_budgets
    matrix = np.zeros((n, n))
    if mode == "zero":
        return matrix
    if mode == "uniform":
        for i in range(n):
            matrix[i] = budgets[i] / (n - 1)
            matrix[i, i] = 0.0
        return matrix
    if mode == "random":
        rng = rng_for(seed, "init-policies")
        for i in range(n):
            raw = rng.uniform(0.0, max(budgets[i], 0.0), size=n)
            matrix[i] = project_policy(raw, budgets[i], owner=i)
        return matrix
    raise ValueError(f"unknown init mode {mode!r}")


def run_negotiation(scenario, models, init, agent_cls=Agent, order=None) -> NegotiationOutcome:
    """Negotiate until every platform's policy change is below ``mu``.

    ``order`` permutes the sequence in which agents run within a round; it
    exists to demonstrate that the outcome does not depend on it.
    """
    n = scenario.n_platforms
    if len(models) != n:
        raise ValueError(f"need one model per platform, got {len(models)} for {n}")
    game = scenario.game
    budgets = scenario.effective_budgets
    transcript = Transcript(n=n)
    bus = MessageBus(n, transcript)
    init = np.asarray(init, dtype=float)
    agents = [
        agent_cls(i, models[i], project_policy(init[i], budgets[i], owner=i), budgets[i], game, bus)
        for i in range(n)
    ]
    order = list(range(n)) if order is None else list(order)

    converged = False
    rounds_used = 0
    for t in range(1, game.max_rounds + 1):
        for agent in agents:
            agent.send_offers(t)
        results: dict = {}
        for i in order:
            results[i] = agents[i].update(t)
        bus.end_round()
        deltas = [results[i][0] for i in range(n)]
        transcript.rounds.append(
            RoundRecord(
                round=t,
                quota_matrix=np.array([a.policy for a in agents]),
                deltas=deltas,
                rewards=[results[i][1] for i in range(n)],
            )
        )
        rounds_used = t
        if all(d.converged for d in deltas):
            converged = True
            break

    final = np.array([a.policy for a in agents])
    if not converged:
        log.warning("negotiation stopped after %d rounds without converging", rounds_used)
    return NegotiationOutcome(final, rounds_used, converged, transcript)


@dataclass
class AuditReport:
    violations: list
    reads: int
    offers_per_round: dict

    @property
    def passed(self) -> bool:
        return not self.violations


def visibility_audit(transcript: Transcript) -> AuditReport:
    """Flag every read of an entry that is neither the reader's row nor addressed to it."""
    violations = [
        (r.reader, r.sender, r.recipient)
        for r in transcript.reads
        if r.sender != r.reader and r.recipient != r.reader
    ]
    per_round: dict = {}
    for o in transcript.offers:
        per_round[o.round] = per_round.get(o.round, 0) + 1
    return AuditReport(violations=violations, reads=len(transcript.reads), offers_per_round=per_round)


def replay(transcript: Transcript, models, budgets, game) -> list:
    """Recompute each round's policies from that round's offers alone.

    Returns the rounds whose recorded snapshot differs from the replayed one
    (bit-for-bit); an empty list means the run was synchronous.
    """
    params = RewardParams(game.gamma, game.epsilon)
    n = transcript.n
    by_round: dict = {}
    for o in transcript.offers:
        by_round.setdefault(o.round, []).append(o)
    mismatched = []
    for record in transcript.rounds:
        offered = np.zeros((n, n))
        for o in by_round.get(record.round, ()):
            offered[o.sender, o.recipient] = o.amount
        replayed = np.array([
            step(models[i], offered[:, i], offered[i], budgets[i], game.eta, params) for i in range(n)
        ])
        if not np.array_equal(replayed, record.quota_matrix):
            mismatched.append(record.round)
    return mismatched


def write_policy_csv(path, matrix) -> None:
    """N x N matrix; row i is platform i's offers (``c_{i,j}``)."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    with open(path, "w") as fh:
        fh.write(",".join(["platform"] + [f"to_{j}" for j in range(n)]) + "\n")
        for i in range(n):
            fh.write(",".join([str(i)] + [repr(float(x)) for x in matrix[i]]) + "\n")


def read_policy_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip()]
    return np.array([[float(x) for x in line.split(",")[1:]] for line in lines[1:]])


__all__ = [
    "Agent",
    "AuditReport",
    "ConvergenceVote",
    "MessageBus",
    "NegotiationOutcome",
    "PolicyOffer",
    "ReadRecord",
    "RoundRecord",
    "Transcript",
    "init_policies",
    "read_policy_csv",
    "replay",
    "run_negotiation",
    "visibility_audit",
    "write_policy_csv",
]

"""Weak deletion-compliance harness.

A data collector accepts Add/Del/Eval messages under a strict phase
discipline, an honest deletion requester stores two records and later
deletes one of them, and an adversarial environment drives everything and
tries to tell which record went away. The measured advantage is the
compliance analog of deletion-inference success.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .core import (
    AuditError,
    ClassDistribution,
    Dataset,
    Example,
    Oracle,
    Phase,
    Prediction,
    as_vector,
)
from .games import (
    GameConfig,
    TrialContext,
    _build_inference_attacker,
    _inference_attacker_kind,
    _project_challenge,
    wilson_interval,
)
from .learners import LearnerSpec, train
from .seeding import child_int, child_rng

WIRE_VERSION = "dcp1"


class BudgetViolationError(AuditError):
    """The environment sent more deletion requests than its allowance."""


class WireFormatError(AuditError):
    pass


@dataclass(frozen=True)
class AddMsg:
    example: Example


@dataclass(frozen=True)
class DelMsg:
    example: Example


@dataclass(frozen=True)
class EvalMsg:
    instance: object


@dataclass(frozen=True)
class Ack:
    pass


@dataclass(frozen=True)
class Refused:
    reason: str


@dataclass(frozen=True)
class EvalReply:
    prediction: Prediction


class DataCollector:
    """Batch-then-serve data collector: silent until ``capacity`` records
    arrive, then a seeded shuffle plus training opens the serving phase.

    Del removes one stored copy by value (lowest index) and retrains with
    fresh derived randomness; deleting an absent record still retrains on
    the unchanged set. Out-of-phase or over-budget messages are refused,
    never raised.
    """

    def __init__(self, spec: LearnerSpec, capacity: int, deletion_budget: int, seed: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.spec = spec
        self.capacity = capacity
        self.deletion_budget = deletion_budget
        self.seed = int(seed)
        self.stored: list[Example] = []
        self.model = None
        self.deletions_used = 0

    @property
    def phase(self) -> str:
        if self.model is None:
            return "collecting"
        return "post-deletion" if self.deletions_used else "serving"

    def _retrain(self) -> None:
        dataset = Dataset(self.stored, provenance="datcol")
        self.model = train(
            self.spec, dataset, child_rng(self.seed, "train", self.deletions_used)
        )

    def step(self, msg):
        if isinstance(msg, AddMsg):
            if self.model is not None:
                return Refused("add-after-collecting")
            self.stored.append(msg.example)
            if len(self.stored) == self.capacity:
                order = child_rng(self.seed, "permute").permutation(len(self.stored))
                self.stored = [self.stored[i] for i in order]
                self._retrain()
            return Ack()
        if isinstance(msg, EvalMsg):
            if self.model is None:
                return Refused("collecting-phase")
            return EvalReply(self.model.predict(msg.instance))
        if isinstance(msg, DelMsg):
            if self.model is None:
                return Refused("collecting-phase")
            if self.deletions_used >= self.deletion_budget:
                return Refused("deletion-budget")
            for i, stored in enumerate(self.stored):
                if stored == msg.example:
                    del self.stored[i]
                    break
            self.deletions_used += 1
            self._retrain()
            return Ack()
        return Refused("unknown-message")


def datcol_step(collector: DataCollector, msg):
    """Feed one protocol message to the collector and return its response."""
    return collector.step(msg)


class DeletionRequester:
    """Honest user that stores exactly two records and deletes record b."""

    def __init__(self, world_bit: int):
        if world_bit not in (0, 1):
            raise ValueError("world bit must be 0 or 1")
        self._world_bit = world_bit
        self._pair: tuple | None = None

    def add_pair(self, collector: DataCollector, e0: Example, e1: Example):
        self._pair = (e0, e1)
        r0 = collector.step(AddMsg(e0))
        r1 = collector.step(AddMsg(e1))
        return r0, r1

    def request_deletion(self, collector: DataCollector):
        if self._pair is None:
            raise AuditError("deletion requested before the pair was stored")
        return collector.step(DelMsg(self._pair[self._world_bit]))


class ComplianceSession:
    """One protocol execution: the environment's only handle on the world.

    The environment talks to the collector directly (its own deletions are
    budget-checked) and to the requester only through the two sanctioned
    triggers. The world bit stays inside the requester.
    """

    def __init__(self, collector: DataCollector, requester: DeletionRequester, env_del_budget: int):
        self.collector = collector
        self._requester = requester
        self._env_del_budget = env_del_budget
        self._env_dels = 0
        self.eval_count = 0
        self.deletion_step: int | None = None

    def send(self, msg):
        if isinstance(msg, DelMsg):
            self._env_dels += 1
            if self._env_dels > self._env_del_budget:
                raise BudgetViolationError(
                    f"environment exceeded its budget of {self._env_del_budget} deletions"
                )
        if isinstance(msg, EvalMsg):
            self.eval_count += 1
        return self.collector.step(msg)

    def requester_add(self, e0: Example, e1: Example):
        return self._requester.add_pair(self.collector, e0, e1)

    def requester_delete(self):
        self.deletion_step = self.eval_count
        return self._requester.request_deletion(self.collector)


@dataclass(frozen=True)
class AdvantageStats:
    sessions: int
    p_guess1_world1: float
    p_guess1_world0: float
    advantage: float
    ci_world1: tuple
    ci_world0: tuple
    se_combined: float
    outcomes: tuple  # (world_bit, guess) per session


def run_compliance(
    spec: LearnerSpec,
    env: Callable,
    n: int,
    k: int,
    sessions: int,
    seed: int,
) -> AdvantageStats:
    """Estimate the environment's distinguishing advantage.

    World bits alternate across sessions so both arms get equal counts;
    the advantage is |P(guess=1 | world 1) - P(guess=1 | world 0)| with a
    Wilson interval on each arm.
    """
    if sessions < 2:
        raise ValueError("need at least two sessions, one per world")
    outcomes = []
    for s in range(sessions):
        world = s % 2
        collector = DataCollector(spec, n, k, child_int(seed, "datcol", s))
        requester = DeletionRequester(world)
        session = ComplianceSession(collector, requester, env_del_budget=k - 1)
        guess = int(env(session, child_rng(seed, "env", s)))
        outcomes.append((world, guess))
    arm1 = [g for w, g in outcomes if w == 1]
    arm0 = [g for w, g in outcomes if w == 0]
    p1 = float(np.mean(arm1))
    p0 = float(np.mean(arm0))
    se = float(
        np.sqrt(p1 * (1 - p1) / len(arm1) + p0 * (1 - p0) / len(arm0))
    )
    return AdvantageStats(
        sessions=sessions,
        p_guess1_world1=p1,
        p_guess1_world0=p0,
        advantage=abs(p1 - p0),
        ci_world1=wilson_interval(int(sum(arm1)), len(arm1)),
        ci_world0=wilson_interval(int(sum(arm0)), len(arm0)),
        se_combined=se,
        outcomes=tuple(outcomes),
    )


class _SessionModel:
    """Model facade whose predictions travel through Eval messages."""

    def __init__(self, session: ComplianceSession):
        self._session = session

    def predict(self, x):
        reply = self._session.send(EvalMsg(x))
        if not isinstance(reply, EvalReply):
            raise AuditError(f"eval refused: {reply}")
        return reply.prediction

    def predict_batch(self, xs):
        return [self.predict(x) for x in xs]


def di_env_adapter(cfg: GameConfig) -> Callable:
    """Wrap a deletion-inference attacker as a compliance environment.

    The environment plays the Def-style challenger itself: it samples the
    dataset, routes the two challenge records through the requester, runs
    the attacker against Eval as its oracle, triggers the deletion at the
    attacker's phase switch, and outputs the attacker's bit.
    """
    attacker = _build_inference_attacker(cfg)
    kind = _inference_attacker_kind(cfg)

    def env(session: ComplianceSession, rng: np.random.Generator) -> int:
        data_seed = int(rng.integers(2**31))
        dataset = cfg.data.sample(data_seed)
        n = len(dataset)
        if n != session.collector.capacity:
            raise AuditError("dataset size must match the collector capacity")
        perm = rng.permutation(n)
        i, j = int(perm[0]), int(perm[1])
        for idx in range(n):
            if idx not in (i, j):
                session.send(AddMsg(dataset[idx]))
        session.requester_add(dataset[i], dataset[j])
        before = Oracle(_SessionModel(session), Phase.BEFORE_DELETION)

        def switch_phase():
            session.requester_delete()
            before.close()

        after = Oracle(_SessionModel(session), Phase.AFTER_DELETION, on_first_query=switch_phase)
        c0 = _project_challenge(dataset[i], kind)
        c1 = _project_challenge(dataset[j], kind)
        guess = attacker(c0, c1, before, after, rng, TrialContext(data_seed=data_seed))
        return guess.value

    return env


def coin_env(session: ComplianceSession, rng: np.random.Generator) -> int:
    """Null environment: ignores everything and flips a coin."""
    return int(rng.integers(2))


# -------------------------------------------------------------------------
# line-delimited wire encoding (version dcp1)


def _encode_instance(x) -> str:
    if isinstance(x, tuple):
        return "t:" + ",".join(str(int(t)) for t in x)
    v = np.asarray(x, dtype=float)
    return "v:" + ",".join(repr(float(f)) for f in v)


def _decode_instance(text: str):
    if ":" not in text:
        raise WireFormatError(f"bad instance field {text!r}")
    tag, body = text.split(":", 1)
    if tag == "t":
        return tuple(int(t) for t in body.split(",")) if body else ()
    if tag == "v":
        try:
            return as_vector([float(f) for f in body.split(",")])
        except ValueError as exc:
            raise WireFormatError(f"bad vector {body!r}") from None
    raise WireFormatError(f"unknown instance tag {tag!r}")


def _encode_label(y) -> str:
    if y is None:
        return "-"
    if isinstance(y, (int, np.integer)):
        return f"c:{int(y)}"
    return f"r:{float(y)!r}"


def _decode_label(text: str):
    if text == "-":
        return None
    tag, body = text.split(":", 1)
    if tag == "c":
        return int(body)
    if tag == "r":
        return float(body)
    raise WireFormatError(f"unknown label tag {tag!r}")


def _encode_example(e: Example) -> str:
    return f"{_encode_instance(e.x)};{_encode_label(e.y)}"


def _decode_example(text: str) -> Example:
    if ";" not in text:
        raise WireFormatError(f"bad example field {text!r}")
    xs, ys = text.rsplit(";", 1)
    return Example(_decode_instance(xs), _decode_label(ys))


def encode_message(msg) -> str:
    if isinstance(msg, AddMsg):
        return f"{WIRE_VERSION} add {_encode_example(msg.example)}"
    if isinstance(msg, DelMsg):
        return f"{WIRE_VERSION} del {_encode_example(msg.example)}"
    if isinstance(msg, EvalMsg):
        return f"{WIRE_VERSION} eval {_encode_instance(msg.instance)}"
    raise WireFormatError(f"cannot encode {type(msg).__name__}")


def decode_message(line: str):
    parts = line.strip().split(" ", 2)
    if len(parts) != 3 or parts[0] != WIRE_VERSION:
        raise WireFormatError(f"bad message line {line!r}")
    verb, payload = parts[1], parts[2]
    if verb == "add":
        return AddMsg(_decode_example(payload))
    if verb == "del":
        return DelMsg(_decode_example(payload))
    if verb == "eval":
        return EvalMsg(_decode_instance(payload))
    raise WireFormatError(f"unknown verb {verb!r}")


def encode_response(resp) -> str:
    if isinstance(resp, Ack):
        return f"{WIRE_VERSION} ack"
    if isinstance(resp, Refused):
        return f"{WIRE_VERSION} refused {resp.reason}"
    if isinstance(resp, EvalReply):
        pred = resp.prediction
        if isinstance(pred, ClassDistribution):
            body = ",".join(f"{c}={repr(float(p))}" for c, p in zip(pred.classes, pred.probs))
            return f"{WIRE_VERSION} pred d:{body}"
        return f"{WIRE_VERSION} pred r:{repr(float(pred))}"
    raise WireFormatError(f"cannot encode response {type(resp).__name__}")


def decode_response(line: str):
    parts = line.strip().split(" ", 2)
    if len(parts) < 2 or parts[0] != WIRE_VERSION:
        raise WireFormatError(f"bad response line {line!r}")
    if parts[1] == "ack":
        return Ack()
    if parts[1] == "refused":
        return Refused(parts[2] if len(parts) > 2 else "")
    if parts[1] == "pred":
        body = parts[2]
        tag, rest = body.split(":", 1)
        if tag == "r":
            return EvalReply(float(rest))
        if tag == "d":
            classes, probs = [], []
            for item in rest.split(","):
                c, p = item.split("=")
                classes.append(int(c))
                probs.append(float(p))
            return EvalReply(ClassDistribution(tuple(classes), np.asarray(probs)))
    raise WireFormatError(f"bad response line {line!r}")


def serve(lines: Iterable[str], collector: DataCollector) -> Iterator[str]:
    """Drive a collector over a line stream; malformed input is refused
    in-band rather than raised."""
    for line in lines:
        try:
            msg = decode_message(line)
        except WireFormatError as exc:
            yield encode_response(Refused(f"malformed:{exc}"))
            continue
        yield encode_response(collector.step(msg))

"""Deterministic round-based network simulator with Byzantine strategies.

Synchronous rounds over safe channels: sender identity is unforgeable,
messages sent in round r arrive at the start of round r+1 (the commander's
round-0 send is delivered before the lieutenants respond), and per-receiver
delivery order is ascending sender id.  Dishonest parties are driven by a
Strategy object whose only input is an AdversaryView: the controlled
parties' own lists, what they received, and (if the commander is
controlled) the inferred correlated positions.  Keeping strategies closed
over that view is the simulator's core soundness obligation.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agreement import (
    COMMANDER_ID,
    AgreementMessage,
    HandlerResult,
    PartyState,
    ProtocolParams,
    commander_initiate,
    finalize_decision,
    handle_commander_message,
    handle_round_message,
)
from .errors import ConfigError, InsufficientSupport
from .forgery import posterior_tables
from .lists import PositionSet, SymbolList, select_support_positions, serialize_list
from .qsd import DistributionOutcome


@dataclass(frozen=True)
class SendAction:
    sender: int
    receiver: int
    message: AgreementMessage


@dataclass
class StrategyContext:
    """Static per-run information handed to a strategy at reset."""

    controlled: tuple[int, ...]
    params: ProtocolParams
    own_lists: dict[int, SymbolList]
    inferred_q: Optional[PositionSet]  # only when the commander is controlled
    commander_order: Optional[int]  # only when the commander is controlled


@dataclass
class AdversaryView:
    """Everything a strategy may observe in one round."""

    round_index: int
    controlled: tuple[int, ...]
    own_lists: dict[int, SymbolList]
    delivered: dict[int, list[tuple[int, AgreementMessage]]]
    inferred_q: Optional[PositionSet]
    params: ProtocolParams
    rng: np.random.Generator


class Strategy:
    """Base strategy: controls the corrupt set, silent by default."""

    name = "silent"

    def reset(self, context: StrategyContext) -> None:
        self.context = context
        self.issued_values: tuple[int, ...] = ()

    def commander_actions(self, view: AdversaryView) -> list[SendAction]:
        """Round-0 sends, invoked only when the commander is controlled."""
        return []

    def round_actions(self, view: AdversaryView) -> list[SendAction]:
        """Sends emitted after this round's deliveries, arriving next round."""
        return []

    def _lieutenants(self) -> list[int]:
        return list(range(1, self.context.params.n))


@dataclass(frozen=True)
class AcceptEvent:
    round_index: int
    receiver: int
    sender: int
    value: int
    chain_length: int
    honest_attributable: Optional[bool]  # computed only for final-round accepts


@dataclass
class RunResult:
    decisions: dict[int, int]
    honest_values: dict[int, tuple[int, ...]]
    accept_events: list[AcceptEvent]
    events: Optional[list[dict]]
    support_failure: bool
    corrupt_set: tuple[int, ...]
    over_budget: bool
    issued_values: tuple[int, ...]


def serialize_events(events: Sequence[dict]) -> str:
    """Stable JSON Lines encoding: one event per line, sorted keys."""
    return "\n".join(
        json.dumps(e, sort_keys=True, separators=(",", ":")) for e in events
    )


def _msg_fields(msg: AgreementMessage) -> dict:
    return {
        "positions": list(msg.positions),
        "value": msg.value,
        "chain": [serialize_list(entry) for entry in msg.chain],
    }


def run_protocol(
    outcome: DistributionOutcome,
    params: ProtocolParams,
    corrupt_set: Sequence[int],
    strategy: Strategy,
    commander_order: int,
    rng: np.random.Generator,
    collect_trace: bool = False,
    total_rounds: Optional[int] = None,
) -> RunResult:
    """Execute one agreement run over a completed distribution.

    ``total_rounds`` overrides the m+1 relay rounds for negative-control
    scenarios; corrupt sets larger than m are permitted and flagged.
    """
    if outcome.aborted or outcome.lists is None:
        raise ConfigError("cannot run the protocol on an aborted distribution")
    n, m = params.n, params.m
    if len(outcome.lists) != n:
        raise ConfigError(f"distribution has {len(outcome.lists)} lists, params expect {n}")
    corrupt = tuple(sorted(set(int(c) for c in corrupt_set)))
    if corrupt and (corrupt[0] < 0 or corrupt[-1] >= n):
        raise ConfigError(f"corrupt ids must be in [0, {n}), got {corrupt}")
    rounds = m + 1 if total_rounds is None else total_rounds
    lists = outcome.lists
    lieutenants = list(range(1, n))
    honest_ids = [i for i in range(n) if i not in corrupt]
    states = {i: PartyState(i, lists[i]) for i in honest_ids}
    events: Optional[list[dict]] = [] if collect_trace else None
    accept_events: list[AcceptEvent] = []

    context = StrategyContext(
        controlled=corrupt,
        params=params,
        own_lists={i: lists[i] for i in corrupt},
        inferred_q=outcome.inferred_q if COMMANDER_ID in corrupt else None,
        commander_order=commander_order if COMMANDER_ID in corrupt else None,
    )
    strategy.reset(context)

    def make_view(round_index: int, delivered: dict) -> AdversaryView:
        return AdversaryView(
            round_index=round_index,
            controlled=corrupt,
            own_lists=context.own_lists,
            delivered={k: list(v) for k, v in delivered.items()},
            inferred_q=context.inferred_q,
            params=params,
            rng=rng,
        )

    def log(event: dict) -> None:
        if events is not None:
            events.append(event)

    def checked(actions: Sequence[SendAction]) -> list[SendAction]:
        out = []
        for act in actions:
            if act.sender not in corrupt:
                raise ConfigError(
                    f"strategy tried to send as party {act.sender}, "
                    f"which it does not control"
                )
            if act.receiver == act.sender or not 0 <= act.receiver < n:
                continue
            out.append(act)
        return out

    def honest_sublists(positions: PositionSet, exclude: int) -> set[SymbolList]:
        subs = set()
        for h in lieutenants:
            if h in corrupt or h == exclude:
                continue
            try:
                subs.add(tuple(lists[h][p - 1] for p in positions))
            except IndexError:
                pass
        return subs

    def fail_support() -> RunResult:
        log({"event": "support_failure", "round": 0})
        return RunResult(
            decisions={},
            honest_values={},
            accept_events=[],
            events=events,
            support_failure=True,
            corrupt_set=corrupt,
            over_budget=len(corrupt) > m,
            issued_values=(),
        )

    # Round 0, stage A: the commander's send.
    if COMMANDER_ID in corrupt:
        try:
            stage_sends = checked(strategy.commander_actions(make_view(0, {})))
        except InsufficientSupport:
            return fail_support()
        issued = tuple(getattr(strategy, "issued_values", ()))
    else:
        try:
            msg0 = commander_initiate(
                states[COMMANDER_ID], outcome.inferred_q, commander_order, params
            )
        except InsufficientSupport:
            return fail_support()
        stage_sends = [SendAction(COMMANDER_ID, t, msg0) for t in lieutenants]
        issued = (commander_order,)
    for act in stage_sends:
        log({"event": "send", "round": 0, "sender": act.sender,
             "receiver": act.receiver, **_msg_fields(act.message)})

    # Round 0, stage B: deliver the commander's messages, lieutenants respond.
    pending: list[tuple[int, SendAction]] = []  # (sequence, action) for next round
    seq = 0

    def queue_broadcast(sender: int, msg: AgreementMessage, round_index: int) -> None:
        nonlocal seq
        if round_index + 1 > rounds:
            return
        for t in lieutenants:
            if t != sender:
                pending.append((seq, SendAction(sender, t, msg)))
                seq += 1
                log({"event": "send", "round": round_index, "sender": sender,
                     "receiver": t, **_msg_fields(msg)})

    delivered_corrupt: dict[int, list] = defaultdict(list)
    stage_order = sorted(enumerate(stage_sends), key=lambda p: (p[1].receiver, p[0]))
    for _, act in stage_order:
        log({"event": "deliver", "round": 0, "sender": act.sender,
             "receiver": act.receiver, "value": act.message.value,
             "chain_len": len(act.message.chain)})
        if act.receiver in corrupt:
            delivered_corrupt[act.receiver].append((act.sender, act.message))
            continue
        if act.receiver == COMMANDER_ID:
            continue
        res = handle_commander_message(states[act.receiver], act.message, params)
        log({"event": "accept" if res.accepted else "reject", "round": 0,
             "receiver": act.receiver, "sender": act.sender,
             "value": act.message.value, "chain_len": res.chain_length,
             "reason": res.reason})
        if res.accepted:
            accept_events.append(AcceptEvent(0, act.receiver, act.sender,
                                             act.message.value, res.chain_length, None))
            if res.relay is not None:
                queue_broadcast(act.receiver, res.relay, 0)
    for act in checked(strategy.round_actions(make_view(0, delivered_corrupt))):
        if 1 <= rounds:
            pending.append((seq, act))
            seq += 1
            log({"event": "send", "round": 0, "sender": act.sender,
                 "receiver": act.receiver, **_msg_fields(act.message)})

    # Relay rounds.
    for r in range(1, rounds + 1):
        deliveries = sorted(pending, key=lambda p: (p[1].receiver, p[1].sender, p[0]))
        pending = []
        delivered_corrupt = defaultdict(list)
        senders_this_round = {act.sender for _, act in deliveries}
        for _, act in deliveries:
            log({"event": "deliver", "round": r, "sender": act.sender,
                 "receiver": act.receiver, "value": act.message.value,
                 "chain_len": len(act.message.chain)})
            if act.receiver in corrupt:
                delivered_corrupt[act.receiver].append((act.sender, act.message))
                continue
            if act.receiver == COMMANDER_ID:
                continue  # the commander neither relays nor collects values
            res = handle_round_message(states[act.receiver], act.message, r, params)
            log({"event": "accept" if res.accepted else "reject", "round": r,
                 "receiver": act.receiver, "sender": act.sender,
                 "value": act.message.value, "chain_len": res.chain_length,
                 "reason": res.reason})
            if res.accepted:
                attrib = None
                if r == m + 1:
                    subs = honest_sublists(act.message.positions, act.receiver)
                    attrib = any(entry in subs for entry in act.message.chain)
                accept_events.append(AcceptEvent(r, act.receiver, act.sender,
                                                 act.message.value, res.chain_length,
                                                 attrib))
                if res.relay is not None:
                    queue_broadcast(act.receiver, res.relay, r)
        if events is not None:
            for c in corrupt:
                if c not in senders_this_round:
                    log({"event": "absence", "round": r, "party": c})
        if r < rounds:
            for act in checked(strategy.round_actions(make_view(r, delivered_corrupt))):
                pending.append((seq, act))
                seq += 1
                log({"event": "send", "round": r, "sender": act.sender,
                     "receiver": act.receiver, **_msg_fields(act.message)})

    decisions: dict[int, int] = {}
    honest_values: dict[int, tuple[int, ...]] = {}
    for i in honest_ids:
        if i == COMMANDER_ID:
            decisions[i] = states[i].decision if states[i].decision is not None else commander_order
        else:
            decisions[i] = finalize_decision(states[i], params)
        honest_values[i] = tuple(states[i].accepted_values)
        log({"event": "decide", "party": i, "value": decisions[i],
             "accepted": list(honest_values[i])})
    return RunResult(
        decisions=decisions,
        honest_values=honest_values,
        accept_events=accept_events,
        events=events,
        support_failure=False,
        corrupt_set=corrupt,
        over_budget=len(corrupt) > m,
        issued_values=issued,
    )


# ---------------------------------------------------------------------------
# Strategy catalog
# ---------------------------------------------------------------------------


class HonestStrategy(Strategy):
    """Controlled parties that follow the protocol to the letter.

    Useful as a baseline: traces must be indistinguishable from the same
    parties being genuinely honest.
    """

    name = "honest"

    def reset(self, context: StrategyContext) -> None:
        super().reset(context)
        self.states = {
            i: PartyState(i, context.own_lists[i])
            for i in context.controlled
        }

    def commander_actions(self, view: AdversaryView) -> list[SendAction]:
        ctx = self.context
        msg = commander_initiate(
            self.states[COMMANDER_ID], ctx.inferred_q or (), ctx.commander_order, ctx.params
        )
        self.issued_values = (ctx.commander_order,)
        return [SendAction(COMMANDER_ID, t, msg) for t in self._lieutenants()]

    def round_actions(self, view: AdversaryView) -> list[SendAction]:
        out = []
        for party in view.controlled:
            if party == COMMANDER_ID:
                continue
            for sender, msg in view.delivered.get(party, []):
                if view.round_index == 0:
                    if sender != COMMANDER_ID:
                        continue
                    res = handle_commander_message(self.states[party], msg, view.params)
                else:
                    res = handle_round_message(
                        self.states[party], msg, view.round_index, view.params
                    )
                if res.accepted and res.relay is not None:
                    for t in self._lieutenants():
                        if t != party:
                            out.append(SendAction(party, t, res.relay))
        return out


class SilentStrategy(Strategy):
    """Crash/withhold faults: never sends anything."""

    name = "silent"


class EquivocatingCommanderStrategy(Strategy):
    """Dishonest commander sending two individually consistent orders.

    One subset of lieutenants receives v1, the complement v2; both messages
    use genuine correlated support, so each is accepted in isolation and
    only the relay rounds reconcile the honest parties' value sets.  With
    v2=None the complement receives nothing at all: the consistent-to-some,
    silent-to-others pattern.
    """

    name = "equivocating-commander"

    def __init__(self, v1: int, v2: Optional[int], subset: Optional[Sequence[int]] = None):
        self.v1, self.v2 = v1, v2
        self.subset = None if subset is None else tuple(subset)

    def commander_actions(self, view: AdversaryView) -> list[SendAction]:
        ctx = self.context
        own = ctx.own_lists[COMMANDER_ID]
        p1 = select_support_positions(own, ctx.inferred_q or (), self.v1,
                                      ctx.params.min_support)
        msg1 = AgreementMessage(p1, self.v1, ())
        msg2 = None
        if self.v2 is not None:
            p2 = select_support_positions(own, ctx.inferred_q or (), self.v2,
                                          ctx.params.min_support)
            msg2 = AgreementMessage(p2, self.v2, ())
        lieutenants = self._lieutenants()
        subset = self.subset
        if subset is None:
            subset = tuple(lieutenants[: (len(lieutenants) + 1) // 2])
        actions = []
        used_v2 = False
        for t in lieutenants:
            if t in subset:
                actions.append(SendAction(COMMANDER_ID, t, msg1))
            elif msg2 is not None:
                actions.append(SendAction(COMMANDER_ID, t, msg2))
                used_v2 = True
        self.issued_values = (self.v1, self.v2) if used_v2 else (self.v1,)
        return actions


class ForgedPCommanderStrategy(Strategy):
    """Dishonest commander whose support set ignores correlation.

    P is taken from every position carrying the value, correlated or not;
    lieutenants reject with overwhelming probability once any uncorrelated
    position collides with their own symbols.
    """

    name = "forged-p-commander"

    def __init__(self, value: int):
        self.value = value

    def commander_actions(self, view: AdversaryView) -> list[SendAction]:
        ctx = self.context
        own = ctx.own_lists[COMMANDER_ID]
        positions = tuple(k + 1 for k, s in enumerate(own) if s == self.value)
        if len(positions) < ctx.params.min_support:
            raise InsufficientSupport(
                f"value {self.value} appears only {len(positions)} times"
            )
        msg = AgreementMessage(positions, self.value, ())
        return [SendAction(COMMANDER_ID, t, msg) for t in self._lieutenants()]


class SelectiveRelayStrategy(Strategy):
    """Accepts like an honest party but relays to a chosen subset only.

    The attack shape that breaks weaker detectable-agreement protocols:
    consistent data to some parties, nothing to the rest.  Silent after its
    round-0 relay.
    """

    name = "selective-relay"

    def __init__(self, recipients: Optional[Sequence[int]] = None):
        self.recipients = None if recipients is None else tuple(recipients)

    def reset(self, context: StrategyContext) -> None:
        super().reset(context)
        self.states = {
            i: PartyState(i, context.own_lists[i])
            for i in context.controlled
            if i != COMMANDER_ID
        }

    def round_actions(self, view: AdversaryView) -> list[SendAction]:
        if view.round_index != 0:
            return []
        out = []
        for party in sorted(self.states):
            targets = self.recipients
            if targets is None:
                others = [t for t in self._lieutenants() if t != party]
                targets = tuple(others[: len(others) // 2])
            for sender, msg in view.delivered.get(party, []):
                if sender != COMMANDER_ID:
                    continue
                res = handle_commander_message(self.states[party], msg, view.params)
                if res.accepted and res.relay is not None:
                    for t in targets:
                        if t != party:
                            out.append(SendAction(party, t, res.relay))
        return out


class ForgingStrategy(Strategy):
    """Lieutenant that fabricates support for a value it never received.

    Position guessing uses the same posterior as the forgery oracle, but
    restricted to the information a lieutenant actually has: its own lists.
    Chains are padded with fabricated sublists that are mutually consistent
    and avoid the target value; only the receiver's unseen sublist can
    expose the forgery.
    """

    name = "forging"

    def __init__(self, target_value: Optional[int] = None):
        self.target_value = target_value

    def reset(self, context: StrategyContext) -> None:
        super().reset(context)
        params = context.params
        d = params.alphabet.size
        own_ids = [i for i in context.controlled if i != COMMANDER_ID]
        if not own_ids:
            self.sender = None
            return
        views = np.stack(
            [np.asarray(context.own_lists[i], dtype=np.int64) for i in own_ids], axis=1
        )
        _, post = posterior_tables(views, len(own_ids) + 1, d)
        avoid = 1.0 - post
        length = views.shape[0]
        support = params.min_support
        best = None
        values = range(d) if self.target_value is None else [self.target_value]
        for v in values:
            q = avoid[:, v]
            order = np.lexsort((np.arange(length), -q))[:support]
            score = float(np.prod(q[order]))
            if best is None or score > best[0]:
                best = (score, v, tuple(sorted(int(k) + 1 for k in order)))
        _, self.value, self.positions = best
        self.sender = own_ids[0]

    def _fabricated_chain(self, count: int) -> tuple[SymbolList, ...]:
        d = self.context.params.alphabet.size
        others = [x for x in range(d) if x != self.value]
        width = len(self.positions)
        return tuple(
            tuple(others[(j + k) % len(others)] for j in range(width))
            for k in range(count)
        )

    def round_actions(self, view: AdversaryView) -> list[SendAction]:
        r = view.round_index
        if self.sender is None or r > view.params.m:
            return []
        msg = AgreementMessage(self.positions, self.value, self._fabricated_chain(r + 1))
        return [
            SendAction(self.sender, t, msg)
            for t in self._lieutenants()
            if t not in view.controlled
        ]


def strategy_honest() -> Strategy:
    return HonestStrategy()


def strategy_silent() -> Strategy:
    return SilentStrategy()


def strategy_equivocating_commander(
    v1: int, v2: int, subset: Optional[Sequence[int]] = None
) -> Strategy:
    return EquivocatingCommanderStrategy(v1, v2, subset)


def strategy_selective_relay(recipients: Optional[Sequence[int]] = None) -> Strategy:
    return SelectiveRelayStrategy(recipients)


def strategy_forging_party(target_value: Optional[int] = None) -> Strategy:
    return ForgingStrategy(target_value)

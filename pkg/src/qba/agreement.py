"""The classical m+1-round agreement state machine over correlated lists.

Round 0 is the commander's send; lieutenants then relay for rounds 1..m+1.
A message carries the support positions P, the value v, and the chain of
sublists appended by successive relayers.  A lieutenant accepts a relayed
message at round r only if, after appending its own sublist, the pair is
consistent, the value is new, the chain holds exactly r+1 lists and P meets
the public support floor.  Malformed messages are never fatal: Byzantine
senders may emit anything, so structural failures count as inconsistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InsufficientSupport
from .lists import Alphabet, PositionSet, SymbolList, select_support_positions

COMMANDER_ID = 0

REASON_ACCEPTED = "accepted"
REASON_MALFORMED = "malformed"
REASON_WRONG_CHAIN_LENGTH = "wrong chain length"
REASON_DUPLICATE_VALUE = "duplicate value"
REASON_LOW_SUPPORT = "insufficient support"
REASON_INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class AgreementMessage:
    """The (P, (v, L)) triple relayed between parties."""

    positions: PositionSet
    value: int
    chain: tuple[SymbolList, ...] = ()

    def extended(self, sublist: SymbolList) -> "AgreementMessage":
        return AgreementMessage(self.positions, self.value, self.chain + (sublist,))


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    m: int
    alphabet: Alphabet
    min_support: int
    default_decision: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.m <= self.n - 1:
            raise ValueError(f"need 1 <= m <= n-1, got m={self.m}, n={self.n}")
        if self.alphabet.w < self.n:
            raise ValueError(f"need w >= n, got w={self.alphabet.w}, n={self.n}")
        if self.min_support < 1:
            raise ValueError(f"min_support must be >= 1, got {self.min_support}")


@dataclass
class PartyState:
    """One party's view of the agreement: its list, accepted values, decision."""

    party_id: int
    own_list: SymbolList
    honest: bool = True
    accepted_values: list[int] = field(default_factory=list)
    current_round: int = 0
    decision: Optional[int] = None
    _own_arr: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def role(self) -> str:
        return "commander" if self.party_id == COMMANDER_ID else "lieutenant"

    @property
    def own_arr(self) -> np.ndarray:
        if self._own_arr is None:
            self._own_arr = np.asarray(self.own_list, dtype=np.int64)
        return self._own_arr


@dataclass(frozen=True)
class HandlerResult:
    accepted: bool
    reason: str
    relay: Optional[AgreementMessage]
    chain_length: int  # chain length after appending the receiver's sublist


def validate_message(msg: AgreementMessage, alphabet: Alphabet) -> bool:
    """Structural checks only; False means the handlers treat it as inconsistent."""
    if not isinstance(msg.value, int) or not alphabet.contains(msg.value):
        return False
    prev = 0
    for p in msg.positions:
        if not isinstance(p, int) or p <= prev:
            return False
        prev = p
    width = len(msg.positions)
    for entry in msg.chain:
        if len(entry) != width:
            return False
        for s in entry:
            if not isinstance(s, int) or not alphabet.contains(s):
                return False
    return True


def commander_initiate(
    state: PartyState,
    inferred_q: PositionSet,
    value: int,
    params: ProtocolParams,
) -> AgreementMessage:
    """Build the commander's round-0 message and fix its own decision.

    Raises InsufficientSupport when the lists are too short to carry the
    order value at ``min_support`` correlated positions; that is a
    configuration failure, not a protocol outcome.
    """
    support = select_support_positions(
        state.own_list, inferred_q, value, params.min_support
    )
    state.decision = value
    return AgreementMessage(support, value, ())


def _append_and_check(
    state: PartyState, msg: AgreementMessage
) -> tuple[bool, np.ndarray]:
    """Append the receiver's sublist and run the consistency conditions.

    Returns (consistent, chain_with_own).  Mirrors ``lists.is_consistent``
    on the appended chain; traces are re-validated against the public
    predicate by the test suite.
    """
    pos = np.asarray(msg.positions, dtype=np.int64) - 1
    own_sub = state.own_arr[pos]
    if msg.chain:
        chain = np.vstack([np.asarray(msg.chain, dtype=np.int64), own_sub])
    else:
        chain = own_sub[None, :]
    if chain.shape[1] and np.any(chain == msg.value):
        return False, chain
    for i in range(chain.shape[0]):
        for j in range(i + 1, chain.shape[0]):
            if np.any(chain[i] == chain[j]):
                return False, chain
    return True, chain


def _structurally_ok(state: PartyState, msg: AgreementMessage, params: ProtocolParams) -> bool:
    if not validate_message(msg, params.alphabet):
        return False
    if msg.positions and msg.positions[-1] > len(state.own_list):
        return False
    return True


def handle_commander_message(
    state: PartyState, msg: AgreementMessage, params: ProtocolParams
) -> HandlerResult:
    """Process the commander's direct round-0 message.

    On acceptance the value is recorded and the extended message is returned
    for broadcast to the other lieutenants.
    """
    if not _structurally_ok(state, msg, params):
        return HandlerResult(False, REASON_MALFORMED, None, len(msg.chain) + 1)
    if len(msg.positions) < params.min_support:
        return HandlerResult(False, REASON_LOW_SUPPORT, None, len(msg.chain) + 1)
    if msg.value in state.accepted_values:
        return HandlerResult(False, REASON_DUPLICATE_VALUE, None, len(msg.chain) + 1)
    consistent, chain = _append_and_check(state, msg)
    if not consistent:
        return HandlerResult(False, REASON_INCONSISTENT, None, chain.shape[0])
    state.accepted_values.append(msg.value)
    relay = msg.extended(tuple(int(x) for x in chain[-1]))
    return HandlerResult(True, REASON_ACCEPTED, relay, chain.shape[0])


def handle_round_message(
    state: PartyState,
    msg: AgreementMessage,
    round_index: int,
    params: ProtocolParams,
) -> HandlerResult:
    """Process a relayed message at round ``round_index`` (1..m+1).

    Acceptance requires the appended chain to hold exactly round_index + 1
    lists; the extended message is relayed only through round m.
    """
    after = len(msg.chain) + 1
    if not _structurally_ok(state, msg, params):
        return HandlerResult(False, REASON_MALFORMED, None, after)
    if after != round_index + 1:
        return HandlerResult(False, REASON_WRONG_CHAIN_LENGTH, None, after)
    if msg.value in state.accepted_values:
        return HandlerResult(False, REASON_DUPLICATE_VALUE, None, after)
    if len(msg.positions) < params.min_support:
        return HandlerResult(False, REASON_LOW_SUPPORT, None, after)
    consistent, chain = _append_and_check(state, msg)
    if not consistent:
        return HandlerResult(False, REASON_INCONSISTENT, None, after)
    state.accepted_values.append(msg.value)
    relay = None
    if round_index <= params.m:
        relay = msg.extended(tuple(int(x) for x in chain[-1]))
    return HandlerResult(True, REASON_ACCEPTED, relay, after)


def finalize_decision(state: PartyState, params: ProtocolParams) -> int:
    """A singleton value set decides its element, anything else the default."""
    if len(state.accepted_values) == 1:
        state.decision = state.accepted_values[0]
    else:
        state.decision = params.default_decision
    return state.decision

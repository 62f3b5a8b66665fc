"""Symbol-list algebra: correlated sets, sublists, and the consistency predicate.

Symbols are integers in W = {0, ..., w}.  Positions are 1-based in every
public interface; lists are plain tuples of ints.  List serialization (used
in traces) is decimal integers joined by commas, in position order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInput, IndexOutOfRange, InsufficientSupport

SymbolList = tuple[int, ...]
PositionSet = tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    """Symbol alphabet W = {0, 1, ..., w}."""

    w: int

    def __post_init__(self) -> None:
        if self.w < 1:
            raise ValueError(f"alphabet requires w >= 1, got {self.w}")

    @property
    def size(self) -> int:
        return self.w + 1

    def contains(self, symbol: int) -> bool:
        return 0 <= symbol <= self.w


def as_positions(positions: Iterable[int]) -> PositionSet:
    """Normalize to a sorted tuple of distinct 1-based positions."""
    pos = tuple(sorted(set(int(p) for p in positions)))
    if pos and pos[0] < 1:
        raise IndexOutOfRange(f"positions are 1-based, got {pos[0]}")
    return pos


def serialize_list(symbols: Sequence[int]) -> str:
    return ",".join(str(int(s)) for s in symbols)


def parse_list(text: str) -> SymbolList:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(part) for part in text.split(","))


@dataclass(frozen=True)
class QCorrelatedSet:
    """A bundle of equal-length lists plus the correlated positions Q."""

    lists: tuple[SymbolList, ...]
    q_positions: PositionSet
    alphabet: Alphabet

    def is_valid(self) -> bool:
        return is_q_correlated(self.lists, self.q_positions, self.alphabet)


@dataclass(frozen=True)
class ConsistencyCandidate:
    """A value v together with the set of lists accompanying it in a message."""

    value: int
    lists: tuple[SymbolList, ...]


def is_q_correlated(
    lists: Sequence[SymbolList], q_positions: Sequence[int], alphabet: Alphabet
) -> bool:
    """True iff the lists have equal length and differ pairwise at every position in Q.

    Element randomness is a property of the generator, checked statistically
    elsewhere; it is not a per-instance condition here.
    """
    if len(lists) == 0:
        raise EmptyInput("need at least one list")
    positions = as_positions(q_positions)
    shortest = min(len(lst) for lst in lists)
    if positions and positions[-1] > shortest:
        raise IndexOutOfRange(
            f"position {positions[-1]} exceeds shortest list length {shortest}"
        )
    lengths = {len(lst) for lst in lists}
    if len(lengths) != 1:
        return False
    if not positions:
        return True
    arr = np.asarray(lists, dtype=np.int64)
    idx = np.asarray(positions, dtype=np.int64) - 1
    cols = arr[:, idx]
    for i in range(len(lists)):
        for j in range(i + 1, len(lists)):
            if np.any(cols[i] == cols[j]):
                return False
    return True


def extract_sublist(symbols: SymbolList, positions: Sequence[int]) -> SymbolList:
    """Return L^R: the elements at the given positions, in ascending position order."""
    pos = as_positions(positions)
    if pos and pos[-1] > len(symbols):
        raise IndexOutOfRange(f"position {pos[-1]} exceeds list length {len(symbols)}")
    return tuple(symbols[p - 1] for p in pos)


def is_consistent(value: int, lists: Sequence[SymbolList]) -> bool:
    """Consistency predicate for a pair (v, L).

    Holds iff all lists have equal length, no element equals v, and every
    pair of lists differs at every position.  An empty set of lists is
    vacuously consistent.  Total: never raises.
    """
    if len(lists) == 0:
        return True
    lengths = {len(lst) for lst in lists}
    if len(lengths) != 1:
        return False
    if lengths == {0}:
        return True
    arr = np.asarray(lists, dtype=np.int64)
    if np.any(arr == value):
        return False
    for i in range(len(lists)):
        for j in range(i + 1, len(lists)):
            if np.any(arr[i] == arr[j]):
                return False
    return True


def select_support_positions(
    commander_list: SymbolList,
    q_positions: Sequence[int],
    value: int,
    min_support: int,
) -> PositionSet:
    """Correlated positions of the commander's list that carry the value.

    Raises InsufficientSupport when fewer than ``min_support`` qualify,
    which signals that the lists are too short for this order value.
    """
    pos = as_positions(q_positions)
    if pos and pos[-1] > len(commander_list):
        raise IndexOutOfRange(
            f"position {pos[-1]} exceeds list length {len(commander_list)}"
        )
    support = tuple(p for p in pos if commander_list[p - 1] == value)
    if len(support) < min_support:
        raise InsufficientSupport(
            f"value {value} appears at {len(support)} correlated positions, "
            f"need {min_support}"
        )
    return support


def property1_check(qset: QCorrelatedSet, sender_index: int, value: int) -> bool:
    """Test oracle: the sender's support positions always yield a consistent pair.

    ``sender_index`` is a 0-based index into ``qset.lists``.  Must return
    True for every valid QCorrelatedSet; used to validate generators.
    """
    support = select_support_positions(
        qset.lists[sender_index], qset.q_positions, value, min_support=1
    )
    others = tuple(
        extract_sublist(lst, support)
        for i, lst in enumerate(qset.lists)
        if i != sender_index
    )
    return is_consistent(value, others)

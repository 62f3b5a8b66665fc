"""Simulated quantum source device: list distribution with decoy checking.

Party 0 is the commander.  For each list position the device flips a coin
(``correlation_prob``) between the all-distinct entangled state (type 3) and
the uncorrelated states (types 1 and 2), delivers one particle per
lieutenant and a pair to the commander, and intersperses decoy particles on
every channel.  All quantum behavior is reduced to sampling the exact
computational-basis measurement distributions; decoy statistics are exact
single-particle physics.

Channel adversaries see one transiting particle at a time and nothing else.
Their only degree of freedom in this model is the measurement basis chosen
for the intercepted particle: measuring in the particle's own basis is
non-disturbing, measuring in the conjugate basis randomizes the outcome the
legitimate receiver observes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .lists import Alphabet, PositionSet, QCorrelatedSet, SymbolList
from .statevector import sample_type3_outcome

COMPUTATIONAL = "computational"
FOURIER = "fourier"


@dataclass(frozen=True)
class DistributionConfig:
    n: int
    w: int
    list_length: int
    correlation_prob: float = 0.5
    decoy_count: Optional[int] = None  # None -> one decoy per list position
    seed: Optional[int] = None
    decoys_correlated_only: bool = False
    record_decoys: bool = True

    def __post_init__(self) -> None:
        problems = []
        if self.n < 2:
            problems.append(f"need at least 2 parties, got {self.n}")
        if self.w < self.n:
            problems.append(f"alphabet requires w >= n, got w={self.w}, n={self.n}")
        if not 0.0 < self.correlation_prob < 1.0:
            problems.append(f"correlation_prob must be in (0,1), got {self.correlation_prob}")
        if self.list_length < 1:
            problems.append(f"list_length must be >= 1, got {self.list_length}")
        if self.decoy_count is not None and self.decoy_count < 0:
            problems.append(f"decoy_count must be >= 0, got {self.decoy_count}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.w)

    @property
    def decoys_per_channel(self) -> int:
        return self.list_length if self.decoy_count is None else self.decoy_count


@dataclass
class DecoyRecord:
    channel: int
    insertion_index: int
    basis: str
    prepared_symbol: int
    measured_symbol: int


@dataclass
class DistributionOutcome:
    lists: Optional[tuple[SymbolList, ...]]
    true_q: PositionSet
    commander_pairs: tuple[tuple[int, int], ...]
    inferred_q: Optional[PositionSet]
    aborted: bool
    abort_reason: Optional[str]
    decoys_checked: int
    decoy_mismatches: int
    decoy_records: Optional[list[DecoyRecord]] = field(default=None, repr=False)

    def as_qcorrelated(self, alphabet: Alphabet) -> QCorrelatedSet:
        if self.lists is None:
            raise ValueError("distribution aborted, no lists")
        return QCorrelatedSet(self.lists, self.true_q, alphabet)


class ChannelAdversary:
    """Per-particle tap on one or more quantum channels.

    ``fourier_prob`` is the probability the adversary measures an
    intercepted particle in the Fourier basis (0.0 = always computational).
    ``targets`` is the set of attacked party channels; None attacks all.
    """

    name = "identity"
    fourier_prob: Optional[float] = None  # None -> passthrough

    def __init__(self, targets: Optional[Sequence[int]] = None):
        self.targets = None if targets is None else tuple(sorted(set(targets)))

    def attacks(self, channel: int) -> bool:
        if self.fourier_prob is None:
            return False
        return self.targets is None or channel in self.targets

    def choose_basis(self, rng: np.random.Generator) -> Optional[str]:
        if self.fourier_prob is None:
            return None
        return FOURIER if rng.random() < self.fourier_prob else COMPUTATIONAL


class IdentityChannel(ChannelAdversary):
    name = "identity"
    fourier_prob = None


class InterceptResendComputational(ChannelAdversary):
    name = "intercept-resend-computational"
    fourier_prob = 0.0


class InterceptResendRandomBasis(ChannelAdversary):
    name = "intercept-resend-random-basis"
    fourier_prob = 0.5


CHANNEL_ADVERSARIES = {
    cls.name: cls
    for cls in (IdentityChannel, InterceptResendComputational, InterceptResendRandomBasis)
}


def sample_uncorrelated_position(
    n: int, alphabet: Alphabet, rng: np.random.Generator
) -> tuple[tuple[int, ...], tuple[int, int]]:
    """One uncorrelated position: i.i.d. uniform lieutenants, equal commander pair."""
    d = alphabet.size
    a = int(rng.integers(0, d))
    lieutenants = rng.integers(0, d, size=n - 1)
    return (a, *(int(x) for x in lieutenants)), (a, a)


def sample_correlated_position(
    n: int, alphabet: Alphabet, rng: np.random.Generator
) -> tuple[tuple[int, ...], tuple[int, int]]:
    """One correlated position via the type-3 state with distinct offsets.

    Draws the offsets as a fresh permutation, samples the joint outcome, and
    delivers n+1 of the w+1 particles through a uniformly random injection
    (two to the commander).  All delivered symbols are pairwise distinct.
    """
    d = alphabet.size
    if alphabet.w < n:
        raise ConfigError(f"correlated sampling requires w >= n, got w={alphabet.w}")
    offsets = tuple(int(x) for x in rng.permutation(np.arange(1, d)))
    outcome = sample_type3_outcome(d, offsets, rng)
    sel = rng.permutation(d)[: n + 1]
    delivered = [outcome[int(i)] for i in sel]
    pair = (delivered[0], delivered[1])
    return (delivered[0], *delivered[2:]), pair


def _batch_correlated(
    count: int, n: int, d: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized equivalent of ``sample_correlated_position``.

    The composition (uniform shift, distinct offsets, random injection)
    makes the delivered symbols a uniform ordered injection into the
    alphabet, which an argsort of uniform draws produces directly.
    """
    perms = np.argsort(rng.random((count, d)), axis=1)
    delivered = perms[:, : n + 1]
    pairs = delivered[:, :2]
    symbols = np.concatenate([delivered[:, :1], delivered[:, 2:]], axis=1)
    return symbols, pairs


def _batch_uncorrelated(
    count: int, n: int, d: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    a = rng.integers(0, d, size=count)
    lieutenants = rng.integers(0, d, size=(count, n - 1))
    symbols = np.concatenate([a[:, None], lieutenants], axis=1)
    pairs = np.stack([a, a], axis=1)
    return symbols, pairs


def infer_correlated_positions(
    commander_pairs: Sequence[tuple[int, int]]
) -> PositionSet:
    """Positions whose commander pair carries two different symbols (1-based)."""
    return tuple(
        k + 1 for k, (first, second) in enumerate(commander_pairs) if first != second
    )


def check_decoys(records: Sequence[DecoyRecord]) -> bool:
    """True iff every decoy measured back to its prepared symbol."""
    return all(r.measured_symbol == r.prepared_symbol for r in records)


def distribute(
    config: DistributionConfig,
    adversary: Optional[ChannelAdversary] = None,
    rng: Optional[np.random.Generator] = None,
) -> DistributionOutcome:
    """Run the full list-distribution procedure once.

    Tampering detected by the decoy check yields a normal aborted outcome,
    never an exception.  Deterministic for a given (config, rng state,
    adversary); the draw order is: correlation pattern, correlated blocks,
    uncorrelated blocks, list tampering per attacked channel (ascending),
    then decoys per channel (ascending).
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n, d, length = config.n, config.w + 1, config.list_length
    if adversary is None:
        adversary = IdentityChannel()

    pattern = rng.random(length) < config.correlation_prob
    corr_idx = np.nonzero(pattern)[0]
    unc_idx = np.nonzero(~pattern)[0]

    lists = np.empty((n, length), dtype=np.int64)
    pairs = np.empty((length, 2), dtype=np.int64)
    if corr_idx.size:
        symbols, cpairs = _batch_correlated(corr_idx.size, n, d, rng)
        lists[:, corr_idx] = symbols.T
        pairs[corr_idx] = cpairs
    if unc_idx.size:
        symbols, upairs = _batch_uncorrelated(unc_idx.size, n, d, rng)
        lists[:, unc_idx] = symbols.T
        pairs[unc_idx] = upairs

    # Fourier-basis interception randomizes the receiver's outcome; the
    # commander channel carries two particles per position.
    fp = adversary.fourier_prob
    for channel in range(n):
        if not adversary.attacks(channel) or fp is None or fp == 0.0:
            continue
        if channel == 0:
            for col in (0, 1):
                hit = rng.random(length) < fp
                pairs[hit, col] = rng.integers(0, d, size=int(hit.sum()))
            lists[0] = pairs[:, 0]
        else:
            hit = rng.random(length) < fp
            lists[channel, hit] = rng.integers(0, d, size=int(hit.sum()))

    per_channel = config.decoys_per_channel
    stream_len = length + per_channel
    mismatches = 0
    checked = 0
    records: Optional[list[DecoyRecord]] = [] if config.record_decoys else None
    for channel in range(n):
        if per_channel == 0:
            continue
        basis = rng.integers(0, 2, size=per_channel)  # 0=computational, 1=fourier
        prepared = rng.integers(0, d, size=per_channel)
        if config.decoys_correlated_only and corr_idx.size:
            insertion = corr_idx[rng.integers(0, corr_idx.size, size=per_channel)]
        else:
            insertion = rng.integers(0, stream_len, size=per_channel)
        if adversary.attacks(channel) and fp is not None:
            adv_fourier = rng.random(per_channel) < fp
            wrong_basis = adv_fourier != (basis == 1)
            replacement = rng.integers(0, d, size=per_channel)
            measured = np.where(wrong_basis, replacement, prepared)
        else:
            measured = prepared
        checked += per_channel
        mismatches += int(np.sum(measured != prepared))
        if records is not None:
            for i in range(per_channel):
                records.append(
                    DecoyRecord(
                        channel=channel,
                        insertion_index=int(insertion[i]),
                        basis=FOURIER if basis[i] else COMPUTATIONAL,
                        prepared_symbol=int(prepared[i]),
                        measured_symbol=int(measured[i]),
                    )
                )

    true_q = tuple(int(k) + 1 for k in corr_idx)
    pair_tuples = tuple((int(a), int(b)) for a, b in pairs)
    if mismatches > 0:
        return DistributionOutcome(
            lists=None,
            true_q=true_q,
            commander_pairs=pair_tuples,
            inferred_q=None,
            aborted=True,
            abort_reason="decoy mismatch",
            decoys_checked=checked,
            decoy_mismatches=mismatches,
            decoy_records=records,
        )
    return DistributionOutcome(
        lists=tuple(tuple(int(x) for x in row) for row in lists),
        true_q=true_q,
        commander_pairs=pair_tuples,
        inferred_q=infer_correlated_positions(pair_tuples),
        aborted=False,
        abort_reason=None,
        decoys_checked=checked,
        decoy_mismatches=mismatches,
        decoy_records=records,
    )

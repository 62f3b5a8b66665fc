"""Exact qudit statevectors and Born-rule oracles for the three particle types.

Dense amplitude vectors over q subsystems of dimension d; measurement is
always in the computational basis unless a Fourier-basis decoy is involved.
These functions are the ground truth the samplers in :mod:`qba.qsd` are
validated against.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import TooLarge

MAX_DENSE_AMPLITUDES = 1_000_000
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class QuditState:
    """Dense state of ``num_subsystems`` qudits of dimension ``dimension``."""

    dimension: int
    num_subsystems: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        expected = self.dimension**self.num_subsystems
        if self.amplitudes.shape != (expected,):
            raise ValueError(
                f"expected {expected} amplitudes, got {self.amplitudes.shape}"
            )
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm}")


def build_type3_statevector(
    d: int, q: int, offsets: tuple[int, ...], phase_s: int = 0
) -> QuditState:
    """The all-distinct entangled state over q qudits.

    Amplitude exp(2*pi*i*j*s/d)/sqrt(d) at basis index
    (j, j+offsets[0], ..., j+offsets[q-2]) mod d, zero elsewhere.
    """
    if len(offsets) != q - 1:
        raise ValueError(f"need {q - 1} offsets for {q} subsystems")
    if d**q > MAX_DENSE_AMPLITUDES:
        raise TooLarge(f"dense vector of {d**q} amplitudes exceeds the bound")
    amp = np.zeros(d**q, dtype=np.complex128)
    strides = [d**k for k in range(q - 1, -1, -1)]
    for j in range(d):
        symbols = [j] + [(j + off) % d for off in offsets]
        flat = sum(s * stride for s, stride in zip(symbols, strides))
        amp[flat] = np.exp(2j * np.pi * j * phase_s / d) / np.sqrt(d)
    return QuditState(d, q, amp)


def uniform_state(d: int) -> QuditState:
    """Type-1 single-qudit state: uniform superposition over the alphabet."""
    amp = np.full(d, 1.0 / np.sqrt(d), dtype=np.complex128)
    return QuditState(d, 1, amp)


def identical_pair_state(d: int) -> QuditState:
    """Type-2 two-qudit state whose measurements always agree."""
    return build_type3_statevector(d, 2, (0,), 0)


def fourier_state(d: int, symbol: int) -> np.ndarray:
    """Amplitudes of F|symbol> in the computational basis."""
    k = np.arange(d)
    return np.exp(2j * np.pi * k * symbol / d) / np.sqrt(d)


def measurement_distribution(state: QuditState) -> dict[tuple[int, ...], float]:
    """Exact Born-rule probabilities per computational-basis outcome tuple.

    Outcomes with probability below 1e-15 are dropped.
    """
    d, q = state.dimension, state.num_subsystems
    probs = np.abs(state.amplitudes) ** 2
    out: dict[tuple[int, ...], float] = {}
    support = np.nonzero(probs > 1e-15)[0]
    for flat in support:
        digits = []
        rem = int(flat)
        for _ in range(q):
            digits.append(rem % d)
            rem //= d
        out[tuple(reversed(digits))] = float(probs[flat])
    return out


def decoy_match_probability(d: int, prepared_basis: str, intercept_basis: str) -> float:
    """Probability an intercept-resent decoy still matches its prepared symbol.

    The decoy is prepared as a basis state of ``prepared_basis``; the
    eavesdropper measures in ``intercept_basis`` and resends the observed
    eigenstate; the checker measures in the preparation basis.  Computed by
    summing over intermediate outcomes with exact amplitudes, averaged over
    the prepared symbol (the answer is symbol-independent).
    """
    comp = np.eye(d, dtype=np.complex128)
    four = np.stack([fourier_state(d, a) for a in range(d)])
    bases = {"computational": comp, "fourier": four}
    prep = bases[prepared_basis]
    mid = bases[intercept_basis]
    total = 0.0
    for a in range(d):
        psi = prep[a]
        for b in range(d):
            p_mid = abs(np.vdot(mid[b], psi)) ** 2
            p_back = abs(np.vdot(prep[a], mid[b])) ** 2
            total += p_mid * p_back
    return total / d


def sample_type3_outcome(
    d: int, offsets: tuple[int, ...], rng: np.random.Generator, size: int | None = None
):
    """Sample computational-basis outcomes of the type-3 state.

    Returns a tuple of length ``len(offsets) + 1`` (or an array of shape
    ``(size, q)``).  The phase parameter never affects computational-basis
    statistics, so it is not a parameter here.
    """
    offs = np.concatenate([[0], np.asarray(offsets, dtype=np.int64)])
    if size is None:
        j = int(rng.integers(0, d))
        return tuple(int((j + off) % d) for off in offs)
    j = rng.integers(0, d, size=size)
    return (j[:, None] + offs[None, :]) % d


def total_variation_distance(
    empirical: dict[tuple[int, ...], float], exact: dict[tuple[int, ...], float]
) -> float:
    keys = set(empirical) | set(exact)
    return 0.5 * sum(abs(empirical.get(k, 0.0) - exact.get(k, 0.0)) for k in keys)

"""Forgery adversary model and its exact enumeration oracle.

The adversary is a non-commander party that knows every list except the
receiver's and does not know which positions are correlated.  It forges a
message (P, (v, [])) so that the receiver, after appending its own sublist
at P, passes the consistency check.  Position randomness factorizes, so the
receiver's unseen symbol has an independent per-position posterior given the
adversary's view; the optimal forgery takes, for the best value v, the
``support_size`` positions where the posterior probability of avoiding v is
highest.

``forgery_oracle`` computes the exact success probability of that optimal
strategy by enumerating every adversary view; ``best_forgery`` is the same
decision rule applied to one concrete view, shared with the Monte Carlo
experiments so that sampling and enumeration measure the same adversary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooLarge
from .lists import Alphabet, PositionSet, SymbolList

DEFAULT_MAX_ENUM_CELLS = 50_000_000


def _falling_factorial(d: int, n: int) -> int:
    out = 1
    for k in range(n):
        out *= d - k
    return out


def posterior_tables(
    views: np.ndarray, n: int, d: int, correlation_prob: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Per-view probabilities for the receiver's hidden symbol.

    ``views`` has shape (..., n-1): the symbols the adversary sees at one
    position (the commander's plus the other lieutenants').  Returns
    ``(view_prob, posterior)`` where ``view_prob[...]`` is the probability
    of that view occurring at a position and ``posterior[..., x]`` is
    P(hidden symbol = x | view).

    The position model matches the source device: with probability
    ``correlation_prob`` the n list symbols are a uniform injection into
    {0..d-1}; otherwise they are i.i.d. uniform.
    """
    views = np.asarray(views, dtype=np.int64)
    total_inj = _falling_factorial(d, n)
    if n - 1 >= 2:
        sorted_v = np.sort(views, axis=-1)
        distinct = np.all(np.diff(sorted_v, axis=-1) != 0, axis=-1)
    else:
        distinct = np.ones(views.shape[:-1], dtype=bool)
    present = np.any(
        views[..., :, None] == np.arange(d)[(None,) * views.ndim], axis=-2
    )
    corr = (distinct[..., None] & ~present).astype(np.float64)
    corr *= correlation_prob / total_inj
    unc = (1.0 - correlation_prob) * (1.0 / d) ** n
    joint = corr + unc
    view_prob = joint.sum(axis=-1)
    posterior = joint / view_prob[..., None]
    return view_prob, posterior


@dataclass(frozen=True)
class ForgeryChoice:
    positions: PositionSet
    value: int
    predicted_success: float


def best_forgery(
    view_lists: tuple[SymbolList, ...],
    n: int,
    d: int,
    support_size: int,
    correlation_prob: float = 0.5,
) -> ForgeryChoice:
    """Optimal (P, v) for one concrete adversary view.

    ``view_lists`` are the n-1 full lists visible to the adversary.
    Deterministic: ties break toward the smaller value and the earlier
    positions.
    """
    length = len(view_lists[0])
    if support_size <= 0 or support_size > length:
        return ForgeryChoice((), 0, 0.0)
    views = np.stack([np.asarray(lst, dtype=np.int64) for lst in view_lists], axis=1)
    _, post = posterior_tables(views, n, d, correlation_prob)
    avoid = 1.0 - post  # avoid[k, v] = P(hidden symbol at k+1 != v | view)
    best_value = 0
    best_score = -1.0
    best_positions: tuple[int, ...] = ()
    for v in range(d):
        q = avoid[:, v]
        # stable selection: highest q first, earlier position wins ties
        order = np.lexsort((np.arange(length), -q))[:support_size]
        score = float(np.prod(q[order]))
        if score > best_score + 1e-15:
            best_score = score
            best_value = v
            best_positions = tuple(sorted(int(k) + 1 for k in order))
    return ForgeryChoice(best_positions, best_value, best_score)


def forgery_oracle(
    n: int,
    alphabet: Alphabet,
    list_length: int,
    support_size: int,
    correlation_prob: float = 0.5,
    max_enum_cells: int = DEFAULT_MAX_ENUM_CELLS,
) -> float:
    """Exact success probability of the optimal forgery, by full enumeration.

    Enumerates every adversary view (each position takes one of d^(n-1)
    values, independently) and weights the view-conditional optimum by the
    view probability.  Raises TooLarge when the enumeration would exceed
    ``max_enum_cells`` scored cells; intended for n <= 4, w <= 4 and short
    lists, plus the single-position case used by calibration.
    """
    d = alphabet.size
    if support_size <= 0 or support_size > list_length:
        return 0.0
    n_views = d ** (n - 1)
    n_combos = n_views**list_length
    if n_combos * list_length * d > max_enum_cells:
        raise TooLarge(
            f"{n_combos} view combinations ({list_length} positions, "
            f"{n_views} views each) exceed the enumeration bound"
        )
    base_views = np.indices((d,) * (n - 1)).reshape(n - 1, -1).T  # (V, n-1)
    view_prob, post = posterior_tables(base_views, n, d, correlation_prob)
    avoid = 1.0 - post  # (V, d)

    combos = np.indices((n_views,) * list_length).reshape(list_length, -1).T
    total = 0.0
    chunk = 200_000
    for start in range(0, combos.shape[0], chunk):
        idx = combos[start : start + chunk]  # (N, L)
        weight = np.prod(view_prob[idx], axis=1)
        best = np.zeros(idx.shape[0])
        for v in range(d):
            q = avoid[idx, v]  # (N, L)
            if support_size < list_length:
                q = np.sort(q, axis=1)[:, -support_size:]
            score = np.prod(q, axis=1)
            np.maximum(best, score, out=best)
        total += float(np.dot(weight, best))
    return total


def per_position_pass_probability(
    n: int, alphabet: Alphabet, correlation_prob: float = 0.5
) -> float:
    """Expected single-position forgery success, used by calibration."""
    return forgery_oracle(n, alphabet, 1, 1, correlation_prob)

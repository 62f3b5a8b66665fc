"""Detectable Byzantine agreement over correlated symbol lists.

Core pieces: the symbol-list algebra (:mod:`qba.lists`), the simulated
quantum source device (:mod:`qba.qsd`) with its exact statevector oracles
(:mod:`qba.statevector`), the agreement state machine
(:mod:`qba.agreement`), the deterministic adversarial simulator
(:mod:`qba.simnet`), and the campaign harness (:mod:`qba.harness`).
"""

from .lists import (
    Alphabet,
    QCorrelatedSet,
    extract_sublist,
    is_consistent,
    is_q_correlated,
    select_support_positions,
)
from .qsd import DistributionConfig, distribute

__all__ = [
    "Alphabet",
    "QCorrelatedSet",
    "extract_sublist",
    "is_consistent",
    "is_q_correlated",
    "select_support_positions",
    "DistributionConfig",
    "distribute",
]

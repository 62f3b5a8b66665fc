"""Scenario configuration, calibration, Monte Carlo campaigns and reports.

A scenario is a flat JSON document (CLI flags override file fields).  Every
campaign needs an explicit master seed; run i uses the PRNG seeded with
``SeedSequence([seed, i])``, so any individual run can be replayed without
re-executing the campaign.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import binom

from .agreement import COMMANDER_ID, ProtocolParams
from .errors import CalibrationFailure, ConfigError, TooLarge
from .forgery import forgery_oracle, posterior_tables
from .lists import Alphabet, serialize_list
from .qsd import (
    CHANNEL_ADVERSARIES,
    ChannelAdversary,
    DistributionConfig,
    DistributionOutcome,
    distribute,
)
from .simnet import (
    EquivocatingCommanderStrategy,
    ForgedPCommanderStrategy,
    ForgingStrategy,
    HonestStrategy,
    RunResult,
    SelectiveRelayStrategy,
    SilentStrategy,
    Strategy,
    run_protocol,
    serialize_events,
)

DEFAULT_EPSILON = 1e-6
SUPPORT_TARGET = 0.999

STRATEGY_NAMES = (
    "honest",
    "silent",
    "equivocating-commander",
    "selective-relay",
    "forging",
    "forged-p-commander",
)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    m: int
    w: int
    seed: int
    commander_order: int = 1
    list_length: Optional[int] = None  # None -> calibrated ("auto")
    min_support: Optional[int] = None  # None -> calibrated ("auto")
    correlation_prob: float = 0.5
    decoy_count: Optional[int] = None  # None -> one per list position
    default_decision: int = 0
    corrupt: tuple[int, ...] = ()
    strategy: str = "silent"
    strategy_params: dict = field(default_factory=dict)
    channel_adversary: Optional[str] = None
    channel_target: Optional[int] = None
    runs: int = 1
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        problems = []
        if self.w < self.n:
            problems.append(f"w >= n required, got w={self.w} n={self.n}")
        if not 0 <= self.commander_order <= self.w:
            problems.append(f"commander_order {self.commander_order} outside [0, {self.w}]")
        if not 0 <= self.default_decision <= self.w:
            problems.append(f"default_decision {self.default_decision} outside [0, {self.w}]")
        if any(not 0 <= c < self.n for c in self.corrupt):
            problems.append(f"corrupt ids must be in [0, {self.n})")
        if self.runs < 1:
            problems.append(f"runs must be >= 1, got {self.runs}")
        if self.strategy not in STRATEGY_NAMES:
            problems.append(f"unknown strategy {self.strategy!r}")
        if self.channel_adversary is not None and self.channel_adversary not in CHANNEL_ADVERSARIES:
            problems.append(f"unknown channel adversary {self.channel_adversary!r}")
        if not 1 <= self.m <= self.n - 1:
            problems.append(f"need 1 <= m <= n-1, got m={self.m} n={self.n}")
        if problems:
            raise ConfigError("; ".join(problems))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        for key in ("list_length", "min_support", "decoy_count"):
            if data.get(key) == "auto":
                data[key] = None
        if "corrupt" in data:
            data["corrupt"] = tuple(data["corrupt"])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "seed" not in data:
            raise ConfigError("a campaign seed is required (no wall-clock default)")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        data = asdict(self)
        data["corrupt"] = list(self.corrupt)
        return data


def calibrate_length(
    n: int,
    w: int,
    correlation_prob: float,
    epsilon: float,
    support_target: float = SUPPORT_TARGET,
    mc_runs: int = 100_000,
    mc_seed: int = 0,
) -> tuple[int, int]:
    """Pick (list_length, min_support) for a target forgery probability.

    min_support = ceil(log eps / log p) where p is the exact per-position
    forgery pass probability (Monte Carlo when enumeration is out of reach);
    list_length is then the smallest L whose binomial count of correlated
    value-carrying positions reaches min_support with probability
    ``support_target``.
    """
    if not 0.0 < epsilon < 1.0:
        raise CalibrationFailure(f"epsilon must be in (0, 1), got {epsilon}")
    alphabet = Alphabet(w)
    try:
        p_hat = forgery_oracle(n, alphabet, 1, 1, correlation_prob)
    except TooLarge:
        hits = monte_carlo_forgery(
            n, w, 1, 1, mc_runs, mc_seed, correlation_prob
        )
        p_hat = hits / mc_runs
    if not 0.0 < p_hat < 1.0:
        raise CalibrationFailure(f"degenerate per-position pass probability {p_hat}")
    min_support = max(1, math.ceil(math.log(epsilon) / math.log(p_hat)))
    rate = correlation_prob / (w + 1)
    low = min_support
    high = max(min_support + 1, math.ceil(min_support / rate))
    while binom.sf(min_support - 1, high, rate) < support_target:
        high *= 2
    while low < high:
        mid = (low + high) // 2
        if binom.sf(min_support - 1, mid, rate) >= support_target:
            high = mid
        else:
            low = mid + 1
    return low, min_support


def monte_carlo_forgery(
    n: int,
    w: int,
    list_length: int,
    support_size: int,
    runs: int,
    seed: int,
    correlation_prob: float = 0.5,
    chunk: int = 2000,
) -> int:
    """Sampled counterpart of ``forgery_oracle``: number of accepted forgeries.

    Each trial draws fresh source randomness, hands the adversary every list
    except the receiver's, applies the oracle's optimal decision rule, and
    checks the receiver's consistency verdict on the forged message.
    """
    d = w + 1
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    if support_size <= 0 or support_size > list_length:
        return 0
    accepted = 0
    remaining = runs
    while remaining > 0:
        size = min(chunk, remaining)
        remaining -= size
        pattern = rng.random((size, list_length)) < correlation_prob
        perm = np.argsort(rng.random((size, list_length, d)), axis=-1)
        delivered = perm[..., : n + 1]
        corr = np.concatenate([delivered[..., :1], delivered[..., 2:]], axis=-1)
        unc_a = rng.integers(0, d, (size, list_length))
        unc_l = rng.integers(0, d, (size, list_length, n - 1))
        unc = np.concatenate([unc_a[..., None], unc_l], axis=-1)
        lists = np.where(pattern[..., None], corr, unc)  # (size, L, n)
        view = lists[..., : n - 1]  # receiver is the last lieutenant
        recv = lists[..., n - 1]
        _, post = posterior_tables(view, n, d, correlation_prob)
        avoid = 1.0 - post  # (size, L, d)
        scores = np.empty((size, d))
        oks = np.empty((size, d), dtype=bool)
        cols = np.arange(size)[:, None]
        for v in range(d):
            q = avoid[..., v]
            order = np.argsort(-q, axis=1, kind="stable")[:, :support_size]
            scores[:, v] = np.prod(q[cols, order], axis=1)
            oks[:, v] = np.all(recv[cols, order] != v, axis=1)
        best_v = np.argmax(scores, axis=1)
        accepted += int(np.sum(oks[np.arange(size), best_v]))
    return accepted


@dataclass
class RunReport:
    config: dict
    runs: int
    aborts: int
    support_failures: int
    protocol_runs: int
    agreement_rate: Optional[float]
    validity_rate: Optional[float]
    abort_rate: float
    decoy_detection_rate: float
    forgery_acceptance_count: int
    decision_histogram: dict
    list_length: int
    min_support: int
    epsilon: float
    wall_clock_seconds: float

    def to_dict(self, include_wall_clock: bool = False) -> dict:
        data = {
            "config": self.config,
            "runs": self.runs,
            "aborts": self.aborts,
            "support_failures": self.support_failures,
            "protocol_runs": self.protocol_runs,
            "agreement_rate": self.agreement_rate,
            "validity_rate": self.validity_rate,
            "abort_rate": self.abort_rate,
            "decoy_detection_rate": self.decoy_detection_rate,
            "forgery_acceptance_count": self.forgery_acceptance_count,
            "decision_histogram": self.decision_histogram,
            "list_length": self.list_length,
            "min_support": self.min_support,
            "epsilon": self.epsilon,
        }
        if include_wall_clock:
            data["wall_clock_seconds"] = self.wall_clock_seconds
        return data

    def to_json(self) -> str:
        # wall clock is deliberately excluded so identical (config, seed)
        # campaigns render byte-identical machine reports
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class ResolvedScenario:
    config: ScenarioConfig
    list_length: int
    min_support: int
    params: ProtocolParams
    dist_config: DistributionConfig

    def make_adversary(self) -> Optional[ChannelAdversary]:
        if self.config.channel_adversary is None:
            return None
        cls = CHANNEL_ADVERSARIES[self.config.channel_adversary]
        targets = None if self.config.channel_target is None else (self.config.channel_target,)
        return cls(targets)

    def make_strategy(self) -> Strategy:
        cfg = self.config
        p = cfg.strategy_params
        w = cfg.w
        if cfg.strategy == "honest":
            return HonestStrategy()
        if cfg.strategy == "silent":
            return SilentStrategy()
        if cfg.strategy == "equivocating-commander":
            v1 = p.get("v1", cfg.commander_order)
            # v2 may be explicitly null: consistent to the subset, silent to the rest
            v2 = p["v2"] if "v2" in p else (cfg.commander_order + 1) % (w + 1)
            subset = p.get("subset")
            return EquivocatingCommanderStrategy(v1, v2, subset)
        if cfg.strategy == "selective-relay":
            return SelectiveRelayStrategy(p.get("recipients"))
        if cfg.strategy == "forging":
            target = p.get("target_value", (cfg.commander_order + 1) % (w + 1))
            return ForgingStrategy(target)
        if cfg.strategy == "forged-p-commander":
            return ForgedPCommanderStrategy(p.get("value", cfg.commander_order))
        raise ConfigError(f"unknown strategy {cfg.strategy!r}")


def resolve_scenario(config: ScenarioConfig) -> ResolvedScenario:
    if config.list_length is None or config.min_support is None:
        auto_length, auto_support = calibrate_length(
            config.n, config.w, config.correlation_prob, config.epsilon
        )
        length = config.list_length if config.list_length is not None else auto_length
        support = config.min_support if config.min_support is not None else auto_support
    else:
        length, support = config.list_length, config.min_support
    params = ProtocolParams(
        n=config.n,
        m=config.m,
        alphabet=Alphabet(config.w),
        min_support=support,
        default_decision=config.default_decision,
    )
    dist_config = DistributionConfig(
        n=config.n,
        w=config.w,
        list_length=length,
        correlation_prob=config.correlation_prob,
        decoy_count=config.decoy_count,
        record_decoys=False,
    )
    return ResolvedScenario(config, length, support, params, dist_config)


@dataclass
class SingleRun:
    run_index: int
    outcome: DistributionOutcome
    result: Optional[RunResult]
    events: Optional[list[dict]]


def run_single(
    resolved: ResolvedScenario,
    run_index: int,
    collect_trace: bool = False,
    distribute_only: bool = False,
) -> SingleRun:
    """Execute one seeded run: distribution, then (unless aborted) agreement."""
    cfg = resolved.config
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, run_index]))
    outcome = distribute(resolved.dist_config, resolved.make_adversary(), rng)
    events: Optional[list[dict]] = None
    if collect_trace:
        events = [
            {
                "event": "run_header",
                "run": run_index,
                "seed": cfg.seed,
                "config": cfg.to_dict(),
                "list_length": resolved.list_length,
                "min_support": resolved.min_support,
                "schema": 1,
            },
            {
                "event": "distribution",
                "aborted": outcome.aborted,
                "abort_reason": outcome.abort_reason,
                "true_q": list(outcome.true_q),
                "inferred_q": None if outcome.inferred_q is None else list(outcome.inferred_q),
                "lists": None if outcome.lists is None
                else [serialize_list(lst) for lst in outcome.lists],
                "decoys_checked": outcome.decoys_checked,
                "decoy_mismatches": outcome.decoy_mismatches,
            },
        ]
    if outcome.aborted or distribute_only:
        return SingleRun(run_index, outcome, None, events)
    result = run_protocol(
        outcome,
        resolved.params,
        cfg.corrupt,
        resolved.make_strategy(),
        cfg.commander_order,
        rng,
        collect_trace=collect_trace,
    )
    if collect_trace and result.events is not None:
        events.extend(result.events)
    return SingleRun(run_index, outcome, result, events)


def run_scenario(
    config: ScenarioConfig,
    distribute_only: bool = False,
    trace_path: Optional[str] = None,
    on_run: Optional[Callable[[SingleRun], None]] = None,
) -> RunReport:
    """Run the configured campaign and aggregate a report.

    Aborted distributions and commander support failures are excluded from
    the agreement statistics (the first is the protocol's own abort outcome,
    the second a configuration failure).
    """
    start = time.monotonic()
    resolved = resolve_scenario(config)
    commander_honest = COMMANDER_ID not in config.corrupt
    aborts = 0
    support_failures = 0
    protocol_runs = 0
    agreed = 0
    valid = 0
    forgeries = 0
    histogram: dict[str, int] = {}
    trace_file = open(trace_path, "w") if trace_path else None
    try:
        for i in range(config.runs):
            run = run_single(
                resolved, i, collect_trace=trace_file is not None,
                distribute_only=distribute_only,
            )
            if trace_file is not None:
                trace_file.write(serialize_events(run.events) + "\n")
            if on_run is not None:
                on_run(run)
            if run.outcome.aborted:
                aborts += 1
                continue
            if distribute_only:
                continue
            result = run.result
            if result.support_failure:
                support_failures += 1
                continue
            protocol_runs += 1
            decisions = list(result.decisions.values())
            if decisions and all(v == decisions[0] for v in decisions):
                agreed += 1
            if commander_honest and decisions and all(
                v == config.commander_order for v in decisions
            ):
                valid += 1
            for ev in result.accept_events:
                if ev.value not in result.issued_values:
                    forgeries += 1
            for v in decisions:
                histogram[str(v)] = histogram.get(str(v), 0) + 1
    finally:
        if trace_file is not None:
            trace_file.close()
    abort_rate = aborts / config.runs
    return RunReport(
        config=config.to_dict(),
        runs=config.runs,
        aborts=aborts,
        support_failures=support_failures,
        protocol_runs=protocol_runs,
        agreement_rate=(agreed / protocol_runs) if protocol_runs else None,
        validity_rate=(valid / protocol_runs) if protocol_runs and commander_honest else None,
        abort_rate=abort_rate,
        decoy_detection_rate=abort_rate,
        forgery_acceptance_count=forgeries,
        decision_histogram=dict(sorted(histogram.items())),
        list_length=resolved.list_length,
        min_support=resolved.min_support,
        epsilon=config.epsilon,
        wall_clock_seconds=time.monotonic() - start,
    )


def trace_for_run(config: ScenarioConfig, run_index: int) -> str:
    """Serialized JSONL trace of one campaign run, reproducible byte-for-byte."""
    resolved = resolve_scenario(config)
    run = run_single(resolved, run_index, collect_trace=True)
    return serialize_events(run.events)


def replay_trace(path: str) -> tuple[bool, str]:
    """Re-execute every run recorded in a trace file and compare bytes.

    The file may hold several runs back to back; each segment starts with its
    own run_header line.  Returns (all identical, first fresh mismatching
    segment or "").
    """
    with open(path) as fh:
        lines = fh.read().strip("\n").splitlines()
    if not lines or json.loads(lines[0]).get("event") != "run_header":
        raise ConfigError("trace does not start with a run_header event")
    segments: list[list[str]] = []
    for line in lines:
        if json.loads(line).get("event") == "run_header":
            segments.append([])
        segments[-1].append(line)
    for segment in segments:
        header = json.loads(segment[0])
        config = ScenarioConfig.from_dict(header["config"])
        fresh = trace_for_run(config, header["run"])
        if fresh != "\n".join(segment):
            return False, fresh
    return True, ""


def emit_report(report: RunReport, fmt: str = "text") -> str:
    """Render a report; 'json' is the stable machine-readable schema."""
    if fmt == "json":
        return report.to_json()
    if fmt != "text":
        raise ConfigError(f"unknown report format {fmt!r}")
    lines = [
        "scenario report",
        f"  runs                {report.runs}",
        f"  list_length         {report.list_length}",
        f"  min_support         {report.min_support}",
        f"  epsilon             {report.epsilon:g}",
        f"  aborts              {report.aborts}",
        f"  abort_rate          {report.abort_rate:.4f}",
        f"  support_failures    {report.support_failures}",
        f"  protocol_runs       {report.protocol_runs}",
        f"  agreement_rate      {_fmt_rate(report.agreement_rate)}",
        f"  validity_rate       {_fmt_rate(report.validity_rate)}",
        f"  forgery_acceptances {report.forgery_acceptance_count}",
        f"  decisions           {report.decision_histogram}",
        f"  wall_clock_seconds  {report.wall_clock_seconds:.3f}",
    ]
    return "\n".join(lines)


def _fmt_rate(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"

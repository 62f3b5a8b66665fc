"""Campaign harness: calibration, scenario configs, aggregation, replay."""

import json
import math

import pytest
from scipy.stats import binom

from qba.errors import CalibrationFailure, ConfigError
from qba.harness import (
    ScenarioConfig,
    calibrate_length,
    emit_report,
    monte_carlo_forgery,
    replay_trace,
    run_scenario,
    trace_for_run,
)
from qba.forgery import forgery_oracle
from qba.lists import Alphabet, is_consistent, parse_list


class TestCalibration:
    def test_known_point(self):
        length, support = calibrate_length(3, 3, 0.5, 1e-6)
        # independent arithmetic: p = 7/8 per position, eps = 1e-6
        assert support == math.ceil(math.log(1e-6) / math.log(7 / 8)) == 104
        # smallest L reaching the floor at 99.9%, by linear scan
        rate = 0.5 / 4
        scan = support
        while binom.sf(support - 1, scan, rate) < 0.999:
            scan += 1
        assert length == scan == 1089

    def test_monotone_in_epsilon(self):
        l1, s1 = calibrate_length(4, 4, 0.5, 1e-4)
        l2, s2 = calibrate_length(4, 4, 0.5, 1e-8)
        assert s2 > s1 and l2 > l1

    def test_bad_epsilon(self):
        with pytest.raises(CalibrationFailure):
            calibrate_length(3, 3, 0.5, 1.5)


class TestMonteCarloForgery:
    def test_matches_oracle_within_three_sigma(self):
        runs = 20_000
        exact = forgery_oracle(3, Alphabet(3), 2, 2)
        hits = monte_carlo_forgery(3, 3, 2, 2, runs, seed=17)
        sigma = math.sqrt(exact * (1 - exact) / runs)
        assert abs(hits / runs - exact) < 3 * sigma

    def test_degenerate_support(self):
        assert monte_carlo_forgery(3, 3, 2, 3, 100, 0) == 0


class TestScenarioConfig:
    def test_auto_fields_from_dict(self):
        cfg = ScenarioConfig.from_dict(
            {"n": 4, "m": 2, "w": 4, "seed": 1, "list_length": "auto"}
        )
        assert cfg.list_length is None

    def test_seed_required(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"n": 4, "m": 2, "w": 4})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"n": 4, "m": 2, "w": 4, "seed": 1, "spam": 1})

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(n=4, m=2, w=3, seed=1)  # w < n
        with pytest.raises(ConfigError):
            ScenarioConfig(n=4, m=2, w=4, seed=1, strategy="nope")
        with pytest.raises(ConfigError):
            ScenarioConfig(n=4, m=2, w=4, seed=1, corrupt=(4,))

    def test_round_trip(self):
        cfg = ScenarioConfig(n=4, m=2, w=4, seed=1, corrupt=(0, 2))
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def small_scenario(**kw):
    base = dict(
        n=4, m=2, w=4, seed=100, list_length=200, min_support=10,
        decoy_count=0, runs=10,
    )
    base.update(kw)
    return ScenarioConfig(**base)


class TestRunScenario:
    def test_honest_campaign_is_valid(self):
        report = run_scenario(small_scenario())
        assert report.protocol_runs == 10
        assert report.agreement_rate == 1.0
        assert report.validity_rate == 1.0
        # histogram counts every honest party's decision, commander included
        assert report.decision_histogram == {"1": 40}

    def test_dishonest_commander_has_no_validity(self):
        report = run_scenario(
            small_scenario(strategy="equivocating-commander", corrupt=(0,))
        )
        assert report.validity_rate is None
        assert report.agreement_rate == 1.0

    def test_channel_adversary_aborts_everything(self):
        report = run_scenario(
            small_scenario(
                decoy_count=20, channel_adversary="intercept-resend-random-basis"
            )
        )
        assert report.aborts == 10 and report.protocol_runs == 0
        assert report.agreement_rate is None

    def test_json_report_is_stable(self):
        a = run_scenario(small_scenario()).to_json()
        b = run_scenario(small_scenario()).to_json()
        assert a == b
        assert "wall_clock" not in a

    def test_text_report_mentions_rates(self):
        text = emit_report(run_scenario(small_scenario()))
        assert "agreement_rate" in text and "wall_clock_seconds" in text


class TestTraces:
    def test_trace_is_deterministic(self):
        cfg = small_scenario(strategy="selective-relay", corrupt=(2,))
        assert trace_for_run(cfg, 3) == trace_for_run(cfg, 3)

    def test_replay_round_trip(self, tmp_path):
        cfg = small_scenario(strategy="equivocating-commander", corrupt=(0,), runs=4)
        path = tmp_path / "trace.jsonl"
        run_scenario(cfg, trace_path=str(path))
        identical, _ = replay_trace(str(path))
        assert identical

    def test_replay_detects_tampering(self, tmp_path):
        cfg = small_scenario(runs=1)
        path = tmp_path / "trace.jsonl"
        run_scenario(cfg, trace_path=str(path))
        text = path.read_text().replace('"value":1', '"value":3')
        path.write_text(text)
        identical, _ = replay_trace(str(path))
        assert not identical

    def test_accepted_chains_satisfy_public_predicate(self):
        # trace self-validation: every accepted message's chain, extended by
        # the receiver's own sublist, passes is_consistent
        cfg = small_scenario(strategy="equivocating-commander", corrupt=(0,), runs=3)
        for run_index in range(3):
            events = [json.loads(l) for l in trace_for_run(cfg, run_index).splitlines()]
            lists = [parse_list(t) for t in next(
                e for e in events if e["event"] == "distribution"
            )["lists"]]
            sends = {}
            for e in events:
                if e["event"] == "send":
                    sends[(e["round"], e["sender"], e["receiver"], e["value"])] = e
            accepts = [e for e in events if e["event"] == "accept"]
            assert accepts
            for e in accepts:
                sent_round = e["round"] if e["round"] == 0 else e["round"] - 1
                src = sends[(sent_round, e["sender"], e["receiver"], e["value"])]
                own = tuple(lists[e["receiver"]][p - 1] for p in src["positions"])
                chain = tuple(parse_list(c) for c in src["chain"]) + (own,)
                assert is_consistent(e["value"], chain)
                assert len(chain) == e["chain_len"]

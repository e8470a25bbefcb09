"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a single PASS line (visible with ``pytest -s`` or in the
captured output section); a failing criterion fails its test. Runtime budgets
are asserted inside the tests themselves.
"""

import itertools
import random
import time
from contextlib import contextmanager

import pytest

import test_kpi
import test_ruledsl
from klafate.backend import (
    Backend,
    EventStore,
    MessageBus,
    Phase,
    TOPIC_ASSESSMENT,
    UserEvent,
    canonical_weights_json,
    load_records,
    replay_weights,
)
from klafate.bgsim import FAULT_AIR_VALVE, Simulator, SimulatorDataSource
from klafate.errors import ProtocolError
from klafate.evidence import Frame, approximation_factor, build_evidence
from klafate.knowledge import KnowledgeModel
from klafate.kpi import anova_one_way, f_survival, moving_average, production_rate
from klafate.ruledsl import Snapshot, check_mutual_exclusivity, eval_bool, parse_rule, print_rule
from klafate.weights import member_weight, panel_weight, rule_weight
from test_backend import LEGAL, _event, _session_in


@contextmanager
def budget(seconds: float):
    started = time.perf_counter()
    yield
    elapsed = time.perf_counter() - started
    assert elapsed < seconds, f"exceeded runtime budget: {elapsed:.2f}s >= {seconds}s"


def test_worked_example_regression(bgs_workbook):
    with budget(1.0):
        members = [
            member_weight(p, bgs_workbook.weight_update, bgs_workbook.settings.team)
            for p in bgs_workbook.profiles
        ]
        for got, expected in zip(members, (0.88, 0.75, 0.50)):
            assert abs(got - expected) <= 0.005, (got, expected)

        w_p = panel_weight(members)
        assert abs(w_p - 0.71) <= 0.005

        w_r = rule_weight({"w_p": w_p, "w_k": 1.0, "w_u": 0.8})
        assert abs(w_r - 0.8367) <= 0.005

        assert approximation_factor(2) == 0.99

        model = KnowledgeModel.from_workbook(bgs_workbook)
        evidence = build_evidence(model.frame, "LQ", [w_r, w_p, w_p], f=2)
        for got, expected in zip(evidence.masses, (0.8316, 0.00355, 0.00355)):
            assert abs(got - expected) <= 0.005, (got, expected)
        assert abs(evidence.uncertainty - 0.1613) <= 0.005
    print("ACCEPTANCE PASS: worked-example regression "
          f"(w_m={[round(m, 2) for m in members]}, w_p={w_p:.4f}, w_r={w_r:.4f}, "
          f"evidence={[round(m, 4) for m in evidence.masses]}, u={evidence.uncertainty:.4f})")


def test_conservation_property():
    with budget(5.0):
        rng = random.Random(20250703)
        for case in range(10_000):
            n = rng.randint(1, 10)
            f = rng.randint(1, 6)
            frame = Frame([f"r{i}" for i in range(n)])
            weights = [rng.random() for _ in range(n)]
            ev = build_evidence(frame, f"r{rng.randrange(n)}", weights, f=f)
            total = sum(ev.masses) + ev.uncertainty
            assert abs(total - 1.0) <= 1e-9, (case, total)
            assert all(0.0 <= m <= 1.0 for m in ev.masses)
            assert 0.0 <= ev.uncertainty <= 1.0
    print("ACCEPTANCE PASS: conservation over 10,000 random evidence vectors (<= 1e-9)")


def test_rule_dsl_oracle_equivalence():
    with budget(10.0):
        rng = random.Random(424242)
        variables = ["C1", "C2", "C3", "C4"]
        for case in range(1_000):
            expr = test_ruledsl.random_bool_expr(rng, variables, depth=4)
            assert parse_rule(print_rule(expr)) == expr, case
            for assignment in itertools.product([False, True], repeat=4):
                env = dict(zip(variables, assignment))
                assert eval_bool(expr, Snapshot(env)) == test_ruledsl._oracle_eval(expr, env)
    print("ACCEPTANCE PASS: 1,000 random rules match the truth-table oracle; "
          "parse/print round-trip holds")


def test_mutual_exclusivity(bgs_workbook):
    with budget(1.0):
        model = KnowledgeModel.from_workbook(bgs_workbook)  # construction re-checks
        assert model.frame.labels == ("LQ", "LP", "NP")

        report = check_mutual_exclusivity(
            [parse_rule("C1 or C2"), parse_rule("C1 and C2")], ["C1", "C2"]
        )
        assert not report.exclusive
        witness = Snapshot(report.witness)
        assert eval_bool(parse_rule("C1 or C2"), witness)
        assert eval_bool(parse_rule("C1 and C2"), witness)
    print(f"ACCEPTANCE PASS: fixture rules exclusive; overlap witness {report.witness}")


def test_recipe_validation_experiment():
    with budget(30.0):
        np_events = Simulator("NP", seed=7).run(30)
        np_rate = len(np_events) / 30.0
        assert abs(np_rate - 3.4) <= 0.1

        x1_events = Simulator("X1", seed=7).run(10)
        x1_rate = len(x1_events) / 10.0
        assert abs(x1_rate - 2.9) <= 0.1
        k_v = x1_rate / 4.0
        assert abs(k_v - 0.725) <= 0.03
        assert k_v < 1.0  # rejected against the 4.0 target

        x2_events = Simulator("X2", seed=7).run(30)
        short = [t for t in x2_events if t <= 600.0]
        smoothed = moving_average(production_rate(short, 1.0, end=600.0), 5)
        assert min(smoothed.values()[4:]) >= 4.2  # meets the estimate on the 10-min MA5
        x2_rate_30 = len(x2_events) / 30.0
        assert x2_rate_30 < 4.2  # misses the estimate over 30 minutes
        assert x2_rate_30 > 3.4  # still beats the incumbent recipe
    print("ACCEPTANCE PASS: recipe validation "
          f"(np={np_rate:.2f}, x1={x1_rate:.2f} k_v={k_v:.3f} rejected, "
          f"x2 30-min={x2_rate_30:.2f})")


def test_anova_criterion():
    with budget(2.0):
        groups = []
        for recipe in ("NP", "X1", "X2"):
            events = Simulator(recipe, seed=7).run(30)
            groups.append(production_rate(events, 1.0, end=1800.0).values())
        result = anova_one_way(groups)
        assert result.p_value < 0.05

        for d1, d2, f_stat in test_kpi.ORACLE_FIXTURES:
            oracle = test_kpi.f_survival_oracle(f_stat, d1, d2)
            assert abs(f_survival(f_stat, d1, d2) - oracle) < 1e-6, (d1, d2, f_stat)
    print("ACCEPTANCE PASS: anova rejects the null on seeded traces "
          f"(F={result.f_stat:.1f}, p={result.p_value:.3g}); "
          "p-values match the integration oracle on 5 fixtures (<= 1e-6)")


def test_end_to_end_scripted_session(bgs_workbook, tmp_path):
    with budget(20.0):
        sim = Simulator("NP", seed=11)
        backend = Backend(
            bgs_workbook,
            SimulatorDataSource(sim, seconds_per_poll=1.0),
            bus=MessageBus(),
            store=EventStore(tmp_path / "log"),
        )
        backend.start_first_run()
        published = []
        backend.bus.subscribe(TOPIC_ASSESSMENT, lambda t, p: published.append(p))

        backend.step()
        sim.inject(FAULT_AIR_VALVE)
        while not published:
            backend.step()

        payload = published[0]
        assert payload["fm_id"] == "LQ"
        assert abs(payload["w_r"] - 0.71) <= 1e-9  # prior weights
        assert abs(payload["evidence"][0] - 0.99 * 0.71) <= 1e-9
        assert abs(payload["uncertainty"] - 0.29) <= 1e-9

        assert backend.apply_event(UserEvent("ack", ts=time.time()))["ok"]
        assert backend.apply_event(UserEvent("solved", ts=time.time()))["ok"]
        assert backend.apply_event(UserEvent("rating", stars=4, ts=time.time()))["ok"]

        expected = (0.71 + 1.0 + 0.8) / 3
        assert abs(backend.weights["LQ"].current - expected) <= 1e-6
        assert backend.session.phase is Phase.MONITOR

        live = canonical_weights_json(backend.weights)
        backend.store.close()
        replayed = replay_weights(load_records(tmp_path / "log"))
        assert canonical_weights_json(replayed) == live  # byte-for-byte

        latencies = sorted(
            m["publish_to_ack_ms"] for m in backend.latencies if "publish_to_ack_ms" in m
        )
        assert latencies, "no latency probes recorded"
        median = latencies[len(latencies) // 2]
        assert median < 1000.0
    print("ACCEPTANCE PASS: end-to-end session "
          f"(w_r={backend.weights['LQ'].current:.6f}, replay byte-identical, "
          f"publish-to-ack median {median:.1f} ms)")


def test_state_machine_safety():
    with budget(1.0):
        checked = 0
        for phase in Phase:
            for kind in ("ack", "next", "solved", "rating", "report"):
                session, weights = _session_in(phase)
                before = (
                    session.phase,
                    session.pair_index,
                    session.assessment,
                    {k: v for k, v in weights.items()},
                )
                if kind in LEGAL[phase]:
                    session.handle_user_event(_event(kind), weights, 9.0)
                else:
                    with pytest.raises(ProtocolError):
                        session.handle_user_event(_event(kind), weights, 9.0)
                    after = (
                        session.phase,
                        session.pair_index,
                        session.assessment,
                        {k: v for k, v in weights.items()},
                    )
                    assert after == before, (phase, kind)
                checked += 1
        assert checked == len(Phase) * 5
    print(f"ACCEPTANCE PASS: state-machine safety over {checked} phase/event pairs")

"""Conditional values, verdict logic, the checking loop, and simulation.

The center of gravity is the dual-route check: on randomly generated
bounded programs the conditional value computed through the model and the
linear solvers must equal, exactly, the value obtained by brute-force path
enumeration in ``oracles``.
"""

import random
import time
from fractions import Fraction

import pytest

import oracles
from probe import corpus
from probe.checker import (
    ConditionalResult,
    SchedulerExplosion,
    bmc,
    conditional_value,
    decide,
    simulate,
)
from probe.explorer import ExplorationConfig, Explorer
from probe.lang import parse_program, parse_property
from probe.model import PartialModel
from probe.solver import SolverLimits

EXACT = SolverLimits(exact_threshold=1_000_000)


def _full_model(program, prop, budget=100_000, rounds=60):
    model = PartialModel(program, target=prop.target)
    explorer = Explorer(model, ExplorationConfig(budget=budget))
    for _ in range(rounds):
        if explorer.expand_round().fully_expanded:
            return model
    raise AssertionError("model did not become finite")


# -- the verdict table ---------------------------------------------------------------


def _res(value):
    return ConditionalResult(Fraction(0), Fraction(1), value)


GEOMETRIC = corpus.load("geometric_odd")
HALF = Fraction(1, 2)

P_GE = parse_property("P >= 1/2 [ true ]", GEOMETRIC)
P_GT = parse_property("P > 1/2 [ true ]", GEOMETRIC)
P_LE = parse_property("P <= 1/2 [ true ]", GEOMETRIC)
P_LT = parse_property("P < 1/2 [ true ]", GEOMETRIC)


@pytest.mark.parametrize(
    "prop,value,partial,full",
    [
        # lower bounds: passing the bound proves immediately; falling short
        # only refutes once nothing more can accrue
        (P_GE, HALF, "Proven", "Proven"),
        (P_GE, Fraction(3, 4), "Proven", "Proven"),
        (P_GE, Fraction(1, 4), "Unknown", "Refuted"),
        (P_GT, Fraction(3, 4), "Proven", "Proven"),
        (P_GT, HALF, "Unknown", "Refuted"),  # equality does not pass >
        (P_GT, Fraction(1, 4), "Unknown", "Refuted"),
        # upper bounds: exceeding refutes immediately; staying under only
        # proves once the value has stopped growing
        (P_LE, Fraction(3, 4), "Refuted", "Refuted"),
        (P_LE, HALF, "Unknown", "Proven"),  # equality satisfies <=
        (P_LE, Fraction(1, 4), "Unknown", "Proven"),
        (P_LT, Fraction(3, 4), "Refuted", "Refuted"),
        (P_LT, HALF, "Refuted", "Refuted"),  # reaching the bound refutes <
        (P_LT, Fraction(1, 4), "Unknown", "Proven"),
        # undefined resolves only on the full model
        (P_GE, None, "Unknown", "Undefined"),
        (P_LT, None, "Unknown", "Undefined"),
    ],
)
def test_decide_table(prop, value, partial, full):
    assert decide(prop, _res(value), fully_expanded=False) == partial
    assert decide(prop, _res(value), fully_expanded=True) == full


# -- conditional values vs. brute-force path enumeration -----------------------------


_ATOMS = ("x := x + 1;", "x := x + 2;", "x := 2 * x;")


def _random_statement(rng, depth):
    roll = rng.random()
    if depth >= 3 or roll < 0.30:
        return rng.choice(_ATOMS)
    if roll < 0.55:
        weight = rng.choice(("1/4", "1/2", "3/4", "0.3"))
        return "{ %s } [%s] { %s }" % (
            _random_statement(rng, depth + 1),
            weight,
            _random_statement(rng, depth + 1),
        )
    if roll < 0.70:
        return "if (x < %d) { %s } else { %s }" % (
            rng.randint(1, 3),
            _random_statement(rng, depth + 1),
            _random_statement(rng, depth + 1),
        )
    if roll < 0.80:
        return "x := unif(0, 2);"
    if roll < 0.90:
        return "observe (x < %d);" % rng.randint(1, 4)
    # the counter only ever increases, so every loop is bounded
    return "while (k < %d) { k := k + 1; %s }" % (
        rng.randint(1, 3),
        _random_statement(rng, depth + 1),
    )


def _random_bounded_program(rng):
    body = " ".join(_random_statement(rng, 0) for _ in range(rng.randint(1, 3)))
    return parse_program("int x := 0;\nint k := 0;\n\n" + body)


def test_conditional_value_matches_path_enumeration_exactly():
    for seed in range(40):
        rng = random.Random(seed)
        program = _random_bounded_program(rng)
        prop = parse_property("E >= 0 [ x ]", program)
        model = _full_model(program, prop)
        res = conditional_value(model, prop, EXACT)

        summary = oracles.enumerate_paths(program, fuel=200)
        assert summary.cut == 0, seed
        num, den, value = summary.conditional(lambda env: env["x"])
        assert res.numerator == num, seed
        assert res.denominator == den, seed
        assert res.value == value, seed


def test_conditional_probability_matches_path_enumeration():
    for seed in range(20):
        rng = random.Random(1000 + seed)
        program = _random_bounded_program(rng)
        prop = parse_property("P >= 0 [ x = 2 ]", program)
        model = _full_model(program, prop)
        res = conditional_value(model, prop, EXACT)

        summary = oracles.enumerate_paths(program, fuel=200)
        assert summary.cut == 0, seed
        num, den, value = summary.conditional(
            lambda env: 1 if env["x"] == 2 else 0
        )
        assert (res.numerator, res.denominator, res.value) == (num, den, value)


def test_conditional_value_rejects_parametric_models():
    program = corpus.load("crowds_parametric")
    prop = corpus.properties("crowds_parametric")[0]
    model = PartialModel(program, target=prop.target)
    Explorer(model, ExplorationConfig(budget=50)).expand_round()
    with pytest.raises(ValueError):
        conditional_value(model, prop, EXACT)


# -- nondeterminism: scheduler ordering and the enumeration cap ----------------------

UNDEF_VS_REAL = """
int x := 0;

{ observe (x > 0); } [] { x := 1; }
"""


def test_min_prefers_undefined_over_any_real():
    program = parse_program(UNDEF_VS_REAL)
    prop = parse_property("min E >= 0 [ x ]", program)
    model = _full_model(program, prop)
    res = conditional_value(model, prop, EXACT)
    assert res.value is None
    assert res.denominator == 0
    assert "left" in res.scheduler.values()
    assert decide(prop, res, fully_expanded=True) == "Undefined"


def test_max_prefers_any_real_over_undefined():
    program = parse_program(UNDEF_VS_REAL)
    prop = parse_property("max E >= 0 [ x ]", program)
    model = _full_model(program, prop)
    res = conditional_value(model, prop, EXACT)
    assert res.value == 1
    assert res.scheduler == {0: "right"}


NONDET_LOOP = """
int x := 0;
int i := 0;

while (i < 3) {
    i := i + 1;
    { x := x + 1; } [] { skip; }
}
observe (x > 0);
"""


def test_scheduler_enumeration_optimizes_both_directions():
    program = parse_program(NONDET_LOOP)
    lo = parse_property("min E >= 0 [ x ]", program)
    hi = parse_property("max E >= 0 [ x ]", program)
    model = _full_model(program, lo)
    # always skipping conditions all mass away: the minimum is undefined
    assert conditional_value(model, lo, EXACT).value is None
    best = conditional_value(model, hi, EXACT)
    assert best.value == 3
    assert best.denominator == 1


def test_scheduler_cap_raises_and_bmc_reports_it():
    program = parse_program(NONDET_LOOP)
    prop = parse_property("max E >= 0 [ x ]", program)
    model = _full_model(program, prop)
    with pytest.raises(SchedulerExplosion):
        conditional_value(model, prop, EXACT, scheduler_cap=32)
    report = bmc(program, prop, scheduler_cap=32)
    assert report.verdict == "Unknown"
    assert "above the cap" in report.note


def test_unconditioned_nondeterminism_skips_enumeration():
    # without any observation the quotient is its numerator, so even a
    # scheduler space far beyond the cap is handled (by value iteration)
    source = NONDET_LOOP.replace("observe (x > 0);", "")
    program = parse_program(source)
    hi = parse_property("max E >= 0 [ x ]", program)
    model = _full_model(program, hi)
    res = conditional_value(model, hi, EXACT, scheduler_cap=2)
    assert abs(res.value - 3.0) < 1e-9
    lo = parse_property("min E >= 0 [ x ]", program)
    assert abs(conditional_value(model, lo, EXACT, scheduler_cap=2).value) < 1e-9


# -- the bounded checking loop --------------------------------------------------------


def test_bmc_proves_geometric_termination():
    prop = corpus.properties("geometric_odd")[0]  # P >= 1/2 [ true ]
    report = bmc(GEOMETRIC, prop)
    assert report.verdict == "Proven"
    assert report.value >= Fraction(1, 2)
    assert report.note == ""
    assert not report.fully_expanded
    assert report.iterations[-1].round == len(report.iterations)
    assert report.wall_clock_seconds > 0
    assert report.property == str(prop)


def test_bmc_iteration_rows_grow_monotonically():
    prop = parse_property("E >= 8/5 [ x ]", GEOMETRIC)
    report = bmc(GEOMETRIC, prop, ExplorationConfig(budget=6))
    assert report.verdict == "Proven"
    assert len(report.iterations) >= 3
    rows = report.iterations
    for a, b in zip(rows, rows[1:]):
        assert b.states >= a.states
        assert b.numerator >= a.numerator
        assert b.denominator <= a.denominator  # conditioned mass only grows
        if a.value is not None and b.value is not None:
            assert b.value >= a.value


def test_bmc_round_limit():
    prop = parse_property("P >= 1 [ true ]", GEOMETRIC)
    report = bmc(GEOMETRIC, prop, ExplorationConfig(budget=5, max_rounds=2))
    assert report.verdict == "Unknown"
    assert report.note == "round limit"
    assert len(report.iterations) == 2
    assert not report.fully_expanded


def test_bmc_state_cap():
    prop = parse_property("P >= 1 [ true ]", GEOMETRIC)
    config = ExplorationConfig(budget=1000, max_states_total=20)
    report = bmc(GEOMETRIC, prop, config)
    assert report.verdict == "Unknown"
    assert report.note == "state cap reached"
    assert report.iterations[-1].states <= 21


def test_bmc_deadline():
    prop = parse_property("P >= 1 [ true ]", GEOMETRIC)
    config = ExplorationConfig(budget=5)
    report = bmc(GEOMETRIC, prop, config, deadline=time.monotonic() - 1)
    assert report.verdict == "Unknown"
    assert report.note == "timeout"
    assert len(report.iterations) == 1


def test_bmc_decides_exactly_on_full_expansion():
    # two biased coins, conditioned on at least one head;
    # value = E[heads | >= 1 head] = (5/6) / (2/3) = 5/4
    source = """
    int h := 0;

    { h := h + 1; } [1/2] { skip; }
    { h := h + 1; } [1/3] { skip; }
    observe (h > 0);
    """
    program = parse_program(source)
    for text, verdict in [
        ("E <= 5/4 [ h ]", "Proven"),  # boundary satisfied, needs full model
        ("E < 5/4 [ h ]", "Refuted"),
        ("E >= 5/4 [ h ]", "Proven"),
        ("E > 5/4 [ h ]", "Refuted"),  # boundary missed, needs full model
    ]:
        report = bmc(program, parse_property(text, program))
        assert report.fully_expanded
        assert report.value == Fraction(5, 4)
        assert report.verdict == verdict, text


def test_bmc_undefined_on_fully_conditioned_program():
    source = """
    int x := 0;

    observe (x > 0);
    """
    program = parse_program(source)
    report = bmc(program, parse_property("P >= 1/2 [ true ]", program))
    assert report.fully_expanded
    assert report.verdict == "Undefined"
    assert report.value is None


def test_bmc_progress_callback_sees_every_round():
    rounds = []
    prop = parse_property("E >= 8/5 [ x ]", GEOMETRIC)
    bmc(GEOMETRIC, prop, ExplorationConfig(budget=6), progress=rounds.append)
    assert [r["round"] for r in rounds] == list(range(1, len(rounds) + 1))
    assert all(r["states"] >= 2 for r in rounds)


# -- Monte Carlo cross-validation -----------------------------------------------------


def test_simulation_estimates_the_conditional_value():
    prop = parse_property("E >= 0 [ x ]", GEOMETRIC)
    est = simulate(GEOMETRIC, prop, runs=20_000, seed=7)
    assert est.runs == 20_000
    assert est.accepted + est.bad == 20_000
    assert est.diverged == 0
    assert est.bad > 5_000  # a third of the mass is conditioned away
    assert est.ci_low < 5 / 3 < est.ci_high
    assert abs(est.estimate - 5 / 3) < 0.05


def test_simulation_is_deterministic_in_the_seed():
    prop = parse_property("E >= 0 [ x ]", GEOMETRIC)
    a = simulate(GEOMETRIC, prop, runs=2_000, seed=11)
    b = simulate(GEOMETRIC, prop, runs=2_000, seed=11)
    c = simulate(GEOMETRIC, prop, runs=2_000, seed=12)
    assert a == b
    assert a.estimate != c.estimate


def test_simulation_of_certain_conditioning():
    source = """
    int x := 0;

    { x := 1; } [1/2] { skip; }
    observe (x = 1);
    """
    program = parse_program(source)
    est = simulate(program, parse_property("E >= 0 [ x ]", program), runs=4_000)
    assert est.estimate == 1.0
    assert est.ci_low == est.ci_high == 1.0
    assert 1_500 < est.bad < 2_500


def test_simulation_counts_divergence():
    source = """
    int x := 0;

    while (x < 1) { x := 0; }
    """
    program = parse_program(source)
    prop = parse_property("P >= 0 [ x = 1 ]", program)
    est = simulate(program, prop, runs=50, max_steps=100)
    assert est.diverged == 50
    assert est.accepted == 0
    assert est.estimate is None and est.ci_low is None


def test_simulation_uses_boolean_targets_as_indicators():
    prop = parse_property("P >= 0 [ x = 1 ]", GEOMETRIC)
    est = simulate(GEOMETRIC, prop, runs=20_000, seed=3)
    # P(x = 1 | odd) = (1/4) / (1/3) = 3/4
    assert abs(est.estimate - 0.75) < 0.02


def test_simulation_rejects_nondeterminism_and_parameters():
    nondet = parse_program("int x := 0;\n\n{ x := 1; } [] { skip; }")
    with pytest.raises(ValueError):
        simulate(nondet, parse_property("E >= 0 [ x ]", nondet), runs=10)
    parametric = corpus.load("crowds_parametric")
    prop = corpus.properties("crowds_parametric")[0]
    with pytest.raises(ValueError):
        simulate(parametric, prop, runs=10)

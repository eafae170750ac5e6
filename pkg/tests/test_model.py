"""Partial-model construction: state classes, conventions, audits, views."""

import io
from fractions import Fraction

import pytest

from probe import corpus
from probe.explorer import ExplorationConfig, Explorer, max_path_masses
from probe.lang import parse_program, parse_property
from probe.model import ModelError, PartialModel


def expand_fully(model, budget=100_000, rounds=50):
    explorer = Explorer(model, ExplorationConfig(budget=budget))
    for _ in range(rounds):
        report = explorer.expand_round()
        if report.fully_expanded:
            return model
    raise AssertionError("model did not fully expand; is it finite?")


def expand_some(model, budget=2000, rounds=1):
    explorer = Explorer(model, ExplorationConfig(budget=budget))
    for _ in range(rounds):
        explorer.expand_round()
    return model


def test_initial_state_is_zero_and_sink_is_premade():
    model = PartialModel(corpus.load("geometric_odd"))
    assert model.state_count == 2
    assert model.sink_id == 1
    assert model.classification(0) == "Expandable"
    assert model.classification(1) == "Sink"
    # the sink is already materialized: it never occupies the frontier
    assert model.expandable_ids() == [0]
    assert model.successors(1) == (("none", ((Fraction(1), 1),)),)


def test_expandable_states_expose_self_loops():
    model = PartialModel(corpus.load("geometric_odd"))
    assert model.is_expandable(0)
    assert model.successors(0) == (("none", ((Fraction(1), 0),)),)


def test_geometric_expansion_landmarks():
    """Breadth-first on the parity loop: the violation state is discovered
    as id 10 and the first accepted termination as id 18."""
    program = corpus.load("geometric_odd")
    model = PartialModel(program)
    explorer = Explorer(model, ExplorationConfig(budget=1))
    first_term = None
    for _ in range(40):
        explorer.expand_round()
        terms = [
            s for s in range(model.state_count)
            if model.classification(s) == "Term"
        ]
        if terms:
            first_term = terms[0]
            break
    assert model.bad_id == 10
    assert first_term == 18


def test_full_expansion_classes_partition_the_states():
    program = parse_program(
        """
        int x := 0;
        int c := 0;

        while (c = 0) {
            { x := x + 1; } [1/2] { c := 1; }
            if (x > 2) { c := 1; }
        }
        observe(x >= 1);
        """
    )
    model = expand_fully(PartialModel(program))
    classes = [model.classification(s) for s in range(model.state_count)]
    assert classes.count("Sink") == 1
    assert classes.count("Bad") == 1
    assert classes.count("Expandable") == 0
    assert classes.count("Term") >= 1
    model.audit()


def test_rewards_live_only_on_terminated_states():
    program = corpus.load("geometric_odd")
    prop = parse_property("E >= 1 [ x ]", program)
    model = expand_some(PartialModel(program, target=prop.target))
    for sid, r in model.rewards.items():
        assert model.classification(sid) == "Term"
        assert r > 0
    # the accepted runs leave x odd, so every reward is odd
    assert all(int(r) % 2 == 1 for r in model.rewards.values())


def test_set_post_expectation_reannotates():
    program = corpus.load("geometric_odd")
    model = expand_some(PartialModel(program))
    assert not model.rewards
    prop = parse_property("E >= 1 [ x + 10 ]", program)
    model.set_post_expectation(prop.target)
    assert model.rewards
    assert all(r >= 11 for r in model.rewards.values())


def test_negative_post_expectation_is_rejected():
    program = parse_program("int x := 0;\nx := x - 5;")
    prop_target = parse_property("E >= 0 [ x ]", program).target
    model = PartialModel(program, target=prop_target)
    with pytest.raises(ModelError):
        expand_fully(model)


def test_materialize_merges_duplicate_successors():
    program = parse_program("int x := 0;\n{ x := 1; } [1/2] { x := 1; }")
    model = expand_fully(PartialModel(program))
    for sid in range(model.state_count):
        for _, dist in model.successors(sid):
            targets = [t for _, t in dist]
            assert len(targets) == len(set(targets))
    model.audit()


def test_double_materialize_is_an_error():
    model = PartialModel(corpus.load("geometric_odd"))
    model.materialize(0)
    with pytest.raises(ModelError):
        model.materialize(0)


def test_dump_is_deterministic_and_versioned_by_expansion():
    program = corpus.load("coupon_5")
    buffers = []
    for _ in range(2):
        model = PartialModel(program)
        explorer = Explorer(model, ExplorationConfig(budget=500))
        explorer.expand_round()
        buf = io.StringIO()
        model.dump(buf)
        buffers.append(buf.getvalue())
    assert buffers[0] == buffers[1]
    assert buffers[0].startswith("STATE 0 ")
    assert "TRANS" in buffers[0]


def test_audit_catches_corruption():
    model = expand_some(PartialModel(corpus.load("geometric_odd")), budget=1000)
    model.audit()
    # break the sink's self-loop
    model.transitions[model.sink_id] = (("none", ((Fraction(1), 0),)),)
    with pytest.raises(ModelError):
        model.audit()


def test_nondeterminism_and_scheduling():
    program = parse_program(
        """
        int x := 0;

        { x := 1; } [] { { x := 2; } [1/2] { x := 3; } }
        """
    )
    model = expand_fully(PartialModel(program))
    nondet = model.nondet_states()
    assert nondet == [0]
    with pytest.raises(ModelError):
        model.induced_chain({})  # scheduler must be total
    left = model.induced_chain({0: "left"})
    right = model.induced_chain({0: "right"})
    ((_, l_target),) = left.distribution(0)
    ((_, r_target),) = right.distribution(0)
    assert l_target != r_target
    # the right branch continues into the probabilistic split
    assert len(right.distribution(r_target)) == 2
    with pytest.raises(ModelError):
        model.induced_chain({0: "sideways"}).distribution(0)


def test_deterministic_model_needs_no_scheduler():
    model = expand_some(PartialModel(corpus.load("geometric_odd")))
    chain = model.induced_chain({})
    for sid, dist in chain.distributions():
        assert sum(w for w, _ in dist) == 1


def test_max_path_masses_on_the_parity_loop():
    model = PartialModel(corpus.load("geometric_odd"))
    explorer = Explorer(model, ExplorationConfig(budget=50))
    explorer.expand_round()
    masses = max_path_masses(model)
    assert masses[0] == 1
    # mass halves along the loop: some state sits exactly at 1/2
    assert Fraction(1, 2) in masses.values()
    assert all(0 < m <= 1 for m in masses.values())


def test_maxprob_heuristic_rejects_parametric_models():
    program = parse_program("int x := 0;\n{ x := 1; } [p] { skip; }")
    model = PartialModel(program)
    with pytest.raises(ValueError):
        Explorer(model, ExplorationConfig(heuristic="maxprob"))


def test_explorer_budget_counts_only_new_states():
    program = corpus.load("coupon_5")
    model = PartialModel(program)
    explorer = Explorer(model, ExplorationConfig(budget=100))
    first = explorer.expand_round()
    assert first.new_states <= 100
    total = model.state_count
    second = explorer.expand_round()
    assert second.new_states <= 100
    assert model.state_count == total + second.new_states


def test_bad_state_consumes_budget_but_sink_does_not():
    program = parse_program("int x := 0;\nobserve(x = 1);")
    model = PartialModel(program)
    # state 0 + sink exist; expansion discovers only the violation state
    explorer = Explorer(model, ExplorationConfig(budget=10))
    report = explorer.expand_round()
    assert model.bad_id is not None
    assert report.new_states >= 1
    assert model.state_count == 3

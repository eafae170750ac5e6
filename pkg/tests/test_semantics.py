"""One-step operational semantics: distributions, continuations, rewards."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from probe import corpus
from probe.lang import ast, parse_program
from probe.semantics import (
    Configuration,
    SemanticsError,
    eval_arith,
    eval_bool,
    compile_arith,
    compile_bool,
    get_engine,
    initial_configuration,
    push,
    reward,
    step,
)


# -- expression evaluation: compiled versus direct ------------------------------


_VARS = ("x", "y", "k")


def _env(values):
    return dict(zip(_VARS, values))


@st.composite
def _aexprs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        if draw(st.booleans()):
            return ast.IntLit(draw(st.integers(-20, 20)))
        return ast.Var(draw(st.sampled_from(_VARS)))
    left = draw(_aexprs(depth=depth - 1))
    right = draw(_aexprs(depth=depth - 1))
    op = draw(st.sampled_from([ast.Add, ast.Sub, ast.Mul]))
    return op(left, right)


@given(_aexprs(), st.tuples(*(st.integers(-50, 50) for _ in _VARS)))
@settings(max_examples=200, deadline=None)
def test_compiled_arithmetic_matches_interpreted(expr, values):
    program = parse_program(
        "\n".join(f"int {v} := 0;" for v in _VARS) + "\nskip;"
    )
    compiled = compile_arith(expr, program.var_index)
    assert compiled(values) == eval_arith(expr, _env(values))


@given(
    st.sampled_from(("=", "!=", "<", "<=", ">", ">=")),
    _aexprs(),
    _aexprs(),
    st.tuples(*(st.integers(-50, 50) for _ in _VARS)),
)
@settings(max_examples=200, deadline=None)
def test_compiled_comparisons_match_interpreted(op, a, b, values):
    program = parse_program(
        "\n".join(f"int {v} := 0;" for v in _VARS) + "\nskip;"
    )
    expr = ast.Compare(op, a, b)
    compiled = compile_bool(expr, program.var_index)
    assert compiled(values) == eval_bool(expr, _env(values))


# -- continuation handling ------------------------------------------------------


def test_push_flattens_sequencing():
    a, b, c = ast.Skip(), ast.Abort(), ast.Assign("x", ast.IntLit(1))
    nested = ast.Seq(ast.Seq(a, b), c)
    assert push(nested, ()) == (a, b, c)
    assert push(a, (b, c)) == (a, b, c)


def test_initial_configuration_holds_initializers():
    program = parse_program("int x := 7;\nint y := -1;\nx := x + y;")
    config = initial_configuration(program)
    assert config.kind == "run"
    assert config.values == (7, -1)


# -- single steps ----------------------------------------------------------------


def _single_dist(result):
    ((action, dist),) = result
    return action, dist


def test_assignment_steps_deterministically():
    program = parse_program("int x := 0;\nx := x + 3;")
    config = initial_configuration(program)
    _, dist = _single_dist(step(program, config))
    ((w, succ),) = dist
    assert w == 1
    assert succ.values == (3,)


def test_probabilistic_choice_splits_mass():
    program = parse_program("int x := 0;\n{ x := 1; } [1/3] { x := 2; }")
    config = initial_configuration(program)
    _, dist = _single_dist(step(program, config))
    weights = sorted(w for w, _ in dist)
    assert weights == [Fraction(1, 3), Fraction(2, 3)]
    assert sum(weights) == 1


def test_uniform_assignment_is_equidistributed():
    program = parse_program("int d := 0;\nd := unif(2, 5);")
    config = initial_configuration(program)
    _, dist = _single_dist(step(program, config))
    assert len(dist) == 4
    assert all(w == Fraction(1, 4) for w, _ in dist)
    assert sorted(s.values[0] for _, s in dist) == [2, 3, 4, 5]


def test_empty_uniform_range_is_an_error():
    program = parse_program("int d := 0;\nd := unif(5, 2);")
    config = initial_configuration(program)
    with pytest.raises(SemanticsError):
        step(program, config)


def test_nondeterministic_choice_exposes_two_actions():
    program = parse_program("int x := 0;\n{ x := 1; } [] { x := 2; }")
    config = initial_configuration(program)
    result = step(program, config)
    actions = sorted(action for action, _ in result)
    assert actions == ["left", "right"]
    for _, dist in result:
        assert sum(w for w, _ in dist) == 1


def test_observe_violation_reaches_the_violation_state():
    program = parse_program("int x := 0;\nobserve(x = 1);")
    config = initial_configuration(program)
    _, dist = _single_dist(step(program, config))
    ((w, succ),) = dist
    assert w == 1
    assert succ.kind == "bad"


def test_terminated_and_bad_step_to_the_end_state():
    program = parse_program("int x := 0;\nskip;")
    for kind in ("term", "bad"):
        config = Configuration(kind, (), (0,) if kind == "term" else ())
        _, dist = _single_dist(step(program, config))
        ((w, succ),) = dist
        assert (w, succ.kind) == (1, "sink")


def test_parametric_choice_keeps_symbolic_weights():
    program = parse_program("int x := 0;\n{ x := 1; } [p] { x := 2; }")
    config = initial_configuration(program)
    _, dist = _single_dist(step(program, config))
    total = sum(w for w, _ in dist)
    assert total == 1  # polynomial p + (1 - p)
    assert get_engine(program).parametric


@given(st.integers(0, 200))
@settings(max_examples=60, deadline=None)
def test_step_distributions_sum_to_one_along_random_walks(seed):
    """Follow a pseudo-random trajectory; every distribution must sum to 1."""
    import random

    rng = random.Random(seed)
    program = corpus.load("coupon_5")
    config = initial_configuration(program)
    for _ in range(40):
        result = step(program, config)
        for _, dist in result:
            assert sum(w for w, _ in dist) == 1
        _, dist = result[rng.randrange(len(result))]
        picks = [succ for _, succ in dist]
        config = rng.choice(picks)
        if config.kind == "sink":
            break


# -- rewards ------------------------------------------------------------------------


def test_reward_reads_the_final_valuation():
    program = parse_program("int x := 0;\nint y := 0;\nskip;")
    config = Configuration("term", (), (3, 4))
    target = ast.Add(ast.Var("x"), ast.Var("y"))
    assert reward(config, target, program) == 7
    indicator = ast.Compare(">", ast.Var("x"), ast.IntLit(5))
    assert reward(config, indicator, program) == 0


def test_engine_interns_continuations():
    program = corpus.load("geometric_odd")
    engine = get_engine(program)
    raw = engine.initial_raw()
    assert engine.step_raw(raw) == engine.step_raw(raw)
    # the same program yields the same cached engine
    assert get_engine(program) is engine

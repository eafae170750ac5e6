"""Conditional values on partial models, property verdicts, and the
bounded checking loop.

The quantity of interest is the conditional value

    value = ER(to end state) / (1 - Pr(reach violation))

with 0/0 left undefined (represented as ``None``, ordered below every
real).  On a partial model both the numerator and the violation
probability only grow as more states are materialized, so:

* a lower-bound property (P/E ≥ λ or > λ) is *proven* as soon as the
  partial value passes λ — it can only keep growing;
* an upper-bound property (≤ λ or < λ) is *refuted* as soon as the
  partial value exceeds λ;
* the opposite directions need the fully expanded model, where the exact
  value decides every comparison.

Nondeterminism resolves to min/max over memoryless schedulers.  When the
violation state is unreachable the quotient degenerates to its numerator
and plain value iteration over actions suffices; otherwise the quotient is
optimized by exhaustive scheduler enumeration, capped.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .explorer import ExplorationConfig, Explorer
from .lang import ast
from .lang.ast import NondetChoice, Program, walk
from .lang.properties import Property
from .model import PartialModel
from .report import IterationRow, Report
from . import semantics, solver
from .solver import SolverLimits, DEFAULT_LIMITS

ZERO = Fraction(0)
ONE = Fraction(1)

# the denominator below which a float quotient is treated as 0/0
DENOMINATOR_FLOOR = 1e-12


class SchedulerExplosion(RuntimeError):
    """Scheduler enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class ConditionalResult:
    numerator: object  # Fraction | float
    denominator: object  # Fraction | float
    value: object  # Fraction | float | None (None = undefined, 0/0)
    scheduler: dict | None = None


@dataclass(frozen=True)
class Verdict:
    outcome: str  # Proven | Refuted | Unknown | Undefined
    value: object = None
    iteration: int = 0
    note: str = ""


def reach_probability(view, targets, mode="min", limits=DEFAULT_LIMITS):
    return solver.reach_probability(view, targets, mode, limits)


def expected_reward_to_sink(view, mode="min", limits=DEFAULT_LIMITS):
    return solver.expected_reward_to_sink(view, mode, limits)


def _quotient(numerator, denominator):
    if denominator == 0 or (
        isinstance(denominator, float) and denominator < DENOMINATOR_FLOOR
    ):
        return None
    return numerator / denominator


def _chain_result(chain, limits) -> ConditionalResult:
    numerator = solver.expected_reward_to_sink(chain, limits=limits)
    bad = (
        solver.reach_probability(chain, {chain.bad_id}, limits=limits)
        if chain.bad_id is not None
        else ZERO
    )
    denominator = 1 - bad
    return ConditionalResult(numerator, denominator, _quotient(numerator, denominator))


def conditional_value(
    model: PartialModel,
    prop: Property,
    limits: SolverLimits = DEFAULT_LIMITS,
    scheduler_cap: int = 2**20,
) -> ConditionalResult:
    """Min/max conditional value of the current partial model."""
    if model.parametric:
        raise ValueError("conditional values need a parameter-free model")
    nondet = model.nondet_states()
    if not nondet:
        return _chain_result(model.induced_chain({}), limits)

    if model.bad_id is None:
        # no conditioning in sight: the quotient is its numerator, solved
        # by value iteration over actions
        numerator = solver.expected_reward_to_sink(model, prop.mode, limits)
        return ConditionalResult(numerator, ONE, numerator)

    if 2 ** len(nondet) > scheduler_cap:
        raise SchedulerExplosion(
            f"{len(nondet)} nondeterministic states need 2^{len(nondet)} "
            f"schedulers, above the cap of {scheduler_cap}"
        )

    minimizing = prop.mode == "min"
    best: ConditionalResult | None = None
    for actions in itertools.product(("left", "right"), repeat=len(nondet)):
        scheduler = dict(zip(nondet, actions))
        res = _chain_result(model.induced_chain(scheduler), limits)
        res = ConditionalResult(res.numerator, res.denominator, res.value, scheduler)
        if minimizing and res.value is None:
            # undefined is below every real: it wins immediately
            return res
        if best is None:
            best = res
            continue
        if minimizing:
            if res.value < best.value:
                best = res
        else:
            # undefined is below every real: it loses to any real
            if res.value is None:
                continue
            if best.value is None or res.value > best.value:
                best = res
    return best


def decide(prop: Property, res: ConditionalResult, fully_expanded: bool) -> str:
    """Outcome of comparing a (partial) conditional value with the bound.

    Partial values converge to the true value from below, which is what
    makes the early Proven/Refuted answers sound.
    """
    value = res.value
    if value is None:
        return "Undefined" if fully_expanded else "Unknown"
    cmp, bound = prop.comparison, prop.threshold
    if cmp == ">=":
        holds_now = value >= bound
    elif cmp == ">":
        holds_now = value > bound
    elif cmp == "<=":
        holds_now = value > bound  # exceeded: can only grow further
    else:  # "<"
        holds_now = value >= bound
    if cmp in (">=", ">"):
        if holds_now:
            return "Proven"
        return "Refuted" if fully_expanded else "Unknown"
    if holds_now:
        return "Refuted"
    return "Proven" if fully_expanded else "Unknown"


def bmc(
    program: Program,
    prop: Property,
    config: ExplorationConfig | None = None,
    limits: SolverLimits = DEFAULT_LIMITS,
    scheduler_cap: int = 2**20,
    deadline: float | None = None,
    progress: Callable[[dict], None] | None = None,
) -> Report:
    """Alternate expansion and checking until a verdict or a budget ends.

    The deadline (``time.monotonic`` timestamp) is honored between rounds.
    """
    config = config or ExplorationConfig()
    started = time.monotonic()
    model = PartialModel(program, target=prop.target)
    explorer = Explorer(model, config, progress)
    iterations: list[IterationRow] = []
    verdict = Verdict("Unknown")

    round_no = 0
    while True:
        round_no += 1
        expansion = explorer.expand_round()
        try:
            res = conditional_value(model, prop, limits, scheduler_cap)
        except SchedulerExplosion as exc:
            verdict = Verdict("Unknown", iteration=round_no, note=str(exc))
            break
        stats = model.stats()
        iterations.append(
            IterationRow(
                round=round_no,
                states=stats["states"],
                transitions=stats["transitions"],
                numerator=res.numerator,
                denominator=res.denominator,
                value=res.value,
            )
        )
        outcome = decide(prop, res, expansion.fully_expanded)
        if outcome in ("Proven", "Refuted", "Undefined"):
            verdict = Verdict(outcome, res.value, round_no)
            break
        if expansion.fully_expanded:
            verdict = Verdict(outcome, res.value, round_no)
            break
        if expansion.capped:
            verdict = Verdict(
                "Unknown", res.value, round_no, note="state cap reached"
            )
            break
        if config.max_rounds is not None and round_no >= config.max_rounds:
            verdict = Verdict("Unknown", res.value, round_no, note="round limit")
            break
        if deadline is not None and time.monotonic() > deadline:
            verdict = Verdict("Unknown", res.value, round_no, note="timeout")
            break

    return Report(
        property=str(prop),
        verdict=verdict.outcome,
        iterations=iterations,
        wall_clock_seconds=time.monotonic() - started,
        note=verdict.note,
        value=verdict.value,
        fully_expanded=expansion.fully_expanded,
    )


# -- Monte Carlo cross-validation ---------------------------------------------------


@dataclass(frozen=True)
class SimulationEstimate:
    runs: int
    accepted: int
    bad: int
    diverged: int
    estimate: float | None  # None when no run was accepted
    ci_low: float | None
    ci_high: float | None
    seed: int


_TERM, _BAD, _DIVERGED = 0, 1, 2


def _runner_source(program: Program, max_steps: int) -> str:
    """Generate one Python function executing a single sampled run."""
    sources = {name: f"v_{name}" for name in program.variables}
    lines = [
        "def run(rng):",
        "    random = rng.random",
        "    randint = rng.randint",
        "    steps = 0",
    ]
    out = lines.append
    for var, init in zip(program.variables, program.initializers):
        out(f"    v_{var} = {init}")

    def a_src(expr) -> str:
        return semantics.arith_source(expr, sources)

    def b_src(expr) -> str:
        return semantics.bool_source(expr, sources)

    def emit(stmt, depth):
        pad = "    " * depth
        match stmt:
            case ast.Skip():
                out(f"{pad}pass")
            case ast.Abort():
                out(f"{pad}return {_DIVERGED}, None")
            case ast.Assign(var, expr):
                out(f"{pad}v_{var} = {a_src(expr)}")
            case ast.UniformAssign(var, lo, hi):
                out(f"{pad}v_{var} = randint({a_src(lo)}, {a_src(hi)})")
            case ast.Observe(cond):
                out(f"{pad}if not {b_src(cond)}:")
                out(f"{pad}    return {_BAD}, None")
            case ast.Seq(first, second):
                emit(first, depth)
                emit(second, depth)
            case ast.If(cond, then_branch, else_branch):
                out(f"{pad}if {b_src(cond)}:")
                emit(then_branch, depth + 1)
                out(f"{pad}else:")
                emit(else_branch, depth + 1)
            case ast.While(cond, body):
                out(f"{pad}while {b_src(cond)}:")
                out(f"{pad}    steps += 1")
                out(f"{pad}    if steps > {max_steps}:")
                out(f"{pad}        return {_DIVERGED}, None")
                emit(body, depth + 1)
            case ast.ProbChoice(weight, left, right):
                out(f"{pad}if random() < {float(weight.constant_value())!r}:")
                emit(left, depth + 1)
                out(f"{pad}else:")
                emit(right, depth + 1)
            case _:
                raise TypeError(f"cannot simulate statement {stmt!r}")

    emit(program.body, 1)
    values = ", ".join(f"v_{var}" for var in program.variables)
    out(f"    return {_TERM}, ({values},)")
    return "\n".join(lines)


def simulate(
    program: Program,
    prop: Property,
    runs: int,
    seed: int = 0,
    max_steps: int = 100_000,
) -> SimulationEstimate:
    """Forward-sample the program and estimate the conditional value.

    Observation violations condition the estimate away; runs exceeding
    ``max_steps`` loop iterations count as diverged and keep reward 0 in
    the denominator, mirroring how trapped mass is valued.
    """
    import random

    if program.parameters:
        raise ValueError("simulation needs a parameter-free program")
    if any(isinstance(n, NondetChoice) for n in walk(program.body)):
        raise ValueError("simulation needs a deterministic program")

    namespace: dict = {}
    exec(_runner_source(program, max_steps), namespace)
    run = namespace["run"]
    reward = _simulation_reward(program, prop)

    rng = random.Random(seed)
    n_bad = n_div = n_acc = 0
    sum_r = 0.0
    sum_r2 = 0.0
    for _ in range(runs):
        kind, values = run(rng)
        if kind == _BAD:
            n_bad += 1
        elif kind == _DIVERGED:
            n_div += 1
        else:
            n_acc += 1
            r = reward(values)
            sum_r += r
            sum_r2 += r * r

    if n_acc == 0:
        return SimulationEstimate(runs, 0, n_bad, n_div, None, None, None, seed)
    sy = runs - n_bad
    est = sum_r / sy
    # ratio-estimator (delta method) standard error; Y is the 0/1
    # acceptance-in-denominator indicator, so sum XY = sum X, sum Y^2 = sum Y
    var_term = sum_r2 - 2 * est * sum_r + est * est * sy
    se = math.sqrt(max(var_term, 0.0)) / sy
    return SimulationEstimate(
        runs, n_acc, n_bad, n_div, est, est - 1.96 * se, est + 1.96 * se, seed
    )


def _simulation_reward(program: Program, prop: Property) -> Callable:
    from .lang.ast import BExpr

    if isinstance(prop.target, BExpr):
        test = semantics.compile_bool(prop.target, program.var_index)
        return lambda v: 1.0 if test(v) else 0.0
    value = semantics.compile_arith(prop.target, program.var_index)
    return lambda v: float(value(v))

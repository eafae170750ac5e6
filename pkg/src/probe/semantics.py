"""One-step operational semantics.

A runtime configuration is either a running pair (continuation, valuation),
a successfully terminated state carrying its final valuation, the single
observation-violation state, or the single absorbing end state.  Stepping a
configuration yields, per enabled action, a probability distribution over
successor configurations:

    running      -> dictated by the head statement of the continuation
    terminated   -> the end state, with probability 1
    violation    -> the end state, with probability 1
    end state    -> itself, with probability 1

Continuations are flat tuples of statement frames rather than re-built
syntax trees: sequencing pushes frames, so residues of syntactically
different programs that denote the same remaining work collapse to one
configuration.  The head frame is always a non-Seq statement.

The module keeps two evaluation paths on purpose.  ``eval_arith`` and
``eval_bool`` walk the tree and are the readable reference; the engine
compiles every expression (and every continuation's step rule) to a closure
over the valuation tuple, which is what makes million-state exploration
affordable in pure Python.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Union

from .lang.ast import (
    Abort,
    Add,
    AExpr,
    And,
    Assign,
    BExpr,
    BoolLit,
    Compare,
    If,
    IntLit,
    Mul,
    NondetChoice,
    Not,
    Observe,
    Or,
    ProbChoice,
    Program,
    Seq,
    Skip,
    Stmt,
    Sub,
    UniformAssign,
    Var,
    While,
)
from .polynomials import Polynomial

ONE = Fraction(1)

# Continuation ids for the distinguished configurations.  Nonnegative ids
# are running states; the engine owns the mapping id -> frame tuple.
TERM = -1
BAD = -2
SINK = -3

BAD_RAW = (BAD, ())
SINK_RAW = (SINK, ())

RawConfig = tuple  # (cont_id, values)
RawStep = tuple  # ((action, ((weight, RawConfig), ...)), ...)


class SemanticsError(RuntimeError):
    """A step could not be performed (uniform assignment with lo > hi)."""


# -- reference expression evaluation ----------------------------------------


def eval_arith(expr: AExpr, valuation: Mapping[str, int]) -> int:
    match expr:
        case IntLit(value):
            return value
        case Var(name):
            return valuation[name]
        case Add(a, b):
            return eval_arith(a, valuation) + eval_arith(b, valuation)
        case Sub(a, b):
            return eval_arith(a, valuation) - eval_arith(b, valuation)
        case Mul(a, b):
            return eval_arith(a, valuation) * eval_arith(b, valuation)
        case _:
            raise TypeError(f"not an arithmetic expression: {expr!r}")


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_bool(expr: BExpr, valuation: Mapping[str, int]) -> bool:
    match expr:
        case BoolLit(value):
            return value
        case Compare(op, a, b):
            return _CMP[op](eval_arith(a, valuation), eval_arith(b, valuation))
        case Not(operand):
            return not eval_bool(operand, valuation)
        case And(a, b):
            return eval_bool(a, valuation) and eval_bool(b, valuation)
        case Or(a, b):
            return eval_bool(a, valuation) or eval_bool(b, valuation)
        case _:
            raise TypeError(f"not a boolean expression: {expr!r}")


# -- expression compilation ---------------------------------------------------
#
# Expressions compile to Python source over per-variable source snippets:
# tuple indexing ("v[2]") in the step engine, plain locals in the
# simulation transpiler.


def tuple_sources(var_index: Mapping[str, int]) -> dict[str, str]:
    return {name: f"v[{i}]" for name, i in var_index.items()}


def arith_source(expr: AExpr, sources: Mapping[str, str]) -> str:
    match expr:
        case IntLit(value):
            return repr(value)
        case Var(name):
            return sources[name]
        case Add(a, b):
            return f"({arith_source(a, sources)}+{arith_source(b, sources)})"
        case Sub(a, b):
            return f"({arith_source(a, sources)}-{arith_source(b, sources)})"
        case Mul(a, b):
            return f"({arith_source(a, sources)}*{arith_source(b, sources)})"
        case _:
            raise TypeError(f"not an arithmetic expression: {expr!r}")


def bool_source(expr: BExpr, sources: Mapping[str, str]) -> str:
    match expr:
        case BoolLit(value):
            return repr(value)
        case Compare(op, a, b):
            py = "==" if op == "=" else op
            return f"({arith_source(a, sources)}{py}{arith_source(b, sources)})"
        case Not(operand):
            return f"(not {bool_source(operand, sources)})"
        case And(a, b):
            return f"({bool_source(a, sources)} and {bool_source(b, sources)})"
        case Or(a, b):
            return f"({bool_source(a, sources)} or {bool_source(b, sources)})"
        case _:
            raise TypeError(f"not a boolean expression: {expr!r}")


def compile_arith(expr: AExpr, var_index: Mapping[str, int]) -> Callable:
    return eval(f"lambda v: {arith_source(expr, tuple_sources(var_index))}")


def compile_bool(expr: BExpr, var_index: Mapping[str, int]) -> Callable:
    return eval(f"lambda v: {bool_source(expr, tuple_sources(var_index))}")


def compile_update(var: str, expr_src: str, width: int, var_index: Mapping[str, int]) -> Callable:
    """Compile ``v -> v[var := expr]`` into a single tuple constructor."""
    i = var_index[var]
    parts = [f"v[{j}]" if j != i else expr_src for j in range(width)]
    return eval(f"lambda v: ({', '.join(parts)},)")


def compile_setter(var: str, width: int, var_index: Mapping[str, int]) -> Callable:
    i = var_index[var]
    parts = [f"v[{j}]" if j != i else "x" for j in range(width)]
    return eval(f"lambda v, x: ({', '.join(parts)},)")


# -- public configurations -----------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    """A state of the operational model, comparable and hashable by value.

    kind is one of "run", "term", "bad", "sink".  Running configurations
    carry the remaining frames and the valuation as a tuple in declaration
    order; terminated ones keep only the valuation.
    """

    kind: str
    frames: tuple[Stmt, ...] = ()
    values: tuple[int, ...] = ()

    def valuation(self, program: Program) -> dict[str, int]:
        return program.valuation_dict(self.values)


StepResult = tuple  # ((action, ((weight, Configuration), ...)), ...)

Weight = Union[Fraction, Polynomial]


def push(stmt: Stmt, rest: tuple[Stmt, ...]) -> tuple[Stmt, ...]:
    """Prepend a statement to a frame stack, flattening sequencing."""
    flat: list[Stmt] = []
    stack = [stmt]
    while stack:
        s = stack.pop()
        if isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
        else:
            flat.append(s)
    return tuple(flat) + rest


def initial_configuration(program: Program) -> Configuration:
    return Configuration("run", push(program.body, ()), program.initial_valuation())


class StepEngine:
    """Compiled one-step semantics for a single program.

    Continuation tuples are interned to dense ids; each id lazily gets a
    closure computing its raw step result.  Raw configurations are
    ``(cont_id, values)`` pairs, with negative ids for the distinguished
    states, so the explorer never touches AST nodes on the hot path.
    """

    def __init__(self, program: Program):
        self.program = program
        self.var_index = program.var_index
        self.width = len(program.variables)
        self.parametric = bool(program.parameters)
        self.cont_ids: dict[tuple[Stmt, ...], int] = {}
        self.conts: list[tuple[Stmt, ...]] = []
        self.steppers: list[Callable | None] = []
        self._sources = tuple_sources(program.var_index)
        self._expr_cache: dict = {}
        self._fractions: dict[int, Fraction] = {}

    # -- continuation interning -------------------------------------------

    def intern_cont(self, frames: tuple[Stmt, ...]) -> int:
        cid = self.cont_ids.get(frames)
        if cid is None:
            cid = len(self.conts)
            self.cont_ids[frames] = cid
            self.conts.append(frames)
            self.steppers.append(None)
        return cid

    def initial_raw(self) -> RawConfig:
        cid = self.intern_cont(push(self.program.body, ()))
        return (cid, self.program.initial_valuation())

    # -- raw/public conversion ----------------------------------------------

    def to_configuration(self, raw: RawConfig) -> Configuration:
        cid, values = raw
        if cid >= 0:
            return Configuration("run", self.conts[cid], values)
        if cid == TERM:
            return Configuration("term", (), values)
        return Configuration("bad") if cid == BAD else Configuration("sink")

    def to_raw(self, config: Configuration) -> RawConfig:
        match config.kind:
            case "run":
                return (self.intern_cont(config.frames), config.values)
            case "term":
                return (TERM, config.values)
            case "bad":
                return BAD_RAW
            case "sink":
                return SINK_RAW
        raise ValueError(f"unknown configuration kind {config.kind!r}")

    # -- stepping -------------------------------------------------------------

    def step_raw(self, raw: RawConfig) -> RawStep:
        cid = raw[0]
        if cid >= 0:
            stepper = self.steppers[cid] or self._compile(cid)
            return stepper(raw[1])
        # terminated and violation states move to the end state, which loops
        return (("none", ((ONE, SINK_RAW),)),)

    def _fraction(self, n: int) -> Fraction:
        f = self._fractions.get(n)
        if f is None:
            f = Fraction(1, n)
            self._fractions[n] = f
        return f

    def _arith_src(self, expr) -> str:
        src = self._expr_cache.get(expr)
        if src is None:
            src = arith_source(expr, self._sources)
            self._expr_cache[expr] = src
        return src

    def _pop_raw(self, rest: tuple[Stmt, ...]):
        """Successor maker for rules that consume the head frame."""
        if rest:
            rid = self.intern_cont(rest)
            return lambda v: (rid, v)
        return lambda v: (TERM, v)

    def _compile(self, cid: int) -> Callable:
        frames = self.conts[cid]
        head, rest = frames[0], frames[1:]
        stepper = self._compile_head(cid, head, rest)
        self.steppers[cid] = stepper
        return stepper

    def _compile_head(self, cid: int, head: Stmt, rest: tuple[Stmt, ...]) -> Callable:
        match head:
            case Skip():
                succ = self._pop_raw(rest)
                return lambda v: (("none", ((ONE, succ(v)),)),)

            case Abort():
                return lambda v: (("none", ((ONE, (cid, v)),)),)

            case Assign(var, expr):
                update = compile_update(var, self._arith_src(expr), self.width, self.var_index)
                if rest:
                    rid = self.intern_cont(rest)
                    return lambda v: (("none", ((ONE, (rid, update(v))),)),)
                return lambda v: (("none", ((ONE, (TERM, update(v))),)),)

            case UniformAssign(var, lo, hi):
                lo_f = compile_arith(lo, self.var_index)
                hi_f = compile_arith(hi, self.var_index)
                setter = compile_setter(var, self.width, self.var_index)
                rid = self.intern_cont(rest) if rest else TERM
                fraction = self._fraction

                def uniform_step(v):
                    a, b = lo_f(v), hi_f(v)
                    if a > b:
                        raise SemanticsError(f"unif({a}, {b}) has an empty range")
                    w = fraction(b - a + 1)
                    return (("none", tuple((w, (rid, setter(v, x))) for x in range(a, b + 1))),)

                return uniform_step

            case Observe(cond):
                test = compile_bool(cond, self.var_index)
                succ = self._pop_raw(rest)
                return lambda v: (("none", ((ONE, succ(v) if test(v) else BAD_RAW),)),)

            case If(cond, then_branch, else_branch):
                test = compile_bool(cond, self.var_index)
                tid = self.intern_cont(push(then_branch, rest))
                eid = self.intern_cont(push(else_branch, rest))
                return lambda v: (("none", ((ONE, (tid if test(v) else eid, v)),)),)

            case While(cond, body):
                test = compile_bool(cond, self.var_index)
                body_id = self.intern_cont(push(body, (head,) + rest))
                exit_succ = self._pop_raw(rest)
                return lambda v: (
                    ("none", ((ONE, (body_id, v) if test(v) else exit_succ(v)),)),
                )

            case ProbChoice(weight, left, right):
                lid = self.intern_cont(push(left, rest))
                rid = self.intern_cont(push(right, rest))
                if not self.parametric or weight.is_constant():
                    p = weight.constant_value()
                    if p == 1:
                        return lambda v: (("none", ((ONE, (lid, v)),)),)
                    if p == 0:
                        return lambda v: (("none", ((ONE, (rid, v)),)),)
                    q = 1 - p
                    return lambda v: (("none", ((p, (lid, v)), (q, (rid, v)))),)
                complement = Polynomial.constant(1) - weight
                if complement.is_zero():
                    return lambda v: (("none", ((weight, (lid, v)),)),)
                return lambda v: (
                    ("none", ((weight, (lid, v)), (complement, (rid, v)))),
                )

            case NondetChoice(left, right):
                lid = self.intern_cont(push(left, rest))
                rid = self.intern_cont(push(right, rest))
                return lambda v: (
                    ("left", ((ONE, (lid, v)),)),
                    ("right", ((ONE, (rid, v)),)),
                )

        raise TypeError(f"not a statement: {head!r}")


_ENGINES: dict[Program, StepEngine] = {}


def get_engine(program: Program) -> StepEngine:
    engine = _ENGINES.get(program)
    if engine is None:
        engine = StepEngine(program)
        _ENGINES[program] = engine
    return engine


def step(program: Program, config: Configuration) -> StepResult:
    """One application of the structural rules, as value-level data."""
    engine = get_engine(program)
    raw_result = engine.step_raw(engine.to_raw(config))
    return tuple(
        (action, tuple((w, engine.to_configuration(succ)) for w, succ in dist))
        for action, dist in raw_result
    )


def reward(config: Configuration, target: AExpr | BExpr, program: Program) -> Fraction:
    """Reward of a configuration under a post-expectation.

    Only successfully terminated states carry reward: the value of the
    post-expectation there, or the 0/1 indicator when the target is a
    predicate.  Negative values are rejected, post-expectations map into
    the nonnegative reals.
    """
    if config.kind != "term":
        return Fraction(0)
    valuation = config.valuation(program)
    if isinstance(target, BExpr):
        return Fraction(1) if eval_bool(target, valuation) else Fraction(0)
    value = eval_arith(target, valuation)
    if value < 0:
        raise ValueError(f"post-expectation is negative ({value}) at {valuation}")
    return Fraction(value)

"""Syntax trees for the guarded probabilistic language.

Nodes are hash-consed: constructing a node with the same class and fields
twice returns the same object.  Structural equality therefore collapses to
identity, which makes continuation stacks cheap to deduplicate during state
space exploration.  Nodes are immutable; never mutate a field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..polynomials import Polynomial

_POOL: dict = {}


class Node:
    __slots__ = ()
    _fields: tuple[str, ...] = ()

    def __new__(cls, *args):
        key = (cls, *args)
        hit = _POOL.get(key)
        if hit is not None:
            return hit
        self = object.__new__(cls)
        for name, val in zip(cls._fields, args, strict=True):
            object.__setattr__(self, name, val)
        _POOL[key] = self
        return self

    def __init__(self, *args):
        pass  # fields are set in __new__

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} nodes are immutable")

    def __repr__(self):
        inner = ", ".join(repr(getattr(self, f)) for f in self._fields)
        return f"{type(self).__name__}({inner})"

    def children(self):
        return tuple(getattr(self, f) for f in self._fields)


# -- arithmetic expressions (integer valued) --------------------------------

class AExpr(Node):
    __slots__ = ()


class IntLit(AExpr):
    __slots__ = ("value",)
    _fields = ("value",)
    __match_args__ = ("value",)


class Var(AExpr):
    __slots__ = ("name",)
    _fields = ("name",)
    __match_args__ = ("name",)


class Add(AExpr):
    __slots__ = ("left", "right")
    _fields = ("left", "right")
    __match_args__ = ("left", "right")


class Sub(AExpr):
    __slots__ = ("left", "right")
    _fields = ("left", "right")
    __match_args__ = ("left", "right")


class Mul(AExpr):
    __slots__ = ("left", "right")
    _fields = ("left", "right")
    __match_args__ = ("left", "right")


# -- boolean expressions -----------------------------------------------------

class BExpr(Node):
    __slots__ = ()


class BoolLit(BExpr):
    __slots__ = ("value",)
    _fields = ("value",)
    __match_args__ = ("value",)


class Compare(BExpr):
    """op is one of =, !=, <, <=, >, >=."""

    __slots__ = ("op", "left", "right")
    _fields = ("op", "left", "right")
    __match_args__ = ("op", "left", "right")


class Not(BExpr):
    __slots__ = ("operand",)
    _fields = ("operand",)
    __match_args__ = ("operand",)


class And(BExpr):
    __slots__ = ("left", "right")
    _fields = ("left", "right")
    __match_args__ = ("left", "right")


class Or(BExpr):
    __slots__ = ("left", "right")
    _fields = ("left", "right")
    __match_args__ = ("left", "right")


# -- statements ---------------------------------------------------------------

class Stmt(Node):
    __slots__ = ()


class Skip(Stmt):
    __slots__ = ()


class Abort(Stmt):
    __slots__ = ()


class Assign(Stmt):
    __slots__ = ("var", "expr")
    _fields = ("var", "expr")
    __match_args__ = ("var", "expr")


class UniformAssign(Stmt):
    """var := unif(lo, hi), uniform over the integers lo..hi inclusive."""

    __slots__ = ("var", "lo", "hi")
    _fields = ("var", "lo", "hi")
    __match_args__ = ("var", "lo", "hi")


class Observe(Stmt):
    __slots__ = ("cond",)
    _fields = ("cond",)
    __match_args__ = ("cond",)


class Seq(Stmt):
    __slots__ = ("first", "second")
    _fields = ("first", "second")
    __match_args__ = ("first", "second")


class If(Stmt):
    __slots__ = ("cond", "then_branch", "else_branch")
    _fields = ("cond", "then_branch", "else_branch")
    __match_args__ = ("cond", "then_branch", "else_branch")


class While(Stmt):
    __slots__ = ("cond", "body")
    _fields = ("cond", "body")
    __match_args__ = ("cond", "body")


class ProbChoice(Stmt):
    """{left} [weight] {right}; weight is a polynomial in the parameters."""

    __slots__ = ("weight", "left", "right")
    _fields = ("weight", "left", "right")
    __match_args__ = ("weight", "left", "right")


class NondetChoice(Stmt):
    __slots__ = ("left", "right")
    _fields = ("left", "right")
    __match_args__ = ("left", "right")


def seq(stmts) -> Stmt:
    """Fold a statement list into a right-nested Seq (Skip when empty)."""
    stmts = list(stmts)
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


@dataclass(frozen=True)
class Program:
    """A parsed program: declarations, inferred parameters, and a body.

    Variables live in one global scope and hold unbounded integers.  Any
    identifier that occurs in a probability annotation without having been
    declared is a parameter of the program.
    """

    name: str
    variables: tuple[str, ...]
    initializers: tuple[int, ...]
    parameters: tuple[str, ...]
    body: Stmt
    var_index: dict = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(
            self, "var_index", {v: i for i, v in enumerate(self.variables)}
        )

    def initial_valuation(self) -> tuple[int, ...]:
        return self.initializers

    def valuation_dict(self, values: tuple[int, ...]) -> dict[str, int]:
        return dict(zip(self.variables, values))


def walk(node: Node):
    """Yield node and all descendants, preorder."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        for child in n.children():
            if isinstance(child, Node):
                stack.append(child)


def collect_variables(node: Node) -> set[str]:
    return {n.name for n in walk(node) if isinstance(n, Var)}


def constant_weight(value) -> Polynomial:
    return Polynomial.constant(Fraction(value))

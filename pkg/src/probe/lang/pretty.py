"""Canonical source renderer for parsed programs.

The output re-parses to the identical (hash-consed) AST, which the test
suite relies on.  Rational weights print as fractions, never as decimals.
"""

from __future__ import annotations

from .ast import (
    Abort,
    Add,
    And,
    Assign,
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
    Sub,
    UniformAssign,
    Var,
    While,
)

_INDENT = "    "


def pretty(program: Program) -> str:
    lines = []
    for name, init in zip(program.variables, program.initializers):
        lines.append(f"int {name} := {init};")
    if program.variables:
        lines.append("")
    _stmt(program.body, lines, 0)
    return "\n".join(lines) + "\n"


def _stmt(node, lines: list[str], depth: int):
    pad = _INDENT * depth
    match node:
        case Skip():
            lines.append(f"{pad}skip;")
        case Abort():
            lines.append(f"{pad}abort;")
        case Assign(var, expr):
            lines.append(f"{pad}{var} := {arith_str(expr)};")
        case UniformAssign(var, lo, hi):
            lines.append(f"{pad}{var} := unif({arith_str(lo)}, {arith_str(hi)});")
        case Observe(cond):
            lines.append(f"{pad}observe({bool_str(cond)});")
        case Seq(first, second):
            _stmt(first, lines, depth)
            _stmt(second, lines, depth)
        case If(cond, then_branch, else_branch):
            lines.append(f"{pad}if ({bool_str(cond)}) {{")
            _stmt(then_branch, lines, depth + 1)
            if else_branch is not Skip():
                lines.append(f"{pad}}} else {{")
                _stmt(else_branch, lines, depth + 1)
            lines.append(f"{pad}}}")
        case While(cond, body):
            lines.append(f"{pad}while ({bool_str(cond)}) {{")
            _stmt(body, lines, depth + 1)
            lines.append(f"{pad}}}")
        case ProbChoice(weight, left, right):
            lines.append(f"{pad}{{")
            _stmt(left, lines, depth + 1)
            lines.append(f"{pad}}} [{weight}] {{")
            _stmt(right, lines, depth + 1)
            lines.append(f"{pad}}}")
        case NondetChoice(left, right):
            lines.append(f"{pad}{{")
            _stmt(left, lines, depth + 1)
            lines.append(f"{pad}}} [] {{")
            _stmt(right, lines, depth + 1)
            lines.append(f"{pad}}}")
        case _:
            raise TypeError(f"not a statement: {node!r}")


def arith_str(node, parent_prec: int = 0) -> str:
    match node:
        case IntLit(value):
            text, prec = str(value), 3 if value >= 0 else 1
        case Var(name):
            text, prec = name, 3
        case Add(a, b):
            text, prec = f"{arith_str(a, 1)} + {arith_str(b, 2)}", 1
        case Sub(a, b):
            text, prec = f"{arith_str(a, 1)} - {arith_str(b, 2)}", 1
        case Mul(a, b):
            text, prec = f"{arith_str(a, 2)} * {arith_str(b, 3)}", 2
        case _:
            raise TypeError(f"not an arithmetic expression: {node!r}")
    return f"({text})" if prec < parent_prec else text


def bool_str(node) -> str:
    # The parser refuses bare `&`/`|` mixing, so connective operands are
    # printed parenthesized whenever they are connectives themselves.
    match node:
        case BoolLit(value):
            return "true" if value else "false"
        case Compare(op, a, b):
            return f"{arith_str(a)} {op} {arith_str(b)}"
        case Not(BoolLit(value)):
            return f"!{'true' if value else 'false'}"
        case Not(operand):
            return f"!({bool_str(operand)})"
        case And(a, b):
            return f"{_operand(a)} & {_operand(b)}"
        case Or(a, b):
            return f"{_operand(a)} | {_operand(b)}"
        case _:
            raise TypeError(f"not a boolean expression: {node!r}")


def _operand(node) -> str:
    text = bool_str(node)
    return f"({text})" if isinstance(node, (And, Or)) else text

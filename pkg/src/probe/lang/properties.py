"""Property specifications: conditional probability and expectation bounds.

Grammar:

    property ::= ("min" | "max")? ("P" | "E") cmp rational "[" target "]"
    cmp      ::= ">=" | ">" | "<=" | "<"

where the target is a boolean predicate for P and an arithmetic expression
(the post-expectation) for E.  Both are evaluated on the final variable
valuation of successfully terminating runs.  Without an explicit mode
prefix, lower bounds default to min and upper bounds to max, so a verdict
covers every scheduler.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .ast import AExpr, BExpr, Program
from .parser import ParseError, Parser, tokenize
from .pretty import arith_str, bool_str

_COMPARISONS = (">=", ">", "<=", "<")


@dataclass(frozen=True)
class Property:
    kind: str  # "P" or "E"
    comparison: str
    threshold: Fraction
    target: BExpr | AExpr
    mode: str  # "min" or "max"

    @property
    def lower_bounded(self) -> bool:
        return self.comparison in (">=", ">")

    def __str__(self):
        target = bool_str(self.target) if self.kind == "P" else arith_str(self.target)
        return f"{self.mode} {self.kind} {self.comparison} {self.threshold} [ {target} ]"


def parse_property(text: str, program: Program) -> Property:
    """Parse a property against a program's declarations."""
    parser = Parser(tokenize(text))
    parser.declared = dict.fromkeys(program.variables, 0)

    mode = None
    tok = parser.peek()
    if tok.text in ("min", "max"):
        mode = tok.text
        parser.advance()
    head = parser.peek()
    if head.text not in ("P", "E"):
        raise ParseError(f"expected P or E, got {head.text!r}", head.line, head.col)
    kind = head.text
    parser.advance()

    cmp_tok = parser.peek()
    if cmp_tok.text not in _COMPARISONS:
        raise ParseError(
            f"expected one of {', '.join(_COMPARISONS)}, got {cmp_tok.text!r}",
            cmp_tok.line,
            cmp_tok.col,
        )
    parser.advance()

    threshold = _parse_rational(parser)
    parser.expect("[")
    target = parser.parse_bool() if kind == "P" else parser.parse_arith()
    parser.expect("]")
    end = parser.peek()
    if end.kind != "eof":
        raise ParseError(f"trailing input {end.text!r}", end.line, end.col)

    if kind == "P" and not 0 <= threshold <= 1:
        raise ValueError(f"probability threshold {threshold} outside [0, 1]")
    if kind == "E" and threshold < 0:
        raise ValueError(f"negative expectation threshold {threshold}")

    if mode is None:
        mode = "min" if cmp_tok.text in (">=", ">") else "max"
    return Property(kind=kind, comparison=cmp_tok.text, threshold=threshold, target=target, mode=mode)


def _parse_rational(parser: Parser) -> Fraction:
    negative = parser.accept("-")
    tok = parser.peek()
    if tok.kind == "dec":
        parser.advance()
        value = Fraction(tok.text)
    elif tok.kind == "int":
        parser.advance()
        value = Fraction(int(tok.text))
        if parser.accept("/"):
            den = parser.peek()
            if den.kind != "int":
                raise ParseError("expected denominator", den.line, den.col)
            parser.advance()
            value /= int(den.text)
    else:
        raise ParseError(f"expected a number, got {tok.text!r}", tok.line, tok.col)
    return -value if negative else value


def load_properties(text: str, program: Program) -> list[Property]:
    """Parse a sidecar properties file: one property per line, # comments."""
    props = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            props.append(parse_property(line, program))
    return props

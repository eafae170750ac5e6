"""Recursive-descent parser for the guarded probabilistic language.

Concrete syntax (C-like, `:=` assignment, `//` comments):

    program   ::= decl* stmt*
    decl      ::= "int" IDENT (":=" "-"? INT)? ";"
    stmt      ::= "skip" ";" | "abort" ";"
                | IDENT ":=" "unif" "(" aexpr "," aexpr ")" ";"
                | IDENT ":=" aexpr ";"
                | "if" "(" bexpr ")" block ("else" block)?
                | "while" "(" bexpr ")" block
                | "observe" "(" bexpr ")" ";"
                | block "[" weight "]" block      -- probabilistic choice
                | block "[" "]" block             -- nondeterministic choice
                | block                           -- grouping
    block     ::= "{" stmt* "}"

Probability weights are polynomial expressions over numerals and parameter
names; `0.091` and `1/100` both denote exact rationals.  An identifier used
in a weight that is not a declared variable is collected as a parameter.

Boolean operators: `!` binds tightest, then `&`, then `|`.  Mixing `&` and
`|` at the same parenthesis depth is rejected rather than silently resolved;
write the parentheses out.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..polynomials import Polynomial
from . import ast
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
    Skip,
    Sub,
    UniformAssign,
    Var,
    While,
)

KEYWORDS = {"int", "if", "else", "while", "observe", "skip", "abort", "true", "false", "unif"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<dec>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>:=|!=|<=|>=|\|\||&&|[=<>!&|+\-*/;,(){}\[\]])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.declared: dict[str, int] = {}
        self.parameters: set[str] = set()

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def check(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "eof"

    def accept(self, text: str) -> bool:
        if self.check(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind == "eof" or tok.text != text:
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(f"expected {text!r}, got {got}", tok.line, tok.col)
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise ParseError(f"expected identifier, got {tok.text!r}", tok.line, tok.col)
        return self.advance()

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    # -- program -----------------------------------------------------------

    def parse_program(self, name: str) -> Program:
        while self.check("int"):
            self.parse_declaration()
        stmts = []
        while self.peek().kind != "eof":
            stmts.append(self.parse_statement())
        body = ast.seq(stmts)
        return Program(
            name=name,
            variables=tuple(self.declared),
            initializers=tuple(self.declared.values()),
            parameters=tuple(sorted(self.parameters)),
            body=body,
        )

    def parse_declaration(self):
        self.expect("int")
        tok = self.expect_ident()
        if tok.text in self.declared:
            raise ParseError(f"duplicate declaration of {tok.text!r}", tok.line, tok.col)
        value = 0
        if self.accept(":="):
            negative = self.accept("-")
            num = self.peek()
            if num.kind != "int":
                raise self.error("expected integer initializer")
            self.advance()
            value = -int(num.text) if negative else int(num.text)
        self.expect(";")
        self.declared[tok.text] = value

    # -- statements ----------------------------------------------------------

    def parse_statement(self):
        tok = self.peek()
        if tok.text == "skip":
            self.advance()
            self.expect(";")
            return Skip()
        if tok.text == "abort":
            self.advance()
            self.expect(";")
            return Abort()
        if tok.text == "observe":
            self.advance()
            self.expect("(")
            cond = self.parse_bool()
            self.expect(")")
            self.expect(";")
            return Observe(cond)
        if tok.text == "if":
            self.advance()
            self.expect("(")
            cond = self.parse_bool()
            self.expect(")")
            then_branch = self.parse_block()
            else_branch = self.parse_block() if self.accept("else") else Skip()
            return If(cond, then_branch, else_branch)
        if tok.text == "while":
            self.advance()
            self.expect("(")
            cond = self.parse_bool()
            self.expect(")")
            return While(cond, self.parse_block())
        if tok.text == "{":
            left = self.parse_block()
            if self.check("["):
                bracket = self.advance()
                if self.accept("]"):
                    return NondetChoice(left, self.parse_block())
                weight = self.parse_weight(bracket)
                self.expect("]")
                return ProbChoice(weight, left, self.parse_block())
            return left
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            target = self.advance()
            self.require_declared(target)
            self.expect(":=")
            if self.check("unif"):
                self.advance()
                self.expect("(")
                lo = self.parse_arith()
                self.expect(",")
                hi = self.parse_arith()
                self.expect(")")
                self.expect(";")
                return UniformAssign(target.text, lo, hi)
            expr = self.parse_arith()
            self.expect(";")
            return Assign(target.text, expr)
        raise self.error(f"expected a statement, got {tok.text!r}")

    def parse_block(self):
        self.expect("{")
        stmts = []
        while not self.check("}"):
            if self.peek().kind == "eof":
                raise self.error("unterminated block")
            stmts.append(self.parse_statement())
        self.expect("}")
        return ast.seq(stmts)

    def require_declared(self, tok: Token):
        if tok.text not in self.declared:
            raise ParseError(f"undeclared variable {tok.text!r}", tok.line, tok.col)

    # -- probability weights -------------------------------------------------

    def parse_weight(self, open_bracket: Token) -> Polynomial:
        poly = self.parse_poly_sum()
        if not poly.variables_used():
            value = poly.constant_value()
            if not 0 <= value <= 1:
                raise ParseError(
                    f"probability {value} outside [0, 1]",
                    open_bracket.line,
                    open_bracket.col,
                )
        return poly

    def parse_poly_sum(self) -> Polynomial:
        poly = self.parse_poly_term()
        while True:
            if self.accept("+"):
                poly = poly + self.parse_poly_term()
            elif self.accept("-"):
                poly = poly - self.parse_poly_term()
            else:
                return poly

    def parse_poly_term(self) -> Polynomial:
        poly = self.parse_poly_factor()
        while True:
            if self.accept("*"):
                poly = poly * self.parse_poly_factor()
            elif self.accept("/"):
                tok = self.peek()
                divisor = self.parse_poly_factor()
                if not divisor.is_constant():
                    raise ParseError("division by a non-constant weight", tok.line, tok.col)
                if divisor.constant_value() == 0:
                    raise ParseError("division by zero in weight", tok.line, tok.col)
                poly = poly.scale(Fraction(1) / divisor.constant_value())
            else:
                return poly

    def parse_poly_factor(self) -> Polynomial:
        tok = self.peek()
        if tok.text == "-":
            self.advance()
            return -self.parse_poly_factor()
        if tok.text == "(":
            self.advance()
            poly = self.parse_poly_sum()
            self.expect(")")
            return poly
        if tok.kind == "int":
            self.advance()
            return Polynomial.constant(int(tok.text))
        if tok.kind == "dec":
            self.advance()
            return Polynomial.constant(Fraction(tok.text))
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            if tok.text in self.declared:
                raise ParseError(
                    f"variable {tok.text!r} used as a probability parameter",
                    tok.line,
                    tok.col,
                )
            self.parameters.add(tok.text)
            return Polynomial.variable(tok.text)
        raise self.error(f"expected a probability expression, got {tok.text!r}")

    # -- boolean expressions ---------------------------------------------------

    def parse_bool(self):
        node, bare_and = self.parse_conjunction()
        if not self.check("|"):
            return node
        while self.accept("|"):
            if bare_and:
                raise self.error("mixing '&' and '|' needs parentheses")
            right, right_bare = self.parse_conjunction()
            if right_bare:
                raise self.error("mixing '&' and '|' needs parentheses")
            node = Or(node, right)
        return node

    def parse_conjunction(self):
        node = self.parse_bool_atom()
        bare = False
        while self.accept("&"):
            bare = True
            node = And(node, self.parse_bool_atom())
        return node, bare

    def parse_bool_atom(self):
        tok = self.peek()
        if tok.text == "true":
            self.advance()
            return BoolLit(True)
        if tok.text == "false":
            self.advance()
            return BoolLit(False)
        if tok.text == "!":
            self.advance()
            return Not(self.parse_bool_atom())
        if tok.text == "(":
            # Could open either a boolean group or the arithmetic left side of
            # a comparison; try the boolean reading first and back off.
            saved = self.pos
            try:
                self.advance()
                inner = self.parse_bool()
                self.expect(")")
                return inner
            except ParseError:
                self.pos = saved
            return self.parse_comparison()
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_arith()
        tok = self.peek()
        if tok.text not in ("=", "!=", "<", "<=", ">", ">="):
            raise self.error(f"expected a comparison operator, got {tok.text!r}")
        self.advance()
        right = self.parse_arith()
        return Compare(tok.text, left, right)

    # -- arithmetic expressions -------------------------------------------------

    def parse_arith(self):
        node = self.parse_arith_term()
        while True:
            if self.accept("+"):
                node = Add(node, self.parse_arith_term())
            elif self.accept("-"):
                node = Sub(node, self.parse_arith_term())
            else:
                return node

    def parse_arith_term(self):
        node = self.parse_arith_factor()
        while self.accept("*"):
            node = Mul(node, self.parse_arith_factor())
        return node

    def parse_arith_factor(self):
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return IntLit(int(tok.text))
        if tok.text == "-":
            self.advance()
            inner = self.parse_arith_factor()
            if isinstance(inner, IntLit):
                return IntLit(-inner.value)
            return Sub(IntLit(0), inner)
        if tok.text == "(":
            self.advance()
            node = self.parse_arith()
            self.expect(")")
            return node
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            self.require_declared(tok)
            return Var(tok.text)
        if tok.kind == "dec":
            raise ParseError("decimal literals are only allowed in weights", tok.line, tok.col)
        raise self.error(f"expected an expression, got {tok.text!r}")


def parse_program(source: str, name: str = "program") -> Program:
    """Parse and validate a program."""
    parser = Parser(tokenize(source))
    program = parser.parse_program(name)
    return validate(program)


def validate(program: Program) -> Program:
    """Check the static well-formedness rules; returns the program unchanged.

    Parsing already enforces declaration and range rules as it goes, so this
    re-checks the invariants on the finished AST.  It is the entry point for
    programmatically constructed trees.
    """
    names = program.variables
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable declaration")
    overlap = set(names) & set(program.parameters)
    if overlap:
        raise ValueError(f"names used as both variable and parameter: {sorted(overlap)}")
    declared = set(names)
    params = set(program.parameters)
    for node in ast.walk(program.body):
        if isinstance(node, Var) and node.name not in declared:
            raise ValueError(f"undeclared variable {node.name!r}")
        if isinstance(node, (Assign, UniformAssign)) and node.var not in declared:
            raise ValueError(f"undeclared variable {node.var!r}")
        if isinstance(node, ProbChoice):
            used = set(node.weight.variables_used())
            if used & declared:
                raise ValueError(
                    f"variables {sorted(used & declared)} inside a probability weight"
                )
            if not used <= params:
                raise ValueError(f"undeclared parameters {sorted(used - params)}")
            if not used:
                value = node.weight.constant_value()
                if not 0 <= value <= 1:
                    raise ValueError(f"probability {value} outside [0, 1]")
    return program

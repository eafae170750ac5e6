"""Sparse multivariate polynomials and rational functions over exact rationals.

Transition weights in parametric models are polynomials in the program
parameters; closed forms obtained by state elimination are ratios of such
polynomials.  Everything here is exact: coefficients are ``Fraction`` and
evaluation never goes through floats.

A polynomial is stored as a mapping from exponent tuples to nonzero
coefficients.  Each instance carries the tuple of parameter names its
exponents refer to; binary operations unify the two name tuples first, so
``Polynomial.variable("f") * Polynomial.variable("b")`` just works.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

Scalar = Union[int, Fraction]

# Degree above which we stop attempting gcd reduction of rational functions.
# Elimination on models of any size produces huge numerators; reducing them
# is not worth the time, and callers only need cheap evaluation.
REDUCE_DEGREE_CAP = 40


class Polynomial:
    """Immutable sparse polynomial with Fraction coefficients."""

    __slots__ = ("params", "terms", "_hash")

    def __init__(self, params: tuple[str, ...], terms: Mapping[tuple[int, ...], Scalar]):
        clean = {}
        for exps, coeff in terms.items():
            coeff = Fraction(coeff)
            if coeff:
                clean[tuple(exps)] = coeff
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value: Scalar, params: tuple[str, ...] = ()) -> "Polynomial":
        zero = (0,) * len(params)
        return cls(params, {zero: Fraction(value)})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        return cls((name,), {(1,): Fraction(1)})

    # -- ring plumbing -----------------------------------------------------

    def lift(self, params: tuple[str, ...]) -> "Polynomial":
        """Re-express this polynomial over a superset of its parameters."""
        if params == self.params:
            return self
        pos = []
        for name in self.params:
            if name not in params:
                raise ValueError(f"cannot drop parameter {name!r}")
            pos.append(params.index(name))
        terms = {}
        for exps, coeff in self.terms.items():
            new = [0] * len(params)
            for p, e in zip(pos, exps):
                new[p] = e
            terms[tuple(new)] = coeff
        return Polynomial(params, terms)

    @staticmethod
    def _unify(a: "Polynomial", b: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if a.params == b.params:
            return a, b
        merged = tuple(sorted(set(a.params) | set(b.params)))
        return a.lift(merged), b.lift(merged)

    def _coerce(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(other, self.params)
        return None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = Polynomial._unify(self, other)
        terms = dict(a.terms)
        for exps, coeff in b.terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + coeff
        return Polynomial(a.params, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.params, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = Polynomial._unify(self, other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                key = tuple(x + y for x, y in zip(e1, e2))
                terms[key] = terms.get(key, Fraction(0)) + c1 * c2
        return Polynomial(a.params, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(1, self.params)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: Scalar) -> "Polynomial":
        c = Fraction(c)
        return Polynomial(self.params, {e: k * c for e, k in self.terms.items()})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(exps) for exps in self.terms)

    def constant_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return next(iter(self.terms.values()))

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(exps) for exps in self.terms)

    def variables_used(self) -> tuple[str, ...]:
        used = set()
        for exps in self.terms:
            for name, e in zip(self.params, exps):
                if e:
                    used.add(name)
        return tuple(sorted(used))

    def evaluate(self, point: Mapping[str, Scalar]) -> Fraction:
        """Evaluate at a parameter valuation.  Missing names raise KeyError."""
        vals = [Fraction(point[name]) for name in self.params]
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            term = coeff
            for v, e in zip(vals, exps):
                if e:
                    term *= v ** e
            total += term
        return total

    def compile(self) -> Callable[..., float]:
        """Build a float evaluator taking parameter values positionally."""
        names = [f"p{i}" for i in range(len(self.params))]
        if not self.terms:
            body = "0.0"
        else:
            pieces = []
            for exps, coeff in sorted(self.terms.items()):
                factors = [repr(float(coeff))]
                for name, e in zip(names, exps):
                    factors.extend([name] * e)
                pieces.append("*".join(factors))
            body = "+".join(pieces)
        return eval(f"lambda {', '.join(names)}: {body}" if names else f"lambda: {body}")

    # -- comparison / hashing ----------------------------------------------

    def _canonical(self):
        used = self.variables_used()
        return (used, frozenset(self.lift_to_used().terms.items()))

    def lift_to_used(self) -> "Polynomial":
        """Drop parameters with no occurrence, canonicalising the ring."""
        used = self.variables_used()
        if used == self.params:
            return self
        keep = [i for i, name in enumerate(self.params) if name in used]
        terms = {tuple(exps[i] for i in keep): c for exps, c in self.terms.items()}
        return Polynomial(used, terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_value() == other
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        h = object.__getattribute__(self, "_hash")
        if h is None:
            h = hash(self._canonical())
            object.__setattr__(self, "_hash", h)
        return h

    def __bool__(self):
        return bool(self.terms)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, coeff in sorted(self.terms.items(), key=lambda t: (-sum(t[0]), t[0])):
            factors = []
            for name, e in zip(self.params, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append("*".join(factors))
            elif coeff == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(str(coeff) + "*" + "*".join(factors))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"Polynomial({self})"


def _univariate_coeffs(p: Polynomial) -> list[Fraction] | None:
    """Dense coefficient list if p uses at most one variable, else None."""
    used = p.variables_used()
    if len(used) > 1:
        return None
    q = p.lift_to_used()
    deg = q.total_degree()
    coeffs = [Fraction(0)] * (deg + 1)
    for exps, c in q.terms.items():
        coeffs[exps[0] if exps else 0] = c
    return coeffs


def _poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Best-effort gcd used to keep rational functions small.

    Handles the univariate case with Euclid's algorithm and falls back to
    sympy for multivariate inputs under the degree cap.  Returning 1 is
    always sound, it just skips the reduction.
    """
    one = Polynomial.constant(1)
    if a.is_zero() or b.is_zero() or a.is_constant() or b.is_constant():
        return one
    if a.total_degree() > REDUCE_DEGREE_CAP or b.total_degree() > REDUCE_DEGREE_CAP:
        return one
    used = tuple(sorted(set(a.variables_used()) | set(b.variables_used())))
    if len(used) == 1:
        ca = _univariate_coeffs(a)
        cb = _univariate_coeffs(b)
        g = _euclid(ca, cb)
        if len(g) <= 1:
            return one
        return Polynomial(used, {(i,): c for i, c in enumerate(g)})
    try:
        import sympy

        syms = {name: sympy.Symbol(name) for name in used}

        def convert(p: Polynomial):
            p = p.lift(used)
            expr = sympy.Integer(0)
            for exps, c in p.terms.items():
                term = sympy.Rational(c.numerator, c.denominator)
                for name, e in zip(used, exps):
                    if e:
                        term *= syms[name] ** e
                expr += term
            return expr

        g = sympy.gcd(convert(a), convert(b))
        gp = sympy.Poly(g, *[syms[n] for n in used])
        terms = {}
        for monom, coeff in gp.terms():
            terms[tuple(monom)] = Fraction(coeff.p, coeff.q)
        result = Polynomial(used, terms)
        return one if result.is_constant() else result
    except Exception:
        return one


def _euclid(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    def trim(c):
        while c and not c[-1]:
            c.pop()
        return c

    def rem(num, den):
        num = num[:]
        while len(num) >= len(den):
            factor = num[-1] / den[-1]
            shift = len(num) - len(den)
            for i, d in enumerate(den):
                num[shift + i] -= factor * d
            trim(num)
            if not num:
                break
        return num

    a, b = trim(a[:]), trim(b[:])
    while b:
        a, b = b, rem(a, b)
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def _poly_divexact(a: Polynomial, g: Polynomial) -> Polynomial | None:
    """Exact division a / g, or None if g does not divide a."""
    if g.is_constant():
        return a.scale(1 / g.constant_value())
    params = tuple(sorted(set(a.params) | set(g.params)))
    a = a.lift(params)
    g = g.lift(params)
    quotient: dict[tuple[int, ...], Fraction] = {}
    rem = dict(a.terms)
    g_lead = max(g.terms)  # lex-largest monomial
    g_lead_c = g.terms[g_lead]
    while rem:
        lead = max(rem)
        diff = tuple(x - y for x, y in zip(lead, g_lead))
        if any(d < 0 for d in diff):
            return None
        coeff = rem[lead] / g_lead_c
        quotient[diff] = coeff
        for exps, c in g.terms.items():
            key = tuple(x + y for x, y in zip(diff, exps))
            val = rem.get(key, Fraction(0)) - coeff * c
            if val:
                rem[key] = val
            else:
                rem.pop(key, None)
    return Polynomial(params, quotient)


class EvaluationError(ValueError):
    """Raised when a rational function is evaluated at a pole."""


class RationalFunction:
    """Quotient of two polynomials, normalised on construction."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial | None = None):
        if den is None:
            den = Polynomial.constant(1, num.params)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        num, den = Polynomial._unify(num, den)
        if num.is_zero():
            den = Polynomial.constant(1, num.params)
        elif den.is_constant():
            num = num.scale(1 / den.constant_value())
            den = Polynomial.constant(1, num.params)
        else:
            g = _poly_gcd(num, den)
            if not g.is_constant():
                qn = _poly_divexact(num, g)
                qd = _poly_divexact(den, g)
                if qn is not None and qd is not None:
                    num, den = Polynomial._unify(qn, qd)
            # normalise the sign of the leading denominator coefficient
            lead = den.terms[max(den.terms)]
            if lead < 0:
                num, den = num.scale(-1), den.scale(-1)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def constant(cls, value: Scalar) -> "RationalFunction":
        return cls(Polynomial.constant(value))

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> "RationalFunction":
        return cls(p)

    def _coerce(self, other) -> "RationalFunction | None":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(other)
        if isinstance(other, (int, Fraction)):
            return RationalFunction.constant(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.num.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def evaluate(self, point: Mapping[str, Scalar]) -> Fraction:
        d = self.den.evaluate(point)
        if d == 0:
            raise EvaluationError(f"denominator {self.den} vanishes at {dict(point)}")
        return self.num.evaluate(point) / d

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.num * other.den == other.num * self.den

    __hash__ = None  # equality is by cross-multiplication; hashing would lie

    def __str__(self):
        if self.den.is_constant() and self.den.constant_value() == 1:
            return str(self.num)
        return f"({self.num}) / ({self.den})"

    def __repr__(self):
        return f"RationalFunction({self})"

"""Hand-built and randomly generated models for solver-level tests.

``SyntheticModel`` mimics the reading surface of a real model so the
solvers, the conditional-value machinery, instantiation, and state
elimination can be exercised on graphs chosen for their structure rather
than reachable from any program.
"""

from __future__ import annotations

import random
from fractions import Fraction

from probe.parametric import InstantiatedModel
from probe.polynomials import Polynomial

ZERO = Fraction(0)
ONE = Fraction(1)


class SyntheticModel(InstantiatedModel):
    """A directly constructed model; `parametric` is set per instance."""

    __slots__ = ("_parametric",)

    def __init__(self, transitions, rewards, sink_id, bad_id, parametric=False):
        super().__init__(transitions, rewards, sink_id, bad_id)
        self._parametric = parametric

    @property
    def parametric(self):
        return self._parametric


def chain(transitions, rewards=None, sink_id=None, bad_id=None, parametric=False):
    """Build a deterministic synthetic model from {state: [(w, t), ...]}.

    States with no entry become weight-1 self-loops (traps).  ``sink_id``
    defaults to the largest mentioned state id plus has a self-loop added
    automatically.
    """
    n = 1 + max(
        max(transitions, default=0),
        max((t for row in transitions.values() for _, t in row), default=0),
        sink_id if sink_id is not None else 0,
        bad_id if bad_id is not None else 0,
    )
    if sink_id is None:
        sink_id = n
        n += 1
    table: list = []
    for sid in range(n):
        if sid in transitions:
            table.append((("none", tuple(transitions[sid])),))
        elif sid == sink_id:
            table.append((("none", ((ONE, sid),)),))
        elif bad_id is not None and sid == bad_id:
            table.append((("none", ((ONE, sink_id),)),))
        else:
            table.append((("none", ((ONE, sid),)),))
    return SyntheticModel(table, dict(rewards or {}), sink_id, bad_id, parametric)


P = Polynomial.variable("p")
Q = Polynomial.variable("q")
PC = Polynomial.constant

# weight tuples that sum to 1 symbolically, over parameters p and q
_PATTERNS = (
    lambda: (P, 1 - P),
    lambda: (Q, 1 - Q),
    lambda: (P * Q, P * (1 - Q), 1 - P),
    lambda: (PC(Fraction(1, 3)), PC(Fraction(2, 3))),
    lambda: (P * PC(Fraction(1, 2)), 1 - P * PC(Fraction(1, 2))),
)


def random_parametric_chain(rng: random.Random, max_live: int = 8):
    """A random deterministic parametric chain with sink, bad, and rewards.

    Live states are 0..n-1, the sink is n, the violation state n+1.  Edges
    mostly point forward (which keeps the initial state connected to the
    sink) with occasional back edges for cycles; the last live state always
    terminates.  Rewards land on a few live states.  All weight tuples sum
    to 1 symbolically, so every valuation in (0,1)^2 is well-defined.
    """
    n = rng.randint(3, max_live)
    sink, bad = n, n + 1
    transitions: dict[int, list] = {}
    for sid in range(n - 1):
        weights = rng.choice(_PATTERNS)()
        merged: dict[int, object] = {}
        for w in weights:
            roll = rng.random()
            if roll < 0.15:
                t = bad
            elif roll < 0.3:
                t = sink
            elif roll < 0.45 and sid > 0:
                t = rng.randrange(0, sid + 1)  # back edge or self
            else:
                t = rng.randrange(sid + 1, n + 1)  # forward or sink
            merged[t] = merged[t] + w if t in merged else w
        transitions[sid] = [(w, t) for t, w in merged.items()]
    transitions[n - 1] = [(ONE, sink)]

    rewards = {}
    for sid in range(n):
        if rng.random() < 0.4:
            rewards[sid] = Fraction(rng.randint(1, 8), rng.randint(1, 4))
    # never reward a state that could be a pure self-loop trap
    for sid, row in transitions.items():
        if len(row) == 1 and row[0][1] == sid:
            rewards.pop(sid, None)

    return chain(
        transitions, rewards, sink_id=sink, bad_id=bad, parametric=True
    )


def random_point(rng: random.Random) -> dict[str, Fraction]:
    """A rational interior point of the parameter square."""
    return {
        "p": Fraction(rng.randint(1, 19), 20),
        "q": Fraction(rng.randint(1, 19), 20),
    }

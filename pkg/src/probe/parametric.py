"""Parameter-space analysis of models with symbolic transition weights.

A parametric model carries polynomial transition weights over the program
parameters.  Three operations make it usable:

* ``instantiate`` substitutes a parameter valuation, validating that the
  result is a genuine probabilistic model (weights in [0, 1], distributions
  summing to 1), and yields a parameter-free read-only model accepted by
  the solvers and the conditional-value machinery.
* ``eliminate`` folds a finite deterministic model into closed forms: one
  rational function for the expected-reward numerator and one for the
  violation probability.  Substituting a valuation into the closed forms
  agrees exactly with instantiating first and solving after.
* ``region_scan`` classifies every cell of a parameter grid against an
  upper-bound property, interleaved with exploration rounds.  Partial
  values only grow, so a cell whose value already exceeds the bound is
  *Unsafe* no matter how exploration continues; the classification is
  sound at every iteration and Unsafe cells are final.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .checker import conditional_value
from .explorer import ExplorationConfig, Explorer
from .lang.ast import Program
from .lang.properties import Property
from .model import ModelError, PartialModel, SELF_LOOP_ACTION
from .polynomials import EvaluationError, Polynomial, RationalFunction
from .solver import DEFAULT_LIMITS, SolverLimits

ZERO = Fraction(0)
ONE = Fraction(1)

CELL_UNSAFE = "Unsafe"
CELL_UNKNOWN = "Unknown"
CELL_ILL_DEFINED = "IllDefined"


class WellDefinednessViolation(ValueError):
    """A parameter valuation does not induce a probabilistic model."""


# -- instantiation ---------------------------------------------------------------


class InstantiatedModel:
    """Parameter-free read-only model produced by ``instantiate``.

    Exposes the same reading surface as a partial model (successors,
    classification of nondeterminism, chain views), so solvers and the
    conditional-value machinery accept it unchanged.
    """

    __slots__ = ("transitions", "rewards", "sink_id", "bad_id")

    parametric = False

    def __init__(self, transitions, rewards, sink_id, bad_id):
        self.transitions = transitions
        self.rewards = rewards
        self.sink_id = sink_id
        self.bad_id = bad_id

    @property
    def state_count(self) -> int:
        return len(self.transitions)

    def reward(self, sid: int) -> Fraction:
        return self.rewards.get(sid, ZERO)

    def successors(self, sid: int):
        recorded = self.transitions[sid]
        if recorded is None:
            return ((SELF_LOOP_ACTION, ((ONE, sid),)),)
        return recorded

    def is_expandable(self, sid: int) -> bool:
        return self.transitions[sid] is None

    def nondet_states(self) -> list[int]:
        return [
            sid
            for sid, t in enumerate(self.transitions)
            if t is not None and len(t) > 1
        ]

    def induced_chain(self, scheduler: dict[int, str] | None = None):
        from .model import ChainView

        scheduler = scheduler or {}
        missing = [s for s in self.nondet_states() if s not in scheduler]
        if missing:
            raise ModelError(
                f"scheduler is not total: no action for states {missing[:5]}"
            )
        return ChainView(self, dict(scheduler))

    def stats(self) -> dict:
        return {
            "states": self.state_count,
            "transitions": sum(
                len(dist) for t in self.transitions if t is not None for _, dist in t
            ),
            "expandable": sum(1 for t in self.transitions if t is None),
        }


def instantiate(model, valuation: Mapping[str, object]) -> InstantiatedModel:
    """Substitute a parameter valuation into every transition weight.

    Raises ``WellDefinednessViolation`` if a parameter is missing, a weight
    leaves [0, 1], or a distribution stops summing to 1.  Zero-weight edges
    are dropped.  A parameter-free model passes through unchanged (modulo
    re-validation), so instantiating with an empty valuation is the
    identity on structure.
    """
    point = {name: Fraction(value) for name, value in valuation.items()}
    cache: dict[Polynomial, Fraction] = {}
    transitions: list[tuple | None] = []
    for sid in range(model.state_count):
        if model.is_expandable(sid):
            transitions.append(None)
            continue
        recorded = []
        for action, dist in model.successors(sid):
            total = ZERO
            out = []
            for weight, target in dist:
                if isinstance(weight, Polynomial):
                    value = cache.get(weight)
                    if value is None:
                        try:
                            value = weight.evaluate(point)
                        except KeyError as exc:
                            raise WellDefinednessViolation(
                                f"valuation does not fix parameter {exc.args[0]!r}"
                            ) from None
                        cache[weight] = value
                else:
                    value = weight
                if not 0 <= value <= 1:
                    raise WellDefinednessViolation(
                        f"state {sid}: weight {weight} evaluates to {value}, "
                        f"outside [0, 1]"
                    )
                total += value
                if value:
                    out.append((value, target))
            if total != 1:
                raise WellDefinednessViolation(
                    f"state {sid}: distribution sums to {total} instead of 1"
                )
            recorded.append((action, tuple(out)))
        transitions.append(tuple(recorded))
    return InstantiatedModel(
        transitions, dict(model.rewards), model.sink_id, model.bad_id
    )


# -- state elimination ------------------------------------------------------------


def _as_rf(weight) -> RationalFunction:
    if isinstance(weight, RationalFunction):
        return weight
    if isinstance(weight, Polynomial):
        return RationalFunction(weight)
    return RationalFunction.constant(weight)


def eliminate(model, prop: Property | None = None):
    """Closed forms of a finite deterministic model by state elimination.

    Returns ``(numerator, violation)``: rational functions in the program
    parameters for the expected reward of reaching the end state and for
    the probability of reaching the violation state.  Their quotient
    ``numerator / (1 - violation)`` is the conditional value, and
    evaluating them at a valuation agrees exactly with instantiating the
    model there and solving.

    States whose single distribution is a weight-1 self-loop (the sink,
    expandable states, aborted states) are value-0 traps: edges into them
    are dropped.  Rewards are collected on entering a state, so a trapped
    state must carry reward 0; the model invariant that rewards live only
    on terminated states guarantees that.
    """
    if prop is not None:
        model.set_post_expectation(prop.target)
    if model.nondet_states():
        raise ModelError("state elimination needs a deterministic model")

    bad = model.bad_id
    rf_zero = RationalFunction.constant(0)

    # split states into traps (value 0) and live ones
    live: list[int] = []
    for sid in range(model.state_count):
        ((_, dist),) = model.successors(sid)
        if len(dist) == 1 and dist[0][1] == sid and dist[0][0] == 1:
            if model.reward(sid):
                raise ModelError(f"state {sid}: reward on a self-loop trap")
            continue
        if sid != bad:
            live.append(sid)
    live_set = set(live)

    edges: dict[int, dict[int, RationalFunction]] = {s: {} for s in live}
    preds: dict[int, set[int]] = {s: set() for s in live}
    collect: dict[int, list[RationalFunction]] = {}  # s -> [reward, to-violation]
    for s in live:
        gains = [rf_zero, rf_zero]
        r = model.reward(s)
        if r:
            gains[0] = RationalFunction.constant(r)
        ((_, dist),) = model.successors(s)
        for weight, t in dist:
            wrf = _as_rf(weight)
            if wrf.is_zero():
                continue
            if t == bad:
                gains[1] = gains[1] + wrf
            elif t in live_set:
                prev = edges[s].get(t)
                edges[s][t] = wrf if prev is None else prev + wrf
                preds[t].add(s)
        collect[s] = gains

    def degree(s: int) -> int:
        total = 0
        for w in edges[s].values():
            total += w.num.total_degree() + w.den.total_degree()
        for p in preds[s]:
            w = edges[p][s]
            total += w.num.total_degree() + w.den.total_degree()
        return total

    def drop(v: int) -> None:
        # v turned out to be a trap: edges into it contribute value 0
        for t in edges.pop(v):
            preds[t].discard(v)
        for p in preds.pop(v):
            edges[p].pop(v, None)
        collect.pop(v)

    eligible = set(live) - {0}
    while eligible:
        v = min(eligible, key=lambda s: (degree(s), s))
        eligible.remove(v)
        self_w = edges[v].pop(v, None)
        if self_w is not None:
            preds[v].discard(v)
        denom = 1 - self_w if self_w is not None else None
        if denom is not None and denom.is_zero():
            if collect[v][0].is_zero() and collect[v][1].is_zero():
                drop(v)
                continue
            raise ModelError(f"state {v}: trapped in a symbolic self-loop")
        scale = (1 / denom) if denom is not None else None

        out = edges.pop(v)
        gains = collect.pop(v)
        if scale is not None:
            out = {t: w * scale for t, w in out.items()}
            gains = [g * scale for g in gains]
        for t in out:
            preds[t].discard(v)
        for p in preds.pop(v):
            w_pv = edges[p].pop(v)
            row = edges[p]
            for t, w_vt in out.items():
                add = w_pv * w_vt
                prev = row.get(t)
                row[t] = add if prev is None else prev + add
                preds[t].add(p)
            for k in range(2):
                if not gains[k].is_zero():
                    collect[p][k] = collect[p][k] + w_pv * gains[k]

    self_w = edges[0].get(0)
    gains = collect[0]
    if self_w is None:
        return gains[0], gains[1]
    denom = 1 - self_w
    if denom.is_zero():
        if gains[0].is_zero() and gains[1].is_zero():
            return rf_zero, rf_zero
        raise ModelError("initial state: trapped in a symbolic self-loop")
    return gains[0] / denom, gains[1] / denom


# -- region scans ----------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    """One grid dimension: `steps` equal cells over [lo, hi]."""

    name: str
    lo: Fraction
    hi: Fraction
    steps: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name}: need lo < hi, got {self.lo}..{self.hi}")
        if self.steps < 1:
            raise ValueError(f"axis {self.name}: need at least one step")

    def center(self, i: int) -> Fraction:
        return self.lo + (2 * i + 1) * (self.hi - self.lo) / (2 * self.steps)


def parse_grid(text: str, parameters: tuple[str, ...]) -> tuple[Axis, ...]:
    """Parse a grid spec like ``f:0:1:50,b:0:1:50`` against the parameters."""
    axes = []
    for part in text.split(","):
        pieces = part.split(":")
        if len(pieces) != 4:
            raise ValueError(f"grid axis {part!r} is not name:lo:hi:steps")
        name, lo, hi, steps = pieces
        try:
            axes.append(Axis(name, Fraction(lo), Fraction(hi), int(steps)))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"grid axis {part!r}: {exc}") from None
    names = [ax.name for ax in axes]
    if len(set(names)) != len(names):
        raise ValueError(f"grid names {names} are not distinct")
    if set(names) != set(parameters):
        raise ValueError(
            f"grid fixes {sorted(names)} but the program has parameters "
            f"{sorted(parameters)}"
        )
    return tuple(axes)


@dataclass
class RegionScan:
    """Outcome of a region scan.

    ``classes`` and ``values`` are nested lists indexed cell-major along
    the axes in order; ``rows`` holds one record per cell per iteration:
    the cell center coordinates, the iteration number, the cell's value
    (None while undefined or ill-defined) and its classification.
    """

    axes: tuple[Axis, ...]
    classes: list
    values: list
    rows: list[tuple]
    history: list  # classification grid after each iteration
    iterations: int
    states: int

    def cells(self) -> Iterable[tuple[tuple[int, ...], str]]:
        for idx in itertools.product(*(range(ax.steps) for ax in self.axes)):
            node = self.classes
            for i in idx:
                node = node[i]
            yield idx, node


def _exceeds(prop: Property, value) -> bool:
    if prop.comparison == "<=":
        return value > prop.threshold
    return value >= prop.threshold  # "<"


def _nested(axes: tuple[Axis, ...], flat: dict, depth: int = 0, prefix: tuple = ()):
    ax = axes[depth]
    if depth == len(axes) - 1:
        return [flat[prefix + (i,)] for i in range(ax.steps)]
    return [_nested(axes, flat, depth + 1, prefix + (i,)) for i in range(ax.steps)]


def region_scan(
    program: Program,
    prop: Property,
    axes: tuple[Axis, ...],
    config: ExplorationConfig | None = None,
    limits: SolverLimits = DEFAULT_LIMITS,
    scheduler_cap: int = 2**20,
    deadline: float | None = None,
    progress: Callable[[dict], None] | None = None,
) -> RegionScan:
    """Classify the parameter grid against an upper-bound property.

    Each iteration expands the shared parametric model by one round, then
    instantiates every still-unknown cell at its center and solves for the
    conditional value.  Values grow monotonically with exploration, so a
    cell is Unsafe as soon as its value crosses the bound, finally;
    ill-defined instantiations (weights outside [0, 1]) are final as well.
    Cells are solved in floating point: classification margins are
    expected to dominate solver tolerance, and a full exact solve per cell
    would defeat the point of a scan.
    """
    if not program.parameters:
        raise ValueError("region scans need a parametric program")
    if prop.comparison not in ("<=", "<"):
        raise ValueError(
            "region scans classify violations of upper bounds; "
            f"got comparison {prop.comparison!r}"
        )
    if config is None:
        config = ExplorationConfig(budget=50_000, max_rounds=3)
    limits = replace(limits, exact_threshold=0)

    model = PartialModel(program, target=prop.target)
    explorer = Explorer(model, config)

    indices = list(itertools.product(*(range(ax.steps) for ax in axes)))
    centers = {
        idx: {ax.name: ax.center(i) for ax, i in zip(axes, idx)} for idx in indices
    }
    klass = {idx: CELL_UNKNOWN for idx in indices}
    values: dict[tuple, object] = {idx: None for idx in indices}
    rows: list[tuple] = []
    history: list = []

    iteration = 0
    while True:
        iteration += 1
        expansion = explorer.expand_round()
        for idx in indices:
            if klass[idx] == CELL_UNKNOWN:
                try:
                    inst = instantiate(model, centers[idx])
                except WellDefinednessViolation:
                    klass[idx] = CELL_ILL_DEFINED
                else:
                    res = conditional_value(inst, prop, limits, scheduler_cap)
                    values[idx] = res.value
                    if res.value is not None and _exceeds(prop, res.value):
                        klass[idx] = CELL_UNSAFE
            point = centers[idx]
            rows.append(
                (
                    *(float(point[ax.name]) for ax in axes),
                    iteration,
                    values[idx],
                    klass[idx],
                )
            )
        history.append(_nested(axes, dict(klass)))
        if progress is not None:
            counts = {name: 0 for name in (CELL_UNSAFE, CELL_UNKNOWN, CELL_ILL_DEFINED)}
            for c in klass.values():
                counts[c] += 1
            progress(
                {
                    "iteration": iteration,
                    "states": model.state_count,
                    "unsafe": counts[CELL_UNSAFE],
                    "unknown": counts[CELL_UNKNOWN],
                    "illDefined": counts[CELL_ILL_DEFINED],
                }
            )
        if expansion.fully_expanded or expansion.capped:
            break
        if all(c != CELL_UNKNOWN for c in klass.values()):
            break
        if config.max_rounds is not None and iteration >= config.max_rounds:
            break
        if deadline is not None and time.monotonic() > deadline:
            break

    return RegionScan(
        axes=tuple(axes),
        classes=_nested(axes, klass),
        values=_nested(axes, values),
        rows=rows,
        history=history,
        iterations=iteration,
        states=model.state_count,
    )

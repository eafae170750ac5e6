"""The explored fragment of the operational model.

A ``PartialModel`` stores deduplicated states, their outgoing distributions,
state classification, and per-state rewards.  States are dense integer ids;
id 0 is the initial state.  A state is *expandable* until it is materialized:
conceptually it carries a probability-1 self-loop and reward 0, so the
partial model is a complete model at every moment and can be handed to the
solvers as-is.  Materializing a state records the distributions of the
one-step semantics (merging duplicate successors per action) and classifies
the state by its configuration kind.

Rewards are annotated at materialization time from the active
post-expectation; switching the post-expectation re-annotates the
terminated states without touching the exploration.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, TextIO

from .lang.ast import AExpr, BExpr, Program
from .polynomials import Polynomial
from . import semantics
from .semantics import (
    BAD,
    ONE,
    SINK,
    SINK_RAW,
    TERM,
    Configuration,
    RawConfig,
    StepEngine,
    compile_arith,
    compile_bool,
)

ZERO = Fraction(0)

# classification codes (dense, for speed); names for dumps and errors
EXPANDABLE, INTERNAL, TERM_STATE, BAD_STATE, SINK_STATE = range(5)
CLASS_NAMES = ("Expandable", "Internal", "Term", "Bad", "Sink")

SELF_LOOP_ACTION = "none"


class ModelError(RuntimeError):
    """A structural operation violated the model's contract."""


def _reward_function(target: AExpr | BExpr, program: Program) -> Callable:
    """Compile the post-expectation into values-tuple -> Fraction.

    A predicate target is its 0/1 indicator, which makes probability
    queries a special case of expectation queries.
    """
    if isinstance(target, BExpr):
        test = compile_bool(target, program.var_index)
        return lambda v: ONE if test(v) else ZERO
    value = compile_arith(target, program.var_index)

    def fn(v):
        x = value(v)
        if x < 0:
            raise ModelError(f"post-expectation is negative ({x}) at valuation {v}")
        return Fraction(x)

    return fn


class PartialModel:
    """Mutable single-writer model under construction.

    Solvers may read between expansion batches; ``ChainView`` snapshots are
    immutable resolutions of the nondeterminism.
    """

    def __init__(self, program: Program, target: AExpr | BExpr | None = None):
        self.program = program
        self.engine: StepEngine = semantics.get_engine(program)
        self.raws: list[RawConfig] = []
        self.index: dict[RawConfig, int] = {}
        # None = expandable (implicit weight-1 self-loop)
        self.transitions: list[tuple | None] = []
        self.kinds: list[int] = []
        self.rewards: dict[int, Fraction] = {}
        self._term_ids: list[int] = []
        self.bad_id: int | None = None
        self.transition_count = 0
        self.target: AExpr | BExpr | None = None
        self._reward_fn: Callable | None = None

        # id 0: the initial state; the sink exists from the start, already
        # materialized, so it never occupies exploration budget
        root, _ = self.intern_raw(self.engine.initial_raw())
        assert root == 0
        self.sink_id, _ = self.intern_raw(SINK_RAW)
        self.transitions[self.sink_id] = ((SELF_LOOP_ACTION, ((ONE, self.sink_id),)),)
        self.kinds[self.sink_id] = SINK_STATE
        self.transition_count += 1

        if target is not None:
            self.set_post_expectation(target)

    # -- interning -----------------------------------------------------------

    def intern_raw(self, raw: RawConfig) -> tuple[int, bool]:
        sid = self.index.get(raw)
        if sid is not None:
            return sid, False
        sid = len(self.raws)
        self.index[raw] = sid
        self.raws.append(raw)
        self.transitions.append(None)
        self.kinds.append(EXPANDABLE)
        if raw[0] == BAD:
            self.bad_id = sid
        return sid, True

    def intern(self, config: Configuration) -> tuple[int, bool]:
        return self.intern_raw(self.engine.to_raw(config))

    def configuration(self, sid: int) -> Configuration:
        return self.engine.to_configuration(self.raws[sid])

    # -- materialization -------------------------------------------------------

    def materialize(self, sid: int, result=None) -> list[int]:
        """Record the one-step distributions of an expandable state.

        Returns the freshly interned successor ids (the explorer's new
        frontier entries).  ``result`` may carry a precomputed raw step
        result; by default the engine is consulted.
        """
        if self.transitions[sid] is not None:
            raise ModelError(f"state {sid} is already materialized")
        raw = self.raws[sid]
        if result is None:
            result = self.engine.step_raw(raw)

        intern_raw = self.intern_raw
        fresh: list[int] = []
        recorded = []
        for action, dist in result:
            # merge duplicate successors (e.g. both branches of a choice
            # reducing to the same configuration)
            merged: dict[int, object] = {}
            for weight, succ in dist:
                tid, new = intern_raw(succ)
                if new:
                    fresh.append(tid)
                if tid in merged:
                    merged[tid] = merged[tid] + weight
                else:
                    merged[tid] = weight
            recorded.append((action, tuple((w, t) for t, w in merged.items())))
            self.transition_count += len(merged)
        self.transitions[sid] = tuple(recorded)

        cont_id = raw[0]
        if cont_id >= 0:
            self.kinds[sid] = INTERNAL
        elif cont_id == TERM:
            self.kinds[sid] = TERM_STATE
            self._term_ids.append(sid)
            fn = self._reward_fn
            if fn is not None:
                r = fn(raw[1])
                if r:
                    self.rewards[sid] = r
        elif cont_id == BAD:
            self.kinds[sid] = BAD_STATE
        else:
            raise ModelError("the sink is materialized at construction")
        return fresh

    # -- rewards -----------------------------------------------------------------

    def set_post_expectation(self, target: AExpr | BExpr) -> None:
        """Install a post-expectation and (re-)annotate terminated states."""
        self.target = target
        fn = _reward_function(target, self.program)
        self._reward_fn = fn
        raws = self.raws
        self.rewards = {}
        for sid in self._term_ids:
            r = fn(raws[sid][1])
            if r:
                self.rewards[sid] = r

    def reward(self, sid: int) -> Fraction:
        return self.rewards.get(sid, ZERO)

    # -- accessors ---------------------------------------------------------------

    @property
    def state_count(self) -> int:
        return len(self.raws)

    def classification(self, sid: int) -> str:
        return CLASS_NAMES[self.kinds[sid]]

    def successors(self, sid: int):
        """Outgoing (action, distribution) pairs; expandable states expose
        their implicit weight-1 self-loop."""
        recorded = self.transitions[sid]
        if recorded is None:
            return ((SELF_LOOP_ACTION, ((ONE, sid),)),)
        return recorded

    def is_expandable(self, sid: int) -> bool:
        return self.transitions[sid] is None

    def expandable_ids(self) -> list[int]:
        return [sid for sid, t in enumerate(self.transitions) if t is None]

    def nondet_states(self) -> list[int]:
        return [
            sid
            for sid, t in enumerate(self.transitions)
            if t is not None and len(t) > 1
        ]

    @property
    def parametric(self) -> bool:
        return bool(self.program.parameters)

    # -- scheduler resolution --------------------------------------------------

    def induced_chain(self, scheduler: dict[int, str] | None = None) -> "ChainView":
        scheduler = scheduler or {}
        nondet = self.nondet_states()
        missing = [s for s in nondet if s not in scheduler]
        if missing:
            raise ModelError(
                f"scheduler is not total: no action for states {missing[:5]}"
            )
        return ChainView(self, dict(scheduler))

    # -- diagnostics ----------------------------------------------------------------

    def audit(self) -> None:
        """Raise unless the model is well-formed.

        Expandable and sink states are pure self-loops; terminated and
        violation states go only to the sink; distributions of
        parameter-free models sum to exactly 1; positive reward implies a
        terminated state.
        """
        parametric = self.parametric
        for sid in range(len(self.raws)):
            kind = self.kinds[sid]
            succs = self.successors(sid)
            actions = [a for a, _ in succs]
            if len(set(actions)) != len(actions):
                raise ModelError(f"state {sid}: duplicate actions {actions}")
            if kind in (EXPANDABLE, SINK_STATE):
                if succs != ((SELF_LOOP_ACTION, ((ONE, sid),)),):
                    raise ModelError(
                        f"state {sid} ({CLASS_NAMES[kind]}) must be a pure self-loop"
                    )
            if kind in (TERM_STATE, BAD_STATE):
                if succs != ((SELF_LOOP_ACTION, ((ONE, self.sink_id),)),):
                    raise ModelError(
                        f"state {sid} ({CLASS_NAMES[kind]}) must go only to the sink"
                    )
            if not parametric:
                for _, dist in succs:
                    total = sum(w for w, _ in dist)
                    if total != 1:
                        raise ModelError(f"state {sid}: distribution sums to {total}")
            raw_kind = self.raws[sid][0]
            if kind == INTERNAL and raw_kind < 0:
                raise ModelError(f"state {sid}: Internal but not a running state")
            if kind == TERM_STATE and raw_kind != TERM:
                raise ModelError(f"state {sid}: classified Term inconsistently")
        for sid, r in self.rewards.items():
            if r > 0 and self.kinds[sid] != TERM_STATE:
                raise ModelError(f"state {sid}: positive reward on a non-Term state")

    def dump(self, out: TextIO) -> None:
        """Line-oriented text dump for debugging and golden tests."""
        for sid in range(len(self.raws)):
            out.write(
                f"STATE {sid} {CLASS_NAMES[self.kinds[sid]]} {self.reward(sid)}\n"
            )
            for action, dist in self.successors(sid):
                pairs = " ".join(f"{_weight_str(w)} {t}" for w, t in dist)
                out.write(f"TRANS {sid} {action} {pairs}\n")

    def stats(self) -> dict:
        return {
            "states": self.state_count,
            "transitions": self.transition_count,
            "expandable": sum(1 for t in self.transitions if t is None),
        }


def _weight_str(w) -> str:
    if isinstance(w, Polynomial):
        return str(w).replace(" ", "")
    return str(w)


class ChainView:
    """Read-only view of a model with nondeterminism resolved.

    For each state the view exposes exactly one distribution: the chosen
    action's at scheduled states, the unique one elsewhere.
    """

    __slots__ = ("model", "scheduler")

    def __init__(self, model: PartialModel, scheduler: dict[int, str]):
        self.model = model
        self.scheduler = scheduler

    @property
    def state_count(self) -> int:
        return self.model.state_count

    @property
    def sink_id(self) -> int:
        return self.model.sink_id

    @property
    def bad_id(self) -> int | None:
        return self.model.bad_id

    def reward(self, sid: int) -> Fraction:
        return self.model.reward(sid)

    @property
    def rewards(self) -> dict[int, Fraction]:
        return self.model.rewards

    def distribution(self, sid: int):
        succs = self.model.successors(sid)
        if len(succs) == 1:
            return succs[0][1]
        chosen = self.scheduler[sid]
        for action, dist in succs:
            if action == chosen:
                return dist
        raise ModelError(f"state {sid}: scheduled action {chosen!r} not enabled")

    def distributions(self) -> Iterable[tuple[int, tuple]]:
        for sid in range(self.model.state_count):
            yield sid, self.distribution(sid)

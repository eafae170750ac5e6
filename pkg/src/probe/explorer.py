"""Budgeted incremental construction of the partial model.

Each round materializes up to ``budget`` expandable states in heuristic
order.  The default order is breadth-first (discovery order), which unrolls
the model level by level.  The alternative prioritizes states by the
highest-probability path that reaches them, so mass-carrying branches are
expanded before rare ones; priorities are refreshed from a full pass at the
start of every round and extended incrementally within it, never recomputed
per insertion.

Exploration is deterministic: priority ties break on state id, so identical
configurations produce byte-identical model dumps.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .model import PartialModel

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class ExplorationConfig:
    budget: int = 1_000_000
    heuristic: str = "bfs"  # "bfs" | "maxprob"
    max_rounds: int | None = None
    max_states_total: int = 8_000_000

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.heuristic not in ("bfs", "maxprob"):
            raise ValueError(f"unknown heuristic {self.heuristic!r}")


@dataclass(frozen=True)
class ExpansionReport:
    new_states: int  # states materialized this round
    new_transitions: int
    fully_expanded: bool
    frontier_size: int
    capped: bool = False


def max_path_masses(model: PartialModel, exact: bool = True) -> dict:
    """Highest single-path probability from the initial state to each state.

    Computed over the recorded transitions by best-first search (edge
    weights are probabilities ≤ 1, so path products only decrease and the
    first pop is optimal).  With ``exact`` false, masses are floats — the
    fast variant used for frontier priorities.
    """
    if model.parametric:
        raise ValueError("path-mass priorities need a parameter-free model")
    one = ONE if exact else 1.0
    best: dict = {0: one}
    heap: list = [(-one, 0)]
    transitions = model.transitions
    while heap:
        neg_mass, sid = heapq.heappop(heap)
        mass = -neg_mass
        if mass < best[sid]:
            continue
        recorded = transitions[sid]
        if recorded is None:
            continue
        for _, dist in recorded:
            for w, tid in dist:
                if tid == sid:
                    continue
                cand = mass * w if exact else mass * float(w)
                if cand > best.get(tid, ZERO):
                    best[tid] = cand
                    heapq.heappush(heap, (-cand, tid))
    return best


def path_mass_upper_bound(model: PartialModel, sid: int) -> Fraction:
    """Priority key of the frontier ordering: the best path mass to sid.

    Exact on tree-shaped unrollings, where the single best path carries
    all of the state's reachability mass; 0 for unreachable states.
    """
    return max_path_masses(model, exact=True).get(sid, ZERO)


class Explorer:
    """Stateful driver that owns the frontier across rounds.

    The frontier holds exactly the discovered-but-expandable states.  The
    sink never enters it (it is materialized at model construction); the
    violation state does, and consumes one budget slot like any other.
    """

    def __init__(
        self,
        model: PartialModel,
        config: ExplorationConfig | None = None,
        progress: Callable[[dict], None] | None = None,
    ):
        self.model = model
        self.config = config or ExplorationConfig()
        self.progress = progress
        self.round = 0
        # ascending id order is discovery order, so reconstructing the
        # frontier from the model resumes breadth-first exactly
        self.frontier: deque[int] = deque(model.expandable_ids())
        if self.config.heuristic == "maxprob" and model.parametric:
            raise ValueError("maxprob heuristic needs a parameter-free model")

    def expand_round(self) -> ExpansionReport:
        if self.config.heuristic == "bfs":
            report = self._round_bfs()
        else:
            report = self._round_maxprob()
        self.round += 1
        if self.progress is not None:
            stats = self.model.stats()
            self.progress(
                {
                    "round": self.round,
                    "states": stats["states"],
                    "transitions": stats["transitions"],
                    "frontier": report.frontier_size,
                }
            )
        return report

    def _round_bfs(self) -> ExpansionReport:
        model = self.model
        frontier = self.frontier
        materialize = model.materialize
        budget = self.config.budget
        cap = self.config.max_states_total
        before_transitions = model.transition_count
        done = 0
        capped = False
        while frontier and done < budget:
            if model.state_count >= cap:
                capped = True
                break
            sid = frontier.popleft()
            frontier.extend(materialize(sid))
            done += 1
        return ExpansionReport(
            new_states=done,
            new_transitions=model.transition_count - before_transitions,
            fully_expanded=not frontier,
            frontier_size=len(frontier),
            capped=capped,
        )

    def _round_maxprob(self) -> ExpansionReport:
        model = self.model
        materialize = model.materialize
        budget = self.config.budget
        cap = self.config.max_states_total
        before_transitions = model.transition_count

        masses = max_path_masses(model, exact=False)
        heap = [(-masses.get(sid, 0.0), sid) for sid in self.frontier]
        heapq.heapify(heap)

        done = 0
        capped = False
        while heap and done < budget:
            if model.state_count >= cap:
                capped = True
                break
            neg_mass, sid = heapq.heappop(heap)
            if not model.is_expandable(sid):
                continue  # stale duplicate entry from an improved priority
            mass = -neg_mass
            for tid in materialize(sid):
                edge = _edge_weight(model, sid, tid)
                heapq.heappush(heap, (-(mass * edge), tid))
            done += 1
        remaining = deque(sorted(sid for _, sid in heap if model.is_expandable(sid)))
        self.frontier = remaining
        return ExpansionReport(
            new_states=done,
            new_transitions=model.transition_count - before_transitions,
            fully_expanded=not remaining,
            frontier_size=len(remaining),
            capped=capped,
        )


def _edge_weight(model: PartialModel, sid: int, tid: int) -> float:
    best = 0.0
    for _, dist in model.transitions[sid]:
        for w, t in dist:
            if t == tid:
                wf = float(w)
                if wf > best:
                    best = wf
    return best


def expand(
    model: PartialModel,
    config: ExplorationConfig | None = None,
    progress: Callable[[dict], None] | None = None,
) -> ExpansionReport:
    """One expansion round on a model, frontier reconstructed from it."""
    return Explorer(model, config, progress).expand_round()

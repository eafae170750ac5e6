"""Bounded model checking for probabilistic programs with conditioning.

The package turns guarded-command programs with probabilistic choice,
nondeterminism, and ``observe`` statements into finite partial models,
and decides bounds on conditional expected values and probabilities by
exploring those models one budget-sized round at a time.  Partial values
converge to the true value from below, which makes early answers sound.

Typical use::

    from probe import corpus, bmc, ExplorationConfig
    program = corpus.load("geometric_odd")
    prop = corpus.properties("geometric_odd")[0]
    report = bmc(program, prop, ExplorationConfig(budget=10_000))

The same entry points back the ``probe`` command-line tool.
"""

from .checker import (
    ConditionalResult,
    SchedulerExplosion,
    SimulationEstimate,
    bmc,
    conditional_value,
    decide,
    simulate,
)
from .explorer import ExplorationConfig, Explorer
from .lang import (
    ParseError,
    Program,
    Property,
    load_properties,
    parse_program,
    parse_property,
    pretty,
    validate,
)
from .model import ChainView, ModelError, PartialModel
from .parametric import (
    Axis,
    InstantiatedModel,
    RegionScan,
    WellDefinednessViolation,
    eliminate,
    instantiate,
    parse_grid,
    region_scan,
)
from .polynomials import EvaluationError, Polynomial, RationalFunction
from .report import (
    IterationRow,
    Report,
    convergence_figure,
    region_figure,
    render_report,
    render_simulation,
)
from .semantics import SemanticsError
from .solver import SolverLimits, SolverError

__all__ = [
    "Axis",
    "ChainView",
    "ConditionalResult",
    "EvaluationError",
    "ExplorationConfig",
    "Explorer",
    "InstantiatedModel",
    "IterationRow",
    "ModelError",
    "ParseError",
    "PartialModel",
    "Polynomial",
    "Program",
    "Property",
    "RationalFunction",
    "RegionScan",
    "Report",
    "SchedulerExplosion",
    "SemanticsError",
    "SimulationEstimate",
    "SolverError",
    "SolverLimits",
    "WellDefinednessViolation",
    "bmc",
    "conditional_value",
    "convergence_figure",
    "decide",
    "eliminate",
    "instantiate",
    "load_properties",
    "parse_grid",
    "parse_program",
    "parse_property",
    "pretty",
    "region_figure",
    "region_scan",
    "render_report",
    "render_simulation",
    "simulate",
    "validate",
]

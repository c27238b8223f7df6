"""Stochastic HYPE toolchain.

Parse process-algebra models, derive their labelled transition systems,
compile them to transition-driven stochastic hybrid automata, simulate the
resulting piecewise-deterministic dynamics and decide bisimulation
equivalences.
"""

from .equivalence import (
    BisimPartition,
    NotBisimilar,
    StateEquivKind,
    Unknown,
    Verified,
    WellBehaved,
    blocks_share_odes,
    check_stochastic_system_bisim,
    check_system_bisim,
    check_well_behaved,
    rate_to_class,
    verify_relation,
)
from .errors import ShypeError
from .expand import expand_general_durations
from .formatter import format_model
from .model import Model
from .parser import parse_expr, parse_model, parse_term
from .semantics import build_lts, ode_system_for
from .simulate import (
    SimulationConfig,
    prepare,
    run_replications,
    simulate_trajectory,
    sweep_parameter,
)
from .tdsha import (
    compositional_mapping,
    from_lts,
    graph_isomorphic,
    prune_unreachable,
    tdsha_product,
    vector_field,
)
from .validate import validate_well_defined

__version__ = "0.1.0"

__all__ = [
    "BisimPartition",
    "Model",
    "NotBisimilar",
    "ShypeError",
    "SimulationConfig",
    "StateEquivKind",
    "Unknown",
    "Verified",
    "WellBehaved",
    "blocks_share_odes",
    "build_lts",
    "check_stochastic_system_bisim",
    "check_system_bisim",
    "check_well_behaved",
    "compositional_mapping",
    "expand_general_durations",
    "format_model",
    "from_lts",
    "graph_isomorphic",
    "ode_system_for",
    "parse_expr",
    "parse_model",
    "parse_term",
    "prepare",
    "prune_unreachable",
    "rate_to_class",
    "run_replications",
    "simulate_trajectory",
    "sweep_parameter",
    "tdsha_product",
    "validate_well_defined",
    "vector_field",
    "verify_relation",
]

"""Worlds, single lives, event-driven models and the search for their trace."""

from .compose import (
    CartesianModel,
    advance_composite,
    cartesian,
    component_oracles,
    format_composite,
    product_size,
    reachable_composite,
    simulate_composite,
)
from .edm import (
    EventDrivenModel,
    EventStream,
    Evaluation,
    ObscuringOracle,
    SequencingOracle,
    VariablesModel,
    advance,
    flatten,
    parse_model,
    project_events,
    simulate_edm,
)
from .errors import (
    CapacityError,
    ConsistencyError,
    EventModelError,
    GenerationError,
    InputError,
    MissingOracleError,
    ParseError,
)
from .evaluation import UNDEF, LifeVerdict, compare_finite, compare_lives, life_mean
from .history import (
    History,
    HistoryStep,
    InvisibleEvent,
    Pending,
    SemiVisibleEvent,
    VisibleEvent,
    approximate,
    full_from_trace,
    local,
    occurred,
    truncated,
)
from .inference import (
    abridge,
    adequacy,
    collect,
    detect_trace,
    estimate_state,
    exhaustiveness_test,
    infer,
    reverse_oracle,
)
from .world import (
    Life,
    OracleBundle,
    PerfectWorld,
    RandomWorld,
    classify_state,
    creature_stream,
    generate_world,
    run_life,
)

__all__ = [
    "CapacityError",
    "CartesianModel",
    "ConsistencyError",
    "Evaluation",
    "EventDrivenModel",
    "EventModelError",
    "EventStream",
    "GenerationError",
    "History",
    "HistoryStep",
    "InputError",
    "InvisibleEvent",
    "Life",
    "LifeVerdict",
    "MissingOracleError",
    "ObscuringOracle",
    "OracleBundle",
    "ParseError",
    "Pending",
    "PerfectWorld",
    "RandomWorld",
    "SemiVisibleEvent",
    "SequencingOracle",
    "UNDEF",
    "VariablesModel",
    "VisibleEvent",
    "abridge",
    "adequacy",
    "advance",
    "advance_composite",
    "approximate",
    "cartesian",
    "classify_state",
    "collect",
    "compare_finite",
    "compare_lives",
    "component_oracles",
    "creature_stream",
    "detect_trace",
    "estimate_state",
    "exhaustiveness_test",
    "flatten",
    "format_composite",
    "full_from_trace",
    "generate_world",
    "infer",
    "life_mean",
    "local",
    "occurred",
    "parse_model",
    "product_size",
    "project_events",
    "reachable_composite",
    "reverse_oracle",
    "run_life",
    "simulate_composite",
    "simulate_edm",
    "truncated",
]

__version__ = "0.1.0"

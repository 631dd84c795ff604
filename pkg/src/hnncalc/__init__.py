"""Word calculus for reduced HNN extensions of operator algebras."""

from .algebra import (
    AlgebraElement,
    Backend,
    ConditionalExpectation,
    Embedding,
    NotAnExpectation,
    State,
    add,
    adjoint,
    ce_apply,
    kernel_part,
    multiply,
    state_eval,
)
from .config import build_scenario, load_scenario
from .engine import (
    HnnElement,
    HnnWord,
    Scenario,
    Theta,
    expect_onto_base,
    modular_apply,
    normalize,
    pinch,
    shadow_length,
    state_moment,
)
from .expr import parse_and_evaluate, parse_expression

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement",
    "Backend",
    "ConditionalExpectation",
    "Embedding",
    "NotAnExpectation",
    "State",
    "add",
    "adjoint",
    "ce_apply",
    "kernel_part",
    "multiply",
    "state_eval",
    "build_scenario",
    "load_scenario",
    "HnnElement",
    "HnnWord",
    "Scenario",
    "Theta",
    "expect_onto_base",
    "modular_apply",
    "normalize",
    "pinch",
    "shadow_length",
    "state_moment",
    "parse_and_evaluate",
    "parse_expression",
]

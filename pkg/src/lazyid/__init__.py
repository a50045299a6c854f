"""Influence diagram solving by lazy propagation on strong junction trees."""

from .datasets import load_example, make_random_diagram
from .estimator import BruteForceSolver, HuginSolver, LazyPropagation, VariableElimination
from .hugin import solve_hugin
from .io import load_model, parse_model, serialize_model
from .lazy import solve_lazy
from .model import InfluenceDiagram, ModelError, build_diagram, information_partition
from .oracle import brute_force_solve, bucket_eliminate, evaluate_strategy
from .potential import OpCounter, Potential
from .strategy import DecisionRule, Strategy

__version__ = "0.1.0"

__all__ = [
    "BruteForceSolver",
    "DecisionRule",
    "HuginSolver",
    "InfluenceDiagram",
    "LazyPropagation",
    "ModelError",
    "OpCounter",
    "Potential",
    "Strategy",
    "VariableElimination",
    "brute_force_solve",
    "bucket_eliminate",
    "build_diagram",
    "evaluate_strategy",
    "information_partition",
    "load_example",
    "load_model",
    "make_random_diagram",
    "parse_model",
    "serialize_model",
    "solve_hugin",
    "solve_lazy",
]

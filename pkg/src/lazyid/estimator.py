"""scikit-learn style wrappers around the solvers.

``fit`` solves an influence diagram (optionally under evidence) and stores
the optimal strategy; ``predict`` maps rows of observed states to the
decisions the strategy takes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .hugin import run_hugin
from .io import load_model, parse_model
from .lazy import run_lazy
from .model import InfluenceDiagram, check_evidence
from .oracle import DEFAULT_CAP, brute_force_solve, bucket_eliminate
from .potential import OpCounter

MISSING = -1


def check_diagram(diagram) -> InfluenceDiagram:
    """Accept a diagram, model text or a path to a model file."""
    if isinstance(diagram, InfluenceDiagram):
        return diagram
    if isinstance(diagram, Path):
        return load_model(diagram)
    if isinstance(diagram, str):
        if "@variables" in diagram:
            return parse_model(diagram)
        return load_model(diagram)
    raise TypeError(f"expected an InfluenceDiagram, model text or path, got {type(diagram).__name__}")


def check_observations(X, diagram: InfluenceDiagram) -> np.ndarray:
    """Validate a (n_samples, n_variables) array of state indices, -1 for unknown."""
    X = check_array(X, dtype=None, ensure_all_finite=True)
    if X.shape[1] != diagram.n_variables:
        raise ValueError(f"X has {X.shape[1]} columns, expected {diagram.n_variables}")
    if not np.all(X == np.round(X)):
        raise ValueError("states must be integer indices")
    X = X.astype(int)
    cards = np.asarray(diagram.cards)
    if ((X < MISSING) | (X >= cards)).any():
        raise ValueError("state index out of range")
    return X


class _Solver(BaseEstimator):
    def fit(self, diagram, evidence=None):
        diagram = check_diagram(diagram)
        self.evidence_ = check_evidence(diagram, evidence)
        self.diagram_ = diagram
        self.ops_ = OpCounter()
        self.strategy_ = self._solve(diagram, self.evidence_, self.ops_)
        self.meu_ = self.strategy_.meu
        return self

    def predict(self, X) -> np.ndarray:
        """Decisions (columns in temporal order) for each row of observations."""
        check_is_fitted(self, "strategy_")
        X = check_observations(X, self.diagram_)
        order = self.diagram_.decision_order
        out = np.empty((X.shape[0], len(order)), dtype=int)
        for i, row in enumerate(X):
            known = {v: int(s) for v, s in enumerate(row) if s != MISSING}
            known.update(self.evidence_)
            try:
                chosen = self.strategy_.decide(known)
            except KeyError as exc:
                raise ValueError(f"row {i}: missing observation ({exc.args[0]})") from None
            out[i] = [chosen[d] for d in order]
        return out

    def score(self, X=None, y=None) -> float:
        """Maximum expected utility of the fitted diagram."""
        check_is_fitted(self, "meu_")
        return self.meu_


class LazyPropagation(_Solver):
    """Lazy propagation solver.

    Parameters
    ----------
    prune : bool
        Drop potentials that cannot influence a message or a utility.
    force_divide : bool
        Perform every division as soon as it arises.
    unity_rule : bool
        Skip probability marginals that are structurally one.
    """

    def __init__(self, prune=True, force_divide=False, unity_rule=True):
        self.prune = prune
        self.force_divide = force_divide
        self.unity_rule = unity_rule

    def _solve(self, diagram, evidence, ctr):
        run = run_lazy(
            diagram,
            evidence,
            ctr,
            prune=self.prune,
            force_divide=self.force_divide,
            unity_rule=self.unity_rule,
        )
        self.tree_ = run.tree
        self.trace_ = run.trace
        return run.strategy


class HuginSolver(_Solver):
    """Eager junction-tree solver; ``compile_ops_`` holds the clique set-up cost."""

    def _solve(self, diagram, evidence, ctr):
        run = run_hugin(diagram, evidence, ctr)
        self.tree_ = run.tree
        self.compile_ops_ = run.compile_ops
        return run.strategy


class VariableElimination(_Solver):
    """Variable elimination with immediate division along the strong order."""

    def _solve(self, diagram, evidence, ctr):
        strategy, _ = bucket_eliminate(diagram, None, evidence, ctr)
        return strategy


class BruteForceSolver(_Solver):
    """Exhaustive solve over the joint table (tiny diagrams only)."""

    def __init__(self, cap=DEFAULT_CAP):
        self.cap = cap

    def _solve(self, diagram, evidence, ctr):
        return brute_force_solve(diagram, evidence, self.cap)


ENGINES = {
    "lazy": LazyPropagation,
    "hugin": HuginSolver,
    "ve": VariableElimination,
    "brute": BruteForceSolver,
}

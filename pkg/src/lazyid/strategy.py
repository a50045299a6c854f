"""Decision rules and strategies returned by every solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .potential import ArgmaxRecord, OpCounter


@dataclass(frozen=True, eq=False)
class DecisionRule:
    """Optimal state of ``decision`` for each configuration of ``variables``.

    ``table`` and ``ties`` are indexed by ``variables`` (sorted ids).  An
    ``arbitrary`` rule belongs to a decision that influences nothing, so
    every alternative is optimal and state 0 is reported.
    """

    decision: int
    variables: tuple
    cards: tuple
    table: np.ndarray
    ties: np.ndarray = field(repr=False)
    arbitrary: bool = False

    def choose(self, config: Mapping[int, int]) -> int:
        try:
            idx = tuple(int(config[v]) for v in self.variables)
        except KeyError as exc:
            raise KeyError(f"rule for {self.decision} needs variable {exc.args[0]}") from None
        return int(self.table[idx])

    def same_choices(self, other: "DecisionRule") -> bool:
        return (
            self.variables == other.variables
            and self.cards == other.cards
            and np.array_equal(self.table, other.table)
        )


def rule_from_record(record: ArgmaxRecord, variables, cards) -> DecisionRule:
    """Broadcast an argmax table onto the (sorted) rule domain ``variables``."""
    variables = tuple(variables)
    missing = set(record.variables) - set(variables)
    if missing:
        raise RuntimeError(
            f"decision {record.decision} depends on {sorted(missing)} outside its relevant past"
        )
    shape = [
        record.cards[record.variables.index(v)] if v in record.variables else 1
        for v in variables
    ]
    table = np.broadcast_to(record.table.reshape(shape), tuple(cards)).copy()
    ties = np.broadcast_to(record.ties.reshape(shape), tuple(cards)).copy()
    return DecisionRule(record.decision, variables, tuple(cards), table, ties)


def arbitrary_rule(decision: int, variables, cards) -> DecisionRule:
    cards = tuple(cards)
    return DecisionRule(
        decision,
        tuple(variables),
        cards,
        np.zeros(cards, dtype=int),
        np.ones(cards, dtype=bool),
        arbitrary=True,
    )


@dataclass(eq=False)
class Strategy:
    """One rule per decision, in temporal order, plus the maximum expected utility."""

    rules: dict
    meu: float
    ops: OpCounter = field(default_factory=OpCounter)
    compile_ops: Optional[OpCounter] = None
    extras: dict = field(default_factory=dict)

    def rule(self, decision: int) -> DecisionRule:
        return self.rules[decision]

    def decide(self, observations: Mapping[int, int]) -> dict:
        """Play the strategy forward; decisions feed later rules."""
        config = dict(observations)
        out = {}
        for d, rule in self.rules.items():
            out[d] = config[d] = rule.choose(config)
        return out

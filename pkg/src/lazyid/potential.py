"""Discrete probability and utility potentials.

Tables are dense numpy arrays whose axes follow ``variables``, which is always
sorted by variable id, so the first listed variable varies slowest (C order).

Every arithmetic helper takes an :class:`OpCounter` and charges one unit per
scalar multiply, add, divide or pairwise max-comparison it performs.  Slicing,
broadcasting and bookkeeping are free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

PROBABILITY = "probability"
UTILITY = "utility"

# Relative tolerance used only to *flag* ties; the tie-break itself is exact.
TIE_RTOL = 1e-12


class DivisionByZeroError(ArithmeticError):
    """A nonzero utility was divided by a zero probability."""


@dataclass
class OpCounter:
    """Arithmetic operation tallies for one solve."""

    multiplies: int = 0
    additions: int = 0
    divisions: int = 0
    comparisons: int = 0
    # Cells of divisions that were introduced but left pending (lazy engine).
    divisions_introduced: int = 0

    @property
    def total(self) -> int:
        return self.multiplies + self.additions + self.divisions + self.comparisons

    def merge(self, other: "OpCounter") -> "OpCounter":
        self.multiplies += other.multiplies
        self.additions += other.additions
        self.divisions += other.divisions
        self.comparisons += other.comparisons
        self.divisions_introduced += other.divisions_introduced
        return self

    def copy(self) -> "OpCounter":
        return OpCounter(
            self.multiplies,
            self.additions,
            self.divisions,
            self.comparisons,
            self.divisions_introduced,
        )

    def as_dict(self) -> dict:
        return {
            "mul": self.multiplies,
            "add": self.additions,
            "div": self.divisions,
            "max": self.comparisons,
        }


@dataclass(frozen=True, eq=False)
class Potential:
    """A table over discrete variables, tagged probability or utility.

    Probability potentials carry a ``head`` (the conditioned variables); the
    rest of the domain is the tail.  A unity potential is identically one and
    has no table at all.  ``tainted`` marks probability potentials that had a
    head variable instantiated by evidence, which rules out structural unity
    for anything derived from them.

    Equality is identity: solvers track potentials by object, e.g. to cancel a
    pending divisor against the very factor it was computed from.
    """

    kind: str
    variables: tuple
    cards: tuple
    table: Optional[np.ndarray]
    head: frozenset = frozenset()
    unity: bool = False
    tainted: bool = False

    def __post_init__(self):
        if self.kind not in (PROBABILITY, UTILITY):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if list(self.variables) != sorted(set(self.variables)):
            raise ValueError("potential variables must be sorted and distinct")
        if len(self.cards) != len(self.variables):
            raise ValueError("one cardinality per variable is required")
        if not self.head <= set(self.variables):
            raise ValueError("head variables must belong to the domain")
        if self.kind == UTILITY and (self.head or self.unity or self.tainted):
            raise ValueError("utility potentials have no head, unity or taint")
        if self.unity:
            if self.table is not None:
                raise ValueError("unity potentials are never materialized")
            if self.head:
                raise ValueError("a unity potential has an empty head")
        elif self.table is None:
            raise ValueError("non-unity potential needs a table")
        elif self.table.shape != tuple(self.cards):
            raise ValueError(
                f"table shape {self.table.shape} does not match cards {self.cards}"
            )

    @property
    def size(self) -> int:
        return int(np.prod(self.cards, dtype=np.int64))

    @property
    def tail(self) -> frozenset:
        return frozenset(self.variables) - self.head

    @property
    def domain(self) -> frozenset:
        return frozenset(self.variables)

    def card(self, var: int) -> int:
        return self.cards[self.variables.index(var)]

    def values(self) -> np.ndarray:
        """The table, materializing ones for a unity potential."""
        if self.unity:
            return np.ones(self.cards)
        return self.table

    def __repr__(self):
        tag = "U" if self.kind == UTILITY else ("1" if self.unity else "P")
        if self.kind == PROBABILITY and not self.unity:
            head = ",".join(map(str, sorted(self.head)))
            tail = ",".join(map(str, sorted(self.tail)))
            return f"{tag}({head}|{tail})"
        return f"{tag}({','.join(map(str, self.variables))})"


def _canonical(variables: Sequence[int], cards: Sequence[int], table) -> tuple:
    """Reorder axes so that variables are sorted by id."""
    variables = list(variables)
    if len(set(variables)) != len(variables):
        raise ValueError("duplicate variable in potential domain")
    cards = [int(c) for c in cards]
    arr = np.asarray(table, dtype=float).reshape(cards)
    perm = sorted(range(len(variables)), key=variables.__getitem__)
    arr = np.array(np.transpose(arr, perm))
    return tuple(variables[i] for i in perm), tuple(cards[i] for i in perm), arr


def probability(variables, cards, table, head=None) -> Potential:
    """Build a probability potential; ``table`` is row-major over ``variables``.

    ``head`` defaults to the first variable.
    """
    variables = list(variables)
    if head is None:
        head = variables[:1]
    v, c, arr = _canonical(variables, cards, table)
    if (arr < 0).any():
        raise ValueError("probability tables must be nonnegative")
    return Potential(PROBABILITY, v, c, arr, head=frozenset(head))


def utility(variables, cards, table) -> Potential:
    v, c, arr = _canonical(variables, cards, table)
    return Potential(UTILITY, v, c, arr)


def unity(variables, cards) -> Potential:
    v, c, _ = _canonical(variables, cards, np.ones(cards))
    return Potential(PROBABILITY, v, c, None, unity=True)


def zero_utility(variables=(), cards=()) -> Potential:
    return utility(variables, cards, np.zeros([int(c) for c in cards]))


def _union(pots: Iterable[Potential]) -> tuple:
    cards = {}
    for p in pots:
        for v, c in zip(p.variables, p.cards):
            if cards.setdefault(v, c) != c:
                raise ValueError(f"variable {v} has inconsistent cardinality")
    variables = tuple(sorted(cards))
    return variables, tuple(cards[v] for v in variables)


def expand(p: Potential, variables: Sequence[int]) -> np.ndarray:
    """View of ``p``'s table broadcastable over the sorted superset ``variables``."""
    shape = [p.card(v) if v in p.domain else 1 for v in variables]
    return p.values().reshape(shape)


def multiply(a: Potential, b: Potential, ctr: OpCounter) -> Potential:
    if a.kind == UTILITY and b.kind == UTILITY:
        raise ValueError("utility potentials combine by addition, not product")
    if a.unity:
        return b
    if b.unity:
        return a
    variables, cards = _union((a, b))
    table = expand(a, variables) * expand(b, variables)
    table = np.broadcast_to(table, cards).copy()
    ctr.multiplies += table.size
    if a.kind == UTILITY or b.kind == UTILITY:
        return Potential(UTILITY, variables, cards, table)
    return Potential(
        PROBABILITY,
        variables,
        cards,
        table,
        head=a.head | b.head,
        tainted=a.tainted or b.tainted,
    )


def multiply_all(pots: Sequence[Potential], ctr: OpCounter) -> Optional[Potential]:
    """Pairwise product, smallest tables first; None for an empty sequence."""
    pots = [p for p in pots if not p.unity] or list(pots[:1])
    if not pots:
        return None
    pots = sorted(pots, key=lambda p: (p.size, p.variables))
    return reduce(lambda x, y: multiply(x, y, ctr), pots)


def add(a: Potential, b: Potential, ctr: OpCounter) -> Potential:
    if a.kind != UTILITY or b.kind != UTILITY:
        raise ValueError("only utility potentials can be added")
    variables, cards = _union((a, b))
    table = np.broadcast_to(expand(a, variables) + expand(b, variables), cards).copy()
    ctr.additions += table.size
    return Potential(UTILITY, variables, cards, table)


def add_all(pots: Sequence[Potential], ctr: OpCounter) -> Optional[Potential]:
    if not pots:
        return None
    pots = sorted(pots, key=lambda p: (p.size, p.variables))
    return reduce(lambda x, y: add(x, y, ctr), pots)


def divide(num: Potential, den: Potential, ctr: OpCounter) -> Potential:
    """Cell-wise ``num / den`` with 0/0 = 0; nonzero/0 raises."""
    if num.kind != UTILITY or den.kind != PROBABILITY:
        raise ValueError("division is utility / probability")
    if den.unity:
        return num
    variables, cards = _union((num, den))
    n = np.broadcast_to(expand(num, variables), cards)
    d = np.broadcast_to(expand(den, variables), cards)
    zero = d == 0
    if (zero & (n != 0)).any():
        raise DivisionByZeroError(
            "nonzero utility mass over a zero-probability configuration"
        )
    table = np.divide(n, d, out=np.zeros(cards), where=~zero)
    ctr.divisions += table.size
    return Potential(UTILITY, variables, cards, table)


def is_structural_unity(pots: Sequence[Potential], var: int) -> bool:
    """True when summing ``var`` out of the product of ``pots`` is identically one.

    That is the case when ``var`` is the only head variable left in the
    product and no factor had a head variable instantiated.
    """
    pots = [p for p in pots if not p.unity]
    if not pots or any(p.kind != PROBABILITY or p.tainted for p in pots):
        return False
    heads = frozenset().union(*(p.head for p in pots))
    return heads == {var}


def sum_out(p: Potential, var: int, ctr: OpCounter, unity_rule: bool = True) -> Potential:
    if var not in p.domain:
        raise KeyError(f"variable {var} not in potential domain {p.variables}")
    i = p.variables.index(var)
    variables = p.variables[:i] + p.variables[i + 1 :]
    cards = p.cards[:i] + p.cards[i + 1 :]
    if p.unity:
        raise ValueError("summing a tail variable out of a unity potential")
    if unity_rule and is_structural_unity([p], var):
        return Potential(PROBABILITY, variables, cards, None, unity=True)
    table = p.table.sum(axis=i)
    ctr.additions += (p.cards[i] - 1) * int(np.prod(cards, dtype=np.int64))
    if p.kind == UTILITY:
        return Potential(UTILITY, variables, cards, np.asarray(table))
    return Potential(
        PROBABILITY,
        variables,
        cards,
        np.asarray(table),
        head=p.head - {var},
        tainted=p.tainted,
    )


@dataclass(frozen=True, eq=False)
class ArgmaxRecord:
    """Winning state of ``decision`` for every configuration of ``variables``."""

    decision: int
    variables: tuple
    cards: tuple
    table: np.ndarray
    ties: np.ndarray = field(repr=False)


def max_out(p: Potential, var: int, ctr: OpCounter) -> tuple:
    """Maximize ``var`` out of ``p``; ties go to the lowest state index."""
    if var not in p.domain:
        raise KeyError(f"variable {var} not in potential domain {p.variables}")
    if p.unity:
        raise ValueError("maximizing a unity potential")
    i = p.variables.index(var)
    variables = p.variables[:i] + p.variables[i + 1 :]
    cards = p.cards[:i] + p.cards[i + 1 :]
    best = p.table.max(axis=i)
    arg = p.table.argmax(axis=i)
    scale = np.maximum(np.abs(best), 1.0)
    near = np.abs(p.table - np.expand_dims(best, i)) <= TIE_RTOL * np.expand_dims(
        scale, i
    )
    ties = near.sum(axis=i) > 1
    ctr.comparisons += (p.cards[i] - 1) * int(np.prod(cards, dtype=np.int64))
    if p.kind == UTILITY:
        out = Potential(UTILITY, variables, cards, np.asarray(best))
    else:
        out = Potential(
            PROBABILITY,
            variables,
            cards,
            np.asarray(best),
            head=p.head,
            tainted=p.tainted,
        )
    record = ArgmaxRecord(var, variables, cards, np.asarray(arg), np.asarray(ties))
    return out, record


def restrict(p: Potential, evidence: Mapping[int, int], ctr: Optional[OpCounter] = None):
    """Slice evidence variables out of ``p``.  Costs nothing."""
    hit = [v for v in p.variables if v in evidence]
    if not hit:
        return p
    keep = [i for i, v in enumerate(p.variables) if v not in evidence]
    variables = tuple(p.variables[i] for i in keep)
    cards = tuple(p.cards[i] for i in keep)
    if p.unity:
        return Potential(PROBABILITY, variables, cards, None, unity=True)
    index = tuple(
        int(evidence[v]) if v in evidence else slice(None) for v in p.variables
    )
    table = np.array(p.table[index])
    if p.kind == UTILITY:
        return Potential(UTILITY, variables, cards, table)
    return Potential(
        PROBABILITY,
        variables,
        cards,
        table,
        head=p.head - set(hit),
        tainted=p.tainted or bool(p.head & set(hit)),
    )

"""Line-oriented text format for influence diagrams.

Example::

    # weather / umbrella
    @variables
    Rain     chance   no,yes
    Forecast chance   dry,wet
    Take     decision no,yes
    @arcs
    Rain -> Forecast
    Forecast -> Take
    @cpt Rain
    0.7 0.3
    @cpt Forecast | Rain
    0.8 0.2
    0.3 0.7
    @utility Comfort | Take Rain
    20 0
    15 18

A ``@cpt`` line lists its head, then ``|`` and the parents.  There is one
row of numbers per parent configuration, first parent slowest, head
fastest.  Several head variables may share a CPT (a joint family such as
``@cpt C1 C2``).  ``@order`` lists decisions in temporal order and may be
omitted when there is at most one decision.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Union

import numpy as np

from .model import InfluenceDiagram, ModelError, build_diagram

SECTIONS = ("variables", "arcs", "cpt", "utility", "order")
_ARC = re.compile(r"^(\S+)\s*->\s*(\S+)$")


def _numbers(text: str, line: int) -> list:
    out = []
    for tok in text.replace(",", " ").split():
        try:
            out.append(float(tok))
        except ValueError:
            raise ModelError(f"not a number: {tok!r}", line) from None
    return out


def _split_header(rest: str, line: int) -> tuple:
    left, bar, right = rest.partition("|")
    names = left.split()
    if not names:
        raise ModelError("section header needs a name", line)
    return names, right.split() if bar else []


def parse_model(text: str) -> InfluenceDiagram:
    """Parse model text; every error carries the offending line number."""
    desc = {"variables": [], "arcs": [], "cpts": [], "utilities": []}
    section, current = None, None
    order, order_line = None, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("@"):
            word, _, rest = body[1:].partition(" ")
            if word not in SECTIONS:
                raise ModelError(f"unknown section @{word}", lineno)
            section = word
            if word == "cpt":
                head, parents = _split_header(rest, lineno)
                current = {"head": head, "parents": parents, "rows": [], "row_lines": {},
                           "line": lineno}
                desc["cpts"].append(current)
            elif word == "utility":
                names, variables = _split_header(rest, lineno)
                if len(names) != 1:
                    raise ModelError("utility header is '@utility <name> | <vars>'", lineno)
                current = {"name": names[0], "variables": variables, "values": [],
                           "line": lineno}
                desc["utilities"].append(current)
            elif word == "order":
                if order is not None:
                    raise ModelError("second @order section", lineno)
                order, order_line = [], lineno
            elif rest.strip():
                raise ModelError(f"@{word} takes no arguments", lineno)
            continue
        if section is None:
            raise ModelError("content before the first section", lineno)
        if section == "variables":
            parts = body.split(None, 2)
            if len(parts) != 3:
                raise ModelError("variable line is '<name> chance|decision <s1,s2,...>'", lineno)
            states = [s.strip() for s in parts[2].split(",")]
            if any(not s for s in states):
                raise ModelError(f"empty state label for {parts[0]!r}", lineno)
            desc["variables"].append(
                {"name": parts[0], "kind": parts[1], "states": states, "line": lineno}
            )
        elif section == "arcs":
            m = _ARC.match(body)
            if not m:
                raise ModelError("arc line is '<parent> -> <child>'", lineno)
            desc["arcs"].append((m.group(1), m.group(2), lineno))
        elif section == "cpt":
            current["row_lines"][len(current["rows"])] = lineno
            current["rows"].append((_numbers(body, lineno), lineno))
        elif section == "utility":
            current["values"].extend(_numbers(body, lineno))
        elif section == "order":
            order.extend(body.split())
    desc["order"] = order
    desc["order_line"] = order_line
    _check_rows(desc)
    return build_diagram(desc)


def _check_rows(desc: dict) -> None:
    """Row-by-row width checks, so that errors point at the right line."""
    cards = {v["name"]: len(v["states"]) for v in desc["variables"]}
    for fam in desc["cpts"]:
        names = fam["head"] + fam["parents"]
        unknown = [n for n in names if n not in cards]
        if unknown:
            raise ModelError(f"unknown variable {unknown[0]!r}", fam["line"])
        width = int(np.prod([cards[h] for h in fam["head"]]))
        rows = int(np.prod([cards[p] for p in fam["parents"]]))
        for values, line in fam["rows"]:
            if len(values) != width:
                raise ModelError(
                    f"CPT row for {' '.join(fam['head'])} has {len(values)} numbers,"
                    f" expected {width}",
                    line,
                )
        if len(fam["rows"]) != rows:
            raise ModelError(
                f"CPT for {' '.join(fam['head'])} has {len(fam['rows'])} rows,"
                f" expected {rows}",
                fam["line"],
            )
        fam["values"] = [x for values, _ in fam["rows"] for x in values]


def load_model(path: Union[str, Path]) -> InfluenceDiagram:
    return parse_model(Path(path).read_text(encoding="utf-8"))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize_model(diagram: InfluenceDiagram) -> str:
    """Text that parses back to an equivalent diagram."""
    name = diagram.name
    out = ["@variables"]
    for v in diagram.variables:
        out.append(f"{v.name} {v.kind} {','.join(v.states)}")
    out.append("@arcs")
    for child, parents in enumerate(diagram.parents):
        for p in parents:
            out.append(f"{name(p)} -> {name(child)}")
    for cpt in diagram.cpts:
        head = sorted(cpt.head)
        tail = sorted(cpt.tail)
        axes = [cpt.variables.index(v) for v in tail + head]
        width = int(np.prod([cpt.card(h) for h in head]))
        table = np.transpose(cpt.table, axes).reshape(-1, width)
        header = " ".join(map(name, head))
        if tail:
            header += " | " + " ".join(map(name, tail))
        out.append(f"@cpt {header}")
        out.extend(" ".join(map(_fmt, row)) for row in table)
    unames = diagram.utility_names or tuple(f"U{i}" for i in range(len(diagram.utilities)))
    for uname, u in zip(unames, diagram.utilities):
        header = uname
        if u.variables:
            header += " | " + " ".join(map(name, u.variables))
        out.append(f"@utility {header}")
        out.append(" ".join(map(_fmt, u.table.ravel())))
    if diagram.decision_order:
        out.append("@order")
        out.append(" ".join(map(name, diagram.decision_order)))
    return "\n".join(out) + "\n"

"""CPLEX LP writer and a structural reader for the same subset.

Variables are named ``x<handle>``; ``emit_var_map`` gives the sidecar
``handle<TAB>tag`` lines mapping names back to encoding variables.
"""

import re
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from cudf_align.domain.errors import MalformedProgramError
from cudf_align.domain.program import Comparison, LinearProgram, Objective, Term

TERMS_PER_LINE = 10

_TERM = re.compile(r"([+-])?\s*(\d+)\s+x(\d+)")
_ROW = re.compile(r"(\w+):(.*?)(<=|>=|=)\s*(-?\d+)")
_SECTIONS = {
    "minimize": "objective",
    "subject to": "rows",
    "bounds": "bounds",
    "binary": "binary",
    "binaries": "binary",
    "general": "general",
    "generals": "general",
    "end": "end",
}


def _linear(terms: Sequence[Term]) -> str:
    chunks: List[str] = []
    for position, (coef, handle) in enumerate(terms):
        if position == 0:
            chunk = f"{coef} x{handle}"
        else:
            chunk = f"{'-' if coef < 0 else '+'} {abs(coef)} x{handle}"
        if position and position % TERMS_PER_LINE == 0:
            chunk = "\n   " + chunk
        chunks.append(chunk)
    return " ".join(chunks)


def select_objective(lp: LinearProgram, merge: str = "first") -> Objective:
    """The single objective written to LP/OPB: level 1, or the weighted lexicographic merge."""
    if merge == "lex":
        return lp.lexicographic_objective()
    if merge != "first":
        raise ValueError(f"unknown objective merge '{merge}'")
    if not lp.objectives:
        raise MalformedProgramError("program has no objective")
    return lp.objectives[0]


def emit_lp(lp: LinearProgram, merge: str = "first") -> str:
    objective = select_objective(lp, merge)
    lines = [f"\\ {lp.name}: {len(lp.variables)} variables, {len(lp.constraints)} rows", "Minimize"]
    if objective.terms:
        lines.append(f" obj: {_linear(objective.terms)}")
    elif lp.variables:
        lines.append(" obj: 0 x1")
    else:
        lines.append(" obj: 0")

    lines.append("Subject To")
    for position, row in enumerate(lp.constraints, start=1):
        lines.append(f" c{position}: {_linear(row.terms)} {row.relation.value} {row.rhs}")

    lines.append("Bounds")
    for v in lp.variables:
        if v.is_fixed:
            lines.append(f" x{v.handle} = {v.lower}")
        elif not v.is_binary:
            lines.append(f" {v.lower} <= x{v.handle} <= {v.upper}")

    binaries = [f"x{v.handle}" for v in lp.variables if v.is_binary]
    generals = [f"x{v.handle}" for v in lp.variables if not v.is_binary]
    if binaries:
        lines.append("Binary")
        lines.extend(" " + " ".join(binaries[i : i + TERMS_PER_LINE]) for i in range(0, len(binaries), TERMS_PER_LINE))
    if generals:
        lines.append("General")
        lines.extend(" " + " ".join(generals[i : i + TERMS_PER_LINE]) for i in range(0, len(generals), TERMS_PER_LINE))
    lines.append("End")
    return "\n".join(lines) + "\n"


def emit_var_map(lp: LinearProgram) -> str:
    return "".join(f"{v.handle}\t{v.tag}\n" for v in lp.variables)


class LpSummary(BaseModel):
    """What a reader recovers from an LP file."""

    model_config = ConfigDict(frozen=True)

    objective: Tuple[Term, ...] = ()
    rows: Tuple[Tuple[Tuple[Term, ...], Comparison, int], ...] = ()
    bounds: Dict[int, Tuple[int, int]] = {}
    binaries: Tuple[int, ...] = ()
    generals: Tuple[int, ...] = ()


def _parse_terms(text: str) -> Tuple[Term, ...]:
    terms = []
    for sign, coef, handle in _TERM.findall(text):
        value = -int(coef) if sign == "-" else int(coef)
        if value:
            terms.append((value, int(handle)))
    return tuple(terms)


def read_lp(text: str) -> LpSummary:
    sections: Dict[str, List[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        section = _SECTIONS.get(line.lower())
        if section is not None:
            current = section
            sections.setdefault(current, [])
            continue
        if current is None or current == "end":
            raise ValueError(f"LP text outside a section: '{line}'")
        sections[current].append(line)

    if "objective" not in sections or "end" not in sections:
        raise ValueError("LP text needs Minimize and End sections")

    objective_text = " ".join(sections["objective"])
    objective = _parse_terms(objective_text.split(":", 1)[-1])

    rows = tuple(
        (_parse_terms(body), Comparison(relation), int(rhs))
        for _, body, relation, rhs in _ROW.findall(" ".join(sections.get("rows", [])))
    )

    bounds: Dict[int, Tuple[int, int]] = {}
    for line in sections.get("bounds", []):
        fixed = re.fullmatch(r"x(\d+)\s*=\s*(-?\d+)", line)
        ranged = re.fullmatch(r"(-?\d+)\s*<=\s*x(\d+)\s*<=\s*(-?\d+)", line)
        if fixed:
            bounds[int(fixed.group(1))] = (int(fixed.group(2)), int(fixed.group(2)))
        elif ranged:
            bounds[int(ranged.group(2))] = (int(ranged.group(1)), int(ranged.group(3)))
        else:
            raise ValueError(f"unreadable bound '{line}'")

    def names(key: str) -> Tuple[int, ...]:
        return tuple(int(tok[1:]) for line in sections.get(key, []) for tok in line.split())

    return LpSummary(
        objective=objective,
        rows=rows,
        bounds=bounds,
        binaries=names("binary"),
        generals=names("general"),
    )

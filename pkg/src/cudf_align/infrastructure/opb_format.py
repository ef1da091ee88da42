"""OPB (pseudo-Boolean) writer and reader.

OPB is 0-1 only: integer counters are replaced by their defining sums and
every inequality is written in ``>=`` form.
"""

import re
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict

from cudf_align.domain.program import Comparison, LinearProgram, Term
from cudf_align.infrastructure.lp_format import select_objective

_HEADER = re.compile(r"\*\s*#variable=\s*(\d+)\s+#constraint=\s*(\d+)")
_TERM = re.compile(r"([+-]\d+)\s+x(\d+)")


def _opb_terms(terms: Tuple[Term, ...]) -> str:
    return " ".join(f"{coef:+d} x{handle}" for coef, handle in terms)


def emit_opb(lp: LinearProgram, merge: str = "first") -> str:
    binary = lp.substituted()
    objective = binary.expand_objective(select_objective(lp, merge))

    rows: List[str] = []
    for row in binary.constraints:
        terms, relation, rhs = row.terms, row.relation, row.rhs
        if relation == Comparison.LE:
            terms, relation, rhs = tuple((-c, h) for c, h in terms), Comparison.GE, -rhs
        rows.append(f"{_opb_terms(terms)} {relation.value} {rhs} ;".lstrip())
    for handle, value in sorted(binary.fixed.items()):
        rows.append(f"+1 x{handle} = {value} ;")

    num_vars = max(binary.handles, default=0)
    lines = [f"* #variable= {num_vars} #constraint= {len(rows)}"]
    lines.append(f"min: {_opb_terms(objective.terms)} ;" if objective.terms else "min: ;")
    lines.extend(rows)
    return "\n".join(lines) + "\n"


class OpbSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    num_vars: int
    num_constraints: int
    objective: Tuple[Term, ...] = ()
    rows: Tuple[Tuple[Tuple[Term, ...], Comparison, int], ...] = ()


def _parse_terms(text: str) -> Tuple[Term, ...]:
    return tuple((int(coef), int(handle)) for coef, handle in _TERM.findall(text))


def read_opb(text: str) -> OpbSummary:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty OPB text")
    header = _HEADER.match(lines[0])
    if not header:
        raise ValueError(f"bad OPB header '{lines[0]}'")

    objective: Tuple[Term, ...] = ()
    rows = []
    for line in lines[1:]:
        if line.startswith("*"):
            continue
        if not line.endswith(";"):
            raise ValueError(f"OPB statement without ';': '{line}'")
        body = line[:-1].strip()
        if body.startswith("min:"):
            objective = _parse_terms(body[len("min:") :])
            continue
        match = re.fullmatch(r"(.*?)\s*(>=|=)\s*(-?\d+)", body)
        if not match:
            raise ValueError(f"unreadable OPB constraint '{line}'")
        rows.append((_parse_terms(match.group(1)), Comparison(match.group(2)), int(match.group(3))))

    return OpbSummary(
        num_vars=int(header.group(1)),
        num_constraints=int(header.group(2)),
        objective=objective,
        rows=tuple(rows),
    )

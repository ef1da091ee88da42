"""Weighted partial MaxSAT (WCNF) writer and reader on top of pysat."""

import io
from typing import Tuple

from pydantic import BaseModel, ConfigDict
from pysat.formula import WCNF

from cudf_align.domain.clauses import WeightedFormula


def emit_wcnf(formula: WeightedFormula) -> str:
    """``p wcnf <vars> <clauses> <top>`` followed by one ``0``-terminated line per clause."""
    out = io.StringIO()
    formula.to_wcnf().to_fp(out)
    return out.getvalue()


class WcnfSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    num_vars: int
    num_clauses: int
    top: int
    hard: Tuple[Tuple[int, ...], ...] = ()
    soft: Tuple[Tuple[int, Tuple[int, ...]], ...] = ()


def _header(text: str) -> Tuple[int, int, int]:
    """Header numbers; clause lines must follow it and be terminated by 0."""
    header = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 5 or parts[1] != "wcnf":
                raise ValueError(f"bad WCNF header '{line}'")
            header = tuple(int(x) for x in parts[2:])
            continue
        if header is None:
            raise ValueError("clause before WCNF header")
        numbers = line.split()
        if len(numbers) < 3 or numbers[-1] != "0":
            raise ValueError(f"unterminated or empty clause '{line}'")
    if header is None:
        raise ValueError("missing WCNF header")
    return header


def read_wcnf(text: str) -> WcnfSummary:
    num_vars, num_clauses, top = _header(text)
    wcnf = WCNF(from_string=text)
    return WcnfSummary(
        num_vars=num_vars,
        num_clauses=num_clauses,
        top=top,
        hard=tuple(tuple(clause) for clause in wcnf.hard),
        soft=tuple((int(weight), tuple(clause)) for clause, weight in zip(wcnf.soft, wcnf.wght)),
    )

"""Clauses and weighted CNF formulas over program variable handles."""

from typing import Iterable, List, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pysat.formula import WCNF


class Clause(BaseModel):
    """Disjunction of signed variable handles."""

    model_config = ConfigDict(frozen=True)

    literals: Tuple[int, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _well_formed(self):
        if 0 in self.literals:
            raise ValueError("literal 0 is reserved")
        if len(set(self.literals)) != len(self.literals):
            raise ValueError(f"duplicate literal in {self.literals}")
        if any(-lit in self.literals for lit in self.literals):
            raise ValueError(f"complementary literals in {self.literals}")
        return self

    @classmethod
    def of(cls, literals: Iterable[int]) -> "Clause":
        return cls(literals=tuple(dict.fromkeys(literals)))

    def satisfied(self, true_vars: Set[int]) -> bool:
        return any((lit > 0) == (abs(lit) in true_vars) for lit in self.literals)


class WeightedFormula(BaseModel):
    """Hard clauses plus weighted soft clauses; hard clauses weigh ``top``."""

    model_config = ConfigDict(frozen=True)

    hard: Tuple[Clause, ...] = ()
    soft: Tuple[Tuple[int, Clause], ...] = ()
    num_vars: int = 0

    @model_validator(mode="after")
    def _positive_weights(self):
        if any(weight <= 0 for weight, _ in self.soft):
            raise ValueError("soft weights must be positive")
        return self

    def to_wcnf(self) -> WCNF:
        """Same clauses, in order, as a pysat ``WCNF``; ``nv`` is at least ``num_vars``."""
        wcnf = WCNF()
        for clause in self.hard:
            wcnf.append(list(clause.literals))
        for weight, clause in self.soft:
            wcnf.append(list(clause.literals), weight=weight)
        wcnf.nv = max(wcnf.nv, self.num_vars)
        wcnf.topw = sum(wcnf.wght) + 1
        return wcnf

    @property
    def top(self) -> int:
        return self.to_wcnf().topw

    def cost(self, true_vars: Set[int]) -> int:
        return sum(weight for weight, clause in self.soft if not clause.satisfied(true_vars))

    def hard_satisfied(self, true_vars: Set[int]) -> bool:
        return all(clause.satisfied(true_vars) for clause in self.hard)


class ClauseSet:
    """Ordered, duplicate-free clause collector."""

    def __init__(self):
        self.clauses: List[Clause] = []
        self._seen: Set[Tuple[int, ...]] = set()

    def add(self, literals: Iterable[int]) -> None:
        clause = Clause.of(literals)
        key = tuple(sorted(clause.literals))
        if key not in self._seen:
            self._seen.add(key)
            self.clauses.append(clause)

    def __len__(self) -> int:
        return len(self.clauses)

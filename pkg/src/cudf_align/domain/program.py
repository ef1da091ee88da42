"""0-1 linear programs with tagged variables and an ordered objective stack."""

import logging
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict

from cudf_align.domain.errors import MalformedProgramError
from cudf_align.domain.models import CriterionKind, Installation, PackageRef

logger = logging.getLogger(__name__)

# (coefficient, variable handle)
Term = Tuple[int, int]


class VarKind(str, Enum):
    PKG = "pkg"
    INSTALLED_VERSION = "i"
    NU_PKG = "nu_pkg"
    U_PAIR = "u_pair"
    NB_INST = "nb_inst"
    DELTA = "delta"
    NC = "nc"
    U_CLUSTER = "u_cluster"
    CRIT_AUX = "crit_aux"


_KIND_RANK = {kind: rank for rank, kind in enumerate(VarKind)}


class VarId(BaseModel):
    """Identity of a variable: a kind tag plus the domain objects it stands for."""

    model_config = ConfigDict(frozen=True)

    kind: VarKind
    key: Tuple[Union[str, int], ...]

    @classmethod
    def pkg(cls, ref: PackageRef) -> "VarId":
        return cls(kind=VarKind.PKG, key=tuple(ref))

    @classmethod
    def installed_version(cls, source: str, token: str) -> "VarId":
        return cls(kind=VarKind.INSTALLED_VERSION, key=(source, token))

    @classmethod
    def nu_pkg(cls, ref: PackageRef) -> "VarId":
        return cls(kind=VarKind.NU_PKG, key=tuple(ref))

    @classmethod
    def u_pair(cls, first: PackageRef, second: PackageRef) -> "VarId":
        return cls(kind=VarKind.U_PAIR, key=(*first, *second))

    @classmethod
    def per_source(cls, kind: VarKind, source: str) -> "VarId":
        return cls(kind=kind, key=(source,))

    @classmethod
    def crit_aux(cls, criterion: CriterionKind, *parts: Union[str, int]) -> "VarId":
        return cls(kind=VarKind.CRIT_AUX, key=(criterion.value, *parts))

    def sort_key(self) -> Tuple:
        return (_KIND_RANK[self.kind], tuple((0, k) if isinstance(k, int) else (1, k) for k in self.key))

    def __str__(self) -> str:
        return f"{self.kind.value}({','.join(str(k) for k in self.key)})"


class Variable(BaseModel):
    model_config = ConfigDict(frozen=True)

    handle: int
    tag: VarId
    lower: int = 0
    upper: int = 1

    @property
    def is_binary(self) -> bool:
        return self.lower >= 0 and self.upper <= 1

    @property
    def is_fixed(self) -> bool:
        return self.lower == self.upper


class Comparison(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class LinearConstraint(BaseModel):
    model_config = ConfigDict(frozen=True)

    terms: Tuple[Term, ...]
    relation: Comparison
    rhs: int
    label: str = ""

    def activity(self, values: Mapping[int, int]) -> int:
        return sum(c * values[h] for c, h in self.terms)

    def holds(self, values: Mapping[int, int]) -> bool:
        lhs = self.activity(values)
        if self.relation == Comparison.LE:
            return lhs <= self.rhs
        if self.relation == Comparison.GE:
            return lhs >= self.rhs
        return lhs == self.rhs


class Objective(BaseModel):
    """Minimized linear objective, labelled with the criterion it measures."""

    model_config = ConfigDict(frozen=True)

    label: CriterionKind
    terms: Tuple[Term, ...] = ()
    constant: int = 0
    sense: str = "minimize"

    def value(self, values: Mapping[int, int]) -> int:
        return self.constant + sum(c * values[h] for c, h in self.terms)


def merge_terms(terms: Iterable[Term]) -> Tuple[Term, ...]:
    """Sum coefficients per handle, drop zeros, order by handle."""
    merged: Dict[int, int] = {}
    for coef, handle in terms:
        merged[handle] = merged.get(handle, 0) + coef
    return tuple((c, h) for h, c in sorted(merged.items()) if c != 0)


class LinearProgram:
    """Builder and container for an encoded upgrade problem.

    Handles are dense integers starting at 1, allocated in creation order.
    Integer (non-binary) variables carry a defining linear expression over
    other variables so they can be substituted away.
    """

    def __init__(self, name: str = "cudf-align"):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[LinearConstraint] = []
        self.objectives: List[Objective] = []
        self.definitions: Dict[int, Tuple[Term, ...]] = {}
        # preferred value per handle, used as a branching hint
        self.hints: Dict[int, int] = {}
        self._handles: Dict[VarId, int] = {}
        self._seen: Set[Tuple] = set()

    # ----- variables -----

    def variable(self, tag: VarId, lower: int = 0, upper: int = 1) -> int:
        handle = self._handles.get(tag)
        if handle is not None:
            return handle
        handle = len(self.variables) + 1
        self.variables.append(Variable(handle=handle, tag=tag, lower=lower, upper=upper))
        self._handles[tag] = handle
        return handle

    def handle(self, tag: VarId) -> int:
        try:
            return self._handles[tag]
        except KeyError:
            raise MalformedProgramError(f"undeclared variable {tag}") from None

    def var(self, handle: int) -> Variable:
        if not 1 <= handle <= len(self.variables):
            raise MalformedProgramError(f"undeclared variable handle {handle}")
        return self.variables[handle - 1]

    def tag(self, handle: int) -> VarId:
        return self.var(handle).tag

    def fix(self, handle: int, value: int) -> None:
        current = self.var(handle)
        if not current.lower <= value <= current.upper:
            raise MalformedProgramError(f"cannot fix {current.tag} to {value}")
        self.variables[handle - 1] = current.model_copy(update={"lower": value, "upper": value})

    def pkg_handles(self) -> Dict[PackageRef, int]:
        return {
            (v.tag.key[0], v.tag.key[1]): v.handle
            for v in self.variables
            if v.tag.kind == VarKind.PKG
        }

    # ----- rows -----

    def add_constraint(
        self, terms: Iterable[Term], relation: Comparison, rhs: int, label: str = ""
    ) -> Optional[LinearConstraint]:
        """Add a row; returns None when it is trivially true or already present."""
        merged = merge_terms(terms)
        for _, handle in merged:
            self.var(handle)
        if not merged:
            if LinearConstraint(terms=(), relation=relation, rhs=rhs).holds({}):
                return None
            raise MalformedProgramError(f"constant constraint 0 {relation.value} {rhs} ({label})")
        key = (merged, relation, rhs)
        if key in self._seen:
            return None
        self._seen.add(key)
        row = LinearConstraint(terms=merged, relation=relation, rhs=rhs, label=label)
        self.constraints.append(row)
        return row

    def define(self, handle: int, terms: Iterable[Term], label: str = "") -> None:
        """Record ``x_handle = sum(terms)`` and add it as an equality row."""
        expression = merge_terms(terms)
        if handle in self.definitions:
            return
        self.definitions[handle] = expression
        self.add_constraint([(1, handle), *((-c, h) for c, h in expression)], Comparison.EQ, 0, label)

    def add_objective(self, objective: Objective) -> Objective:
        """Append the next lexicographic level."""
        for _, handle in objective.terms:
            self.var(handle)
        self.objectives.append(objective)
        return objective

    # ----- evaluation -----

    def feasible(self, values: Mapping[int, int]) -> bool:
        for v in self.variables:
            if not v.lower <= values[v.handle] <= v.upper:
                return False
        return all(row.holds(values) for row in self.constraints)

    def decode(self, values: Mapping[int, int]) -> Installation:
        return Installation.of(ref for ref, h in self.pkg_handles().items() if values.get(h) == 1)

    def objective_bounds(self, objective: Objective) -> Tuple[int, int]:
        low = high = objective.constant
        for coef, handle in objective.terms:
            v = self.var(handle)
            low += min(coef * v.lower, coef * v.upper)
            high += max(coef * v.lower, coef * v.upper)
        return low, high

    def lexicographic_objective(self) -> Objective:
        """Single objective whose minimum is the lexicographic minimum.

        Level k gets weight prod_{j>k} (UB_j + 1), UB_j the trivial upper bound.
        """
        if not self.objectives:
            raise MalformedProgramError("program has no objective")
        weight = 1
        terms: List[Term] = []
        constant = 0
        for objective in reversed(self.objectives):
            terms.extend((weight * c, h) for c, h in objective.terms)
            constant += weight * objective.constant
            weight *= self.objective_bounds(objective)[1] + 1
        return Objective(label=self.objectives[0].label, terms=merge_terms(terms), constant=constant)

    def substituted(self) -> "BinaryProgram":
        return BinaryProgram(self)


class BinaryProgram:
    """Pure 0-1 view of a LinearProgram: integer variables replaced by their definitions."""

    def __init__(self, program: LinearProgram):
        self.program = program
        self._expanded: Dict[int, Dict[int, int]] = {}

        for v in program.variables:
            if not v.is_binary and v.handle not in program.definitions:
                raise MalformedProgramError(f"integer variable {v.tag} has no definition")

        self.handles: Tuple[int, ...] = tuple(
            v.handle for v in program.variables if v.handle not in program.definitions
        )
        self.fixed: Dict[int, int] = {
            v.handle: v.lower for v in program.variables if v.is_fixed and v.handle in self.handles
        }

        rows: List[LinearConstraint] = []
        seen: Set[Tuple] = set()

        def push(terms: Tuple[Term, ...], relation: Comparison, rhs: int, label: str) -> None:
            row = LinearConstraint(terms=terms, relation=relation, rhs=rhs, label=label)
            if not terms:
                if not row.holds({}):
                    # keep an unsatisfiable constant row so solvers detect it
                    rows.append(row)
                return
            key = (terms, relation, rhs)
            if key not in seen:
                seen.add(key)
                rows.append(row)

        for row in program.constraints:
            terms, constant = self.expand_terms(row.terms)
            push(terms, row.relation, row.rhs - constant, row.label)

        # bounds of eliminated integer variables that the expression does not imply
        for handle in sorted(program.definitions):
            v = program.var(handle)
            terms, constant = self.expand_terms(((1, handle),))
            low = constant + sum(min(c, 0) for c, _ in terms)
            high = constant + sum(max(c, 0) for c, _ in terms)
            if low < v.lower:
                push(terms, Comparison.GE, v.lower - constant, f"lb_{handle}")
            if high > v.upper:
                push(terms, Comparison.LE, v.upper - constant, f"ub_{handle}")

        self.constraints: Tuple[LinearConstraint, ...] = tuple(rows)
        self.objectives: Tuple[Objective, ...] = tuple(self.expand_objective(o) for o in program.objectives)

    def _expand(self, handle: int) -> Dict[int, int]:
        if handle in self._expanded:
            return self._expanded[handle]
        definition = self.program.definitions.get(handle)
        if definition is None:
            result = {handle: 1}
        else:
            result: Dict[int, int] = {}
            for coef, inner in definition:
                for h, c in self._expand(inner).items():
                    result[h] = result.get(h, 0) + coef * c
        self._expanded[handle] = result
        return result

    def expand_terms(self, terms: Iterable[Term]) -> Tuple[Tuple[Term, ...], int]:
        """Substitute definitions; definitions carry no constant, so the offset is 0."""
        expanded: List[Term] = []
        for coef, handle in terms:
            expanded.extend((coef * c, h) for h, c in self._expand(handle).items())
        return merge_terms(expanded), 0

    def expand_objective(self, objective: Objective) -> Objective:
        terms, constant = self.expand_terms(objective.terms)
        return objective.model_copy(update={"terms": terms, "constant": objective.constant + constant})

    def complete(self, values: Mapping[int, int]) -> Dict[int, int]:
        """Extend a 0-1 assignment with the values of the eliminated variables."""
        full = dict(values)
        for handle in self.program.definitions:
            full[handle] = sum(c * values[h] for h, c in self._expand(handle).items())
        return full

"""Exact 0-1 branch and bound with a lexicographic driver.

Integer counters are substituted away first, leaving a pure 0-1 program.
Independent parts of the program (connected components of the
variable/row incidence graph) are solved separately and their optima
summed, which is exact because objectives are linear sums.
"""

import logging
import time
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field

from cudf_align.core.config import settings
from cudf_align.domain.errors import MalformedProgramError
from cudf_align.domain.models import CriterionKind, Installation
from cudf_align.domain.program import BinaryProgram, Comparison, LinearConstraint, LinearProgram, Term

logger = logging.getLogger(__name__)

# a row in the form sum(terms) >= rhs
GeqRow = Tuple[Tuple[Term, ...], int]

TIME_CHECK_INTERVAL = 4096


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    BUDGET_EXCEEDED = "budget_exceeded"


class SolveBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_nodes: int = Field(default_factory=lambda: settings.budget_nodes, gt=0)
    max_seconds: float = Field(default_factory=lambda: settings.budget_seconds, gt=0)


class LevelOutcome(BaseModel):
    """Optimum reached at one lexicographic level."""

    model_config = ConfigDict(frozen=True)

    label: CriterionKind
    value: int
    seconds: float
    nodes: int
    installation: Installation


class SolveResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: SolveStatus
    assignment: Dict[int, int] = {}
    installation: Optional[Installation] = None
    objective_values: Tuple[int, ...] = ()
    levels: Tuple[LevelOutcome, ...] = ()
    nodes: int = 0
    elapsed: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


class _BudgetExhausted(Exception):
    pass


class BranchAndBound:
    """Depth-first search over one component.

    Propagation keeps, per row, the maximal reachable activity under the
    current domains; a free variable whose coefficient exceeds the row's
    slack is forced. The bound is the objective of the fixed part plus
    every free negative coefficient.
    """

    def __init__(
        self,
        order: Sequence[int],
        rows: Sequence[GeqRow],
        objective: Mapping[int, int],
        preferred: Mapping[int, int],
    ):
        self.order = list(order)
        index = {h: j for j, h in enumerate(self.order)}
        self.index = index
        self.rows = [[(index[h], c) for c, h in terms] for terms, _ in rows]
        self.rhs = [rhs for _, rhs in rows]
        self.occurrences: List[List[Tuple[int, int]]] = [[] for _ in self.order]
        for r, row in enumerate(self.rows):
            for j, a in row:
                self.occurrences[j].append((r, a))
        self.max_activity = [sum(max(a, 0) for _, a in row) for row in self.rows]
        self.cost = [objective.get(h, 0) for h in self.order]
        self.bound = sum(min(c, 0) for c in self.cost)
        self.preferred = [preferred.get(h, 0) for h in self.order]
        self.values = [-1] * len(self.order)
        self.trail: List[int] = []
        self.nodes = 0

    def _set(self, j: int, v: int) -> None:
        self.values[j] = v
        self.trail.append(j)
        self.bound += self.cost[j] * v - min(self.cost[j], 0)
        for r, a in self.occurrences[j]:
            self.max_activity[r] += a * v - max(a, 0)

    def _undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            j = self.trail.pop()
            v = self.values[j]
            self.values[j] = -1
            self.bound -= self.cost[j] * v - min(self.cost[j], 0)
            for r, a in self.occurrences[j]:
                self.max_activity[r] -= a * v - max(a, 0)

    def _propagate(self, queue: List[Tuple[int, int]]) -> bool:
        while queue:
            j, v = queue.pop()
            if self.values[j] != -1:
                if self.values[j] != v:
                    return False
                continue
            self._set(j, v)
            for r, _ in self.occurrences[j]:
                slack = self.max_activity[r] - self.rhs[r]
                if slack < 0:
                    return False
                for k, a in self.rows[r]:
                    if self.values[k] == -1 and abs(a) > slack:
                        queue.append((k, 1 if a > 0 else 0))
        return True

    def _root(self, fixed: Iterable[Tuple[int, int]]) -> bool:
        queue = [(self.index[h], v) for h, v in fixed]
        for r, row in enumerate(self.rows):
            slack = self.max_activity[r] - self.rhs[r]
            if slack < 0:
                return False
            queue.extend((j, 1 if a > 0 else 0) for j, a in row if abs(a) > slack)
        return self._propagate(queue)

    def _next_free(self) -> Optional[int]:
        for j, v in enumerate(self.values):
            if v == -1:
                return j
        return None

    def _tick(self, budget: SolveBudget, deadline: float) -> None:
        self.nodes += 1
        if self.nodes > budget.max_nodes:
            raise _BudgetExhausted()
        if self.nodes % TIME_CHECK_INTERVAL == 0 and time.monotonic() > deadline:
            raise _BudgetExhausted()

    def run(
        self, fixed: Iterable[Tuple[int, int]], budget: SolveBudget, deadline: float
    ) -> Tuple[SolveStatus, Optional[Dict[int, int]], int]:
        best_value: Optional[int] = None
        best: Optional[List[int]] = None

        ok = self._root(fixed)
        root_bound = self.bound
        stack: List[Tuple[int, List[int], int]] = []

        try:
            while True:
                if ok and (best_value is None or self.bound < best_value):
                    j = self._next_free()
                    if j is not None:
                        self._tick(budget, deadline)
                        first = self.preferred[j]
                        stack.append((j, [1 - first], len(self.trail)))
                        ok = self._propagate([(j, first)])
                        continue
                    best_value, best = self.bound, list(self.values)
                    if best_value == root_bound:
                        break
                while stack and not stack[-1][1]:
                    self._undo(stack.pop()[2])
                if not stack:
                    break
                j, remaining, mark = stack[-1]
                self._undo(mark)
                self._tick(budget, deadline)
                ok = self._propagate([(j, remaining.pop())])
        except _BudgetExhausted:
            return SolveStatus.BUDGET_EXCEEDED, None, 0

        if best is None:
            return SolveStatus.INFEASIBLE, None, 0
        return SolveStatus.OPTIMAL, dict(zip(self.order, best)), best_value


def as_geq(row: LinearConstraint) -> List[GeqRow]:
    negated = tuple((-c, h) for c, h in row.terms)
    if row.relation == Comparison.GE:
        return [(row.terms, row.rhs)]
    if row.relation == Comparison.LE:
        return [(negated, -row.rhs)]
    return [(row.terms, row.rhs), (negated, -row.rhs)]


def _preferred(lp: LinearProgram, handle: int, cost: int) -> int:
    if handle in lp.hints:
        return lp.hints[handle]
    return 1 if cost < 0 else 0


def _solve(
    lp: LinearProgram,
    levels: Sequence[int],
    budget: Optional[SolveBudget],
    fixed: Optional[Mapping[int, int]],
) -> SolveResult:
    budget = budget or SolveBudget()
    start = time.monotonic()
    for level in levels:
        if not 0 <= level < len(lp.objectives):
            raise MalformedProgramError(f"objective level {level} out of range")

    binary: BinaryProgram = lp.substituted()
    objectives = [binary.objectives[level] for level in levels]
    free = set(binary.handles)
    pins: List[Tuple[int, int]] = list(binary.fixed.items())
    for handle, value in (fixed or {}).items():
        if handle not in free:
            raise MalformedProgramError(f"cannot fix eliminated or unknown variable {handle}")
        pins.append((handle, value))

    rows: List[GeqRow] = [geq for row in binary.constraints for geq in as_geq(row)]
    if any(not terms and rhs > 0 for terms, rhs in rows):
        return SolveResult(status=SolveStatus.INFEASIBLE, elapsed=time.monotonic() - start)

    graph = nx.Graph()
    graph.add_nodes_from(binary.handles)
    for terms, _ in rows:
        nx.add_path(graph, [h for _, h in terms])
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    owner = {h: n for n, component in enumerate(components) for h in component}
    rows_of: List[List[GeqRow]] = [[] for _ in components]
    for terms, rhs in rows:
        if terms:
            rows_of[owner[terms[0][1]]].append((terms, rhs))
    pins_of: List[List[Tuple[int, int]]] = [[] for _ in components]
    for handle, value in pins:
        pins_of[owner[handle]].append((handle, value))
    logger.debug(f"Solving {len(free)} 0-1 variables in {len(components)} components")

    seconds = [0.0] * len(levels)
    nodes = [0] * len(levels)
    values = [objective.constant for objective in objectives]
    reached: List[Dict[int, int]] = [{} for _ in levels]

    for n, component in enumerate(components):
        members = set(component)
        component_rows = list(rows_of[n])
        for k, objective in enumerate(objectives):
            cost = {h: c for c, h in objective.terms if h in members}
            order = sorted(component, key=lambda h: (h not in cost, lp.tag(h).sort_key()))
            preferred = {h: _preferred(lp, h, cost.get(h, 0)) for h in component}
            remaining = SolveBudget(
                max_nodes=max(1, budget.max_nodes - nodes[k]),
                max_seconds=max(1e-3, budget.max_seconds - seconds[k]),
            )
            tick = time.monotonic()
            search = BranchAndBound(order, component_rows, cost, preferred)
            status, best, value = search.run(pins_of[n], remaining, tick + remaining.max_seconds)
            seconds[k] += time.monotonic() - tick
            nodes[k] += search.nodes
            if status != SolveStatus.OPTIMAL:
                if status == SolveStatus.BUDGET_EXCEEDED:
                    logger.warning(f"Budget exhausted at level {k + 1} after {nodes[k]} nodes")
                return SolveResult(status=status, nodes=sum(nodes), elapsed=time.monotonic() - start)
            values[k] += value
            reached[k].update(best)
            if cost:
                component_rows.append((tuple((-c, h) for h, c in sorted(cost.items())), -value))

    outcomes = []
    for k, objective in enumerate(objectives):
        full = binary.complete(reached[k])
        outcomes.append(
            LevelOutcome(
                label=objective.label,
                value=values[k],
                seconds=seconds[k],
                nodes=nodes[k],
                installation=lp.decode(full),
            )
        )
        logger.info(f"Level {k + 1} {objective.label.value}: optimum {values[k]} in {seconds[k]:.2f}s")

    assignment = binary.complete(reached[-1]) if levels else {}
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        assignment=assignment,
        installation=lp.decode(assignment),
        objective_values=tuple(values),
        levels=tuple(outcomes),
        nodes=sum(nodes),
        elapsed=time.monotonic() - start,
    )


def solve_single(
    lp: LinearProgram,
    level: int = 0,
    budget: Optional[SolveBudget] = None,
    fixed: Optional[Mapping[int, int]] = None,
) -> SolveResult:
    """Optimum of one objective level subject to the hard rows only."""
    return _solve(lp, [level], budget, fixed)


def solve_lex(
    lp: LinearProgram,
    budget: Optional[SolveBudget] = None,
    fixed: Optional[Mapping[int, int]] = None,
) -> SolveResult:
    """Optimize each level in turn, holding earlier levels at their optimum."""
    if not lp.objectives:
        raise MalformedProgramError("program has no objective")
    return _solve(lp, range(len(lp.objectives)), budget, fixed)

"""Ground-truth checks that never go through the linear encoding.

Everything here enumerates: installations by bitmask, package assignments of
a weighted CNF formula. Only meant for small universes.
"""

import logging
import math
import time
from typing import Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from cudf_align.application.solver import BranchAndBound, SolveBudget, SolveResult, SolveStatus, as_geq
from cudf_align.core.config import settings
from cudf_align.domain.clauses import WeightedFormula
from cudf_align.domain.criteria import measure_vector
from cudf_align.domain.cudf import build_cluster_index, expand_constraint, expand_sorted
from cudf_align.domain.errors import BruteForceCapError, MalformedProgramError
from cudf_align.domain.models import (
    ClusterRestriction,
    CriterionSpec,
    Installation,
    PackageRef,
    Request,
    Universe,
)
from cudf_align.domain.program import LinearProgram, VarKind

logger = logging.getLogger(__name__)


class _CompiledProblem:
    """Request and package relations as bitmasks over universe order."""

    def __init__(self, universe: Universe, request: Request):
        self.refs = universe.refs()
        bit = {ref: 1 << i for i, ref in enumerate(self.refs)}

        def mask(refs) -> int:
            return sum(bit[ref] for ref in refs)

        self.depends: List[List[int]] = []
        self.conflicts: List[int] = []
        for unit in universe.packages:
            clauses = []
            for clause in unit.depends.clauses:
                targets = expand_sorted(universe, clause)
                if unit.ref not in targets:
                    clauses.append(mask(targets))
            self.depends.append(clauses)
            self.conflicts.append(
                mask(q for atom in unit.conflicts for q in expand_constraint(universe, atom) if q != unit.ref)
            )

        self.install = [mask(expand_sorted(universe, [atom])) for atom in request.install]
        self.forbidden = mask(q for atom in request.remove for q in expand_constraint(universe, atom))
        self.exactly_one: List[int] = []
        initial = universe.initial_installation()
        for atom in request.upgrade:
            targets = expand_sorted(universe, [atom])
            self.exactly_one.append(mask(targets))
            floor = min(initial.versions(atom.name), default=None)
            for version in universe.versions(atom.name):
                ref = (atom.name, version)
                if ref not in targets or (floor is not None and version < floor):
                    self.forbidden |= bit[ref]

    def feasible(self, m: int) -> bool:
        if m & self.forbidden:
            return False
        if any(not m & t for t in self.install):
            return False
        if any(bin(m & t).count("1") != 1 for t in self.exactly_one):
            return False
        for i in range(len(self.refs)):
            if m >> i & 1:
                if m & self.conflicts[i]:
                    return False
                if any(not m & d for d in self.depends[i]):
                    return False
        return True

    def decode(self, m: int) -> Installation:
        return Installation.of(ref for i, ref in enumerate(self.refs) if m >> i & 1)


def feasible_installations(universe: Universe, request: Request) -> Iterator[Installation]:
    """Every installation satisfying dependencies, conflicts and the request."""
    problem = _CompiledProblem(universe, request)
    for m in range(1 << len(problem.refs)):
        if problem.feasible(m):
            yield problem.decode(m)


def brute_force(
    universe: Universe,
    request: Request,
    spec: CriterionSpec,
    restriction: Optional[ClusterRestriction] = None,
    cap: Optional[int] = None,
) -> SolveResult:
    """Lexicographically minimal installation by exhaustive enumeration."""
    cap = settings.brute_force_cap if cap is None else cap
    if len(universe) > cap:
        raise BruteForceCapError(len(universe), cap)

    start = time.monotonic()
    index = build_cluster_index(universe)
    initial = universe.initial_installation()
    criteria = [(c.kind, c.restriction or restriction) for c in spec.criteria]

    best: Optional[Tuple[Tuple[int, ...], Installation]] = None
    visited = 0
    for installation in feasible_installations(universe, request):
        visited += 1
        vector = measure_vector(criteria, universe, initial, installation, index)
        if best is None or vector < best[0]:
            best = (vector, installation)

    elapsed = time.monotonic() - start
    if best is None:
        return SolveResult(status=SolveStatus.INFEASIBLE, nodes=visited, elapsed=elapsed)
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        installation=best[1],
        objective_values=best[0],
        nodes=visited,
        elapsed=elapsed,
    )


def verify(universe: Universe, request: Request, solution: Installation) -> Tuple[bool, List[str]]:
    """Check a candidate solution directly on the CUDF semantics."""
    violations: List[str] = []
    unknown = sorted(ref for ref in solution.members if ref not in universe)
    for ref in unknown:
        violations.append(f"{ref[0]} {ref[1]} is not in the universe")
    members = solution.members - set(unknown)
    clashes: Set[Tuple[PackageRef, PackageRef]] = set()

    for ref in sorted(members):
        unit = universe.get(ref)
        for clause in unit.depends.clauses:
            if not set(expand_sorted(universe, clause)) & members:
                atoms = " | ".join(str(a) for a in clause)
                violations.append(f"{unit.name} {unit.version} depends on '{atoms}', none installed")
        for atom in unit.conflicts:
            for other in expand_constraint(universe, atom) & members:
                if other != ref:
                    clashes.add(tuple(sorted((ref, other))))

    for first, second in sorted(clashes):
        violations.append(f"{first[0]} {first[1]} and {second[0]} {second[1]} conflict")

    for atom in request.install:
        if not expand_constraint(universe, atom) & members:
            violations.append(f"install '{atom}' not satisfied")
    for atom in request.remove:
        for ref in sorted(expand_constraint(universe, atom) & members):
            violations.append(f"remove '{atom}' violated by {ref[0]} {ref[1]}")

    initial = universe.initial_installation()
    for atom in request.upgrade:
        installed = sorted(v for n, v in members if n == atom.name)
        floor = min(initial.versions(atom.name), default=None)
        if len(installed) != 1 or not atom.admits(installed[0]):
            violations.append(f"upgrade '{atom}' needs exactly one matching version, found {installed}")
        elif floor is not None and installed[0] < floor:
            violations.append(f"upgrade '{atom}' downgrades {atom.name} below {floor}")

    return not violations, violations


class AuxiliaryCompletion:
    """Minimum of one objective level once every package variable is fixed.

    The substituted program is compiled once; each query only runs the
    search over the auxiliary variables.
    """

    def __init__(self, lp: LinearProgram, level: int):
        if not 0 <= level < len(lp.objectives):
            raise MalformedProgramError(f"objective level {level} out of range")
        self.lp = lp
        self.binary = lp.substituted()
        self.objective = self.binary.objectives[level]
        self.rows = [geq for row in self.binary.constraints for geq in as_geq(row)]
        self.pkg = lp.pkg_handles()
        self.cost = {h: c for c, h in self.objective.terms}
        self.order = sorted(
            self.binary.handles,
            key=lambda h: (lp.tag(h).kind == VarKind.PKG, h not in self.cost, lp.tag(h).sort_key()),
        )
        self.preferred = {h: 1 if self.cost.get(h, 0) < 0 else 0 for h in self.binary.handles}

    def minimum(self, installation: Installation) -> Optional[int]:
        """None when no completion satisfies the rows."""
        pins = list(self.binary.fixed.items())
        pins.extend((h, int(ref in installation)) for ref, h in self.pkg.items())
        search = BranchAndBound(self.order, self.rows, self.cost, self.preferred)
        status, _, value = search.run(pins, SolveBudget(), math.inf)
        if status == SolveStatus.INFEASIBLE:
            return None
        if status != SolveStatus.OPTIMAL:
            raise MalformedProgramError("auxiliary completion exceeded the budget")
        return value + self.objective.constant


def min_objective_at(lp: LinearProgram, level: int, fixed: Installation) -> Optional[int]:
    return AuxiliaryCompletion(lp, level).minimum(fixed)


def min_cost_model(formula: WeightedFormula, pkg_handles: Sequence[int]) -> Optional[int]:
    """Cheapest model of a dominance-encoded formula, by enumerating package assignments.

    Auxiliary variables only occur positively in hard clauses, so each is set
    true exactly when a clause would otherwise be falsified.
    """
    pkg = list(pkg_handles)
    pkg_set = set(pkg)
    for clause in formula.hard:
        aux = [lit for lit in clause.literals if abs(lit) not in pkg_set]
        if len(aux) > 1 or any(lit < 0 for lit in aux):
            raise ValueError(f"clause {clause.literals} is not in dominance form")

    best: Optional[int] = None
    for m in range(1 << len(pkg)):
        true: Set[int] = {h for i, h in enumerate(pkg) if m >> i & 1}
        for clause in formula.hard:
            if not clause.satisfied(true):
                aux = [lit for lit in clause.literals if abs(lit) not in pkg_set]
                if aux:
                    true.add(aux[0])
        if not formula.hard_satisfied(true):
            continue
        cost = formula.cost(true)
        if best is None or cost < best:
            best = cost
    return best


def hard_models(formula: WeightedFormula, pkg_handles: Mapping[PackageRef, int]) -> List[Installation]:
    """Package parts of the hard-clause models, with auxiliaries completed as needed."""
    refs = sorted(pkg_handles)
    handles = [pkg_handles[ref] for ref in refs]
    pkg_set = set(handles)
    found = []
    for m in range(1 << len(refs)):
        true: Set[int] = {h for i, h in enumerate(handles) if m >> i & 1}
        for clause in formula.hard:
            if not clause.satisfied(true):
                aux = [lit for lit in clause.literals if abs(lit) not in pkg_set and lit > 0]
                if aux:
                    true.add(aux[0])
        if formula.hard_satisfied(true):
            found.append(Installation.of(ref for ref, h in zip(refs, handles) if h in true))
    return found

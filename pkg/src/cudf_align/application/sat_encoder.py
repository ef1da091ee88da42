"""Weighted CNF encodings: base constraints as hard clauses, plus the dominance
encodings of the packages and pairs criteria.

Only the implication needed under minimization is encoded: an auxiliary
variable is forced true when its package (or pair) is installed and unaligned,
and a unit soft clause asks it to be false.
"""

import logging
from typing import List, Optional, Sequence, Tuple

from cudf_align.application.milp_encoder import alignment_sources
from cudf_align.domain.clauses import Clause, ClauseSet, WeightedFormula
from cudf_align.domain.cudf import build_cluster_index, candidate_pairs, expand_constraint, expand_sorted
from cudf_align.domain.errors import InfeasibleRequestError
from cudf_align.domain.models import (
    ClusterRestriction,
    CriterionKind,
    CriterionSpec,
    PackageRef,
    Request,
    SourceClusterIndex,
    Universe,
)
from cudf_align.domain.program import LinearProgram, VarId

logger = logging.getLogger(__name__)

CLAUSIFIABLE_KINDS = (CriterionKind.UNALIGNED_PACKAGES, CriterionKind.UNALIGNED_PAIRS)


def _numbering(universe: Universe, lp: Optional[LinearProgram]) -> LinearProgram:
    if lp is None:
        lp = LinearProgram()
        for ref in universe.refs():
            lp.variable(VarId.pkg(ref))
    return lp


def clausify_base(
    universe: Universe, request: Request, lp: Optional[LinearProgram] = None
) -> Tuple[Clause, ...]:
    """Hard clauses whose models are exactly the feasible installations.

    Handles come from ``lp`` so WCNF and LP output share one numbering.
    """
    lp = _numbering(universe, lp)

    def pkg(ref: PackageRef) -> int:
        return lp.handle(VarId.pkg(ref))

    clauses = ClauseSet()
    for unit in universe.packages:
        p = pkg(unit.ref)
        for clause in unit.depends.clauses:
            targets = expand_sorted(universe, clause)
            if unit.ref in targets:
                continue
            clauses.add([-p, *(pkg(q) for q in targets)])
        for atom in unit.conflicts:
            for q in sorted(expand_constraint(universe, atom)):
                if q != unit.ref:
                    clauses.add([-p, -pkg(q)])

    for atom in request.install:
        targets = expand_sorted(universe, [atom])
        if not targets:
            raise InfeasibleRequestError(str(atom), "install")
        clauses.add(pkg(q) for q in targets)

    for atom in request.remove:
        for q in expand_sorted(universe, [atom]):
            clauses.add([-pkg(q)])

    initial = universe.initial_installation()
    for atom in request.upgrade:
        targets = expand_sorted(universe, [atom])
        if not targets:
            raise InfeasibleRequestError(str(atom), "upgrade")
        clauses.add(pkg(q) for q in targets)
        for i, first in enumerate(targets):
            for second in targets[i + 1 :]:
                clauses.add([-pkg(first), -pkg(second)])
        floor = min(initial.versions(atom.name), default=None)
        for version in universe.versions(atom.name):
            ref = (atom.name, version)
            if ref not in targets or (floor is not None and version < floor):
                clauses.add([-pkg(ref)])

    return tuple(clauses.clauses)


def clausify_unaligned_packages(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Tuple[Tuple[Clause, ...], Tuple[Tuple[int, Clause], ...]]:
    hard = ClauseSet()
    soft = []
    for source in sources:
        tokens = index.versions(source)
        for token in tokens:
            for ref in index.packages(source, token):
                p = lp.handle(VarId.pkg(ref))
                nu = lp.variable(VarId.nu_pkg(ref))
                for other in tokens:
                    if other == token:
                        continue
                    for q_ref in index.packages(source, other):
                        hard.add([-p, -lp.handle(VarId.pkg(q_ref)), nu])
                soft.append((1, Clause.of([-nu])))
    return tuple(hard.clauses), tuple(soft)


def clausify_unaligned_pairs(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Tuple[Tuple[Clause, ...], Tuple[Tuple[int, Clause], ...]]:
    hard = ClauseSet()
    soft = []
    for first, second in candidate_pairs(index, sources):
        u = lp.variable(VarId.u_pair(first, second))
        hard.add([-lp.handle(VarId.pkg(first)), -lp.handle(VarId.pkg(second)), u])
        soft.append((1, Clause.of([-u])))
    return tuple(hard.clauses), tuple(soft)


_CLAUSIFIERS = {
    CriterionKind.UNALIGNED_PACKAGES: clausify_unaligned_packages,
    CriterionKind.UNALIGNED_PAIRS: clausify_unaligned_pairs,
}


def build_formula(
    base: Sequence[Clause],
    hard: Sequence[Clause] = (),
    soft: Sequence[Tuple[int, Clause]] = (),
    num_vars: int = 0,
) -> WeightedFormula:
    used = [abs(lit) for clause in (*base, *hard, *(c for _, c in soft)) for lit in clause.literals]
    return WeightedFormula(
        hard=(*base, *hard),
        soft=tuple(soft),
        num_vars=max([num_vars, *used]),
    )


def clausify_spec(
    universe: Universe,
    request: Request,
    spec: CriterionSpec,
    lp: Optional[LinearProgram] = None,
    restriction: Optional[ClusterRestriction] = None,
) -> List[Tuple[int, CriterionKind, WeightedFormula]]:
    """One formula per clausifiable level, as (1-based level, kind, formula).

    Levels other than packages and pairs have no clausal encoding and are skipped.
    """
    lp = _numbering(universe, lp)
    index = build_cluster_index(universe)
    base = clausify_base(universe, request, lp)
    pkg_count = len(universe)

    formulas = []
    for level, criterion in enumerate(spec.criteria, start=1):
        clausifier = _CLAUSIFIERS.get(criterion.kind)
        if clausifier is None:
            continue
        sources = alignment_sources(index, criterion.restriction or restriction)
        hard, soft = clausifier(lp, index, sources)
        formulas.append((level, criterion.kind, build_formula(base, hard, soft, pkg_count)))
        logger.debug(f"Level {level} {criterion.kind.value}: {len(hard)} hard, {len(soft)} soft clauses")
    return formulas

"""Encode an upgrade problem and its criteria stack as a 0-1 linear program."""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from cudf_align.domain.cudf import (
    build_cluster_index,
    candidate_pairs,
    expand_constraint,
    expand_sorted,
    reduced_sources,
)
from cudf_align.domain.errors import InfeasibleRequestError
from cudf_align.domain.models import (
    ALIGNMENT_KINDS,
    ClusterRestriction,
    CriterionKind,
    CriterionSpec,
    Installation,
    PackageRef,
    Request,
    SourceClusterIndex,
    Universe,
)
from cudf_align.domain.program import (
    Comparison,
    LinearProgram,
    Objective,
    Term,
    VarId,
    VarKind,
    merge_terms,
)

logger = logging.getLogger(__name__)

LE, GE, EQ = Comparison.LE, Comparison.GE, Comparison.EQ


def _pkg(lp: LinearProgram, ref: PackageRef) -> int:
    return lp.handle(VarId.pkg(ref))


def _sum(handles: Iterable[int], coef: int = 1) -> List[Term]:
    return [(coef, h) for h in handles]


def encode_base(universe: Universe, request: Request) -> LinearProgram:
    """Package variables, dependency and conflict rows, and the request."""
    lp = LinearProgram()
    for ref in universe.refs():
        lp.variable(VarId.pkg(ref))

    for unit in universe.packages:
        p = _pkg(lp, unit.ref)
        for position, clause in enumerate(unit.depends.clauses):
            targets = expand_sorted(universe, clause)
            if unit.ref in targets:
                continue
            lp.add_constraint(
                [(-1, p), *_sum(_pkg(lp, q) for q in targets)], GE, 0, f"dep_{p}_{position}"
            )
        for atom in unit.conflicts:
            for q in sorted(expand_constraint(universe, atom)):
                if q != unit.ref:
                    lp.add_constraint([(1, p), (1, _pkg(lp, q))], LE, 1, f"conflict_{p}")

    for atom in request.install:
        targets = expand_sorted(universe, [atom])
        if not targets:
            raise InfeasibleRequestError(str(atom), "install")
        lp.add_constraint(_sum(_pkg(lp, q) for q in targets), GE, 1, f"install_{atom.name}")

    for atom in request.remove:
        for q in expand_sorted(universe, [atom]):
            lp.fix(_pkg(lp, q), 0)

    initial = universe.initial_installation()
    for atom in request.upgrade:
        targets = expand_sorted(universe, [atom])
        if not targets:
            raise InfeasibleRequestError(str(atom), "upgrade")
        lp.add_constraint(_sum(_pkg(lp, q) for q in targets), EQ, 1, f"upgrade_{atom.name}")
        # upgrade collapses the name to one version matching the atom
        for version in universe.versions(atom.name):
            if (atom.name, version) not in targets:
                lp.fix(_pkg(lp, (atom.name, version)), 0)
        floor = min(initial.versions(atom.name), default=None)
        if floor is not None:
            for version in universe.versions(atom.name):
                if version < floor:
                    lp.fix(_pkg(lp, (atom.name, version)), 0)

    for ref in universe.refs():
        lp.hints[_pkg(lp, ref)] = int(ref in initial)

    logger.debug(f"Base encoding: {len(lp.variables)} variables, {len(lp.constraints)} rows")
    return lp


def encode_installed_version_vars(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Dict[Tuple[str, str], int]:
    """i_{s,v} is 1 exactly when some package of P(s,v) is installed."""
    handles = {}
    for source in sources:
        for token in index.versions(source):
            i = lp.variable(VarId.installed_version(source, token))
            members = [_pkg(lp, ref) for ref in index.packages(source, token)]
            lp.add_constraint([(1, i), *_sum(members, -1)], LE, 0, f"i_{i}")
            for p in members:
                lp.add_constraint([(1, p), (-1, i)], LE, 0, f"i_{i}")
            handles[(source, token)] = i
    return handles


def encode_unaligned_packages(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Objective:
    i_vars = encode_installed_version_vars(lp, index, sources)
    objective: List[Term] = []
    for source in sources:
        tokens = index.versions(source)
        for token in tokens:
            others = [i_vars[(source, other)] for other in tokens if other != token]
            for ref in index.packages(source, token):
                p = _pkg(lp, ref)
                nu = lp.variable(VarId.nu_pkg(ref))
                lp.add_constraint([(1, nu), (-1, p)], LE, 0, f"nu_{nu}")
                lp.add_constraint([(1, nu), *_sum(others, -1)], LE, 0, f"nu_{nu}")
                for i in others:
                    lp.add_constraint([(1, nu), (-1, p), (-1, i)], GE, -1, f"nu_{nu}")
                objective.append((1, nu))
    return Objective(label=CriterionKind.UNALIGNED_PACKAGES, terms=merge_terms(objective))


def encode_unaligned_pairs(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Objective:
    objective: List[Term] = []
    for first, second in candidate_pairs(index, sources):
        p, q = _pkg(lp, first), _pkg(lp, second)
        u = lp.variable(VarId.u_pair(first, second))
        lp.add_constraint([(1, u), (-1, p)], LE, 0, f"pair_{u}")
        lp.add_constraint([(1, u), (-1, q)], LE, 0, f"pair_{u}")
        lp.add_constraint([(1, u), (-1, p), (-1, q)], GE, -1, f"pair_{u}")
        objective.append((1, u))
    return Objective(label=CriterionKind.UNALIGNED_PAIRS, terms=merge_terms(objective))


def _installed_versions_count(
    lp: LinearProgram, index: SourceClusterIndex, source: str, i_vars: Dict[Tuple[str, str], int]
) -> int:
    tokens = index.versions(source)
    nb = lp.variable(VarId.per_source(VarKind.NB_INST, source), 0, len(tokens))
    lp.define(nb, _sum(i_vars[(source, t)] for t in tokens), f"nb_{source}")
    return nb


def encode_version_changes(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Objective:
    i_vars = encode_installed_version_vars(lp, index, sources)
    objective: List[Term] = []
    for source in sources:
        big_m = len(index.versions(source))
        nb = _installed_versions_count(lp, index, source, i_vars)
        delta = lp.variable(VarId.per_source(VarKind.DELTA, source))
        lp.add_constraint([(big_m, delta), (-1, nb)], GE, 0, f"delta_{source}")
        lp.add_constraint([(1, nb), (-1, delta)], GE, 0, f"delta_{source}")
        nc = lp.variable(VarId.per_source(VarKind.NC, source), 0, big_m)
        lp.define(nc, [(1, nb), (-1, delta)], f"nc_{source}")
        objective.append((1, nc))
    return Objective(label=CriterionKind.UNALIGNED_VERSION_CHANGES, terms=merge_terms(objective))


def encode_unaligned_clusters(
    lp: LinearProgram, index: SourceClusterIndex, sources: Sequence[str]
) -> Objective:
    i_vars = encode_installed_version_vars(lp, index, sources)
    objective: List[Term] = []
    for source in sources:
        big_m = len(index.versions(source))
        nb = _installed_versions_count(lp, index, source, i_vars)
        u = lp.variable(VarId.per_source(VarKind.U_CLUSTER, source))
        lp.add_constraint([(big_m, u), (-1, nb)], GE, -1, f"cluster_{source}")
        lp.add_constraint([(1, nb), (-2, u)], GE, 0, f"cluster_{source}")
        objective.append((1, u))
    return Objective(label=CriterionKind.UNALIGNED_CLUSTERS, terms=merge_terms(objective))


_ALIGNMENT_ENCODERS = {
    CriterionKind.UNALIGNED_PACKAGES: encode_unaligned_packages,
    CriterionKind.UNALIGNED_PAIRS: encode_unaligned_pairs,
    CriterionKind.UNALIGNED_VERSION_CHANGES: encode_version_changes,
    CriterionKind.UNALIGNED_CLUSTERS: encode_unaligned_clusters,
}


def _aux(lp: LinearProgram, kind: CriterionKind, *parts) -> int:
    return lp.variable(VarId.crit_aux(kind, *parts))


def encode_classic_criterion(
    lp: LinearProgram, kind: CriterionKind, universe: Universe, initial: Installation
) -> Objective:
    """One indicator per counted unit, tied to the package variables in both directions."""
    objective: List[Term] = []

    if kind == CriterionKind.REMOVED:
        for name in sorted(initial.names()):
            xs = [_pkg(lp, (name, v)) for v in universe.versions(name)]
            r = _aux(lp, kind, name)
            lp.add_constraint([(1, r), *_sum(xs)], GE, 1, f"removed_{r}")
            for x in xs:
                lp.add_constraint([(1, r), (1, x)], LE, 1, f"removed_{r}")
            objective.append((1, r))

    elif kind == CriterionKind.NEW:
        for name in universe.names():
            if name in initial.names():
                continue
            xs = [_pkg(lp, (name, v)) for v in universe.versions(name)]
            r = _aux(lp, kind, name)
            for x in xs:
                lp.add_constraint([(1, x), (-1, r)], LE, 0, f"new_{r}")
            lp.add_constraint([(1, r), *_sum(xs, -1)], LE, 0, f"new_{r}")
            objective.append((1, r))

    elif kind == CriterionKind.CHANGED:
        for name in universe.names():
            was = initial.versions(name)
            r = _aux(lp, kind, name)
            upper: List[Term] = [(1, r)]
            for version in universe.versions(name):
                x = _pkg(lp, (name, version))
                if version in was:
                    lp.add_constraint([(1, r), (1, x)], GE, 1, f"changed_{r}")
                    upper.append((1, x))
                else:
                    lp.add_constraint([(1, x), (-1, r)], LE, 0, f"changed_{r}")
                    upper.append((-1, x))
            lp.add_constraint(upper, LE, len(was), f"changed_{r}")
            objective.append((1, r))

    elif kind == CriterionKind.NOTUPTODATE:
        for name in universe.names():
            versions = universe.versions(name)
            if len(versions) < 2:
                continue
            top = _pkg(lp, (name, versions[-1]))
            older = [_pkg(lp, (name, v)) for v in versions[:-1]]
            r = _aux(lp, kind, name)
            for x in older:
                lp.add_constraint([(1, r), (-1, x), (1, top)], GE, 0, f"notuptodate_{r}")
            lp.add_constraint([(1, r), (1, top)], LE, 1, f"notuptodate_{r}")
            lp.add_constraint([(1, r), *_sum(older, -1)], LE, 0, f"notuptodate_{r}")
            objective.append((1, r))

    elif kind == CriterionKind.UNSAT_RECOMMENDS:
        for unit in universe.packages:
            if unit.recommends is None:
                continue
            p = _pkg(lp, unit.ref)
            for position, clause in enumerate(unit.recommends.clauses):
                targets = [_pkg(lp, q) for q in expand_sorted(universe, clause)]
                r = _aux(lp, kind, unit.name, unit.version, position)
                lp.add_constraint([(1, r), (-1, p), *_sum(targets)], GE, 0, f"unsatrec_{r}")
                lp.add_constraint([(1, r), (-1, p)], LE, 0, f"unsatrec_{r}")
                for t in targets:
                    lp.add_constraint([(1, r), (1, t)], LE, 1, f"unsatrec_{r}")
                objective.append((1, r))

    else:
        raise ValueError(f"{kind.value} is not a classic criterion")

    return Objective(label=kind, terms=merge_terms(objective))


def alignment_sources(
    index: SourceClusterIndex, restriction: Optional[ClusterRestriction] = None
) -> List[str]:
    """Reduced sources, intersected with the restriction when one is given."""
    sources = reduced_sources(index)
    if restriction is not None:
        sources = sources & restriction.sources
    return sorted(sources)


def assemble(
    universe: Universe,
    request: Request,
    spec: CriterionSpec,
    restriction: Optional[ClusterRestriction] = None,
) -> LinearProgram:
    """Base rows plus one objective block per criterion, in criteria order.

    A criterion's own restriction takes precedence over ``restriction``.
    """
    lp = encode_base(universe, request)
    index = build_cluster_index(universe)
    initial = universe.initial_installation()

    for criterion in spec.criteria:
        before = len(lp.constraints)
        if criterion.kind in ALIGNMENT_KINDS:
            sources = alignment_sources(index, criterion.restriction or restriction)
            objective = _ALIGNMENT_ENCODERS[criterion.kind](lp, index, sources)
        else:
            objective = encode_classic_criterion(lp, criterion.kind, universe, initial)
        lp.add_objective(objective)
        logger.debug(
            f"Criterion {criterion.kind.value}: {len(objective.terms)} objective terms, "
            f"{len(lp.constraints) - before} rows"
        )

    logger.info(
        f"Assembled program: {len(lp.variables)} variables, {len(lp.constraints)} rows, "
        f"{len(lp.objectives)} objectives"
    )
    return lp

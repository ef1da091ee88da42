"""Measures of an installation: the five classic upgrade criteria and the
four source-alignment criteria.

These are the reference semantics every encoding is checked against.
"""

from collections import Counter
from typing import Dict, Iterable, Optional, Tuple

from cudf_align.domain.cudf import expand_constraint
from cudf_align.domain.models import (
    ClusterRestriction,
    CriterionKind,
    Installation,
    MeasureReport,
    SourceClusterIndex,
    Universe,
)


def removed(initial: Installation, solution: Installation) -> int:
    """Names installed in some version initially and in none afterwards."""
    return len(initial.names() - solution.names())


def new_count(initial: Installation, solution: Installation) -> int:
    return len(solution.names() - initial.names())


def changed(initial: Installation, solution: Installation) -> int:
    """Names whose set of installed versions differs."""
    names = initial.names() | solution.names()
    return sum(1 for name in names if initial.versions(name) != solution.versions(name))


def notuptodate(universe: Universe, solution: Installation) -> int:
    """Installed names missing the most recent version available in the universe."""
    return sum(
        1 for name in solution.names() if universe.most_recent(name) not in solution.versions(name)
    )


def unsat_recommends(universe: Universe, solution: Installation) -> int:
    """(package, clause) pairs whose recommends clause has no installed satisfier."""
    count = 0
    for ref in solution.sorted_members():
        recommends = universe.get(ref).recommends
        if recommends is None:
            continue
        for clause in recommends.clauses:
            if not any(expand_constraint(universe, atom) & solution.members for atom in clause):
                count += 1
    return count


def _cluster_profiles(
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction],
) -> Dict[str, Counter]:
    """source -> Counter(sourceversion -> installed packages) over the admitted sources."""
    profiles: Dict[str, Counter] = {}
    for ref in solution.members:
        located = index.locate(ref)
        if located is None:
            continue
        source, token = located
        if restriction is not None and not restriction.admits(source):
            continue
        profiles.setdefault(source, Counter())[token] += 1
    return profiles


def unaligned_packages(
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction] = None,
) -> int:
    return sum(
        sum(profile.values())
        for profile in _cluster_profiles(solution, index, restriction).values()
        if len(profile) >= 2
    )


def unaligned_pairs(
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction] = None,
) -> int:
    total = 0
    for profile in _cluster_profiles(solution, index, restriction).values():
        k = sum(profile.values())
        total += k * (k - 1) // 2 - sum(n * (n - 1) // 2 for n in profile.values())
    return total


def unaligned_version_changes(
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction] = None,
) -> int:
    return sum(
        max(0, len(profile) - 1)
        for profile in _cluster_profiles(solution, index, restriction).values()
    )


def unaligned_clusters(
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction] = None,
) -> int:
    return sum(
        1 for profile in _cluster_profiles(solution, index, restriction).values() if len(profile) >= 2
    )


def is_aligned(solution: Installation, index: SourceClusterIndex) -> bool:
    """Every source has at most one installed source version."""
    return unaligned_clusters(solution, index) == 0


def measure(
    kind: CriterionKind,
    universe: Universe,
    initial: Installation,
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction] = None,
) -> int:
    """One criterion. The restriction only applies to alignment criteria."""
    if kind == CriterionKind.REMOVED:
        return removed(initial, solution)
    if kind == CriterionKind.NEW:
        return new_count(initial, solution)
    if kind == CriterionKind.CHANGED:
        return changed(initial, solution)
    if kind == CriterionKind.NOTUPTODATE:
        return notuptodate(universe, solution)
    if kind == CriterionKind.UNSAT_RECOMMENDS:
        return unsat_recommends(universe, solution)
    if kind == CriterionKind.UNALIGNED_PACKAGES:
        return unaligned_packages(solution, index, restriction)
    if kind == CriterionKind.UNALIGNED_PAIRS:
        return unaligned_pairs(solution, index, restriction)
    if kind == CriterionKind.UNALIGNED_VERSION_CHANGES:
        return unaligned_version_changes(solution, index, restriction)
    if kind == CriterionKind.UNALIGNED_CLUSTERS:
        return unaligned_clusters(solution, index, restriction)
    raise ValueError(f"unknown criterion {kind}")


def measure_all(
    universe: Universe,
    initial: Installation,
    solution: Installation,
    index: SourceClusterIndex,
    restriction: Optional[ClusterRestriction] = None,
) -> MeasureReport:
    return MeasureReport(
        counts={
            kind: measure(kind, universe, initial, solution, index, restriction)
            for kind in CriterionKind
        }
    )


def measure_vector(
    criteria: Iterable[Tuple[CriterionKind, Optional[ClusterRestriction]]],
    universe: Universe,
    initial: Installation,
    solution: Installation,
    index: SourceClusterIndex,
) -> Tuple[int, ...]:
    """Measures in lexicographic order, each with its own restriction."""
    return tuple(
        measure(kind, universe, initial, solution, index, restriction)
        for kind, restriction in criteria
    )

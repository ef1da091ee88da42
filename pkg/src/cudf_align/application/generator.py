"""Seeded random CUDF instances for property tests and demos."""

import logging
import random
from typing import Dict, List, Optional, Tuple

import networkx as nx

from cudf_align.domain.models import (
    DependencyFormula,
    PackageUnit,
    Relation,
    Request,
    Universe,
    VersionConstraint,
)

logger = logging.getLogger(__name__)

DEPENDS_RATE = 0.45
CONFLICT_RATE = 0.2
RECOMMENDS_RATE = 0.2
INSTALLED_RATE = 0.4
UNSOURCED_RATE = 0.2


def _atom(rng: random.Random, name: str, versions: List[int]) -> VersionConstraint:
    relation = rng.choice([Relation.ANY, Relation.ANY, Relation.GEQ, Relation.EQ, Relation.LT])
    if relation == Relation.ANY:
        return VersionConstraint(name=name)
    return VersionConstraint(name=name, relation=relation, bound=rng.choice(versions))


def generate_instance(
    seed: int,
    max_packages: int = 12,
    max_sources: int = 4,
    max_source_versions: int = 3,
) -> Tuple[Universe, Request]:
    """Random universe and request; the dependency graph is kept acyclic."""
    rng = random.Random(seed)
    target = rng.randint(1, max_packages)

    versions: Dict[str, List[int]] = {}
    total = 0
    while total < target:
        name = f"p{len(versions)}"
        count = min(rng.randint(1, 3), target - total)
        versions[name] = list(range(1, count + 1))
        total += count
    names = list(versions)

    sources = {f"s{k}": [f"{v}.0" for v in range(1, rng.randint(1, max_source_versions) + 1)]
               for k in range(rng.randint(1, max_sources))}
    home: Dict[str, Optional[str]] = {
        name: None if rng.random() < UNSOURCED_RATE else rng.choice(sorted(sources)) for name in names
    }

    graph = nx.DiGraph()
    graph.add_nodes_from(names)
    units = []
    for name in names:
        others = [n for n in names if n != name]
        for version in versions[name]:
            clauses = []
            if others and rng.random() < DEPENDS_RATE:
                for _ in range(rng.randint(1, 2)):
                    clause = []
                    for target_name in rng.sample(others, min(len(others), rng.randint(1, 2))):
                        # name-level edges keep every expansion acyclic
                        if nx.has_path(graph, target_name, name):
                            continue
                        graph.add_edge(name, target_name)
                        clause.append(_atom(rng, target_name, versions[target_name]))
                    if clause:
                        clauses.append(tuple(clause))
            conflicts = ()
            if others and rng.random() < CONFLICT_RATE:
                victim = rng.choice(others)
                conflicts = (_atom(rng, victim, versions[victim]),)
            recommends = None
            if others and rng.random() < RECOMMENDS_RATE:
                wanted = rng.choice(others)
                recommends = DependencyFormula(clauses=((_atom(rng, wanted, versions[wanted]),),))
            source = home[name]
            units.append(
                PackageUnit(
                    name=name,
                    version=version,
                    depends=DependencyFormula(clauses=tuple(clauses)),
                    conflicts=conflicts,
                    recommends=recommends,
                    installed=rng.random() < INSTALLED_RATE,
                    source=source,
                    sourceversion=rng.choice(sources[source]) if source else None,
                )
            )

    universe = Universe.from_units(units)
    installed_names = sorted(universe.initial_installation().names())

    install, remove, upgrade = [], [], []
    if rng.random() < 0.5:
        wanted = rng.choice(names)
        if rng.random() < 0.5:
            install.append(VersionConstraint(name=wanted))
        else:
            bound = rng.choice(versions[wanted])
            install.append(VersionConstraint(name=wanted, relation=Relation.GEQ, bound=bound))
    if rng.random() < 0.2:
        dropped = rng.choice(names)
        remove.append(VersionConstraint(name=dropped))
    if installed_names and rng.random() < 0.2:
        upgraded = rng.choice(installed_names)
        upgrade.append(VersionConstraint(name=upgraded))

    request = Request(install=tuple(install), remove=tuple(remove), upgrade=tuple(upgrade))
    logger.debug(f"Generated seed {seed}: {len(universe)} packages, {len(sources)} sources")
    return universe, request

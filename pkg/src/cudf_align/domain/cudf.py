"""CUDF subset reader and writer, atom grounding and source-cluster indexing.

The accepted subset covers the properties ``package``, ``version``,
``depends``, ``conflicts``, ``recommends``, ``installed``, ``source`` and
``sourceversion`` in package stanzas, and ``install``, ``remove``,
``upgrade`` in the request stanza. Other properties are ignored.
"""

import logging
import re
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from cudf_align.domain.errors import CudfParseError
from cudf_align.domain.models import (
    DependencyFormula,
    Installation,
    PackageRef,
    PackageUnit,
    Relation,
    Request,
    SourceClusterIndex,
    Universe,
    VersionConstraint,
)

logger = logging.getLogger(__name__)

FAIL = "FAIL"

_ATOM = re.compile(r"^([A-Za-z0-9+./@()%_-]+)\s*(?:(=|!=|<=|>=|<|>)\s*(\S+))?$")
_RELATIONS = {r.value: r for r in Relation if r != Relation.ANY}
_DIGITS = re.compile(r"[0-9]+")


class _Stanza:
    """Raw key/value lines of one stanza with their line numbers."""

    def __init__(self, index: int):
        self.index = index
        self.fields: List[Tuple[str, str, int]] = []

    @property
    def kind(self) -> str:
        return self.fields[0][0]

    @property
    def first_line(self) -> int:
        return self.fields[0][2]

    def get(self, key: str) -> Optional[Tuple[str, int]]:
        found = None
        for k, value, line in self.fields:
            if k == key:
                if found is not None:
                    raise CudfParseError(f"property '{key}' given twice", self.index, line)
                found = (value, line)
        return found


def _split_stanzas(text: str) -> List[_Stanza]:
    stanzas: List[_Stanza] = []
    current: Optional[_Stanza] = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            current = None
            continue
        if line.startswith("#"):
            continue
        if line[0] in " \t":
            # folded continuation of the previous property
            if current is None:
                raise CudfParseError("continuation line outside a property", len(stanzas) + 1, lineno)
            key, value, first = current.fields[-1]
            current.fields[-1] = (key, f"{value} {line.strip()}".strip(), first)
            continue
        key, sep, value = line.partition(":")
        if not sep:
            index = current.index if current is not None else len(stanzas) + 1
            raise CudfParseError(f"expected 'key: value', got '{line}'", index, lineno)
        if current is None:
            current = _Stanza(len(stanzas) + 1)
            stanzas.append(current)
        current.fields.append((key.strip(), value.strip(), lineno))
    return stanzas


def parse_atom(text: str, stanza: Optional[int] = None, line: Optional[int] = None) -> VersionConstraint:
    """Parse ``name`` or ``name <op> <version>``."""
    match = _ATOM.match(text.strip())
    if not match:
        raise CudfParseError(f"malformed atom '{text.strip()}'", stanza, line)
    name, op, bound = match.groups()
    if op is None:
        return VersionConstraint(name=name)
    if not _DIGITS.fullmatch(bound) or int(bound) < 1:
        raise CudfParseError(f"atom '{text.strip()}': version must be a positive integer", stanza, line)
    return VersionConstraint(name=name, relation=_RELATIONS[op], bound=int(bound))


def _parse_atom_list(value: str, stanza: int, line: int) -> Tuple[VersionConstraint, ...]:
    if not value.strip():
        return ()
    return tuple(parse_atom(part, stanza, line) for part in value.split(","))


def _parse_formula(value: str, stanza: int, line: int) -> DependencyFormula:
    if not value.strip():
        return DependencyFormula()
    clauses = []
    for conjunct in value.split(","):
        clauses.append(tuple(parse_atom(alt, stanza, line) for alt in conjunct.split("|")))
    return DependencyFormula(clauses=tuple(clauses))


def _parse_package(stanza: _Stanza) -> PackageUnit:
    name, _ = stanza.get("package")
    if not name:
        raise CudfParseError("empty package name", stanza.index, stanza.first_line)

    version_field = stanza.get("version")
    if version_field is None:
        raise CudfParseError(f"package '{name}' has no version", stanza.index, stanza.first_line)
    raw_version, version_line = version_field
    if not _DIGITS.fullmatch(raw_version) or int(raw_version) < 1:
        raise CudfParseError(
            f"package '{name}': version must be a positive integer, got '{raw_version}'",
            stanza.index,
            version_line,
        )

    fields = {"name": name, "version": int(raw_version)}

    if (depends := stanza.get("depends")) is not None:
        fields["depends"] = _parse_formula(depends[0], stanza.index, depends[1])
    if (conflicts := stanza.get("conflicts")) is not None:
        fields["conflicts"] = _parse_atom_list(conflicts[0], stanza.index, conflicts[1])
    if (recommends := stanza.get("recommends")) is not None:
        fields["recommends"] = _parse_formula(recommends[0], stanza.index, recommends[1])
    if (installed := stanza.get("installed")) is not None:
        flag, line = installed
        if flag not in ("true", "false"):
            raise CudfParseError(f"installed must be true or false, got '{flag}'", stanza.index, line)
        fields["installed"] = flag == "true"

    source = stanza.get("source")
    sourceversion = stanza.get("sourceversion")
    if (source is None) != (sourceversion is None):
        present = source or sourceversion
        raise CudfParseError(
            f"package '{name}' {raw_version}: source and sourceversion must be given together",
            stanza.index,
            present[1],
        )
    if source is not None:
        if not source[0] or not sourceversion[0]:
            raise CudfParseError("empty source metadata", stanza.index, source[1])
        fields["source"] = source[0]
        fields["sourceversion"] = sourceversion[0]

    return PackageUnit(**fields)


def _parse_request(stanza: _Stanza) -> Request:
    fields = {}
    for key in ("install", "remove", "upgrade"):
        if (value := stanza.get(key)) is not None:
            fields[key] = _parse_atom_list(value[0], stanza.index, value[1])
    return Request(**fields)


def parse_cudf(text: str) -> Tuple[Universe, Request]:
    """Read a CUDF document into a universe and a request."""
    units: Dict[PackageRef, PackageUnit] = {}
    request: Optional[Request] = None

    for stanza in _split_stanzas(text):
        kind = stanza.kind
        if kind == "package":
            unit = _parse_package(stanza)
            if unit.ref in units:
                raise CudfParseError(
                    f"duplicate package '{unit.name}' version {unit.version}",
                    stanza.index,
                    stanza.first_line,
                )
            units[unit.ref] = unit
        elif kind == "request":
            if request is not None:
                raise CudfParseError("more than one request stanza", stanza.index, stanza.first_line)
            request = _parse_request(stanza)
        elif kind == "preamble":
            continue
        else:
            raise CudfParseError(f"unknown stanza type '{kind}'", stanza.index, stanza.first_line)

    universe = Universe.from_units(units.values())
    logger.debug(f"Parsed {len(universe)} packages, {len(universe.names())} names")
    return universe, request or Request()


def expand_constraint(universe: Universe, constraint: VersionConstraint) -> FrozenSet[PackageRef]:
    """Packages of the universe matched by an atom."""
    return frozenset(
        (constraint.name, v) for v in universe.versions(constraint.name) if constraint.admits(v)
    )


def expand_sorted(universe: Universe, constraints: Iterable[VersionConstraint]) -> Tuple[PackageRef, ...]:
    """Union of the expansions of several atoms, sorted."""
    matched: Set[PackageRef] = set()
    for constraint in constraints:
        matched |= expand_constraint(universe, constraint)
    return tuple(sorted(matched))


def build_cluster_index(universe: Universe) -> SourceClusterIndex:
    clusters: Dict[str, Dict[str, Set[PackageRef]]] = {}
    for unit in universe.packages:
        if unit.source is None:
            continue
        clusters.setdefault(unit.source, {}).setdefault(unit.sourceversion, set()).add(unit.ref)
    return SourceClusterIndex(
        clusters={
            source: {token: frozenset(refs) for token, refs in sorted(by_version.items())}
            for source, by_version in sorted(clusters.items())
        }
    )


def reduced_sources(index: SourceClusterIndex) -> FrozenSet[str]:
    """Sources with at least two source versions."""
    return frozenset(s for s in index.sources() if len(index.versions(s)) >= 2)


def candidate_pairs(index: SourceClusterIndex, sources: Iterable[str]) -> List[Tuple[PackageRef, PackageRef]]:
    """Unordered package pairs of the same source built from different source versions."""
    pairs = []
    for source in sorted(sources):
        tokens = index.versions(source)
        for i, token in enumerate(tokens):
            for other in tokens[i + 1 :]:
                for p in index.packages(source, token):
                    for q in index.packages(source, other):
                        pairs.append((p, q) if p < q else (q, p))
    return sorted(pairs)


def reduced_size(index: SourceClusterIndex) -> Tuple[int, int, int, int]:
    """(#sources, #source versions, #packages, #pairs) over sources with several versions."""
    sources = sorted(reduced_sources(index))
    n_versions = sum(len(index.versions(s)) for s in sources)
    n_packages = sum(len(index.cluster(s)) for s in sources)
    return (len(sources), n_versions, n_packages, len(candidate_pairs(index, sources)))


def dependency_graph(universe: Universe) -> nx.DiGraph:
    """Package-level graph with an edge p -> q when q can satisfy a dependency of p."""
    graph = nx.DiGraph()
    graph.add_nodes_from(universe.refs())
    for unit in universe.packages:
        for clause in unit.depends.clauses:
            for target in expand_sorted(universe, clause):
                if target != unit.ref:
                    graph.add_edge(unit.ref, target)
    return graph


def serialize_solution(universe: Universe, installation: Optional[Installation]) -> str:
    """CUDF solution document; ``None`` stands for "no solution"."""
    if installation is None:
        return f"{FAIL}\n"
    universe.validate_installation(installation)
    stanzas = [
        f"package: {name}\nversion: {version}\ninstalled: true\n"
        for name, version in installation.sorted_members()
    ]
    return "\n".join(stanzas)


def parse_solution(universe: Universe, text: str) -> Optional[Installation]:
    """Installed set of a solution document, ``None`` for ``FAIL``."""
    if text.strip() == FAIL:
        return None
    solved, _ = parse_cudf(text)
    installation = Installation.of(p.ref for p in solved.packages if p.installed)
    universe.validate_installation(installation)
    return installation


def render_cudf(universe: Universe, request: Optional[Request] = None) -> str:
    """Full CUDF document for a universe and request, readable by parse_cudf."""
    stanzas = []
    for unit in universe.packages:
        lines = [f"package: {unit.name}", f"version: {unit.version}"]
        if unit.depends.clauses:
            lines.append(f"depends: {unit.depends}")
        if unit.conflicts:
            lines.append(f"conflicts: {', '.join(str(a) for a in unit.conflicts)}")
        if unit.recommends is not None and unit.recommends.clauses:
            lines.append(f"recommends: {unit.recommends}")
        if unit.installed:
            lines.append("installed: true")
        if unit.source is not None:
            lines.append(f"source: {unit.source}")
            lines.append(f"sourceversion: {unit.sourceversion}")
        stanzas.append("\n".join(lines) + "\n")
    if request is not None and not request.is_empty():
        lines = ["request: cudf-align"]
        for key in ("install", "remove", "upgrade"):
            atoms = getattr(request, key)
            if atoms:
                lines.append(f"{key}: {', '.join(str(a) for a in atoms)}")
        stanzas.append("\n".join(lines) + "\n")
    return "\n".join(stanzas)

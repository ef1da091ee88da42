import operator
from enum import Enum
from typing import Annotated, Dict, FrozenSet, Iterable, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

# CUDF package versions are positive integers
PackageVersion = Annotated[int, Field(ge=1)]
# Opaque sourceversion value, compared for equality only
SourceVersionToken = Annotated[str, Field(min_length=1)]
# (name, version) of a package of the universe
PackageRef = Tuple[str, int]


class Relation(str, Enum):
    ANY = "any"
    EQ = "="
    NEQ = "!="
    LT = "<"
    LEQ = "<="
    GT = ">"
    GEQ = ">="


_COMPARE = {
    Relation.EQ: operator.eq,
    Relation.NEQ: operator.ne,
    Relation.LT: operator.lt,
    Relation.LEQ: operator.le,
    Relation.GT: operator.gt,
    Relation.GEQ: operator.ge,
}


class VersionConstraint(BaseModel):
    """A CUDF atom: a package name with an optional version relation."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    relation: Relation = Relation.ANY
    bound: Optional[PackageVersion] = None

    @model_validator(mode="after")
    def _bound_iff_relation(self):
        if (self.relation == Relation.ANY) != (self.bound is None):
            raise ValueError(f"atom '{self.name}': bound required exactly when a relation is given")
        return self

    def admits(self, version: int) -> bool:
        if self.relation == Relation.ANY:
            return True
        return _COMPARE[self.relation](version, self.bound)

    def matches(self, ref: PackageRef) -> bool:
        return ref[0] == self.name and self.admits(ref[1])

    def __str__(self) -> str:
        if self.relation == Relation.ANY:
            return self.name
        return f"{self.name} {self.relation.value} {self.bound}"


class DependencyFormula(BaseModel):
    """Conjunction of disjunctions of atoms (CNF)."""

    model_config = ConfigDict(frozen=True)

    clauses: Tuple[Tuple[VersionConstraint, ...], ...] = ()

    @model_validator(mode="after")
    def _no_empty_clause(self):
        if any(len(clause) == 0 for clause in self.clauses):
            raise ValueError("dependency clause must not be empty")
        return self

    def __str__(self) -> str:
        return ", ".join(" | ".join(str(atom) for atom in clause) for clause in self.clauses)


class PackageUnit(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    version: PackageVersion
    depends: DependencyFormula = DependencyFormula()
    conflicts: Tuple[VersionConstraint, ...] = ()
    recommends: Optional[DependencyFormula] = None
    installed: bool = False
    source: Optional[str] = None
    sourceversion: Optional[SourceVersionToken] = None

    @model_validator(mode="after")
    def _source_metadata_paired(self):
        if (self.source is None) != (self.sourceversion is None):
            raise ValueError(
                f"package {self.name} {self.version}: source and sourceversion go together"
            )
        return self

    @property
    def ref(self) -> PackageRef:
        return (self.name, self.version)


class Installation(BaseModel):
    """A set of (name, version) pairs marked installed."""

    model_config = ConfigDict(frozen=True)

    members: FrozenSet[Tuple[str, int]] = frozenset()

    @classmethod
    def of(cls, refs: Iterable[PackageRef]) -> "Installation":
        return cls(members=frozenset(refs))

    def versions(self, name: str) -> FrozenSet[int]:
        return frozenset(v for n, v in self.members if n == name)

    def names(self) -> FrozenSet[str]:
        return frozenset(n for n, _ in self.members)

    def sorted_members(self) -> Tuple[PackageRef, ...]:
        return tuple(sorted(self.members))

    def __contains__(self, ref) -> bool:
        return tuple(ref) in self.members

    def __len__(self) -> int:
        return len(self.members)


class Universe(BaseModel):
    """All available packages, sorted by name then version."""

    model_config = ConfigDict(frozen=True)

    packages: Tuple[PackageUnit, ...] = ()

    _by_ref: Dict[PackageRef, PackageUnit] = PrivateAttr(default_factory=dict)
    _versions: Dict[str, Tuple[int, ...]] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _sorted_and_unique(self):
        refs = [p.ref for p in self.packages]
        for previous, current in zip(refs, refs[1:]):
            if previous >= current:
                raise ValueError(f"packages must be unique and sorted, got {previous} before {current}")
        return self

    def model_post_init(self, __context) -> None:
        versions: Dict[str, list] = {}
        for unit in self.packages:
            self._by_ref[unit.ref] = unit
            versions.setdefault(unit.name, []).append(unit.version)
        self._versions = {name: tuple(vs) for name, vs in versions.items()}

    @classmethod
    def from_units(cls, units: Iterable[PackageUnit]) -> "Universe":
        return cls(packages=tuple(sorted(units, key=lambda u: u.ref)))

    def names(self) -> Tuple[str, ...]:
        return tuple(self._versions)

    def versions(self, name: str) -> Tuple[int, ...]:
        return self._versions.get(name, ())

    def most_recent(self, name: str) -> Optional[int]:
        versions = self.versions(name)
        return versions[-1] if versions else None

    def get(self, ref: PackageRef) -> PackageUnit:
        return self._by_ref[tuple(ref)]

    def refs(self) -> Tuple[PackageRef, ...]:
        return tuple(p.ref for p in self.packages)

    def initial_installation(self) -> Installation:
        return Installation.of(p.ref for p in self.packages if p.installed)

    def validate_installation(self, installation: Installation) -> None:
        unknown = sorted(ref for ref in installation.members if ref not in self._by_ref)
        if unknown:
            raise ValueError(f"installation references unknown packages: {unknown}")

    def __contains__(self, ref) -> bool:
        return tuple(ref) in self._by_ref

    def __len__(self) -> int:
        return len(self.packages)


class Request(BaseModel):
    model_config = ConfigDict(frozen=True)

    install: Tuple[VersionConstraint, ...] = ()
    remove: Tuple[VersionConstraint, ...] = ()
    upgrade: Tuple[VersionConstraint, ...] = ()

    def is_empty(self) -> bool:
        return not (self.install or self.remove or self.upgrade)


class SourceClusterIndex(BaseModel):
    """source -> sourceversion -> packages built from it."""

    model_config = ConfigDict(frozen=True)

    clusters: Dict[str, Dict[str, FrozenSet[Tuple[str, int]]]] = {}

    _location: Dict[PackageRef, Tuple[str, str]] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        for source, by_version in self.clusters.items():
            for token, refs in by_version.items():
                for ref in refs:
                    self._location[ref] = (source, token)

    def sources(self) -> Tuple[str, ...]:
        return tuple(sorted(self.clusters))

    def versions(self, source: str) -> Tuple[str, ...]:
        return tuple(sorted(self.clusters.get(source, {})))

    def packages(self, source: str, token: str) -> Tuple[PackageRef, ...]:
        return tuple(sorted(self.clusters.get(source, {}).get(token, frozenset())))

    def cluster(self, source: str) -> Tuple[PackageRef, ...]:
        return tuple(sorted(ref for refs in self.clusters.get(source, {}).values() for ref in refs))

    def locate(self, ref: PackageRef) -> Optional[Tuple[str, str]]:
        return self._location.get(tuple(ref))


class CriterionKind(str, Enum):
    REMOVED = "removed"
    NEW = "new"
    CHANGED = "changed"
    NOTUPTODATE = "notuptodate"
    UNSAT_RECOMMENDS = "unsatrecommends"
    UNALIGNED_PACKAGES = "unaligned_packages"
    UNALIGNED_PAIRS = "unaligned_pairs"
    UNALIGNED_VERSION_CHANGES = "unaligned_version_changes"
    UNALIGNED_CLUSTERS = "unaligned_clusters"


CLASSIC_KINDS = (
    CriterionKind.REMOVED,
    CriterionKind.NEW,
    CriterionKind.CHANGED,
    CriterionKind.NOTUPTODATE,
    CriterionKind.UNSAT_RECOMMENDS,
)

ALIGNMENT_KINDS = (
    CriterionKind.UNALIGNED_PACKAGES,
    CriterionKind.UNALIGNED_PAIRS,
    CriterionKind.UNALIGNED_VERSION_CHANGES,
    CriterionKind.UNALIGNED_CLUSTERS,
)


class ClusterRestriction(BaseModel):
    """Sources an alignment criterion is evaluated on."""

    model_config = ConfigDict(frozen=True)

    sources: FrozenSet[str] = Field(min_length=1)

    def admits(self, source: str) -> bool:
        return source in self.sources


class MeasureReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    counts: Dict[CriterionKind, int]

    @model_validator(mode="after")
    def _all_criteria_present(self):
        missing = [k.value for k in CriterionKind if k not in self.counts]
        if missing:
            raise ValueError(f"missing criteria: {missing}")
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("measures are non-negative")
        return self

    def __getitem__(self, kind: CriterionKind) -> int:
        return self.counts[kind]

    def alignment(self) -> Tuple[int, int, int, int]:
        return tuple(self.counts[k] for k in ALIGNMENT_KINDS)


class Sign(str, Enum):
    MINIMIZE = "-"


class Criterion(BaseModel):
    model_config = ConfigDict(frozen=True)

    sign: Sign = Sign.MINIMIZE
    kind: CriterionKind
    restriction: Optional[ClusterRestriction] = None

    @model_validator(mode="after")
    def _restriction_on_alignment_only(self):
        if self.restriction is not None and self.kind not in ALIGNMENT_KINDS:
            raise ValueError(f"cluster restriction is not allowed on {self.kind.value}")
        return self


class CriterionSpec(BaseModel):
    """Ordered lexicographic criteria stack."""

    model_config = ConfigDict(frozen=True)

    criteria: Tuple[Criterion, ...] = Field(min_length=1)

    def kinds(self) -> Tuple[CriterionKind, ...]:
        return tuple(c.kind for c in self.criteria)

    def __len__(self) -> int:
        return len(self.criteria)

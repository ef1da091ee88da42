from pathlib import Path

import pytest

from cudf_align.core.config import settings
from cudf_align.domain.cudf import build_cluster_index, parse_cudf
from cudf_align.domain.models import Installation, PackageUnit, Universe

INSTANCES_DIR = Path(__file__).resolve().parent.parent / "data" / "instances"


@pytest.fixture(autouse=True)
def restore_settings():
    """Tests may tweak budgets and caps; put them back afterwards."""
    original = settings.model_dump()
    yield
    for key, value in original.items():
        setattr(settings, key, value)


@pytest.fixture
def instances_dir() -> Path:
    return INSTANCES_DIR


@pytest.fixture
def load_instance():
    def _load(name: str):
        return parse_cudf((INSTANCES_DIR / f"{name}.cudf").read_text(encoding="utf-8"))

    return _load


def make_cluster(configuration, source: str = "s"):
    """One source, one package per entry, each built from source version ``v<entry>``; all installed."""
    units = [
        PackageUnit(
            name=f"b{k}",
            version=1,
            installed=True,
            source=source,
            sourceversion=f"v{entry}",
        )
        for k, entry in enumerate(configuration)
    ]
    universe = Universe.from_units(units)
    return universe, build_cluster_index(universe), Installation.of(universe.refs())


@pytest.fixture
def cluster():
    return make_cluster

"""Run reports: instance size, per-level time and the alignment measures of each level's solution."""

from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from cudf_align.application.solver import SolveResult
from cudf_align.domain.criteria import measure_all
from cudf_align.domain.cudf import build_cluster_index, reduced_size
from cudf_align.domain.models import SourceClusterIndex, Universe


class ReportLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    seconds: float
    measures: Tuple[int, int, int, int]

    def cell(self) -> str:
        return f"{self.seconds:.2f} ({','.join(map(str, self.measures))})"


class RunReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    instance_id: str
    # (sources with several versions, their source versions, their packages, candidate pairs)
    size: Tuple[int, int, int, int]
    levels: Tuple[ReportLevel, ...] = ()

    @property
    def total_seconds(self) -> float:
        return sum(level.seconds for level in self.levels)


def build_run_report(
    instance_id: str,
    universe: Universe,
    result: SolveResult,
    index: Optional[SourceClusterIndex] = None,
) -> RunReport:
    index = index or build_cluster_index(universe)
    initial = universe.initial_installation()
    levels = tuple(
        ReportLevel(
            label=outcome.label.value,
            seconds=outcome.seconds,
            measures=measure_all(universe, initial, outcome.installation, index).alignment(),
        )
        for outcome in result.levels
    )
    return RunReport(instance_id=instance_id, size=reduced_size(index), levels=levels)


def report_table(reports: Sequence[RunReport]) -> str:
    """Fixed-width table, one row per run, closed by a "Total time" row of column sums."""
    width = max((len(r.levels) for r in reports), default=0)
    labels = []
    for k in range(width):
        label = next((r.levels[k].label for r in reports if len(r.levels) > k), f"level {k + 1}")
        labels.append(f"{k + 1}:{label}")

    header = ["id", "size", *labels, "total"]
    body: List[List[str]] = []
    for report in reports:
        cells = [level.cell() for level in report.levels]
        cells += [""] * (width - len(cells))
        body.append(
            [report.instance_id, f"({','.join(map(str, report.size))})", *cells, f"{report.total_seconds:.2f}"]
        )

    sums = [sum(r.levels[k].seconds for r in reports if len(r.levels) > k) for k in range(width)]
    grand = sum(r.total_seconds for r in reports)
    footer = ["Total time", "", *(f"{s:.2f}" for s in sums), f"{grand:.2f}"]

    rows = [header, *body, footer]
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]

    def line(row: List[str]) -> str:
        return "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()

    rule = "-" * len(line(header))
    return "\n".join([line(header), rule, *(line(row) for row in body), rule, line(footer)]) + "\n"

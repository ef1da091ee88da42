"""cudf-align: component-aligned optimization of CUDF package upgrades."""

__version__ = "0.1.0"

from cudf_align.domain.cudf import parse_cudf
from cudf_align.domain.models import CriterionKind, Installation, Universe

__all__ = ["CriterionKind", "Installation", "Universe", "parse_cudf"]

"""Writing an assembled problem to external solver formats."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Protocol, Sequence

from cudf_align.application.sat_encoder import build_formula, clausify_base, clausify_spec
from cudf_align.domain.models import ClusterRestriction, CriterionSpec, Request, Universe
from cudf_align.domain.program import LinearProgram
from cudf_align.infrastructure.lp_format import emit_lp, emit_var_map
from cudf_align.infrastructure.opb_format import emit_opb
from cudf_align.infrastructure.wcnf_format import emit_wcnf

logger = logging.getLogger(__name__)


class EmitJob:
    """Everything an emitter may need for one instance."""

    def __init__(
        self,
        stem: str,
        universe: Universe,
        request: Request,
        spec: CriterionSpec,
        lp: LinearProgram,
        restriction: Optional[ClusterRestriction] = None,
        merge: str = "first",
    ):
        self.stem = stem
        self.universe = universe
        self.request = request
        self.spec = spec
        self.lp = lp
        self.restriction = restriction
        self.merge = merge


class ProgramEmitter(Protocol):
    """Renders one output format as a mapping file name -> text."""

    def render(self, job: EmitJob) -> Dict[str, str]:
        ...


class LpEmitter:
    def render(self, job: EmitJob) -> Dict[str, str]:
        return {
            f"{job.stem}.lp": emit_lp(job.lp, job.merge),
            f"{job.stem}.vars": emit_var_map(job.lp),
        }


class OpbEmitter:
    def render(self, job: EmitJob) -> Dict[str, str]:
        return {f"{job.stem}.opb": emit_opb(job.lp, job.merge)}


class WcnfEmitter:
    """One file per packages/pairs level; hard clauses alone when the stack has neither."""

    def render(self, job: EmitJob) -> Dict[str, str]:
        formulas = clausify_spec(job.universe, job.request, job.spec, job.lp, job.restriction)
        if not formulas:
            base = clausify_base(job.universe, job.request, job.lp)
            return {f"{job.stem}.wcnf": emit_wcnf(build_formula(base, num_vars=len(job.universe)))}
        return {
            f"{job.stem}.{level}-{kind.value}.wcnf": emit_wcnf(formula)
            for level, kind, formula in formulas
        }


class EmitterFactory:
    """Emitter lookup by format name."""

    _emitters = {
        "lp": LpEmitter,
        "opb": OpbEmitter,
        "wcnf": WcnfEmitter,
    }

    @classmethod
    def formats(cls) -> List[str]:
        return list(cls._emitters)

    @classmethod
    def get_emitter(cls, name: str) -> ProgramEmitter:
        try:
            return cls._emitters[name]()
        except KeyError:
            raise ValueError(f"unknown output format '{name}', expected one of {cls.formats()}") from None


def write_outputs(job: EmitJob, formats: Sequence[str], out_dir: Path) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in formats:
        for filename, text in EmitterFactory.get_emitter(name).render(job).items():
            path = out_dir / filename
            path.write_text(text, encoding="utf-8")
            logger.info(f"Wrote {path}")
            written.append(path)
    return written

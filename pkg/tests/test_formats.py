"""Tests for the LP, OPB and WCNF writers and readers."""

import pytest

from cudf_align.application.criteria_spec import parse_criteria
from cudf_align.application.export import EmitJob, EmitterFactory, write_outputs
from cudf_align.application.generator import generate_instance
from cudf_align.application.milp_encoder import assemble
from cudf_align.application.sat_encoder import clausify_spec
from cudf_align.domain.clauses import Clause, WeightedFormula
from cudf_align.domain.cudf import parse_cudf
from cudf_align.domain.errors import InfeasibleRequestError
from cudf_align.domain.program import Comparison, VarId, VarKind
from cudf_align.infrastructure.lp_format import emit_lp, emit_var_map, read_lp, select_objective
from cudf_align.infrastructure.opb_format import emit_opb, read_opb
from cudf_align.infrastructure.wcnf_format import emit_wcnf, read_wcnf

# two versions of one package that cannot be installed together
TWO_VERSIONS = "package: a\nversion: 1\nconflicts: a\n\npackage: a\nversion: 2\nconflicts: a\n"


def _assembled(seed, criteria):
    universe, request = generate_instance(seed)
    try:
        return assemble(universe, request, parse_criteria(criteria))
    except InfeasibleRequestError:
        return None


class TestLpFormat:
    """CPLEX LP output."""

    def test_small_program_text(self):
        universe, request = parse_cudf(TWO_VERSIONS)
        lp = assemble(universe, request, parse_criteria("-removed"))

        text = emit_lp(lp)

        assert text.splitlines()[1:] == [
            "Minimize",
            " obj: 0 x1",
            "Subject To",
            " c1: 1 x1 + 1 x2 <= 1",
            "Bounds",
            "Binary",
            " x1 x2",
            "End",
        ]
        assert text.startswith("\\ ")

    def test_var_map_names_every_handle(self):
        universe, request = parse_cudf(TWO_VERSIONS)
        lp = assemble(universe, request, parse_criteria("-removed"))

        assert emit_var_map(lp) == "1\tpkg(a,1)\n2\tpkg(a,2)\n"

    @pytest.mark.parametrize("seed", range(15))
    def test_reader_recovers_rows_and_domains(self, seed):
        lp = _assembled(seed, "-removed,-unaligned(version_changes),-unaligned(clusters)")
        if lp is None:
            pytest.skip("request has an empty expansion")

        summary = read_lp(emit_lp(lp))

        assert summary.rows == tuple((row.terms, row.relation, row.rhs) for row in lp.constraints)
        assert summary.objective == lp.objectives[0].terms
        assert set(summary.binaries) == {v.handle for v in lp.variables if v.is_binary}
        assert set(summary.generals) == {v.handle for v in lp.variables if not v.is_binary}
        for v in lp.variables:
            if v.is_fixed or not v.is_binary:
                assert summary.bounds[v.handle] == (v.lower, v.upper)

    def test_long_rows_wrap(self):
        lp = _assembled(0, "-unaligned(pairs)")
        wide = next((row for row in lp.constraints if len(row.terms) > 10), None) if lp else None
        objective_wraps = lp is not None and len(lp.objectives[0].terms) > 10
        if wide is None and not objective_wraps:
            pytest.skip("no row longer than one line")

        text = emit_lp(lp)

        assert any(line.startswith("   ") and " x" in line for line in text.splitlines())
        assert read_lp(text).objective == lp.objectives[0].terms

    def test_output_is_deterministic(self):
        first = _assembled(7, "-removed,-unaligned(packages),-notuptodate")
        second = _assembled(7, "-removed,-unaligned(packages),-notuptodate")
        if first is None:
            pytest.skip("request has an empty expansion")

        assert emit_lp(first) == emit_lp(second)
        assert emit_var_map(first) == emit_var_map(second)

    def test_lex_merge_weights_earlier_levels(self, load_instance):
        universe, request = load_instance("doc_binary")
        lp = assemble(universe, request, parse_criteria("-removed,-unaligned(clusters)"))

        merged = select_objective(lp, "lex")

        _, clusters_ub = lp.objective_bounds(lp.objectives[1])
        coefficients = dict((h, c) for c, h in merged.terms)
        for _, handle in lp.objectives[0].terms:
            assert coefficients[handle] == clusters_ub + 1
        for _, handle in lp.objectives[1].terms:
            assert coefficients[handle] == 1

    def test_unknown_merge(self, load_instance):
        universe, request = load_instance("doc_binary")
        lp = assemble(universe, request, parse_criteria("-removed"))

        with pytest.raises(ValueError, match="merge"):
            select_objective(lp, "sum")

    def test_reader_rejects_text_outside_sections(self):
        with pytest.raises(ValueError):
            read_lp("x1 >= 0\nEnd\n")


class TestOpbFormat:
    """Pseudo-Boolean output: 0-1 only, inequalities in >= form."""

    def test_small_program_text(self):
        universe, request = parse_cudf(TWO_VERSIONS)
        lp = assemble(universe, request, parse_criteria("-removed"))

        assert emit_opb(lp) == "* #variable= 2 #constraint= 1\nmin: ;\n-1 x1 -1 x2 >= -1 ;\n"

    def test_fixed_variables_become_equalities(self):
        universe, request = parse_cudf("package: a\nversion: 1\ninstalled: true\n\nrequest: r\nremove: a\n")
        lp = assemble(universe, request, parse_criteria("-removed"))

        summary = read_opb(emit_opb(lp))

        assert (((1, 1),), Comparison.EQ, 0) in summary.rows
        assert summary.num_constraints == len(summary.rows)

    @pytest.mark.parametrize("seed", range(15))
    def test_integer_counters_are_substituted(self, seed):
        lp = _assembled(seed, "-unaligned(version_changes),-unaligned(clusters)")
        if lp is None:
            pytest.skip("request has an empty expansion")

        summary = read_opb(emit_opb(lp, merge="lex"))

        counters = {v.handle for v in lp.variables if v.tag.kind in (VarKind.NB_INST, VarKind.NC)}
        used = {h for terms, _, _ in summary.rows for _, h in terms} | {h for _, h in summary.objective}
        assert not used & counters
        assert all(relation != Comparison.LE for _, relation, _ in summary.rows)
        assert max(used, default=0) <= summary.num_vars

    def test_objective_in_pkg_and_aux_terms(self, load_instance):
        universe, request = load_instance("doc_binary")
        lp = assemble(universe, request, parse_criteria("-unaligned(version_changes)"))

        summary = read_opb(emit_opb(lp))

        kinds = {lp.tag(h).kind for _, h in summary.objective}
        assert kinds == {VarKind.INSTALLED_VERSION, VarKind.DELTA}

    def test_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            read_opb("min: ;\n")


class TestWcnfFormat:
    """Weighted partial MaxSAT output."""

    def test_doc_binary_pairs(self, load_instance):
        universe, request = load_instance("doc_binary")
        [(level, kind, formula)] = clausify_spec(universe, request, parse_criteria("-unaligned(pairs)"))

        text = emit_wcnf(formula)

        # foo-bin 1..2 -> 1..2, foo-doc 1..2 -> 3..4, pair auxiliaries 5..8
        lines = text.splitlines()
        assert level == 1
        assert lines[0] == "p wcnf 8 11 5"
        assert sorted(lines[1:]) == sorted([
            "5 -1 -2 0",
            "5 -3 -4 0",
            "5 3 4 0",
            "5 -1 -2 5 0",
            "5 -1 -4 6 0",
            "5 -2 -3 7 0",
            "5 -3 -4 8 0",
            "1 -5 0",
            "1 -6 0",
            "1 -7 0",
            "1 -8 0",
        ])
        assert text.endswith("0\n")

    @pytest.mark.parametrize("seed", range(15))
    def test_reader_recovers_formula(self, seed):
        universe, request = generate_instance(seed)
        try:
            formulas = clausify_spec(universe, request, parse_criteria("-unaligned(packages),-unaligned(pairs)"))
        except InfeasibleRequestError:
            pytest.skip("request has an empty expansion")

        for _, _, formula in formulas:
            summary = read_wcnf(emit_wcnf(formula))
            assert summary.top == formula.top
            assert summary.hard == tuple(c.literals for c in formula.hard)
            assert summary.soft == tuple((w, c.literals) for w, c in formula.soft)
            assert summary.num_clauses == len(formula.hard) + len(formula.soft)
            assert all(abs(lit) <= summary.num_vars for clause in summary.hard for lit in clause)

    def test_unterminated_clause(self):
        with pytest.raises(ValueError):
            read_wcnf("p wcnf 2 1 3\n3 1 2\n")

    @pytest.mark.parametrize("text", ["3 1 2 0\n", "1 -1 0\np wcnf 1 1 2\n", "p cnf 2 1\n1 2 0\n"])
    def test_header_required_first(self, text):
        with pytest.raises(ValueError, match="header"):
            read_wcnf(text)

    def test_declared_variables_survive_unused_handles(self):
        formula = WeightedFormula(hard=(Clause.of([1, -2]),), soft=((3, Clause.of([-1])),), num_vars=6)

        summary = read_wcnf(emit_wcnf(formula))

        assert (summary.num_vars, summary.num_clauses, summary.top) == (6, 2, 4)
        assert summary.hard == ((1, -2),)
        assert summary.soft == ((3, (-1,)),)


class TestExport:
    """Emitters selected by format name and written to disk."""

    def test_write_all_formats(self, load_instance, tmp_path):
        universe, request = load_instance("doc_binary")
        spec = parse_criteria("-removed,-unaligned(pairs),-unaligned(packages)")
        job = EmitJob("doc_binary", universe, request, spec, assemble(universe, request, spec))

        written = write_outputs(job, EmitterFactory.formats(), tmp_path)

        assert sorted(p.name for p in written) == [
            "doc_binary.2-unaligned_pairs.wcnf",
            "doc_binary.3-unaligned_packages.wcnf",
            "doc_binary.lp",
            "doc_binary.opb",
            "doc_binary.vars",
        ]
        assert all(p.read_text(encoding="utf-8") for p in written)

    def test_wcnf_without_clausifiable_level_has_hard_clauses_only(self, load_instance):
        universe, request = load_instance("doc_binary")
        spec = parse_criteria("-removed")
        job = EmitJob("doc", universe, request, spec, assemble(universe, request, spec))

        files = EmitterFactory.get_emitter("wcnf").render(job)

        summary = read_wcnf(files["doc.wcnf"])
        assert summary.soft == () and summary.top == 1
        assert len(summary.hard) == 3

    def test_wcnf_shares_lp_numbering(self, load_instance):
        universe, request = load_instance("doc_binary")
        spec = parse_criteria("-removed,-unaligned(pairs)")
        lp = assemble(universe, request, spec)
        job = EmitJob("doc", universe, request, spec, lp)

        text = EmitterFactory.get_emitter("wcnf").render(job)["doc.2-unaligned_pairs.wcnf"]

        pair_handles = {v.handle for v in lp.variables if v.tag.kind == VarKind.U_PAIR}
        soft = {-w_lits[1][0] for w_lits in read_wcnf(text).soft}
        assert soft == pair_handles
        assert lp.handle(VarId.pkg(("foo-doc", 2))) == 4

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="unknown output format"):
            EmitterFactory.get_emitter("mps")

"""Tests for the cudf-align command line, the criteria grammar and the run report."""

import sys
from unittest.mock import patch

import pytest

from cudf_align.application.criteria_spec import parse_criteria, render_criteria
from cudf_align.application.milp_encoder import assemble
from cudf_align.application.report import ReportLevel, RunReport, build_run_report, report_table
from cudf_align.application.solver import solve_lex
from cudf_align.cli import EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_INPUT_ERROR, EXIT_OK, build_parser, main, run
from cudf_align.domain.cudf import parse_solution
from cudf_align.domain.errors import CriteriaSpecError
from cudf_align.domain.models import ClusterRestriction, CriterionKind, Installation


def _normalized(text: str) -> list:
    return [" ".join(line.split()) for line in text.splitlines()]


class TestParseCriteria:
    """Tests for the criteria grammar."""

    def test_removed_then_packages(self):
        """Test the usual two-level stack."""
        spec = parse_criteria("-removed,-unaligned(packages)")

        assert spec.kinds() == (CriterionKind.REMOVED, CriterionKind.UNALIGNED_PACKAGES)

    def test_restricted_clusters(self):
        """Test a cluster criterion restricted to one source."""
        [criterion] = parse_criteria("-unaligned(clusters:{linux-2.6})").criteria

        assert criterion.kind == CriterionKind.UNALIGNED_CLUSTERS
        assert criterion.restriction == ClusterRestriction(sources=frozenset({"linux-2.6"}))

    def test_restriction_on_other_variants(self):
        [criterion] = parse_criteria("-unaligned(pairs:{a, b})").criteria

        assert criterion.restriction.sources == frozenset({"a", "b"})

    def test_spaces_and_aliases(self):
        spec = parse_criteria(" -removed , -unsat_recommends,-unsatrecommends ")

        assert spec.kinds()[1:] == (CriterionKind.UNSAT_RECOMMENDS,) * 2

    def test_plus_sign_rejected(self):
        """Test that maximization is refused."""
        with pytest.raises(CriteriaSpecError, match="not supported"):
            parse_criteria("+removed")

    @pytest.mark.parametrize(
        "text, position",
        [
            ("-removed,-bogus", 10),
            ("-unaligned(everything)", 11),
            ("-removed;-new", 8),
            ("", 0),
        ],
    )
    def test_errors_carry_position(self, text, position):
        with pytest.raises(CriteriaSpecError) as info:
            parse_criteria(text)

        assert info.value.position == position

    @pytest.mark.parametrize(
        "canonical",
        [
            "-removed",
            "-removed,-unaligned(packages)",
            "-new,-changed,-notuptodate,-unsatrecommends",
            "-unaligned(clusters:{glibc,linux-2.6}),-unaligned(version_changes)",
            "-removed,-unaligned(pairs:{s0})",
        ],
    )
    def test_render_round_trip(self, canonical):
        assert render_criteria(parse_criteria(canonical)) == canonical


class TestReportTable:
    """Tests for the fixed-width run report."""

    def test_zero_runs(self):
        lines = _normalized(report_table([]))

        assert lines[0] == "id size total"
        assert lines[-1] == "Total time 0.00"

    def test_one_run(self):
        report = RunReport(
            instance_id="toy",
            size=(1, 2, 3, 2),
            levels=(ReportLevel(label="removed", seconds=0.5, measures=(1, 0, 1, 1)),),
        )

        lines = _normalized(report_table([report]))

        assert lines[0] == "id size 1:removed total"
        assert lines[2] == "toy (1,2,3,2) 0.50 (1,0,1,1) 0.50"
        assert lines[-1] == "Total time 0.50 0.50"
        assert len(lines) == 5

    def test_totals_are_column_sums(self):
        reports = [
            RunReport(
                instance_id=f"run{k}",
                size=(0, 0, 0, 0),
                levels=(
                    ReportLevel(label="removed", seconds=0.25 * k, measures=(0, 0, 0, 0)),
                    ReportLevel(label="unaligned_packages", seconds=1.0, measures=(0, 0, 0, 0)),
                ),
            )
            for k in range(1, 4)
        ]

        footer = _normalized(report_table(reports))[-1]

        assert footer == "Total time 1.50 3.00 4.50"
        assert sum(r.total_seconds for r in reports) == pytest.approx(4.5)

    def test_shorter_runs_leave_blank_cells(self):
        short = RunReport(instance_id="a", size=(0, 0, 0, 0))
        long = RunReport(
            instance_id="b",
            size=(0, 0, 0, 0),
            levels=(ReportLevel(label="new", seconds=0.0, measures=(0, 0, 0, 0)),),
        )

        lines = _normalized(report_table([short, long]))

        assert lines[2] == "a (0,0,0,0) 0.00"
        assert lines[0] == "id size 1:new total"

    def test_measures_come_from_each_level(self, load_instance):
        universe, request = load_instance("doc_binary")
        result = solve_lex(assemble(universe, request, parse_criteria("-removed,-unaligned(packages)")))

        report = build_run_report("doc_binary", universe, result)

        assert report.size == (1, 2, 4, 4)
        assert report.levels[1].measures == (0, 0, 0, 0)
        assert report.levels[0].label == "removed"


class TestRun:
    """Tests for run() exit codes and output."""

    def test_solve_aligned_toy(self, instances_dir, capsys):
        """Test that an aligned instance solves with all measures at 0."""
        code = run(
            [
                "--input",
                str(instances_dir / "aligned_toy.cudf"),
                "--criteria",
                "-removed,-unaligned(packages)",
                "--report",
            ]
        )

        out = capsys.readouterr().out
        _, table = out.split("\n\nid", 1)
        assert code == EXIT_OK
        assert "aligned_toy" in table
        assert table.count("(0,0,0,0)") == 3
        assert "Total time" in table

    def test_solution_is_parseable(self, instances_dir, load_instance, capsys):
        code = run(["--input", str(instances_dir / "doc_binary.cudf"), "--criteria", "-removed,-unaligned(pairs)"])

        universe, _ = load_instance("doc_binary")
        installation = parse_solution(universe, capsys.readouterr().out)
        assert code == EXIT_OK
        assert installation in (
            Installation.of([("foo-bin", 1), ("foo-doc", 1)]),
            Installation.of([("foo-bin", 2), ("foo-doc", 2)]),
        )

    def test_contradictory_request(self, instances_dir, capsys):
        """Test that an unsatisfiable request prints FAIL and exits 1."""
        code = run(["--input", str(instances_dir / "contradictory.cudf")])

        assert code == EXIT_INFEASIBLE
        assert capsys.readouterr().out == "FAIL\n"

    def test_install_of_unknown_package(self, tmp_path, capsys):
        path = tmp_path / "missing.cudf"
        path.write_text("package: a\nversion: 1\n\nrequest: r\ninstall: zzz\n", encoding="utf-8")

        assert run(["--input", str(path)]) == EXIT_INFEASIBLE
        assert capsys.readouterr().out == "FAIL\n"

    def test_parse_error(self, tmp_path):
        path = tmp_path / "broken.cudf"
        path.write_text("package: a\nversion: one\n", encoding="utf-8")

        assert run(["--input", str(path)]) == EXIT_INPUT_ERROR

    def test_non_ascii_digit_version(self, tmp_path, capsys):
        path = tmp_path / "superscript.cudf"
        path.write_text("package: a\nversion: 1\ndepends: b >= ²\n\npackage: b\nversion: ²\n", encoding="utf-8")

        assert run(["--input", str(path)]) == EXIT_INPUT_ERROR
        assert capsys.readouterr().out == ""

    def test_input_not_utf8(self, tmp_path):
        path = tmp_path / "latin1.cudf"
        path.write_bytes("package: caf\xe9\nversion: 1\n".encode("latin-1"))

        assert run(["--input", str(path)]) == EXIT_INPUT_ERROR

    def test_bad_criteria(self, instances_dir):
        assert run(["--input", str(instances_dir / "doc_binary.cudf"), "--criteria", "+removed"]) == EXIT_INPUT_ERROR

    def test_missing_file(self, tmp_path):
        assert run(["--input", str(tmp_path / "nope.cudf")]) == EXIT_INPUT_ERROR

    def test_no_input(self):
        assert run([]) == EXIT_INPUT_ERROR

    def test_unknown_flag(self):
        assert run(["--frobnicate"]) == EXIT_INPUT_ERROR

    def test_non_positive_budget(self, instances_dir):
        assert run(["--input", str(instances_dir / "doc_binary.cudf"), "--budget-nodes", "0"]) == EXIT_INPUT_ERROR

    def test_budget_exceeded(self, instances_dir, capsys):
        code = run(
            [
                "--input",
                str(instances_dir / "kernel_cluster.cudf"),
                "--criteria",
                "-unaligned(pairs),-removed",
                "--budget-nodes",
                "1",
            ]
        )

        assert code == EXIT_BUDGET
        assert capsys.readouterr().out == ""

    def test_seeded_instance(self, capsys):
        code = run(["--seed", "3", "--criteria", "-removed,-unaligned(clusters)"])

        out = capsys.readouterr().out
        assert code in (EXIT_OK, EXIT_INFEASIBLE)
        if code == EXIT_INFEASIBLE:
            assert out == "FAIL\n"

    def test_main_reads_sys_argv(self, instances_dir, capsys):
        """Test that main() parses sys.argv."""
        with patch.object(sys, "argv", ["cudf-align", "--input", str(instances_dir / "aligned_toy.cudf")]):
            assert main() == EXIT_OK

        assert "package: tool" in capsys.readouterr().out

    def test_parser_defaults(self):
        args = build_parser().parse_args([])

        assert args.criteria == "-removed"
        assert args.mode == "solve"
        assert args.emit == "lp,opb,wcnf"
        assert args.merge == "first"


class TestEmitMode:
    """Tests for --mode emit."""

    def _emit(self, instance, out_dir, *extra):
        return run(
            [
                "--input",
                str(instance),
                "--mode",
                "emit",
                "--criteria",
                "-removed,-unaligned(packages)",
                "--out-dir",
                str(out_dir),
                *extra,
            ]
        )

    def test_three_formats_written(self, instances_dir, tmp_path):
        code = self._emit(instances_dir / "kernel_cluster.cudf", tmp_path)

        assert code == EXIT_OK
        assert sorted(p.name for p in tmp_path.iterdir()) == [
            "kernel_cluster.2-unaligned_packages.wcnf",
            "kernel_cluster.lp",
            "kernel_cluster.opb",
            "kernel_cluster.vars",
        ]

    @pytest.mark.parametrize("name", ["aligned_toy", "doc_binary", "kernel_cluster", "upgrade_mixed"])
    def test_byte_identical_across_runs(self, instances_dir, tmp_path, name):
        first, second = tmp_path / "first", tmp_path / "second"

        assert self._emit(instances_dir / f"{name}.cudf", first, "--merge", "lex") == EXIT_OK
        assert self._emit(instances_dir / f"{name}.cudf", second, "--merge", "lex") == EXIT_OK

        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for filename in names:
            assert (first / filename).read_bytes() == (second / filename).read_bytes()

    def test_single_format(self, instances_dir, tmp_path):
        assert self._emit(instances_dir / "doc_binary.cudf", tmp_path, "--emit", "opb") == EXIT_OK

        assert [p.name for p in tmp_path.iterdir()] == ["doc_binary.opb"]

    def test_unknown_format(self, instances_dir, tmp_path):
        assert self._emit(instances_dir / "doc_binary.cudf", tmp_path, "--emit", "lp,mps") == EXIT_INPUT_ERROR

    def test_emit_contradictory_still_writes(self, instances_dir, tmp_path):
        """Remove-versus-install contradictions are left for the external solver."""
        code = self._emit(instances_dir / "contradictory.cudf", tmp_path, "--emit", "lp")

        assert code == EXIT_OK
        assert (tmp_path / "contradictory.lp").exists()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

import numpy as np
import pytest
from numpy.testing import assert_allclose

from phmin.discrete import GeneratingFunction
from phmin.errors import InputError
from phmin.pipeline import (
    EXIT_NOT_FOUND,
    EXIT_OK,
    ParsedInput,
    am_configs,
    bench_instance,
    load_document,
    load_input,
    lst_to_dict,
    poles_to_dict,
    solve_gf,
    solve_lst,
    summarize_bench,
    verify_claim,
)
from phmin.poly import build_lst_from_coeffs
from shared.models import AmConfig, CoeffsInput, GenSpec, InitKind


class TestLoadDocument:
    def test_coefficients(self, fixtures_dir):
        doc = load_document(fixtures_dir / "exponential.json")
        assert isinstance(doc, CoeffsInput)
        assert not doc.z_form

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "form": "coeffs",\n  "p": [1.0,\n}', encoding="utf-8")
        with pytest.raises(InputError) as excinfo:
            load_document(path)
        assert excinfo.value.line == 4
        assert str(path) in str(excinfo.value)

    def test_schema_violation_reports_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(
            '{\n  "form": "coeffs",\n  "p": [1.0],\n  "q": "oops"\n}', encoding="utf-8"
        )
        with pytest.raises(InputError) as excinfo:
            load_document(path)
        assert excinfo.value.line == 4
        assert "q" in str(excinfo.value)

    def test_unknown_form(self, write_input):
        with pytest.raises(InputError):
            load_document(write_input({"form": "moments", "values": [1.0]}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot read input"):
            load_document(tmp_path / "absent.json")


class TestParse:
    def test_partial_fractions(self, ex51_lst):
        assert_allclose(ex51_lst.q.coeffs, [8.0, 13.6, 6.6, 1.0], atol=1e-12)
        assert ex51_lst.at_zero() == pytest.approx(1.0, abs=1e-12)

    def test_beta_jordan(self, ex53_lst):
        assert ex53_lst.order == 6
        assert [rp.mult for rp in ex53_lst.poles.real_poles] == [1, 2, 3]

    def test_generating_function(self, fixtures_dir):
        parsed = load_input(fixtures_dir / "geometric_gf.json")
        assert parsed.discrete
        assert parsed.form == "z_form"
        assert parsed.lst is None

    def test_mass_correction_is_recorded(self, write_input):
        parsed = load_input(write_input({"form": "coeffs", "p": [2.0004], "q": [2.0, 1.0]}))
        assert parsed.mass_correction == pytest.approx(2.0 / 2.0004)
        assert parsed.lst.at_zero() == pytest.approx(1.0, abs=1e-15)

    def test_exact_mass_is_untouched(self, fixtures_dir):
        assert load_input(fixtures_dir / "exponential.json").mass_correction == 1.0


def test_serialized_forms(ex51_lst):
    poles = poles_to_dict(ex51_lst.poles)
    assert poles["real"] == [{"value": pytest.approx(-1.0), "mult": 1}]
    assert poles["complex"][0]["mu"] == pytest.approx(-2.8)
    assert poles["complex"][0]["omega"] == pytest.approx(0.4)
    assert lst_to_dict(build_lst_from_coeffs([2.0], [2.0, 1.0])) == {
        "form": "coeffs",
        "p": [2.0],
        "q": [2.0, 1.0],
    }


def test_am_configs_add_seeded_random_starts():
    configs = am_configs(AmConfig(seed=10), multistart=3)
    assert configs[0].init == InitKind.JORDAN_PLUS_ONES
    assert [c.init for c in configs[1:]] == [InitKind.RANDOM, InitKind.RANDOM]
    assert [c.seed for c in configs] == [10, 11, 12]
    assert am_configs(AmConfig(), multistart=0) == [AmConfig()]


class TestSolve:
    def test_exponential(self, exponential_lst):
        result = solve_lst(exponential_lst, [AmConfig()])
        assert result.exit_code == EXIT_OK
        body = result.body
        assert body["outcome"] == "RepresentationFound"
        assert body["xi"] == pytest.approx(2.0)
        assert_allclose(body["alpha"], [1.0], atol=1e-12)
        assert_allclose(body["A"], [[-2.0]], atol=1e-9)
        assert body["verify"]["pass"] is True
        assert body["moments"][0] == pytest.approx(0.5, rel=1e-8)
        assert body["f_trace_truncated"] is False
        assert len(body["runs"]) == 1

    def test_inadmissible(self, fixtures_dir):
        parsed = load_input(fixtures_dir / "positive_pole.json")
        with pytest.raises(InputError, match=r"\(A3\)"):
            solve_lst(parsed.lst, [AmConfig()])

    def test_trace_cap(self, ex51_lst, monkeypatch):
        monkeypatch.setattr("phmin.pipeline.Config.TRACE_CAP", 2)
        config = AmConfig(init=InitKind.MINUS_XI_I, max_outer_iter=10, tol_term=1e-300)
        body = solve_lst(ex51_lst, [config]).body
        assert len(body["f_trace"]) == 2
        assert body["f_trace_truncated"] is True

    def test_geometric_generating_function(self):
        gf = GeneratingFunction.from_coeffs([0.0, 0.5], [1.0, -0.5])
        result = solve_gf(gf, [AmConfig()])
        assert result.exit_code == EXIT_OK
        assert_allclose(result.body["A_tilde"], [[0.5]], atol=1e-9)
        assert result.body["continuous"]["q"] == pytest.approx([0.5, 1.0])


class TestVerifyClaim:
    def test_round_trip(self, exponential_lst):
        parsed = ParsedInput(form="coeffs", lst=exponential_lst)
        claim = {"alpha": [1.0], "A": [[-2.0]], "outcome": "RepresentationFound"}
        result = verify_claim(parsed, claim, None)
        assert result.exit_code == EXIT_OK
        assert result.body["outcome"] == "RepresentationFound"

    def test_wrong_claim(self, exponential_lst):
        parsed = ParsedInput(form="coeffs", lst=exponential_lst)
        result = verify_claim(parsed, {"alpha": [1.0], "A": [[-3.0]]}, None)
        assert result.exit_code == EXIT_NOT_FOUND
        assert result.body["verify"]["pass"] is False

    def test_report_without_representation(self, exponential_lst):
        parsed = ParsedInput(form="coeffs", lst=exponential_lst)
        with pytest.raises(InputError):
            verify_claim(parsed, {"outcome": "NotFound"}, None)


def bench_row(n, is_complex, success, iterations, wallclock):
    return {
        "n": n,
        "status": "ok",
        "complex": is_complex,
        "success": success,
        "iterations": iterations,
        "wallclock": wallclock,
    }


class TestBench:
    def test_instance_row(self):
        job = {"spec": GenSpec(n=2, seed=7).model_dump(), "config": AmConfig().model_dump()}
        row = bench_instance(dict(job, index=0))
        assert row["status"] == "ok"
        assert row["n"] == 2
        assert row["index"] == 0
        assert isinstance(row["success"], bool)
        assert row["outcome"] in ("RepresentationFound", "NotFound", "InfeasibleBeta")

    def test_summary_counts_real_and_complex_apart(self):
        rows = [
            bench_row(3, False, True, 4, 0.1),
            bench_row(3, True, False, 8, 0.3),
            {"n": 3, "status": "skipped"},
            bench_row(4, False, True, 2, 0.2),
        ]
        table = summarize_bench(rows)
        assert [row["n"] for row in table] == [3, 4]
        first = table[0]
        assert first["real_successes"] == 1
        assert first["real_attempts"] == 1
        assert first["complex_successes"] == 0
        assert first["complex_attempts"] == 1
        assert first["skipped"] == 1
        assert first["mean_iterations"] == pytest.approx(6.0)
        assert first["mean_wallclock"] == pytest.approx(0.2)
        assert table[1]["complex_attempts"] == 0
        assert np.isclose(table[1]["mean_iterations"], 2.0)

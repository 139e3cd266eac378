"""
Acceptance runs on the worked examples and on random benchmark instances.

These run the full alternating minimization to convergence; select them with
``pytest -m slow``.
"""

import pytest

from conftest import FIXTURES, robustness_lst
from phmin.am import AmOutcome, extract_representation, run_am
from phmin.discrete import solve_discrete
from phmin.jordan import build_problem
from phmin.pipeline import bench_instance, load_input, solve_lst, summarize_bench
from phmin.verify import check_representation
from shared.models import AmConfig, GenSpec, InitKind

pytestmark = pytest.mark.slow


def assert_monotone(f_trace):
    for before, after in zip(f_trace, f_trace[1:]):
        assert after <= before + 1e-12


def test_three_state_example(ex51_lst):
    result = solve_lst(ex51_lst, [AmConfig()])
    body = result.body
    assert result.exit_code == 0
    assert body["outcome"] == AmOutcome.FOUND.value
    assert body["f_final"] <= 1e-8
    assert body["xi"] == pytest.approx(6.6)
    assert body["beta_residual"] <= 1e-9
    assert body["verify"]["pass"] is True
    assert_monotone(body["f_trace"])


class TestSixStateExample:
    def test_jordan_start_succeeds(self, ex53_lst):
        problem = build_problem(ex53_lst)
        assert problem.xi == pytest.approx(7.3)
        report = run_am(problem, AmConfig(init=InitKind.JORDAN))
        assert report.outcome == AmOutcome.FOUND
        assert report.final.F <= 1e-8
        rep = extract_representation(report, problem)
        assert check_representation(rep.alpha, rep.A, ex53_lst).passed
        assert_monotone(report.f_trace)

    def test_scaled_identity_start_stalls(self, ex53_lst):
        problem = build_problem(ex53_lst)
        report = run_am(problem, AmConfig(init=InitKind.MINUS_XI_I))
        assert report.outcome == AmOutcome.NOT_FOUND
        assert 0.1 <= report.final.F <= 0.4
        assert_monotone(report.f_trace)


@pytest.mark.parametrize("h", [0.545, 0.552])
def test_near_boundary_spectra(h):
    lst = robustness_lst(h)
    problem = build_problem(lst)
    report = run_am(problem, AmConfig(init=InitKind.JORDAN_PLUS_ONES))
    assert report.outcome == AmOutcome.FOUND
    assert report.final.F <= 9e-10
    rep = extract_representation(report, problem)
    assert check_representation(rep.alpha, rep.A, lst).passed


def test_discrete_example_has_no_order_three_representation():
    gf = load_input(FIXTURES / "ex52_gf.json").gf
    configs = [
        AmConfig(init=InitKind.JORDAN_PLUS_ONES),
        AmConfig(init=InitKind.JORDAN),
        AmConfig(init=InitKind.MINUS_XI_I),
    ] + [AmConfig(init=InitKind.RANDOM, seed=seed) for seed in range(7)]
    assert len(configs) == 10
    for config in configs:
        result = solve_discrete(gf, config, renormalize=True)
        assert not result.found, config
        assert_monotone(result.report.f_trace)


@pytest.mark.parametrize("n, minimum", [(3, 48), (4, 45)])
def test_balanced_benchmark(n, minimum):
    spec = GenSpec(n=n, seed=7).model_dump()
    config = AmConfig(seed=7).model_dump()
    rows = [bench_instance({"spec": spec, "config": config, "index": k}) for k in range(50)]
    row = summarize_bench(rows)[0]
    successes = row["real_successes"] + row["complex_successes"]
    assert row["real_attempts"] + row["complex_attempts"] == 50
    assert successes >= minimum

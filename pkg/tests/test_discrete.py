import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from phmin.discrete import (
    GeneratingFunction,
    gf_of,
    lift,
    solve_discrete,
    to_continuous,
    validate_gf,
)
from phmin.errors import InvalidGf
from phmin.phgen import sample_discrete_ph
from phmin.poly import validate_lst
from phmin.verify import gf_value
from shared.models import AmConfig, GenSpec

GEOMETRIC = GeneratingFunction.from_coeffs([0.0, 0.5], [1.0, -0.5])
EX52 = GeneratingFunction.from_coeffs([0.0, 0.0294, -0.5948, 0.8854], [1.0, -0.9, 0.24, -0.02])


class TestValidateGf:
    def test_geometric(self):
        report = validate_gf(GEOMETRIC)
        assert report.valid
        assert report.mass == pytest.approx(1.0)

    def test_printed_example(self):
        assert validate_gf(EX52, mass_tol=1e-9).valid

    def test_mass_at_zero(self):
        report = validate_gf(GeneratingFunction.from_coeffs([0.2, 0.4], [1.0, -0.4]))
        assert not report.zero_mass_at_zero
        assert not report.valid

    def test_constant_term_of_denominator(self):
        report = validate_gf(GeneratingFunction.from_coeffs([0.0, 1.0], [2.0, -1.0]))
        assert not report.unit_constant

    def test_dominant_root_inside_unit_disk(self):
        # q~ = 1 - 2z has its root at 0.5
        report = validate_gf(GeneratingFunction.from_coeffs([0.0, -1.0], [1.0, -2.0]))
        assert not report.dominant_root

    def test_common_root(self):
        g = GeneratingFunction.from_coeffs([0.0, 0.5, -0.25], [1.0, -1.0, 0.25])
        assert not validate_gf(g).coprime


class TestToContinuous:
    def test_geometric(self):
        lst = to_continuous(GEOMETRIC)
        assert_allclose(lst.p.coeffs, [0.5], atol=1e-15)
        assert_allclose(lst.q.coeffs, [0.5, 1.0], atol=1e-15)

    def test_printed_example(self):
        lst = to_continuous(EX52, renormalize=True)
        assert_allclose(lst.p.coeffs, [0.32, -0.536, 0.0294], atol=1e-12)
        assert_allclose(lst.q.coeffs, [0.32, 1.44, 2.1, 1.0], atol=1e-12)
        assert [rp.value for rp in lst.poles.real_poles] == pytest.approx([-0.5, -0.8], abs=1e-7)
        assert [rp.mult for rp in lst.poles.real_poles] == [1, 2]

    def test_invalid_raises(self):
        with pytest.raises(InvalidGf):
            to_continuous(GeneratingFunction.from_coeffs([0.2, 0.4], [1.0, -0.4]))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=4))
    def test_generator_born_functions_map_to_admissible_lsts(self, seed, n):
        g = gf_of(*sample_discrete_ph(GenSpec(n=n, seed=seed)))
        assume(validate_gf(g, mass_tol=1e-9).valid)
        lst = to_continuous(g, renormalize=True)
        assert lst.at_zero() == pytest.approx(1.0, abs=1e-9)
        report = validate_lst(lst, mass_tol=1e-9)
        assert report.coprime
        assert report.dominant_real_pole


class TestGfOf:
    def test_matches_resolvent(self):
        alpha, A = sample_discrete_ph(GenSpec(n=3, seed=8))
        g = gf_of(alpha, A)
        for z in (0.2, -0.9, 0.4 + 0.6j):
            assert g.evaluate(z) == pytest.approx(gf_value(alpha, A, z), abs=1e-10)

    def test_lift_shifts_by_identity(self):
        rep = lift([1.0], [[-0.5]])
        assert_allclose(rep.alpha_tilde, [1.0])
        assert_allclose(rep.A_tilde, [[0.5]])


class TestSolveDiscrete:
    def test_geometric(self):
        result = solve_discrete(GEOMETRIC, AmConfig())
        assert result.found
        assert_allclose(result.representation.alpha_tilde, [1.0], atol=1e-12)
        assert_allclose(result.representation.A_tilde, [[0.5]], atol=1e-9)
        assert result.check.passed
        assert result.problem.xi == 1.0

    def test_invalid_function(self):
        with pytest.raises(InvalidGf):
            solve_discrete(GeneratingFunction.from_coeffs([0.2, 0.4], [1.0, -0.4]))

    @pytest.mark.slow
    def test_round_trip_when_found(self):
        found = 0
        for index in range(100):
            alpha, A = sample_discrete_ph(GenSpec(n=1 + index % 3, seed=31), index)
            g = gf_of(alpha, A)
            if not validate_gf(g, mass_tol=1e-9).valid:
                continue
            result = solve_discrete(g, AmConfig(max_outer_iter=2000), renormalize=True)
            if not result.found:
                continue
            found += 1
            rep = result.representation
            assert np.all(rep.A_tilde >= -1e-8)
            assert np.all(rep.A_tilde.sum(axis=1) <= 1.0 + 1e-8)
            assert np.all(rep.alpha_tilde >= -1e-8)
            assert result.check.gf_max_rel_err <= 1e-4
        assert found > 0

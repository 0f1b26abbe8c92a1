import math

import numpy as np
import pytest
from scipy import integrate

from ocft.cft import (
    BosonicMeasure,
    FermionicMeasure,
    c0_bosonic_closed_form,
    c0_bosonic_selfconsistent,
    c0_fermionic_closed_form,
    c0_fermionic_selfconsistent,
    lhs_coefficient_means,
    normalization_audit,
    reflection_split_check,
    rhs_exact_coefficients,
    rhs_mc_coefficients,
    sample_bosonic_z,
    sample_fermionic_z,
    verify_bosonic_cft,
    verify_fermionic_cft,
    verify_son_cft,
)
from ocft.cft import _lhs_structure, _minor_dets
from ocft.errors import ConfigError, DomainError
from ocft.grassmann import lhs_integrand
from ocft.haar import RngStream


class TestConstants:
    def test_fermionic_closed_form_single_flavour(self):
        for n_colour in (1, 3, 7):
            assert c0_fermionic_closed_form(n_colour, 1) == pytest.approx(1.0)

    def test_fermionic_closed_form_two_flavours(self):
        assert c0_fermionic_closed_form(4, 2) == pytest.approx(5.0 / math.pi, rel=1e-12)
        assert c0_fermionic_closed_form(2, 2) == pytest.approx(3.0 / math.pi, rel=1e-12)

    def test_fermionic_selfconsistent(self):
        # flat-measure mass for n=2 is pi/(N+1): the constant is (N+1)/pi
        assert c0_fermionic_selfconsistent(1, 1) == 1.0
        for n_colour in (2, 4, 6):
            assert c0_fermionic_selfconsistent(n_colour, 2) == pytest.approx(
                (n_colour + 1) / math.pi, rel=1e-12
            )

    def test_normalization_audit_ratio_is_one(self):
        for n_colour in (2, 4, 6):
            audit = normalization_audit(n_colour)
            assert audit["ratio"] == pytest.approx(1.0, rel=1e-10)

    def test_bosonic_closed_form(self):
        assert c0_bosonic_closed_form(4, 1) == pytest.approx(1.0 / math.pi, rel=1e-12)
        assert c0_bosonic_closed_form(6, 1) == pytest.approx(2.0 / math.pi, rel=1e-12)
        with pytest.raises(DomainError):
            c0_bosonic_closed_form(2, 1)

    def test_bosonic_selfconsistent_matches_closed_form(self):
        for n_colour in (4, 5, 6, 8):
            assert c0_bosonic_selfconsistent(n_colour, 1) == pytest.approx(
                c0_bosonic_closed_form(n_colour, 1), rel=1e-10
            )


class TestFermionicSampler:
    def test_single_flavour_is_zero_matrix(self):
        z, w = sample_fermionic_z(FermionicMeasure(3, 1), RngStream(1), 10)
        assert np.all(z == 0)
        assert np.all(w == 1.0)

    def test_two_flavour_weights_are_unit(self):
        z, w = sample_fermionic_z(FermionicMeasure(4, 2), RngStream(2), 1000)
        assert np.all(w == 1.0)
        np.testing.assert_allclose(z[:, 0, 1], -z[:, 1, 0])

    def test_two_flavour_radial_moment(self):
        n_colour = 4
        z, _ = sample_fermionic_z(FermionicMeasure(n_colour, 2), RngStream(3), 400_000)
        r = np.abs(z[:, 0, 1]) ** 2
        # quadrature oracle for E[r / (1 + r)]
        dens = lambda r_: (1 + r_) ** (-(n_colour + 2.0))
        num, _ = integrate.quad(lambda r_: r_ / (1 + r_) * dens(r_), 0, np.inf)
        den, _ = integrate.quad(dens, 0, np.inf)
        vals = r / (1 + r)
        se = vals.std() / np.sqrt(vals.size)
        assert abs(vals.mean() - num / den) <= 3 * se

    def test_radial_moment_closed_form(self):
        # E[r^u] = 1 / binom(N, u) under the n=2 measure
        n_colour = 5
        z, _ = sample_fermionic_z(FermionicMeasure(n_colour, 2), RngStream(4), 400_000)
        r = np.abs(z[:, 0, 1]) ** 2
        se = r.std() / np.sqrt(r.size)
        assert abs(r.mean() - 1.0 / n_colour) <= 3 * se

    def test_importance_path_consistency(self):
        # n = 3 draws are weighted; two disjoint streams must agree
        measure = FermionicMeasure(4, 3)

        def weighted_mean(seed):
            z, w = sample_fermionic_z(measure, RngStream(seed), 100_000)
            f = 1.0 / (1.0 + np.einsum("bij,bij->b", z, z.conj()).real)
            mean = (w * f).sum() / w.sum()
            ess = w.sum() ** 2 / (w**2).sum()
            se = np.sqrt(((w / w.sum()) ** 2 * (f - mean) ** 2).sum())
            return mean, se, ess

        m1, s1, e1 = weighted_mean(5)
        m2, s2, e2 = weighted_mean(6)
        assert min(e1, e2) > 1000
        assert abs(m1 - m2) <= 4 * np.hypot(s1, s2)


class TestBosonicSampler:
    def test_stays_in_unit_disc(self):
        z = sample_bosonic_z(BosonicMeasure(4, 1), RngStream(7), 5000)
        assert np.abs(z).max() < 1.0

    @pytest.mark.parametrize("n_colour", [4, 6])
    def test_radial_moment(self, n_colour):
        z = sample_bosonic_z(BosonicMeasure(n_colour, 1), RngStream(8), 300_000)
        r = np.abs(z[:, 0, 0]) ** 2
        expo = n_colour / 2.0 - 2.0
        num, _ = integrate.quad(lambda r_: r_ * (1 - r_) ** expo, 0, 1)
        den, _ = integrate.quad(lambda r_: (1 - r_) ** expo, 0, 1)
        se = r.std() / np.sqrt(r.size)
        assert abs(r.mean() - num / den) <= 3 * se

    def test_two_flavour_rejection_contracts(self):
        z = sample_bosonic_z(BosonicMeasure(6, 2), RngStream(9), 500)
        np.testing.assert_allclose(z, np.transpose(z, (0, 2, 1)))
        sv = np.linalg.svd(z, compute_uv=False)
        assert sv.max() < 1.0

    def test_rejection_needs_nonnegative_exponent(self):
        with pytest.raises(DomainError):
            sample_bosonic_z(BosonicMeasure(5, 2), RngStream(10), 10)

    def test_integrability_bound(self):
        with pytest.raises(DomainError):
            BosonicMeasure(2, 1)


class TestColourSideStructure:
    @pytest.mark.parametrize("shape", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)])
    def test_minor_table_matches_exterior_algebra(self, shape):
        n_colour, n_flavour = shape
        rng = np.random.default_rng(11)
        o = rng.standard_normal((n_colour, n_colour))
        pairs, table = _lhs_structure(n_colour, n_flavour)
        minors = _minor_dets(o[None], pairs)[0]
        exact = lhs_integrand(o, n_colour, n_flavour)
        for mask, sign, choice in table:
            pred = sign * np.prod(minors[list(choice)])
            assert pred == pytest.approx(
                exact.coefficient(mask).real, abs=1e-12
            )
        assert set(exact.terms) <= {m for m, _, _ in table}

    def test_balanced_grades_only(self):
        n_colour, n_flavour = 2, 2
        nn = n_colour * n_flavour
        _, table = _lhs_structure(n_colour, n_flavour)
        for mask, _, _ in table:
            bar = (mask & ((1 << nn) - 1)).bit_count()
            unbar = (mask >> nn).bit_count()
            assert bar == unbar

    def test_second_moment_of_minors(self):
        # E[det(O[S,T])^2] = 1/binom(N,k) over O(N)
        n_colour = 3
        means = lhs_coefficient_means(n_colour, 1, 200_000, RngStream(12))
        pairs, table = _lhs_structure(n_colour, 1)
        # the full-set pair has deterministic minor det(O) = +-1
        full_mask = [m for m, _, c in table if pairs[c[0]][0] == (0, 1, 2)
                     and pairs[c[0]][1] == (0, 1, 2)][0]
        mean, se = means[full_mask]
        assert abs(mean) <= 3 * se  # the two components cancel


class TestFlavourSideCoefficients:
    def test_single_flavour_constant_only(self):
        assert rhs_exact_coefficients(3, 1) == {0: 1.0}

    def test_exact_matches_sampling(self):
        exact = rhs_exact_coefficients(2, 2)
        sampled = rhs_mc_coefficients(2, 2, 300_000, RngStream(13))
        for mask, (mean, se) in sampled.items():
            target = exact.get(mask, 0.0)
            if se == 0.0:
                assert mean == pytest.approx(target, abs=1e-12)
            else:
                assert abs(mean - target) <= 4 * se

    def test_constant_term_is_one(self):
        assert rhs_exact_coefficients(4, 2)[0] == 1.0


class TestFermionicVerification:
    def test_small_configs_pass(self):
        for (n_colour, n_flavour) in [(1, 2), (2, 2)]:
            report = verify_fermionic_cft(
                n_colour, n_flavour, 150_000, RngStream(14)
            )
            assert report.passed, f"max|z| = {report.max_abs_z}"

    def test_constant_term_exact(self):
        report = verify_fermionic_cft(2, 2, 1000, RngStream(15))
        row = report.row(0)
        assert row.lhs == 1.0 and row.rhs == 1.0 and row.z_score == 0.0

    def test_one_colour_one_flavour(self):
        report = verify_fermionic_cft(1, 1, 10_000, RngStream(16))
        assert report.passed
        # the only non-constant monomial compares E[O] over O(1) with 0
        other = [r for r in report.rows if r.mask != 0]
        assert len(other) == 1 and other[0].rhs == 0.0

    def test_mc_rhs_route(self):
        report = verify_fermionic_cft(
            2, 2, 150_000, RngStream(17), rhs_method="mc"
        )
        assert report.passed

    def test_size_cap(self):
        with pytest.raises(ConfigError):
            verify_fermionic_cft(3, 3, 100, RngStream(0))

    def test_audit_attached_for_two_flavours(self):
        report = verify_fermionic_cft(2, 2, 1000, RngStream(18))
        assert report.extras["normalization_audit"]["ratio"] == pytest.approx(
            1.0, rel=1e-10
        )


class TestBosonicVerification:
    def test_passes_at_four_colours(self):
        report = verify_bosonic_cft(4, 1, 5, 150_000, RngStream(19))
        assert report.passed, f"max|z| = {report.max_abs_z}"

    def test_passes_with_two_flavours(self):
        report = verify_bosonic_cft(6, 2, 4, 100_000, RngStream(27))
        assert report.passed, f"max|z| = {report.max_abs_z}"

    def test_worker_sharding_is_deterministic(self):
        a = verify_bosonic_cft(4, 1, 3, 40_000, RngStream(28), workers=2)
        b = verify_bosonic_cft(4, 1, 3, 40_000, RngStream(28), workers=2)
        assert [(r.lhs, r.rhs) for r in a.rows] == [(r.lhs, r.rhs) for r in b.rows]

    def test_integrability_guard(self):
        with pytest.raises(DomainError):
            verify_bosonic_cft(2, 1, 5, 1000, RngStream(20))

    def test_zero_probe_gives_unit_on_both_sides(self):
        # with phi = phibar = 0 both integrands are exp(0); the identity is
        # the group-volume normalisation itself
        rng = np.random.default_rng(26)
        o = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        z = 0.3 + 0.1j
        phi = np.zeros(4, dtype=complex)
        lhs = np.exp(phi @ o @ phi)
        rhs = np.exp(0.5 * (z * (phi @ phi) + np.conj(z) * (phi @ phi)))
        assert lhs == 1.0 and rhs == 1.0

    def test_probe_rotation_invariance_of_flavour_side(self):
        # the flavour side depends on probes only through sum phi_i^2 and
        # sum phibar_i^2, which are exactly invariant under phi -> U phi
        # with U real orthogonal
        rng = np.random.default_rng(21)
        phi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        u = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        assert (phi @ phi) == pytest.approx((u @ phi) @ (u @ phi), rel=1e-12)


class TestSonVerification:
    def test_so1_fit_is_exact(self):
        report = verify_son_cft(1, 1, 1000, RngStream(22))
        assert report.extras["fitted_k"] == pytest.approx(1.0, abs=1e-12)
        assert report.max_abs_z <= 1e-6

    def test_so2_single_flavour(self):
        report = verify_son_cft(2, 1, 150_000, RngStream(23))
        assert report.passed
        assert report.extras["fitted_k"] == pytest.approx(0.5, abs=1e-9)

    def test_so2_two_flavours(self):
        report = verify_son_cft(2, 2, 150_000, RngStream(24))
        assert report.passed
        # K carries over from the n = 1 fit of the same group
        assert report.extras["fitted_k"] == pytest.approx(1.0 / 6.0, rel=0.05)

    def test_leibniz_cap(self):
        with pytest.raises(ConfigError):
            verify_son_cft(4, 1, 100, RngStream(0))


class TestReflectionSplit:
    @pytest.mark.parametrize("shape", [(2, 1), (2, 2)])
    def test_full_group_is_mean_of_components(self, shape):
        report = reflection_split_check(*shape, 120_000, RngStream(25))
        assert report.passed, f"max|z| = {report.max_abs_z}"

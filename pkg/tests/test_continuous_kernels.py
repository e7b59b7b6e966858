import numpy as np
import pytest
from scipy.special import betainc, ndtri

from zigzag_pca import continuous_kernels as ck
from zigzag_pca.core_types import HzmcSpec, MarkovKernel, gauss_legendre_grid, trapezoid_grid


@pytest.fixture(scope="module")
def gauss31():
    return ck.GaussianPcaParams(3.0, 1.0)


@pytest.fixture(scope="module")
def gauss_grid(gauss31):
    return ck.default_gaussian_grid(gauss31)


class TestGaussianParams:
    def test_small_m_rejected(self):
        with pytest.raises(ValueError, match=r"\|m\| > 2"):
            ck.GaussianPcaParams(1.5, 1.0)
        with pytest.raises(ValueError, match=r"\|m\| > 2"):
            ck.GaussianPcaParams(-2.0, 1.0)

    def test_negative_m_allowed_beyond_two(self):
        ck.GaussianPcaParams(-3.0, 1.0)

    def test_bad_sigma_rejected(self):
        with pytest.raises(ValueError, match="sigma"):
            ck.GaussianPcaParams(3.0, 0.0)


class TestGaussianDensity:
    def test_centered_row_integrates_to_one(self, gauss31, gauss_grid):
        kern = ck.gaussian_kernel_density(gauss31)
        row = kern.density(0.0, 0.0, gauss_grid.points)
        assert gauss_grid.integrate(row) == pytest.approx(1.0, abs=1e-10)

    def test_mean_and_peak(self, gauss31):
        kern = ck.gaussian_kernel_density(gauss31)
        c = np.linspace(-3, 5, 4001)
        vals = kern.density(1.0, 2.0, c)
        assert c[np.argmax(vals)] == pytest.approx(1.0, abs=2e-3)
        assert vals.max() == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-6)

    def test_symmetric_in_neighbors(self, gauss31):
        kern = ck.gaussian_kernel_density(gauss31)
        c = np.linspace(-4, 4, 101)
        assert np.array_equal(kern.density(0.3, -1.7, c), kern.density(-1.7, 0.3, c))

    def test_sampler_matches_cdf(self, gauss31):
        kern = ck.gaussian_kernel_density(gauss31)
        u = (np.arange(1000) + 0.5) / 1000
        draws = kern.sampler(np.full(1000, 1.0), np.full(1000, 2.0), u)
        assert draws.mean() == pytest.approx(1.0, abs=5e-3)
        assert np.all(np.diff(draws) > 0)


class TestClosedForm:
    def test_frozen_constants(self, gauss31):
        hz = ck.gaussian_invariant_hzmc(gauss31)
        ar = ck.ar1_parameters(gauss31)
        assert hz.meta["l"] == pytest.approx(1.7453559924999298, abs=1e-12)
        assert ar.phi == pytest.approx(0.3819660112501051, abs=1e-12)
        assert ar.innovation_var == pytest.approx(1.1458980337503155, abs=1e-12)
        assert gauss31.stationary_std == pytest.approx(1.1582921852882690, abs=1e-12)

    def test_m25_exact_values(self):
        ar = ck.ar1_parameters(ck.GaussianPcaParams(2.5, 1.0))
        # 1 - 4/6.25 = 0.36, sqrt = 0.6, l = 1.6
        assert ar.phi == pytest.approx(0.5, abs=1e-14)
        assert ar.innovation_var == pytest.approx(1.25, abs=1e-14)

    def test_large_m_decouples_cells(self):
        par = ck.GaussianPcaParams(1e8, 1.0)
        ar = ck.ar1_parameters(par)
        assert abs(ar.phi) < 1e-7
        assert par.contraction == pytest.approx(2.0, abs=1e-15)
        assert ar.innovation_var == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("m,sigma", [(2.5, 1.0), (3.0, 1.0), (5.0, 2.0)])
    def test_stationary_variance_identity(self, m, sigma):
        par = ck.GaussianPcaParams(m, sigma)
        ar = ck.ar1_parameters(par)
        target = sigma ** 2 * (1 - 4 / m ** 2) ** -0.5
        assert ar.stationary_var == pytest.approx(target, rel=1e-12)

    def test_sigma_scaling(self):
        a = ck.ar1_parameters(ck.GaussianPcaParams(3.0, 1.0))
        b = ck.ar1_parameters(ck.GaussianPcaParams(3.0, 2.5))
        assert b.phi == a.phi
        assert b.innovation_var == pytest.approx(a.innovation_var * 2.5 ** 2, rel=1e-14)


class TestQuadratureConditions:
    @pytest.mark.parametrize("m,sigma", [(2.5, 1.0), (3.0, 1.0), (5.0, 2.0)])
    def test_gaussian_closed_form_passes(self, m, sigma):
        par = ck.GaussianPcaParams(m, sigma)
        grid = ck.default_gaussian_grid(par, 129)
        reports = ck.quadrature_check_conditions(
            ck.gaussian_kernel_density(par), ck.gaussian_invariant_hzmc(par), grid)
        for rep in reports:
            assert rep.passed, rep

    def test_widened_up_kernel_breaks_factorization(self, gauss31):
        hz = ck.gaussian_invariant_hzmc(gauss31)
        ar = ck.ar1_parameters(gauss31)
        sp = np.sqrt(ar.innovation_var) * 1.3
        bad_u = MarkovKernel(
            density=lambda x, y: np.exp(-0.5 * ((np.asarray(y) - ar.phi * np.asarray(x)) / sp) ** 2)
            / (sp * np.sqrt(2 * np.pi)),
            sampler=lambda x, u: ar.phi * np.asarray(x) + sp * ndtri(u))
        spec = HzmcSpec(d=hz.d, u=bad_u, rho0=hz.rho0)
        grid = ck.default_gaussian_grid(gauss31, 129)
        rep1, rep2, _ = ck.quadrature_check_conditions(
            ck.gaussian_kernel_density(gauss31), spec, grid)
        assert not rep1.passed
        assert not rep2.passed

    def test_richardson_flags_coarse_grid(self, gauss31):
        grid = gauss_legendre_grid(8 * gauss31.stationary_std, 17)
        reports = ck.quadrature_check_conditions(
            ck.gaussian_kernel_density(gauss31), ck.gaussian_invariant_hzmc(gauss31),
            grid, richardson=True)
        assert any("grid too coarse" in r.notes for r in reports)

    def test_richardson_quiet_on_fine_grid(self, gauss31, gauss_grid):
        reports = ck.quadrature_check_conditions(
            ck.gaussian_kernel_density(gauss31), ck.gaussian_invariant_hzmc(gauss31),
            gauss_grid, richardson=True)
        assert all(r.notes == "" for r in reports)


class TestBetaFamily:
    def test_positivity_guards(self):
        with pytest.raises(ValueError):
            ck.BetaPcaParams(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ck.BetaPcaParams(1.0, 1.0, 1.0, -1.0)

    @pytest.mark.parametrize("a,b", [(-1.0, 2.0), (0.5, 3.5), (2.0, -1.0)])
    def test_rows_integrate_to_one(self, a, b):
        par = ck.BetaPcaParams(2.0, 1.5, 1.0, 1.0)
        kern = ck.beta_kernel_density(par)
        lo, hi = min(a, b) - par.m_shift, max(a, b) - par.m_shift
        x, w = np.polynomial.legendre.leggauss(400)
        c = (lo + hi) / 2 + (hi - lo) / 2 * x
        mass = float(np.sum(kern.density(a, b, c) * w) * (hi - lo) / 2)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_support_and_diagonal_convention(self):
        par = ck.BetaPcaParams(1.0, 1.0, 1.0, 1.0)
        kern = ck.beta_kernel_density(par)
        assert kern.density(0.0, 2.0, 1.5) == 0.0       # above b - m
        assert kern.density(0.0, 2.0, -1.5) == 0.0      # below a - m
        assert kern.density(0.0, 2.0, 0.0) == pytest.approx(0.5)
        assert kern.density(1.0, 1.0, 0.0) == 0.0       # coinciding neighbors

    def test_sampler_matches_beta_cdf(self):
        par = ck.BetaPcaParams(2.0, 3.0, 1.0, 1.0)
        kern = ck.beta_kernel_density(par)
        u = (np.arange(2000) + 0.5) / 2000
        draws = kern.sampler(np.zeros(2000), np.full(2000, 4.0), u)
        frac = (draws + par.m_shift) / 4.0
        assert np.abs(betainc(2.0, 3.0, np.sort(frac)) - u).max() < 1e-12

    def test_exponential_candidates(self):
        par = ck.BetaPcaParams(1.0, 1.0, 0.0, 1.0)
        d1, u1 = ck.beta_candidate_kernels(par)
        c = np.linspace(0.1, 5.0, 50)
        assert np.abs(d1.density(np.zeros(50), c) - np.exp(-c)).max() < 1e-12
        assert np.abs(u1.density(np.zeros(50), c) - np.exp(-c)).max() < 1e-12

    def test_down_up_composition_drifts(self):
        par = ck.BetaPcaParams(1.0, 1.0, 0.0, 1.0)
        d1, u1 = ck.beta_candidate_kernels(par)
        grid = ck.default_beta_grid(par)
        du = ck.compose_kernels(d1, u1, grid)
        i0 = int(np.argmin(np.abs(grid.points)))
        row = du[i0]
        mean = grid.integrate(row * grid.points) / grid.integrate(row)
        assert mean - grid.points[i0] == pytest.approx(par.drift_per_step, abs=5e-2)

    def test_candidates_pass_factorization_fail_stationarity(self):
        par = ck.BetaPcaParams(1.0, 1.0, 1.0, 1.0)
        kern = ck.beta_kernel_density(par)
        hz = ck.beta_candidate_hzmc(par)
        grid = ck.default_beta_grid(par, 129)
        rep1, rep2, rep3 = ck.quadrature_check_conditions(kern, hz, grid, tol=1e-5)
        assert rep1.passed and rep1.residual < 1e-5
        assert rep2.passed and rep2.residual < 1e-5
        assert not rep3.passed and rep3.residual > 0.1


class TestGridEtaSolve:
    def test_matches_closed_profiles(self, gauss31, gauss_grid):
        kern = ck.gaussian_kernel_density(gauss31)
        nu, eta = ck.grid_eta_solve(kern, gauss_grid)
        prof = ck.gaussian_closed_profiles(gauss31)
        nu_c = prof["nu"](gauss_grid.points)
        nu_c /= gauss_grid.integrate(nu_c)
        eta_c = prof["eta"](gauss_grid.points)
        eta_c /= gauss_grid.integrate(eta_c)
        assert np.abs(nu.vector - nu_c).max() < 1e-6
        assert np.abs(eta.vector - eta_c).max() < 1e-6
        assert np.all(nu.vector > 0) and np.all(eta.vector > 0)

    def test_eigenvalue_recorded_next_to_reference(self, gauss31, gauss_grid):
        # the reference expression is recorded for comparison only; the
        # observed eigenvalue is what the construction actually uses
        _, eta = ck.grid_eta_solve(ck.gaussian_kernel_density(gauss31), gauss_grid)
        ref = ck.gaussian_eta_eigenvalue_reference(gauss31)
        assert np.isfinite(eta.eigenvalue) and eta.eigenvalue > 0
        assert np.isfinite(ref) and ref > 0

    def test_refinement_shrinks_error_fourfold(self, gauss31):
        kern = ck.gaussian_kernel_density(gauss31)
        prof = ck.gaussian_closed_profiles(gauss31)
        errs = []
        for n in (9, 17, 33):
            g = trapezoid_grid(8 * gauss31.stationary_std, n)
            _, eta = ck.grid_eta_solve(kern, g)
            target = prof["eta"](g.points)
            target /= g.integrate(target)
            errs.append(np.abs(eta.vector - target).max())
        assert errs[0] / errs[1] >= 4.0
        assert errs[1] / errs[2] >= 4.0


class TestDiscretizedFiniteRoute:
    def test_row_masses_at_every_grid_pair(self, gauss31):
        # child values of corner pairs reach past the window, so the child
        # axis integrates over a grid wide enough to hold every row
        kern = ck.gaussian_kernel_density(gauss31)
        grid = ck.default_gaussian_grid(gauss31, 97)
        p = grid.points
        reach = 2 * grid.halfwidth / abs(gauss31.m) + 9 * gauss31.sigma
        child = gauss_legendre_grid(reach, 129)
        c, w = child.points, child.weights
        mass = (kern.density(p[:, None, None], p[None, :, None], c[None, None, :])
                * w[None, None, :]).sum(axis=2)
        assert np.abs(mass - 1.0).max() < 1e-10

    def test_matches_closed_form_kernels(self, gauss31):
        # discretize the kernel to a (large) finite alphabet and run the
        # finite construction; rows must reproduce the closed-form step
        # densities at the nodes
        from zigzag_pca import finite_solver as fs
        from zigzag_pca.core_types import FiniteAlphabet, TransitionTensor, normalize_rows

        grid = gauss_legendre_grid(10.0, 257)
        p, w = grid.points, grid.weights
        kern = ck.gaussian_kernel_density(gauss31)
        raw = kern.density(p[:, None, None], p[None, :, None], p[None, None, :]) * w
        t, _ = normalize_rows(raw)
        tens = TransitionTensor(FiniteAlphabet(257), t)
        assert tens.mu_positive

        i0 = int(np.argmin(np.abs(p)))
        triple = fs.BaseTriple(i0, i0, i0)
        nu = fs.solve_nu(tens).vector
        eta = fs.solve_eta(tens, triple, nu).vector
        d_mat, u_mat = fs.build_hzmc_kernels(tens, triple, eta)

        hz = ck.gaussian_invariant_hzmc(gauss31)
        closed_d = hz.d.density(p[:, None], p[None, :]) * w
        closed_d /= closed_d.sum(axis=1, keepdims=True)
        assert np.abs(d_mat - closed_d).max() < 1e-6
        closed_u = hz.u.density(p[:, None], p[None, :]) * w
        closed_u /= closed_u.sum(axis=1, keepdims=True)
        assert np.abs(u_mat - closed_u).max() < 1e-6


class TestMuEquivalence:
    def test_diagonal_override_is_equivalent(self, gauss31):
        grid = ck.default_gaussian_grid(gauss31, 97)
        rep = ck.mu_equivalence_probe(ck.gaussian_kernel_density(gauss31),
                                      ck.gaussian_diag_kernel_density(gauss31), grid)
        assert rep.passed
        assert rep.witnesses["off_band_pairs"] == 0
        assert rep.witnesses["differing_pairs"] == 97  # exactly the diagonal

    def test_kernel_against_itself(self, gauss31):
        grid = ck.default_gaussian_grid(gauss31, 97)
        kern = ck.gaussian_kernel_density(gauss31)
        rep = ck.mu_equivalence_probe(kern, kern, grid)
        assert rep.passed
        assert rep.witnesses["differing_pairs"] == 0

    def test_different_means_not_equivalent(self, gauss31):
        grid = ck.default_gaussian_grid(gauss31, 97)
        rep = ck.mu_equivalence_probe(
            ck.gaussian_kernel_density(gauss31),
            ck.gaussian_kernel_density(ck.GaussianPcaParams(4.0, 1.0)), grid)
        assert not rep.passed
        assert rep.residual > 1.0

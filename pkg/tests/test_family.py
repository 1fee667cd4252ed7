import numpy as np
import pytest

from adagpca.family import (
    FamilyError,
    adaptive_gpca,
    family_grid,
    family_inner_product,
    fit_r,
    profile_loglik,
    profile_sigma2,
    rotated_square_sums,
)
from adagpca.gpca import align_signs, gpca
from adagpca.kernels import kernel_from_matrix
from adagpca.linalg import sym_eigen


def random_kernel(rng, p, ridge=0.5):
    b = rng.standard_normal((p, p))
    return kernel_from_matrix(b @ b.T + ridge * np.eye(p))


def direct_loglik(x, q, sigma1_sq, sigma2_sq):
    """Literal evaluation of the marginal log likelihood (constant dropped):
    -(n/2) log|Sigma| - (1/2) sum_i x_i^T Sigma^-1 x_i."""
    n = x.shape[0]
    cov = sigma1_sq * q + sigma2_sq * np.eye(q.shape[0])
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    solved = np.linalg.solve(cov, x.T)
    quad = float((x.T * solved).sum())
    return -(n / 2.0) * logdet - 0.5 * quad


class TestFamilyInnerProduct:
    def test_r_zero_reproduces_kernel(self):
        rng = np.random.default_rng(0)
        kern = random_kernel(rng, 6)
        point = family_inner_product(kern.eigen, 0.0)
        assert np.abs(point.matrix() - kern.matrix).max() < 1e-9

    def test_r_one_flattens_spectrum(self):
        rng = np.random.default_rng(1)
        kern = random_kernel(rng, 5)
        point = family_inner_product(kern.eigen, 1.0)
        assert np.allclose(point.spectral_weights, np.ones(5))
        assert np.abs(point.matrix() - np.eye(5)).max() < 1e-9

    def test_half_matches_matrix_inverse_oracle(self):
        # lam = (3, 1), r = 1/2: weights proportional to eigenvalues of
        # (Q^-1 + I)^-1 with unit scalings
        q = np.diag([3.0, 1.0])
        eig = sym_eigen(q)
        point = family_inner_product(eig, 0.5)
        oracle = np.linalg.inv(np.linalg.inv(q) + np.eye(2))
        ow = np.sort(np.linalg.eigvalsh(oracle))[::-1]
        ratio = point.spectral_weights / ow
        assert np.abs(ratio - ratio[0]).max() < 1e-12
        raw = np.array([3.0 / (0.5 * 3.0 + 0.5), 1.0])
        expected = raw * (2 / raw.sum())
        assert np.allclose(point.spectral_weights, expected)

    def test_weights_sum_to_p(self):
        rng = np.random.default_rng(3)
        kern = random_kernel(rng, 9)
        for r in (0.0, 0.2, 0.7, 1.0):
            point = family_inner_product(kern.eigen, r)
            assert point.spectral_weights.sum() == pytest.approx(9.0)

    def test_zero_eigenvalue_stays_zero_at_r_one(self):
        eig = sym_eigen(np.diag([2.0, 0.0]))
        point = family_inner_product(eig, 1.0)
        assert point.spectral_weights[1] == 0.0
        assert np.all(np.isfinite(point.spectral_weights))

    def test_r_out_of_range(self):
        rng = np.random.default_rng(4)
        kern = random_kernel(rng, 3)
        with pytest.raises(FamilyError, match=r"\[0, 1\]"):
            family_inner_product(kern.eigen, 1.5)

    def test_weights_monotone_in_eigenvalue(self):
        rng = np.random.default_rng(55)
        kern = random_kernel(rng, 10)
        lam = kern.eigen.values  # descending
        for r in (0.0, 0.3, 0.8, 1.0):
            w = family_inner_product(kern.eigen, r).spectral_weights
            assert np.all(np.diff(w) <= 1e-12)  # nonincreasing along descending lam

    def test_monotone_interpolation_toward_flat(self):
        rng = np.random.default_rng(5)
        kern = random_kernel(rng, 8)
        lam = kern.eigen.values
        smallest_pos = lam[lam > 0].min()
        ratios = []
        for r in np.linspace(0, 1, 21):
            point = family_inner_product(kern.eigen, r)
            w = point.spectral_weights
            ratios.append(w.max() / w[lam >= smallest_pos].min())
        assert np.all(np.diff(ratios) <= 1e-9)


class TestProfile:
    def test_flat_spectrum_sigma_independent_of_r(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((10, 4))
        lam = np.ones(4)
        t = (x**2).sum(axis=0)
        vals = [profile_sigma2(t, lam, r, 10) for r in (0.0, 0.3, 1.0)]
        assert np.ptp(vals) < 1e-12
        assert vals[0] == pytest.approx((x**2).mean())

    def test_direct_substitution(self):
        # one variable: lam = 2, r = 1, t = 6, n = 3 -> 6 / (3 * 1 * 2) = 1
        assert profile_sigma2([6.0], [2.0], 1.0, 3) == pytest.approx(1.0)

    def test_matches_two_parameter_grid_search(self):
        rng = np.random.default_rng(7)
        p, n = 5, 8
        kern = random_kernel(rng, p)
        x = rng.standard_normal((n, p))
        t = rotated_square_sums(x, kern.eigen)
        lam = kern.eigen.values
        for r in (0.15, 0.5, 0.9):
            closed = profile_sigma2(t, lam, r, n)
            grid = np.linspace(0.25 * closed, 4.0 * closed, 4001)
            vals = [
                direct_loglik(x, kern.matrix, r * s2, (1 - r) * s2) for s2 in grid
            ]
            best = grid[int(np.argmax(vals))]
            step = grid[1] - grid[0]
            assert abs(best - closed) <= step * 1.5

    def test_degenerate_data_rejected(self):
        with pytest.raises(FamilyError, match="degenerate"):
            profile_sigma2(np.zeros(3), np.ones(3), 0.5, 4)

    def test_loglik_flat_when_kernel_identity(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((6, 5))
        t = (x**2).sum(axis=0)
        lam = np.ones(5)
        vals = [profile_loglik(t, lam, r, 6) for r in np.linspace(0, 1, 11)]
        assert np.ptp(vals) < 1e-10

    def test_loglik_scalar_case(self):
        # n = 1, p = 1, lam = 1, x = 2: sigma2* = 4, ll = -log(4)/2 - 1/2
        ll = profile_loglik([4.0], [1.0], 0.3, 1)
        assert ll == pytest.approx(-0.5 * np.log(4.0) - 0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_loglik_matches_direct_evaluation(self, seed):
        rng = np.random.default_rng(100 + seed)
        p = int(rng.integers(3, 8))
        n = int(rng.integers(4, 12))
        kern = random_kernel(rng, p)
        x = rng.standard_normal((n, p))
        t = rotated_square_sums(x, kern.eigen)
        lam = kern.eigen.values
        for r in rng.uniform(0.0, 1.0, 10):
            s2 = profile_sigma2(t, lam, r, n)
            expected = direct_loglik(x, kern.matrix, r * s2, (1 - r) * s2)
            assert abs(profile_loglik(t, lam, r, n) - expected) < 1e-10


class TestFitR:
    def test_spherical_data_drives_r_to_zero(self):
        rng = np.random.default_rng(9)
        p, n = 30, 400
        kern = random_kernel(rng, p)
        x = rng.standard_normal((n, p))
        xc = x - x.mean(axis=0)
        fit = fit_r(xc, kern)
        assert fit.r_hat < 0.05

    def test_kernel_covariance_drives_r_to_one(self):
        rng = np.random.default_rng(10)
        p, n = 20, 600
        kern = random_kernel(rng, p)
        root = (kern.eigen.vectors * np.sqrt(kern.eigen.values)) @ kern.eigen.vectors.T
        x = rng.standard_normal((n, p)) @ root
        fit = fit_r(x - x.mean(axis=0), kern)
        assert fit.r_hat > 0.95

    def test_flat_profile_tie_breaks_to_one(self):
        rng = np.random.default_rng(11)
        kern = kernel_from_matrix(np.eye(6))
        x = rng.standard_normal((9, 6))
        fit = fit_r(x - x.mean(axis=0), kern)
        assert fit.r_hat == 1.0

    def test_variance_split_consistent(self):
        rng = np.random.default_rng(12)
        kern = random_kernel(rng, 7)
        x = rng.standard_normal((15, 7))
        fit = fit_r(x - x.mean(axis=0), kern)
        assert fit.signal_var == pytest.approx(fit.r_hat * fit.sigma2_hat)
        assert fit.noise_var == pytest.approx((1 - fit.r_hat) * fit.sigma2_hat)
        assert len(fit.profile_trace) == 201

    def test_refinement_matches_fine_brute_grid(self):
        rng = np.random.default_rng(13)
        p, n = 12, 40
        kern = random_kernel(rng, p)
        root = (kern.eigen.vectors * np.sqrt(0.5 * kern.eigen.values + 0.5)) @ kern.eigen.vectors.T
        x = rng.standard_normal((n, p)) @ root
        xc = x - x.mean(axis=0)
        fit = fit_r(xc, kern)
        t = rotated_square_sums(xc, kern.eigen)
        grid = np.arange(0.0, 1.0 + 1e-12, 1e-3)
        vals = [profile_loglik(t, kern.eigen.values, r, n) for r in grid]
        brute = grid[int(np.argmax(vals))]
        assert abs(fit.r_hat - brute) <= 2e-3


class TestAdaptive:
    def test_identity_kernel_forced_pca(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((8, 6))
        kern = kernel_from_matrix(np.eye(6))
        res = adaptive_gpca(x, kern, k=3, r_override=1.0)
        xc = x - x.mean(axis=0)
        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        for i in range(3):
            got = res.ordination.row_scores[:, i]
            assert min(np.abs(got - u[:, i]).max(), np.abs(got + u[:, i]).max()) < 1e-9

    @pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
    def test_posterior_triple_equivalence(self, r):
        # gpca(X S, S^-1, I) must agree with the pipeline's gpca(X, S, I):
        # same scores up to sign, axes relate through multiplication by S.
        rng = np.random.default_rng(int(r * 100))
        n, p, k = 6, 9, 3
        kern = random_kernel(rng, p)
        x = rng.standard_normal((n, p))
        res = adaptive_gpca(x, kern, k=k, r_override=r)
        s = res.point.matrix()
        s_inv = np.linalg.inv(s)
        xc = x - x.mean(axis=0)
        other = gpca(xc @ s, s_inv, None, k)
        flips = align_signs(res.ordination.row_scores, other.row_scores)
        assert np.abs(res.ordination.row_scores - other.row_scores * flips).max() < 1e-8
        transformed = s @ res.ordination.axes
        assert np.abs(transformed - other.axes * flips).max() < 1e-8 * max(
            1.0, np.abs(transformed).max()
        )

    def test_variable_scores_are_smoothed_axes(self):
        rng = np.random.default_rng(15)
        kern = random_kernel(rng, 7)
        x = rng.standard_normal((9, 7))
        res = adaptive_gpca(x, kern, k=2)
        expected = res.point.matrix() @ res.ordination.axes
        assert np.abs(res.variable_scores - expected).max() < 1e-10 * max(
            1.0, np.abs(expected).max()
        )

    def test_ordination_invariants_under_smoothed_metric(self):
        rng = np.random.default_rng(16)
        kern = random_kernel(rng, 8)
        x = rng.standard_normal((10, 8))
        res = adaptive_gpca(x, kern, k=3)
        s = res.point.matrix()
        gram = res.ordination.axes.T @ s @ res.ordination.axes
        assert np.abs(gram - np.eye(3)).max() < 1e-8
        gram_u = res.ordination.row_scores.T @ res.ordination.row_scores
        assert np.abs(gram_u - np.eye(3)).max() < 1e-8

    def test_column_mismatch_rejected(self):
        rng = np.random.default_rng(17)
        kern = random_kernel(rng, 5)
        with pytest.raises(FamilyError, match="variables"):
            adaptive_gpca(rng.standard_normal((4, 6)), kern, k=1)

    def test_override_out_of_range(self):
        rng = np.random.default_rng(18)
        kern = random_kernel(rng, 4)
        with pytest.raises(FamilyError, match=r"\[0, 1\]"):
            adaptive_gpca(rng.standard_normal((5, 4)), kern, k=1, r_override=-0.1)

    def test_model_draws_recover_r(self):
        # moderate-scale sanity check; the acceptance suite runs the full one
        rng = np.random.default_rng(19)
        p, n, true_r = 30, 300, 0.6
        kern = random_kernel(rng, p)
        lam = kern.eigen.values
        root = (kern.eigen.vectors * np.sqrt(true_r * lam + (1 - true_r))) @ kern.eigen.vectors.T
        hats = []
        for _ in range(5):
            x = rng.standard_normal((n, p)) @ root
            hats.append(fit_r(x - x.mean(axis=0), kern).r_hat)
        assert abs(np.mean(hats) - true_r) < 0.1


class TestFamilyGrid:
    def test_endpoints_match_named_analyses(self):
        rng = np.random.default_rng(20)
        p, n = 10, 12
        kern = random_kernel(rng, p)
        x = rng.standard_normal((n, p))
        xc = x - x.mean(axis=0)
        members = family_grid(x, kern, [0.0, 1.0], k=2)

        dpcoa_like = gpca(xc, kern.matrix, None, 2)
        for i in range(2):
            c = np.corrcoef(members[0].ordination.row_scores[:, i], dpcoa_like.row_scores[:, i])[0, 1]
            assert abs(c) > 1 - 1e-10

        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        for i in range(2):
            c = np.corrcoef(members[1].ordination.row_scores[:, i], u[:, i])[0, 1]
            assert abs(c) > 1 - 1e-10

    def test_consecutive_axes_aligned(self):
        rng = np.random.default_rng(21)
        kern = random_kernel(rng, 9)
        x = rng.standard_normal((11, 9))
        members = family_grid(x, kern, list(np.linspace(0, 1, 11)), k=3)
        for prev, cur in zip(members, members[1:]):
            for i in range(3):
                assert prev.ordination.axes[:, i] @ cur.ordination.axes[:, i] >= 0

    def test_grid_matches_per_point_fit(self):
        rng = np.random.default_rng(22)
        p, n = 20, 10
        kern = random_kernel(rng, p)
        x = rng.standard_normal((n, p))
        rs = list(np.linspace(0, 1, 9))
        members = family_grid(x, kern, rs, k=2)
        for r, member in zip(rs, members):
            solo = adaptive_gpca(x, kern, k=2, r_override=r)
            for i in range(2):
                a = member.ordination.row_coordinates[:, i]
                b = solo.ordination.row_coordinates[:, i]
                assert min(np.abs(a - b).max(), np.abs(a + b).max()) < 1e-10
            assert np.abs(member.ordination.eigenvalues - solo.ordination.eigenvalues).max() < 1e-10

    def test_empty_grid_rejected(self):
        rng = np.random.default_rng(23)
        kern = random_kernel(rng, 4)
        with pytest.raises(FamilyError, match="nonempty"):
            family_grid(rng.standard_normal((5, 4)), kern, [], k=1)

    def test_unsorted_grid_rejected(self):
        rng = np.random.default_rng(24)
        kern = random_kernel(rng, 4)
        with pytest.raises(FamilyError, match="sorted"):
            family_grid(rng.standard_normal((5, 4)), kern, [0.5, 0.2], k=1)

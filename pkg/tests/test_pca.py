import numpy as np
import pytest

from conftest import std_panel
from riskfactors.panel import PanelError
from riskfactors.pca import (
    PcaModel,
    Verdict,
    classify_categories,
    factor_correlations,
    fit_pca,
    fit_pca_dual,
    kaiser_guttman,
    participation_ratio,
    pr_group,
    reconstruct,
)
from riskfactors.synthetic import (
    block_correlation,
    equicorrelated,
    exact_correlation_data,
)


def model_from_loadings(loadings, eigenvalues, n=10):
    """Model with prescribed loadings/eigenvalues, for diagnostics that do
    not touch the scores."""
    loadings = np.asarray(loadings, dtype=np.float64)
    d = loadings.shape[0]
    labels = tuple(f"X{j + 1}" for j in range(d))
    return PcaModel(labels, loadings, np.asarray(eigenvalues, dtype=np.float64),
                    np.zeros((n, d)), np.zeros(d), np.ones(d))


class TestFitPca:
    def test_identity_correlation(self, rng):
        data = exact_correlation_data(rng, 200, np.eye(2))
        model = fit_pca(std_panel(data))
        np.testing.assert_allclose(model.eigenvalues, [1.0, 1.0], atol=1e-12)

    def test_perfectly_correlated_pair(self, rng):
        x = rng.standard_normal(100)
        model = fit_pca(std_panel(np.column_stack([x, x])))
        np.testing.assert_allclose(model.eigenvalues, [2.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(np.abs(model.loadings[:, 0]),
                                   [1 / np.sqrt(2)] * 2, atol=1e-12)
        assert model.loadings[0, 0] > 0  # sign convention

    def test_equicorrelated_spectrum(self, rng):
        # analytic spectrum of a d=3, rho=0.5 correlation: 1+(d-1)rho, 1-rho
        data = equicorrelated(rng, 300, 3, 0.5)
        model = fit_pca(std_panel(data))
        np.testing.assert_allclose(model.eigenvalues, [2.0, 0.5, 0.5], atol=1e-10)

    def test_invariants_on_random_panels(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n, d = int(rng.integers(40, 120)), int(rng.integers(3, 9))
            model = fit_pca(std_panel(rng.standard_normal((n, d))))
            gram = model.loadings.T @ model.loadings
            assert np.max(np.abs(gram - np.eye(d))) <= 1e-8
            # variance accounting and score properties
            assert abs(model.eigenvalues.sum() - d) <= 1e-6 * d
            score_var = model.scores.var(axis=0, ddof=1)
            np.testing.assert_allclose(score_var, model.eigenvalues,
                                       rtol=1e-6, atol=1e-12)
            corr = np.corrcoef(model.scores, rowvar=False)
            off = corr - np.diag(np.diag(corr))
            assert np.max(np.abs(off)) <= 1e-6
            # sign convention: largest-magnitude entry positive
            for k in range(d):
                j = np.argmax(np.abs(model.loadings[:, k]))
                assert model.loadings[j, k] > 0
            # eigenvalues descending
            assert np.all(np.diff(model.eigenvalues) <= 1e-12)

    def test_scores_match_projection(self, rng):
        std = std_panel(rng.standard_normal((50, 4)))
        model = fit_pca(std)
        np.testing.assert_array_equal(model.scores, std.values @ model.loadings)

    def test_rejects_tiny_panel(self, rng):
        with pytest.raises(PanelError):
            fit_pca(std_panel(rng.standard_normal((30, 2))).select(["X1"]))


class TestDuality:
    def test_random_panel_agreement(self, rng):
        std = std_panel(rng.standard_normal((50, 10)))
        model, report = fit_pca_dual(std)
        assert report.eigenvalue_max_rel_error <= 1e-8
        assert report.loading_max_abs_error <= 1e-8
        assert report.scores_max_abs_error <= 1e-8

    def test_rank_one_panel(self, rng):
        x = rng.standard_normal(40)
        scale = np.array([1.0, -2.0, 0.5])
        std = std_panel(np.outer(x, scale))
        X = std.values
        n = X.shape[0]
        l_feat = np.linalg.eigvalsh(X.T @ X)
        l_obs = np.linalg.eigvalsh(X @ X.T)
        cutoff = max(l_feat.max(), l_obs.max()) * 1e-10
        assert np.sum(l_feat > cutoff) == 1
        assert np.sum(l_obs > cutoff) == 1
        _, report = fit_pca_dual(std)
        assert report.eigenvalue_max_rel_error <= 1e-8

    def test_square_panel_spectra_coincide(self, rng):
        std = std_panel(rng.standard_normal((10, 10)))
        X = std.values
        l_feat = np.sort(np.linalg.eigvalsh(X.T @ X))
        l_obs = np.sort(np.linalg.eigvalsh(X @ X.T))
        np.testing.assert_allclose(l_feat, l_obs, atol=1e-8 * l_feat.max())
        _, report = fit_pca_dual(std)
        assert report.eigenvalue_max_rel_error <= 1e-8

    def test_guard_on_large_n(self, rng):
        std = std_panel(rng.standard_normal((5001, 2)))
        with pytest.raises(PanelError):
            fit_pca_dual(std)


class TestReconstruct:
    def test_full_rank_is_exact(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((60, 5))))
        _, mse = reconstruct(model, 5)
        assert mse <= 1e-10

    def test_k_zero_rejected(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((30, 3))))
        with pytest.raises(ValueError):
            reconstruct(model, 0)
        with pytest.raises(ValueError):
            reconstruct(model, 4)

    def test_rank_one_needs_one_pc(self, rng):
        x = rng.standard_normal(50)
        model = fit_pca(std_panel(np.outer(x, [1.0, 2.0, -1.0])))
        _, mse = reconstruct(model, 1)
        assert mse <= 1e-10

    def test_monotone_in_k(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((80, 6))))
        mses = [reconstruct(model, k)[1] for k in range(1, 7)]
        assert all(a >= b - 1e-12 for a, b in zip(mses, mses[1:]))


class TestFactorCorrelations:
    def test_perfect_pair(self, rng):
        x = rng.standard_normal(100)
        model = fit_pca(std_panel(np.column_stack([x, x])))
        corr = factor_correlations(model)
        np.testing.assert_allclose(corr[:, 0], [1.0, 1.0], atol=1e-10)

    def test_bounded_by_one(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((70, 6))))
        assert np.max(np.abs(factor_correlations(model))) <= 1 + 1e-8

    def test_matches_sample_correlation(self, rng):
        std = std_panel(rng.standard_normal((200, 5)))
        model = fit_pca(std)
        corr = factor_correlations(model)
        for j in range(5):
            for i in range(5):
                sample = np.corrcoef(std.values[:, j], model.scores[:, i])[0, 1]
                assert abs(corr[j, i] - sample) <= 1e-6

    def test_absolute_flag(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((50, 4))))
        np.testing.assert_array_equal(factor_correlations(model, absolute=True),
                                      np.abs(factor_correlations(model)))


class TestKaiserGuttman:
    def test_counting_rule(self):
        model = model_from_loadings(np.eye(3), [1.5, 0.9, 0.6])
        # shares 0.5, 0.3, 0.2; only 0.5 > 1/3
        assert kaiser_guttman(model) == 1

    def test_equal_eigenvalues_strict(self):
        model = model_from_loadings(np.eye(4), [1.0, 1.0, 1.0, 1.0])
        assert kaiser_guttman(model) == 0

    def test_planted_blocks(self, rng):
        target = block_correlation([3, 3, 3, 3], rho_within=0.9)
        data = exact_correlation_data(rng, 400, target)
        model = fit_pca(std_panel(data))
        assert kaiser_guttman(model) == 4


class TestParticipationRatio:
    def test_equal_contributions(self, rng):
        # the first PC of an equicorrelated panel weights all columns equally
        data = equicorrelated(rng, 300, 5, 0.6)
        model = fit_pca(std_panel(data))
        ipr, pr = participation_ratio(model, 1)
        np.testing.assert_allclose(ipr, 1 / 5, atol=1e-9)
        np.testing.assert_allclose(pr, 5.0, atol=1e-6)

    def test_single_entry_vector(self):
        model = model_from_loadings(np.eye(3), [1.0, 1.0, 1.0])
        ipr, pr = participation_ratio(model, 1)
        assert (ipr, pr) == (1.0, 1.0)

    def test_two_entry_vector(self):
        phi = np.array([[np.sqrt(0.5), 0, np.sqrt(0.5)],
                        [np.sqrt(0.5), 0, -np.sqrt(0.5)],
                        [0, 1.0, 0]]).T
        model = model_from_loadings(phi.T, [2.0, 0.7, 0.3])
        ipr, pr = participation_ratio(model, 1)
        np.testing.assert_allclose([ipr, pr], [0.5, 2.0])

    def test_bounds_on_random_panels(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((60, 7))))
        for k in range(1, 8):
            _, pr = participation_ratio(model, k)
            assert 1 - 1e-9 <= pr <= 7 + 1e-9

    def test_index_validation(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((30, 3))))
        with pytest.raises(ValueError):
            participation_ratio(model, 0)


def orthonormal_from_first(w):
    """Orthonormal matrix whose first column is the unit vector w."""
    d = len(w)
    basis = [np.asarray(w, dtype=np.float64)]
    for j in range(d):
        v = np.eye(d)[j]
        for u in basis:
            v = v - (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-10:
            basis.append(v / norm)
        if len(basis) == d:
            break
    return np.column_stack(basis)


class TestPrGroup:
    def test_top_strengths_selected(self):
        # first-PC weights with squared values (0.6, 0.3, 0.1): PR = 2.17,
        # group size 2, strengths strictly ordered X1 > X2 > X3
        w = np.sqrt([0.6, 0.3, 0.1])
        model = model_from_loadings(orthonormal_from_first(w), [1.5, 1.0, 0.5])
        assert pr_group(model, 1) == ("X1", "X2")

    def test_ties_break_by_column_index(self):
        # equal weights on the first two columns: both correlations tie
        w = np.array([np.sqrt(0.5), np.sqrt(0.5), 0.0])
        model = model_from_loadings(orthonormal_from_first(w), [1.62, 1.0, 0.38])
        _, pr = participation_ratio(model, 1)
        np.testing.assert_allclose(pr, 2.0, atol=1e-12)
        assert pr_group(model, 1) == ("X1", "X2")

    def test_group_of_everything(self, rng):
        data = equicorrelated(rng, 200, 4, 0.7)
        model = fit_pca(std_panel(data))
        assert pr_group(model, 1) == model.labels

    def test_half_rounds_up(self):
        # weights solved so PR is exactly 2.5; group size rounds to 3
        from scipy.optimize import brentq

        def pr_of(t):
            w = np.array([1.0, 1.0, t])
            w = w / np.linalg.norm(w)
            return 1.0 / np.sum(w ** 4)

        t = brentq(lambda t: pr_of(t) - 2.5, 0.01, 0.999)
        w = np.array([1.0, 1.0, t])
        w /= np.linalg.norm(w)
        model = model_from_loadings(orthonormal_from_first(w), [1.5, 1.0, 0.5])
        _, pr = participation_ratio(model, 1)
        np.testing.assert_allclose(pr, 2.5, atol=1e-9)
        assert len(pr_group(model, 1)) == 3

    def test_sign_flip_invariance(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((80, 5))))
        flipped = PcaModel(model.labels, model.loadings * np.array([1, -1, 1, -1, 1]),
                           model.eigenvalues, model.scores, model.mean, model.std)
        assert kaiser_guttman(model) == kaiser_guttman(flipped)
        for k in range(1, 6):
            assert participation_ratio(model, k) == participation_ratio(flipped, k)
            assert pr_group(model, k) == pr_group(flipped, k)
        np.testing.assert_array_equal(
            factor_correlations(model, absolute=True),
            factor_correlations(flipped, absolute=True))


class TestClassifyCategories:
    def make_model(self, in_group, total):
        """Model whose PC1 PR group is exactly the first ``in_group`` labels
        of a ``total``-column panel."""
        w = np.zeros(total)
        w[:in_group] = 1.0 / np.sqrt(in_group)
        lam = np.linspace(2.0, 0.5, total)
        return model_from_loadings(orthonormal_from_first(w), lam)

    def test_strong_in(self):
        model = self.make_model(2, 4)
        cats = {"X1": "A", "X2": "A", "X3": "B", "X4": "B"}
        verdicts = classify_categories(model, 1, cats)
        assert verdicts["A"] is Verdict.STRONG_IN
        assert verdicts["B"] is Verdict.STRONG_OUT

    def test_weak_in_majority(self):
        model = self.make_model(2, 4)
        cats = {"X1": "A", "X2": "A", "X3": "A", "X4": "B"}
        # A has 2 of 3 members in the group: 2 > 1.5
        assert classify_categories(model, 1, cats)["A"] is Verdict.WEAK_IN

    def test_weak_out_at_half(self):
        model = self.make_model(1, 4)
        cats = {"X1": "A", "X2": "A", "X3": "B", "X4": "B"}
        # A has 1 of 2 members in the group: half or less
        assert classify_categories(model, 1, cats)["A"] is Verdict.WEAK_OUT

    def test_every_category_receives_one_verdict(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((60, 6))))
        cats = {lab: f"G{j % 3}" for j, lab in enumerate(model.labels)}
        verdicts = classify_categories(model, 2, cats)
        assert sorted(verdicts) == ["G0", "G1", "G2"]

    def test_label_without_category(self, rng):
        model = fit_pca(std_panel(rng.standard_normal((30, 3))))
        with pytest.raises(PanelError):
            classify_categories(model, 1, {"X1": "A", "X2": "A"})

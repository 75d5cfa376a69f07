import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpopt.acquisition import (
    AcquisitionSpec,
    MarginalizedAcquisition,
    ModelAcquisition,
    expected_improvement,
    fit_gumbel,
    hvpoi,
    hvpoi_probability,
    joint_acquisition,
    lower_confidence_bound,
    marginalized_acquisition,
    max_value_log_cdf,
    mes,
    mes_terms,
    probability_of_feasibility,
    probability_of_improvement,
    sample_min_values,
)
from gpopt.domain import Domain
from gpopt.errors import ConfigurationError, DimensionError, SamplingError
from gpopt.gp import fit_theta
from gpopt.pareto import cell_decomposition, exclusive_hypervolume, pareto_front
from oracles import (
    acquisition_gradient_case,
    central_difference,
    mc_expected_improvement,
    mc_nondominated_probability,
    mc_probability_of_improvement,
    normal_cdf,
    random_gp_instance,
    relative_error,
)

PHI0 = 1.0 / math.sqrt(2 * math.pi)
TWO = pareto_front([[1.0, 2.0], [2.0, 1.0]])
TWO_CELLS = cell_decomposition(TWO, [3.0, 3.0], [0.0, 0.0])


class TestAcquisitionSpec:
    def test_defaults_and_case(self):
        spec = AcquisitionSpec("ei")
        assert spec.kind == "EI"
        assert AcquisitionSpec("hvpoi").kind == "HvPoI"
        assert AcquisitionSpec().beta == 2.0

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            AcquisitionSpec("ucb")

    def test_only_relevant_keys(self):
        assert "beta" in AcquisitionSpec("LCB").to_dict()
        assert "beta" not in AcquisitionSpec("EI").to_dict()
        assert "mes_samples" in AcquisitionSpec("MES").to_dict()
        assert "reference" in AcquisitionSpec("HvPoI", reference=(1.0, 1.0)).to_dict()

    @pytest.mark.parametrize("kind", ["EI", "PoI", "LCB", "MES", "HvPoI", "PoF"])
    def test_dict_round_trip(self, kind):
        spec = AcquisitionSpec(kind, beta=3.0, reference=(2.0, 2.0) if kind == "HvPoI" else None)
        assert AcquisitionSpec.from_dict(spec.to_dict()).to_dict() == spec.to_dict()


class TestClosedForms:
    def test_ei_examples(self):
        assert expected_improvement(-1.0, 0.0, 0.0) == pytest.approx(1.0)
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(PHI0, abs=1e-15)
        assert PHI0 == pytest.approx(0.398942, abs=1e-6)
        assert expected_improvement(10.0, 1.0, 0.0) < 1e-20

    def test_poi_examples(self):
        assert probability_of_improvement(0.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-15)
        assert probability_of_improvement(-1.0, 1.0, 0.0) == pytest.approx(0.841345, abs=1e-6)
        assert probability_of_improvement(1.0, 0.0, 0.0) == 0.0

    def test_lcb_examples(self):
        assert lower_confidence_bound(1.7, 4.0, 0.0) == pytest.approx(-1.7)
        assert lower_confidence_bound(1.0, 4.0, 2.0) == pytest.approx(3.0)
        assert lower_confidence_bound(1.0, 9.0, 2.0) > lower_confidence_bound(1.0, 4.0, 2.0)

    def test_pof_examples(self):
        assert probability_of_feasibility(0.3, 2.0, 0.3) == pytest.approx(0.5, abs=1e-15)
        assert probability_of_feasibility(-1.0, 1.0, 0.0) == pytest.approx(0.841345, abs=1e-6)
        assert probability_of_feasibility(0.0, 0.0, 0.0) == 1.0

    def test_ei_poi_against_monte_carlo(self, rng):
        for _ in range(5):
            mu, sigma, f_best = rng.normal(), rng.uniform(0.1, 2.0), rng.normal()
            assert abs(expected_improvement(mu, sigma**2, f_best) - mc_expected_improvement(mu, sigma, f_best, rng)) < 3e-3
            assert abs(
                probability_of_improvement(mu, sigma**2, f_best) - mc_probability_of_improvement(mu, sigma, f_best, rng)
            ) < 3e-3

    def test_ranges_random_inputs(self, rng):
        mu = rng.normal(scale=3, size=10_000)
        var = rng.exponential(size=10_000) * (rng.uniform(size=10_000) > 0.1)
        f = rng.normal(size=10_000)
        assert np.all(expected_improvement(mu, var, f) >= 0)
        poi = probability_of_improvement(mu, var, f)
        pof = probability_of_feasibility(mu, var, f)
        assert np.all((poi >= 0) & (poi <= 1))
        assert np.all((pof >= 0) & (pof <= 1))
        assert np.all(mes(mu, var, rng.normal(size=10)) >= 0)

    def test_small_sigma_continuity(self, rng):
        for _ in range(100):
            mu, f = rng.normal(), rng.normal()
            if abs(mu - f) < 1e-6:
                continue
            assert expected_improvement(mu, 1e-16, f) == pytest.approx(max(f - mu, 0.0), abs=1e-6)
            assert probability_of_improvement(mu, 1e-16, f) == pytest.approx(float(mu < f), abs=1e-6)
            assert probability_of_feasibility(mu, 1e-16, f) == pytest.approx(float(mu <= f), abs=1e-6)
            assert lower_confidence_bound(mu, 1e-16, 2.0) == pytest.approx(-mu, abs=1e-6)
            # formula side of the floor agrees with the limit side
            assert expected_improvement(mu, 1e-16, f) == pytest.approx(
                expected_improvement(mu, 1e-22, f), abs=1e-6
            )

    def test_pof_is_normal_cdf(self, rng):
        mu, sd, t = rng.normal(size=50), rng.uniform(0.1, 3, size=50), rng.normal(size=50)
        np.testing.assert_allclose(probability_of_feasibility(mu, sd**2, t), normal_cdf((t - mu) / sd), atol=1e-12, rtol=0)

    def test_translation_invariance_of_argmax(self, rng):
        mu = rng.normal(size=200)
        var = rng.uniform(0.01, 1, size=200)
        for c in (-7.0, 3.5, 1e3):
            assert np.argmax(expected_improvement(mu + c, var, -0.5 + c)) == np.argmax(expected_improvement(mu, var, -0.5))
            assert np.argmax(probability_of_improvement(mu + c, var, -0.5 + c)) == np.argmax(
                probability_of_improvement(mu, var, -0.5)
            )


class TestJoint:
    def test_product(self):
        assert joint_acquisition(0.4, [0.5]) == pytest.approx(0.2)
        assert joint_acquisition(0.4, [0.5, 0.0]) == 0.0
        assert joint_acquisition(0.4, []) == 0.4


class TestMES:
    def test_gamma_zero_is_log_two(self):
        assert abs(mes_terms(0.0) - math.log(2)) < 1e-12
        assert abs(mes(0.0, 1.0, [0.0])[()] - math.log(2)) < 1e-12

    def test_terms_vanish_for_large_gamma(self):
        assert mes_terms(40.0) < 1e-12

    @given(st.floats(-40, 40))
    @settings(max_examples=200, deadline=None)
    def test_terms_non_negative(self, gamma):
        assert mes_terms(gamma) >= 0

    def test_zero_variance_gives_zero(self):
        assert mes(0.3, 0.0, [1.0, 2.0]) == 0.0

    def test_bisection_median(self, rng):
        mu_g, sigma = rng.normal(size=50), rng.uniform(0.1, 1.0, size=50)
        fit = fit_gumbel(mu_g, sigma)
        assert abs(math.exp(max_value_log_cdf(fit.quantiles[0.5], mu_g, sigma)) - 0.5) < 1e-6

    def test_gumbel_reproduces_its_median(self, rng):
        fit = fit_gumbel(rng.normal(size=100), rng.uniform(0.1, 1.0, size=100))
        draws = fit.sample(100_000, rng)
        y50 = fit.quantiles[0.5]
        assert abs(np.mean(draws <= y50) - fit.cdf(y50)) < 0.01

    def test_degenerate_model(self):
        with pytest.raises(SamplingError):
            fit_gumbel(np.zeros(5), np.zeros(5))

    def test_sample_min_values_deterministic(self, rng):
        X, y, theta = random_gp_instance(rng, d_max=2)
        model = fit_theta(X, y, theta, "matern52")
        dom = Domain.unit(X.shape[1])
        a = sample_min_values(model, dom, K=10, grid_size=100, rng=3)
        b = sample_min_values(model, dom, K=10, grid_size=100, rng=3)
        assert a.shape == (10,)
        np.testing.assert_array_equal(a, b)


class TestHvPoI:
    def test_hand_example(self):
        value = hvpoi([0.5, 0.5], [1e-12, 1e-12], TWO, TWO_CELLS)
        assert value == pytest.approx(3.25, abs=1e-3)

    def test_dominated_candidate(self):
        assert hvpoi([2.5, 2.5], [1e-20, 1e-20], TWO, TWO_CELLS) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            hvpoi([0.5, 0.5, 0.5], [1.0, 1.0, 1.0], TWO, TWO_CELLS)

    def test_cell_volume_equals_exclusive_hypervolume(self, rng):
        P = rng.uniform(0, 3, size=(200, 2))
        from gpopt.acquisition import exclusive_volume_in_cells

        got = exclusive_volume_in_cells(P, TWO_CELLS)
        want = [exclusive_hypervolume(p, TWO, [3.0, 3.0]) for p in P]
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_probability_against_monte_carlo(self, rng):
        for _ in range(3):
            mean = rng.uniform(0, 3, size=2)
            sd = rng.uniform(0.2, 1.0, size=2)
            p = hvpoi_probability(mean, sd**2, TWO_CELLS)[0]
            mc = mc_nondominated_probability(mean, sd, TWO.points, [3, 3], [0, 0], rng, n=400_000)
            assert abs(p - mc) < 5e-3

    def test_batch_matches_single(self, rng):
        M = rng.uniform(0, 3, size=(5, 2))
        V = rng.uniform(0.01, 1, size=(5, 2))
        batch = hvpoi(M, V, TWO, TWO_CELLS)
        np.testing.assert_allclose(batch, [hvpoi(m, v, TWO, TWO_CELLS) for m, v in zip(M, V)])


class TestMarginalized:
    def test_mean_contracts(self):
        evaluate = lambda s, x: s * x  # noqa: E731
        assert marginalized_acquisition(evaluate, [2.0], 3.0) == 6.0
        assert marginalized_acquisition(evaluate, [2.0, 2.0, 2.0], 3.0) == 6.0
        assert marginalized_acquisition(evaluate, [1.0, 3.0], 3.0) == 6.0

    def test_empty(self):
        with pytest.raises(ValueError):
            marginalized_acquisition(lambda s, x: x, [], 1.0)
        with pytest.raises(ValueError):
            MarginalizedAcquisition([])


def _models(rng, k):
    X, y, theta = random_gp_instance(rng, n_max=15, d_max=3)
    models = [fit_theta(X, y, theta, "matern52")]
    for _ in range(k - 1):
        yc = np.cos(2 * X).sum(axis=1) + 0.1 * rng.standard_normal(X.shape[0])
        models.append(fit_theta(X, yc - yc.mean(), theta, "se"))
    return X, y, models


class TestModelAcquisition:
    @pytest.mark.parametrize("kind", ["EI", "PoI", "LCB", "PoF"])
    @pytest.mark.parametrize("constrained", [False, True])
    def test_gradient_matches_finite_differences(self, kind, constrained, rng):
        for _ in range(20):
            acq, x = acquisition_gradient_case(rng, kind, constrained)
            value, grad = acq.value_and_grad(x)
            assert value == pytest.approx(acq(x[None])[0], rel=1e-12)
            fd = central_difference(lambda z: acq(z[None])[0], x)
            assert relative_error(grad, fd) < 1e-4

    def test_mes_and_hvpoi_have_no_gradient(self, rng):
        X, y, models = _models(rng, 2)
        acq = ModelAcquisition(AcquisitionSpec("MES"), models[:1], min_values=np.array([0.0]))
        assert not acq.has_gradient
        with pytest.raises(NotImplementedError):
            acq.value_and_grad(X[0])

    def test_missing_inputs(self, rng):
        _, _, models = _models(rng, 1)
        with pytest.raises(ConfigurationError):
            ModelAcquisition(AcquisitionSpec("EI"), models)
        with pytest.raises(ConfigurationError):
            ModelAcquisition(AcquisitionSpec("PoF"), models)

    def test_hvpoi_scores(self, rng):
        X, _, models = _models(rng, 2)
        Y = np.column_stack([m.predict(X)[0] for m in models])
        front = pareto_front(Y)
        ref = Y.max(axis=0) + 1.0
        cells = cell_decomposition(front, ref, Y.min(axis=0) - 1.0)
        acq = ModelAcquisition(AcquisitionSpec("HvPoI"), models, front=front, decomposition=cells)
        scores = acq(rng.uniform(size=(50, X.shape[1])))
        assert scores.shape == (50,) and np.all(scores >= 0)

    def test_marginalized_of_identical_members(self, rng):
        X, y, models = _models(rng, 1)
        acq = ModelAcquisition(AcquisitionSpec("EI"), models, f_best=float(y.min()))
        Q = rng.uniform(size=(20, X.shape[1]))
        both = MarginalizedAcquisition([acq, acq])
        np.testing.assert_allclose(both(Q), acq(Q), rtol=1e-15)
        v, g = both.value_and_grad(Q[0])
        v1, g1 = acq.value_and_grad(Q[0])
        assert v == pytest.approx(v1) and np.allclose(g, g1)

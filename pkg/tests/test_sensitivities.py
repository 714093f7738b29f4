import numpy as np
import pytest

from xvasensi.engine.rng import make_stream, stream_id
from xvasensi.products import BasketSpec, basket_call_analytic, basket_payoff_fn
from xvasensi.sensitivities import (BumpPlan, aad_bump, benchmark_bump, block_bounds, bump_sample,
                                    fit_price_learner, linear_bump, naive_aad, regress_bumps,
                                    smart_bump, symmetrize)
from xvasensi.learners import TrainConfig

RHO0 = np.array([1.0, -0.5, 2.0, 0.3])
B = np.array([0.5, 1.0, -2.0, 0.1])
Q = np.array([[1.0, 0.2, 0.0, 0.0], [0.2, 2.0, 0.1, 0.0], [0.0, 0.1, 0.5, 0.3], [0.0, 0.0, 0.3, 1.5]])
GRAD = B + 2 * Q @ RHO0


def quadratic_payoff(rho, seed):
    # path noise that does not depend on rho cancels under common random numbers
    rho = np.atleast_2d(rho)
    z = make_stream(seed, stream_id(1, 0)).normals(rho.shape[0])
    return 3.0 + rho @ B + np.einsum("mi,ij,mj->m", rho, Q, rho) + 10 * z


def linear_noise_payoff(rho, seed):
    rho = np.atleast_2d(rho)
    z = make_stream(seed, stream_id(1, 0)).normals(rho.shape)
    return ((1 + 0.5 * z) * rho) @ B


class TestBasics:
    def test_symmetrize(self):
        assert np.allclose(symmetrize([[1.2, 0.4]], [1.0, 0.5]), [[0.8, 0.6]])
        with pytest.raises(ValueError):
            symmetrize([1.0, 2.0], [1.0])

    def test_block_bounds_reproduce_floor_rule(self):
        for m, p in ((100, 7), (1000, 24), (24, 24), (50, 3)):
            b = block_bounds([1] * p, m)
            owner = np.searchsorted(b, np.arange(m), side="right") - 1
            assert np.array_equal(owner, np.arange(m) * p // m)

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            BumpPlan(((0,), (0,)), (0.01, 0.01))
        with pytest.raises(ValueError):
            BumpPlan(((0, 1),), (0.01,), "deterministic")
        with pytest.raises(ValueError):
            BumpPlan(((0,),), (0.01,), "random")

    def test_gaussian_draw_statistics(self):
        plan = BumpPlan(((0, 1), (2, 3)), (0.05, 0.01))
        rho = plan.draw(RHO0, 20_000, 3)
        first, second = rho[:10_000], rho[10_000:]
        assert np.allclose(first[:, 2:], RHO0[2:]) and np.allclose(second[:, :2], RHO0[:2])
        assert np.allclose(first[:, :2].std(axis=0), 0.05 * np.abs(RHO0[:2]), rtol=0.03)

    def test_zero_parameter_uses_absolute_bump(self):
        rho = BumpPlan.one_hot(2).draw(np.array([0.0, 2.0]), 4, 1)
        assert rho[0, 0] == pytest.approx(1e-6)


class TestHalving:
    @pytest.mark.parametrize("regression", ["svd", "analytic"])
    def test_quadratic_single_group(self, regression):
        rep = linear_bump(quadratic_payoff, RHO0, 4000, BumpPlan.single(4, 0.05), 7, ridge=0.0,
                          regression=regression)
        if regression == "svd":
            assert np.allclose(rep.estimate, GRAD, rtol=0, atol=1e-10)
        else:
            # the moment estimator is unbiased but noisy: check against its own CI
            assert np.all(np.abs(rep.estimate - GRAD) <= 1.5 * rep.ci)

    def test_symmetrized_difference_is_linear(self):
        rho, vs = bump_sample(quadratic_payoff, RHO0, 500, BumpPlan.single(4, 0.1), 2)
        assert np.allclose(vs, 2 * (rho - RHO0) @ GRAD, atol=1e-10)

    def test_quadratic_grouped_and_one_hot(self):
        for plan in (BumpPlan(((0, 2), (1, 3)), (0.05, 0.02)), BumpPlan.one_hot(4)):
            rep = linear_bump(quadratic_payoff, RHO0, 1000, plan, 1, ridge=0.0)
            assert np.allclose(rep.estimate, GRAD, atol=1e-10)


class TestSpecialization:
    def test_smart_equals_linear_one_hot(self):
        spec = BasketSpec((90.0, 100.0, 110.0), (0.2, 0.2, 0.2))
        f = basket_payoff_fn(spec)
        a = smart_bump(f, spec.rho0, 6000, 5)
        b = linear_bump(f, spec.rho0, 6000, BumpPlan.one_hot(6), 5)
        assert np.array_equal(a.estimate, b.estimate) and np.array_equal(a.ci, b.ci)

    def test_smart_needs_enough_paths(self):
        with pytest.raises(ValueError):
            smart_bump(quadratic_payoff, RHO0, 7, 1)


class TestNoisyLinear:
    def test_linear_ci_covers(self):
        hits = []
        for s in range(30):
            rep = linear_bump(linear_noise_payoff, RHO0, 4000, BumpPlan.single(4, 0.05), s)
            hits.append(rep.covers(B))
        assert np.mean(hits) >= 0.85

    def test_benchmark_exact_on_linear(self):
        rep = benchmark_bump(linear_noise_payoff, RHO0, 2000, 1)
        # rho-dependent noise is linear in rho, so central differences are unbiased per path
        assert np.all(rep.covers(B))
        assert np.allclose(rep.gammas, 0, atol=1e-6)


class TestBasket:
    spec = BasketSpec((90.0, 100.0, 110.0), (0.2, 0.2, 0.2))

    def test_benchmark_two_digits(self):
        g = basket_call_analytic(self.spec)
        rep = benchmark_bump(basket_payoff_fn(self.spec), self.spec.rho0, 100_000, 3)
        truth = np.r_[g.deltas, g.vegas]
        assert np.all(np.abs(rep.estimate / truth - 1) < 0.05)
        assert np.mean(rep.covers(truth)) >= 4 / 6

    def test_gammas_close(self):
        g = basket_call_analytic(self.spec)
        rep = benchmark_bump(basket_payoff_fn(self.spec), self.spec.rho0, 100_000, 3)
        assert np.all(np.abs(rep.gammas[:3] - g.gammas) <= rep.gamma_ci[:3] * 2 + 1e-4)

    def test_aad_agrees_with_regression_on_same_draws(self):
        f = basket_payoff_fn(self.spec)
        cfg = TrainConfig(epochs=30, batch_size=256, lr=3e-3, lr_final=3e-4, seed=1)
        plan = BumpPlan.single(6, 0.05)
        lin = linear_bump(f, self.spec.rho0, 20_000, plan, 2)
        aad = aad_bump(f, self.spec.rho0, 20_000, plan, 2, hidden=(16,), train=cfg)
        assert np.all(np.abs(aad.estimate - lin.estimate) <= lin.ci / 2)
        price = fit_price_learner(f, self.spec.rho0, 20_000, plan, 2, hidden=(16,), train=cfg)
        naive = naive_aad(price, self.spec.rho0)
        assert naive.estimate.shape == (6,) and naive.ci is None

    def test_csv(self, tmp_path):
        rep = benchmark_bump(basket_payoff_fn(self.spec), self.spec.rho0, 1000, 3, names=list("abcdef"))
        rep.to_csv(tmp_path / "s.csv")
        rep.gammas_to_csv(tmp_path / "g.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "parameter_name,estimate,ci_halfwidth,method"
        assert lines[1].startswith("a,") and lines[1].endswith(",benchmark")


def test_regression_rejects_tiny_blocks():
    plan = BumpPlan(((0, 1, 2, 3),), (0.01,))
    rho = plan.draw(RHO0, 5, 1)
    with pytest.raises(ValueError):
        regress_bumps(rho, np.zeros(5), RHO0, plan)

import numpy as np
import pytest

from acgcl import autodiff as ad
from acgcl.errors import ConfigError, ShapeError
from acgcl.losses import (LossWeights, SampleLossBreakdown, SinkhornConfig, balance_loss,
                          inter_graph_loss, inter_graph_losses_grouped, intra_graph_loss,
                          intra_graph_losses_batched, per_sample_loss,
                          per_sample_losses_batched, sinkhorn_w1, weighted_total_loss)
from oracles import directional_grad_check, exact_w1_1d


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class TestInterGraphLoss:
    def test_hinge_inactive(self, rng):
        h = rng.standard_normal((4, 3))
        h_neg = h + 10.0   # |h - h-|^2 well above the margin
        assert inter_graph_loss(h, h.copy(), h_neg, xi=1.0).item() == 0.0

    def test_equal_mirrors_give_margin(self, rng):
        h = rng.standard_normal((5, 2))
        other = rng.standard_normal((5, 2))
        assert inter_graph_loss(h, other, other.copy(), xi=0.7).item() == pytest.approx(0.7)

    def test_matches_hand_sum(self, rng):
        h, hp, hn = (rng.standard_normal((2, 3)) for _ in range(3))
        expected = np.mean([
            max(0.0, ((h[i] - hp[i]) ** 2).sum() - ((h[i] - hn[i]) ** 2).sum() + 0.5)
            for i in range(2)
        ])
        assert inter_graph_loss(h, hp, hn, xi=0.5).item() == pytest.approx(expected, abs=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            inter_graph_loss(np.ones((2, 2)), np.ones((3, 2)), np.ones((2, 2)), 1.0)

    def test_grouped_matches_per_subgraph(self, rng):
        h, hp, hn = (rng.standard_normal((6, 4)) for _ in range(3))
        grouped = inter_graph_losses_grouped(h, hp, hn, xi=1.0, group_size=3).value
        for i in range(2):
            s = slice(3 * i, 3 * (i + 1))
            single = inter_graph_loss(h[s], hp[s], hn[s], xi=1.0).item()
            assert grouped[i] == pytest.approx(single, abs=1e-12)


class TestIntraGraphLoss:
    def test_equal_summaries_give_margin(self, rng):
        h = rng.standard_normal(4)
        s = rng.standard_normal(4)
        assert intra_graph_loss(h, s, s.copy(), epsilon=0.2).item() == pytest.approx(0.2)

    def test_saturated_hinge_zero(self):
        h = np.array([30.0])
        assert intra_graph_loss(h, np.array([1.0]), np.array([-1.0]), epsilon=0.5).item() == 0.0

    def test_scalar_arithmetic_case(self):
        h, s, s_neg = np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
        expected = max(0.0, sigmoid(0.0) - sigmoid(1.0) + 0.1)
        got = intra_graph_loss(h, s, s_neg, epsilon=0.1).item()
        assert got == pytest.approx(expected) == 0.0

    def test_batched_matches_single(self, rng):
        h, s, sn = (rng.standard_normal((5, 3)) for _ in range(3))
        batched = intra_graph_losses_batched(h, s, sn, epsilon=0.1).value
        for i in range(5):
            assert batched[i] == pytest.approx(
                intra_graph_loss(h[i], s[i], sn[i], epsilon=0.1).item(), abs=1e-12)


class TestSinkhorn:
    def test_identity_bias_shrinks_with_reg(self, rng):
        p = rng.standard_normal((10, 2))
        big = sinkhorn_w1(p, p.copy(), SinkhornConfig(reg=0.5, max_iters=500, tol=1e-9)).item()
        small = sinkhorn_w1(p, p.copy(), SinkhornConfig(reg=0.01, max_iters=2000, tol=1e-9)).item()
        assert small < big
        assert small < 0.05

    def test_singletons_exact(self):
        assert sinkhorn_w1(np.zeros((1, 2)), np.array([[3.0, 4.0]])).item() == pytest.approx(5.0)

    def test_one_d_example(self):
        got = sinkhorn_w1(np.array([[0.0], [1.0]]), np.array([[2.0], [3.0]])).item()
        assert abs(got - 2.0) / 2.0 < 0.05

    def test_one_d_oracle_five_percent(self, rng):
        cfg = SinkhornConfig(reg=0.01, max_iters=4000, tol=1e-9)
        for _ in range(15):
            m = int(rng.integers(2, 33))
            p = rng.random(m)
            q = rng.random(m) + rng.uniform(0.5, 2.0)
            exact = exact_w1_1d(p, q)
            got = sinkhorn_w1(p[:, None], q[:, None], cfg).item()
            assert abs(got - exact) / exact < 0.05

    def test_symmetry(self, rng):
        a, b = rng.standard_normal((8, 3)), rng.standard_normal((6, 3))
        assert abs(sinkhorn_w1(a, b).item() - sinkhorn_w1(b, a).item()) < 1e-8

    def test_all_identical_points_zero(self):
        p = np.ones((4, 2))
        assert sinkhorn_w1(p, p.copy()).item() == 0.0

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            sinkhorn_w1(np.ones((2, 2)), np.ones((2, 3)))
        with pytest.raises(ShapeError):
            sinkhorn_w1(np.ones((0, 2)), np.ones((2, 2)))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SinkhornConfig(reg=0.0)
        with pytest.raises(ConfigError):
            SinkhornConfig(max_iters=0)


class TestBalanceLoss:
    def test_identical_sets_near_zero(self, rng):
        h = rng.standard_normal((6, 3))
        assert balance_loss(h, h.copy(), h.copy()).item() < 0.2

    def test_compositional(self, rng):
        h, hp, hn = (rng.standard_normal((7, 3)) for _ in range(3))
        cfg = SinkhornConfig(reg=0.1, max_iters=200, tol=0.0)
        total = balance_loss(h, hp, hn, cfg).item()
        parts = sinkhorn_w1(h, hp, cfg).item() + sinkhorn_w1(h, hn, cfg).item()
        assert total == pytest.approx(parts, abs=1e-10)


class TestPerSampleLoss:
    def test_arithmetic(self):
        w = LossWeights(alpha=1.0, beta=2.0, xi=1.0, epsilon=0.1)
        got = per_sample_loss(0.2, 0.5, 1.0, w, n=10).item()
        assert got == pytest.approx(0.2 + 0.1 + 1.0)

    def test_zero_weights_leave_intra(self):
        w = LossWeights(alpha=0.0, beta=0.0)
        assert per_sample_loss(0.7, 9.0, 9.0, w, n=3).item() == pytest.approx(0.7)

    def test_breakdown_identity(self, rng):
        w = LossWeights(alpha=0.8, beta=1.7)
        n = 6
        for _ in range(10):
            li, lc, lb = rng.random(3)
            total = per_sample_loss(li, lc, lb, w, n).item()
            b = SampleLossBreakdown(intra=li, inter=lc, balance_share=w.alpha * lb / n,
                                    total=total)
            assert abs(b.total - (b.intra + b.balance_share + w.beta * b.inter)) < 1e-10

    def test_batched_matches_scalar(self, rng):
        w = LossWeights(alpha=0.5, beta=2.0)
        li, lc = rng.random(4), rng.random(4)
        lb = 0.9
        vec = per_sample_losses_batched(li, lc, lb, w, n=4).value
        for i in range(4):
            assert vec[i] == pytest.approx(per_sample_loss(li[i], lc[i], lb, w, 4).item(), abs=1e-12)

    def test_sum_consistent_with_full_loss(self, rng):
        # uniform unit weights: sum of per-sample losses equals
        # n * mean_intra + alpha * balance + n * beta * mean_inter
        w = LossWeights(alpha=0.7, beta=1.3)
        n = 5
        li, lc = rng.random(n), rng.random(n)
        lb = 0.4
        total = sum(per_sample_loss(li[i], lc[i], lb, w, n).item() for i in range(n))
        expected = li.sum() + w.alpha * lb + w.beta * lc.sum()
        assert total == pytest.approx(expected, abs=1e-10)


class TestWeightedTotal:
    def test_masking(self):
        losses = [ad.Tensor(2.0), ad.Tensor(3.0)]
        assert weighted_total_loss(losses, np.array([1.0, 0.0])).item() == pytest.approx(2.0)

    def test_all_ones_plain_sum(self, rng):
        values = rng.random(5)
        got = weighted_total_loss(ad.Tensor(values), np.ones(5)).item()
        assert got == pytest.approx(values.sum())

    def test_soft_weight_composition(self):
        # soft weights at losses [0.05, 0.5, 2.0] with window (0.1, 1.0)
        from acgcl.curriculum import AclThresholds, soft_acl_weights
        losses = np.array([0.05, 0.5, 2.0])
        weights = soft_acl_weights(losses, AclThresholds(lambda1=1.0, lambda2=0.1))
        got = weighted_total_loss(ad.Tensor(losses), weights.values).item()
        assert got == pytest.approx(0.5 * 0.05 + 1.0 * 0.5 + 0.0 * 2.0)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            weighted_total_loss([ad.Tensor(1.0)], np.array([1.0, 2.0]))

    def test_normalize_by_active(self):
        losses = ad.Tensor(np.array([1.0, 2.0, 3.0]))
        got = weighted_total_loss(losses, np.array([1.0, 1.0, 0.0]), normalize=True).item()
        assert got == pytest.approx(1.5)


class TestLossGradients:
    def test_inter_graph_gradcheck(self, rng):
        def build(values):
            h, hp, hn = (ad.parameter(v) for v in values)
            return inter_graph_loss(h, hp, hn, xi=0.8), [h, hp, hn]
        values = [rng.standard_normal((4, 3)) for _ in range(3)]
        assert directional_grad_check(build, values, rng) < 1e-4

    def test_intra_graph_gradcheck(self, rng):
        def build(values):
            h, s, sn = (ad.parameter(v) for v in values)
            return intra_graph_loss(h, s, sn, epsilon=0.3), [h, s, sn]
        values = [rng.standard_normal(5) * 0.5 for _ in range(3)]
        assert directional_grad_check(build, values, rng) < 1e-4

    def test_balance_gradcheck(self, rng):
        cfg = SinkhornConfig(reg=0.2, max_iters=250, tol=0.0)
        def build(values):
            h, hp, hn = (ad.parameter(v) for v in values)
            return balance_loss(h, hp, hn, cfg), [h, hp, hn]
        values = [rng.standard_normal((5, 2)) for _ in range(3)]
        assert directional_grad_check(build, values, rng) < 1e-4

    def test_weights_validated(self):
        with pytest.raises(ConfigError):
            LossWeights(alpha=-0.1)

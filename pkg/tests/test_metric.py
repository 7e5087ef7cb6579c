import math

import numpy as np
import pytest

from warpsim.core import Dataset, LabeledSeries, normalize_series
from warpsim.errors import DimMismatchError, EmptyLandmarksError, LengthMismatchError
from warpsim.metric import (
    MetricProblem,
    SolverOptions,
    build_problem,
    example_loss,
    example_losses,
    learn_metric,
    loss_cap,
    objective,
    subgradient,
)


def scalar_problem(h=1.0, gamma=1.0, lam=1.0):
    return MetricProblem(np.array([[[h]]]), gamma, lam)


def random_problem(rng, m=12, d=3, gamma=1.0, lam=1.0):
    return MetricProblem(rng.normal(size=(m, d, d)), gamma, lam)


class TestBuildProblem:
    def make_series_dataset(self, rng, count, d=1):
        items = [
            LabeledSeries(normalize_series(rng.normal(size=(2, d)), f"s{k}"), "a")
            for k in range(count)
        ]
        return Dataset.from_items(items)

    def test_scalar_assembly(self):
        # d=1 unit rows are +-1; a single example against a single landmark
        # with G = 1 and gamma = 1 gives H = 1
        s = normalize_series([[2.0]], "s")
        lm = LabeledSeries(normalize_series([[5.0]], "l"), "a")
        ds = Dataset.from_items([LabeledSeries(s, "a")])
        p = build_problem(ds, [1.0], [lm], [1.0], gamma=1.0, lam=1.0)
        assert p.h.shape == (1, 1, 1)
        assert p.h[0, 0, 0] == pytest.approx(1.0)

    def test_flipping_landmark_sign_flips_h(self):
        rng = np.random.default_rng(1)
        ds = self.make_series_dataset(rng, 3, d=2)
        lm = [LabeledSeries(normalize_series(rng.normal(size=(2, 2)), "l"), "a")]
        plus = build_problem(ds, [1.0, -1.0, 1.0], lm, [1.0], 1.0, 1.0)
        minus = build_problem(ds, [1.0, -1.0, 1.0], lm, [-1.0], 1.0, 1.0)
        assert np.allclose(plus.h, -minus.h)

    def test_opposite_signs_equal_features_cancel(self):
        rng = np.random.default_rng(2)
        ds = self.make_series_dataset(rng, 2, d=2)
        lm_series = normalize_series(rng.normal(size=(3, 2)), "l")
        lms = [LabeledSeries(lm_series, "a"), LabeledSeries(lm_series, "b")]
        p = build_problem(ds, [1.0, 1.0], lms, [1.0, -1.0], 1.0, 1.0)
        assert np.allclose(p.h, 0.0)

    def test_gamma_scaling(self):
        rng = np.random.default_rng(3)
        ds = self.make_series_dataset(rng, 2, d=2)
        lms = [LabeledSeries(normalize_series(rng.normal(size=(2, 2)), "l"), "a")]
        p1 = build_problem(ds, [1.0, -1.0], lms, [1.0], gamma=1.0, lam=1.0)
        p2 = build_problem(ds, [1.0, -1.0], lms, [1.0], gamma=2.0, lam=1.0)
        assert np.allclose(p1.h, 2.0 * p2.h)

    def test_empty_landmarks(self):
        rng = np.random.default_rng(4)
        ds = self.make_series_dataset(rng, 2)
        with pytest.raises(EmptyLandmarksError):
            build_problem(ds, [1.0, -1.0], [], [], 1.0, 1.0)

    def test_sign_length_checked(self):
        rng = np.random.default_rng(5)
        ds = self.make_series_dataset(rng, 2)
        lms = [LabeledSeries(normalize_series(rng.normal(size=(2, 1)), "l"), "a")]
        with pytest.raises(LengthMismatchError):
            build_problem(ds, [1.0], lms, [1.0], 1.0, 1.0)


class TestObjective:
    def test_zero_metric_value_is_one(self):
        rng = np.random.default_rng(6)
        p = random_problem(rng, m=9, d=2)
        assert objective(np.zeros((2, 2)), p) == 1.0

    def test_scalar_closed_form_value(self):
        assert objective(np.array([[0.5]]), scalar_problem()) == pytest.approx(0.75)

    def test_regularizer_decomposition(self):
        rng = np.random.default_rng(7)
        lam = 2.5
        p = MetricProblem(rng.normal(size=(6, 3, 3)), 1.0, lam)
        p0 = MetricProblem(p.h, 1.0, 1e-300)
        for _ in range(10):
            m = rng.normal(size=(3, 3))
            gap = objective(m, p) - objective(m, p0)
            assert gap == pytest.approx(lam * np.linalg.norm(m) ** 2, rel=1e-9)

    def test_convexity_along_chords(self):
        rng = np.random.default_rng(8)
        p = random_problem(rng, m=15, d=3, lam=0.7)
        for _ in range(100):
            m1, m2 = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
            t = rng.uniform()
            lhs = objective(t * m1 + (1 - t) * m2, p)
            rhs = t * objective(m1, p) + (1 - t) * objective(m2, p)
            assert lhs <= rhs + 1e-12


class TestSubgradient:
    def test_inactive_hinges_leave_only_regularizer(self):
        # H = I and a huge metric make every margin exceed 1
        p = MetricProblem(np.stack([np.eye(2)] * 3), 1.0, 0.5)
        m = 10.0 * np.eye(2)
        assert np.allclose(subgradient(m, p), 2 * 0.5 * m)

    def test_zero_metric_all_active(self):
        rng = np.random.default_rng(9)
        p = random_problem(rng, m=7, d=2, lam=1.0)
        g = subgradient(np.zeros((2, 2)), p)
        assert np.allclose(g, -p.h.mean(axis=0))

    def test_matches_finite_differences_at_smooth_points(self):
        rng = np.random.default_rng(10)
        p = random_problem(rng, m=10, d=2, lam=0.3)
        checked = 0
        while checked < 20:
            m = rng.normal(size=(2, 2))
            margins = p.h.reshape(p.m, -1) @ m.ravel()
            if np.min(np.abs(margins - 1.0)) < 1e-3:
                continue  # too close to a hinge kink for differencing
            checked += 1
            g = subgradient(m, p)
            num = np.zeros_like(m)
            eps = 1e-6
            for i in range(2):
                for j in range(2):
                    up, down = m.copy(), m.copy()
                    up[i, j] += eps
                    down[i, j] -= eps
                    num[i, j] = (objective(up, p) - objective(down, p)) / (2 * eps)
            assert np.linalg.norm(num - g) <= 1e-5 * max(1.0, np.linalg.norm(g))


class TestExampleLoss:
    def test_zero_metric(self):
        assert example_loss(np.zeros((2, 2)), np.ones((2, 2))) == 1.0

    def test_satisfied_margin(self):
        assert example_loss(np.array([[3.0]]), np.array([[1.0]])) == 0.0

    def test_loss_cap_at_learned_metric_feasible_cell(self):
        # d=2, gamma=1, lambda=1: the cap sqrt(2*2)/1 = 2 always holds at the
        # returned metric because ||M|| <= 1 and ||H_i|| <= 1 here
        rng = np.random.default_rng(11)
        h = rng.uniform(-0.5, 0.5, size=(20, 2, 2))
        p = MetricProblem(h, 1.0, 1.0)
        m, _ = learn_metric(p)
        cap = loss_cap(2, 1.0, 1.0)
        assert cap == 2.0
        assert example_losses(m, p).max() <= cap

    def test_lipschitz_in_metric(self):
        rng = np.random.default_rng(12)
        d = 3
        series = rng.normal(size=(8, d, d))
        gamma = 0.5
        h = series / (d * gamma)  # plays the role of aggregated features
        k = math.sqrt(2 * d) / gamma
        p = MetricProblem(h, gamma, 1.0)
        for _ in range(100):
            m1, m2 = rng.normal(size=(d, d)), rng.normal(size=(d, d))
            l1, l2 = example_losses(m1, p), example_losses(m2, p)
            bound = k * np.linalg.norm(m1 - m2)
            # the k-Lipschitz constant requires ||H_i|| <= sqrt(2d)/gamma
            if all(np.linalg.norm(hi) <= k for hi in h):
                assert np.max(np.abs(l1 - l2)) <= bound + 1e-12


class TestLearnMetric:
    def test_scalar_closed_form(self):
        m, report = learn_metric(scalar_problem(), SolverOptions())
        assert m[0, 0] == pytest.approx(0.5, abs=1e-3)
        assert report.best_objective == pytest.approx(0.75, abs=1e-3)

    def test_huge_lambda_shrinks_metric(self):
        rng = np.random.default_rng(13)
        p = random_problem(rng, m=6, d=2, lam=1e6)
        m, _ = learn_metric(p)
        assert np.linalg.norm(m) <= 1e-3

    def test_zero_features_give_zero_metric(self):
        p = MetricProblem(np.zeros((4, 2, 2)), 1.0, 1.0)
        m, report = learn_metric(p)
        assert np.array_equal(m, np.zeros((2, 2)))
        assert report.best_objective == 1.0

    def test_frobenius_cap_and_objective_cap(self):
        rng = np.random.default_rng(14)
        for lam in (0.1, 1.0, 10.0):
            p = random_problem(rng, m=10, d=3, lam=lam)
            m, report = learn_metric(p)
            assert np.linalg.norm(m) <= 1.0 / math.sqrt(lam) + 1e-6
            assert report.best_objective <= 1.0
            assert report.frobenius_cap_ok

    def test_best_objective_never_worse_than_start(self):
        rng = np.random.default_rng(15)
        p = random_problem(rng, m=25, d=3, lam=0.2)
        m, report = learn_metric(p, SolverOptions(max_iters=200))
        assert report.best_objective <= 1.0
        assert objective(m, p) == pytest.approx(report.best_objective, rel=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(16)
        p = random_problem(rng, m=9, d=2, lam=0.5)
        m1, r1 = learn_metric(p)
        m2, r2 = learn_metric(p)
        assert np.array_equal(m1, m2)
        assert r1.iterations == r2.iterations

    def test_report_fields(self):
        _, report = learn_metric(scalar_problem())
        d = report.to_dict()
        assert {"iterations", "converged", "best_objective", "metric_frobenius",
                "frobenius_cap_ok", "loss_cap", "loss_cap_ok"} <= set(d)


class TestStability:
    def test_replace_one_example_loss_shift_bounded(self):
        # swap one training example and compare per-example losses of the two
        # fits on fresh probes: |l(M) - l(M^i)| <= kappa/m with
        # kappa = 4d/(gamma^2 lambda); checked only when both runs converge,
        # as the guarantee concerns exact minimizers
        rng = np.random.default_rng(17)
        m_count, d, gamma, lam = 40, 2, 1.0, 1.0
        h = rng.uniform(-0.8, 0.8, size=(m_count, d, d))
        h_swapped = h.copy()
        h_swapped[3] = rng.uniform(-0.8, 0.8, size=(d, d))
        opts = SolverOptions(max_iters=20000, rel_tol=1e-10)
        m1, r1 = learn_metric(MetricProblem(h, gamma, lam), opts)
        m2, r2 = learn_metric(MetricProblem(h_swapped, gamma, lam), opts)
        if not (r1.converged and r2.converged):
            pytest.skip("solver did not reach the requested tolerance")
        kappa = 4.0 * d / (gamma**2 * lam)
        probes = rng.uniform(-0.8, 0.8, size=(20, d, d))
        for probe in probes:
            gap = abs(example_loss(m1, probe) - example_loss(m2, probe))
            assert gap <= kappa / m_count + 1e-6

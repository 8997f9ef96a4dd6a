import numpy as np
import pytest

import daam
from daam import VehicleModel
from daam.errors import ModelValidationError


class TestBuildChart:
    def test_kernel_of_visual_layout(self, visual):
        chart = daam.build_chart(visual, [0.0])
        assert np.allclose(chart.particular, 0.0, atol=1e-12)
        expected = np.array([1.5, -1.0]) / np.linalg.norm([1.5, -1.0])
        assert np.allclose(chart.nullspace_basis[:, 0], expected, atol=1e-12)

    def test_chart_invariants(self, all_presets):
        rng = np.random.default_rng(8)
        for model in all_presets.values():
            reach = daam.achievable_range(model)
            for _ in range(20):
                w = rng.uniform(-0.8, 0.8, model.task_dim) * reach[:, 1]
                chart = daam.build_chart(model, w)
                A = model.alloc_matrix
                assert np.linalg.norm(A @ chart.particular - w) <= 1e-10 * (1 + np.linalg.norm(w))
                assert np.linalg.norm(A @ chart.nullspace_basis) <= 1e-10 * np.linalg.norm(A)
                N = chart.nullspace_basis
                assert np.max(np.abs(N.T @ N - np.eye(chart.dim))) <= 1e-12

    def test_sign_convention_deterministic(self, three_one):
        c1 = daam.build_chart(three_one, [2.0])
        c2 = daam.build_chart(three_one, [2.0])
        assert np.array_equal(c1.nullspace_basis, c2.nullspace_basis)
        for j in range(c1.dim):
            col = c1.nullspace_basis[:, j]
            lead = np.nonzero(np.abs(col) > 1e-9)[0][0]
            assert col[lead] > 0

    def test_contains_known_preimage(self, three_two):
        # v = (1, 1, 1) produces w = (3, 0); its thrust state must sit on the chart
        chart = daam.build_chart(three_two, [3.0, 0.0])
        u_star = daam.spin_to_thrust([1.0, 1.0, 1.0])
        resid = u_star - chart.particular
        off_chart = resid - chart.nullspace_basis @ (chart.nullspace_basis.T @ resid)
        assert np.linalg.norm(off_chart) <= 1e-10


class TestChartPoint:
    def test_t_zero_is_particular(self, balanced):
        chart = daam.build_chart(balanced, [1.0])
        v = daam.chart_point(chart, [0.0])
        assert np.allclose(v, daam.thrust_to_spin(chart.particular))

    def test_fiber_membership_property(self, all_presets):
        rng = np.random.default_rng(13)
        checks = 0
        for model in all_presets.values():
            reach = daam.achievable_range(model)
            for _ in range(125):
                w = rng.uniform(-0.8, 0.8, model.task_dim) * reach[:, 1]
                chart = daam.build_chart(model, w)
                t = rng.uniform(-np.max(model.thrust_box), np.max(model.thrust_box), chart.dim)
                v = daam.chart_point(chart, t)
                err = np.linalg.norm(daam.allocate(model, v) - w)
                assert err <= 1e-9 * (1 + np.linalg.norm(w))
                checks += 1
        assert checks >= 1000


class TestFeasibleRegion:
    def test_balanced_zero_force_symmetric_interval(self, balanced):
        chart = daam.build_chart(balanced, [0.0])
        region = daam.feasible_t_region(chart)
        (lo, hi), = region.intervals
        assert lo == pytest.approx(-hi, rel=1e-12)
        assert hi == pytest.approx(10.0 * np.sqrt(2.0), rel=1e-12)

    def test_endpoints_activate_a_saturation(self, all_presets):
        rng = np.random.default_rng(31)
        for name in ("caseA_balanced", "visual_2x1", "case3x2"):
            model = all_presets[name]
            reach = daam.achievable_range(model)
            for _ in range(20):
                w = rng.uniform(-0.7, 0.7, model.task_dim) * reach[:, 1]
                chart = daam.build_chart(model, w)
                region = daam.feasible_t_region(chart)
                if region.empty:
                    continue
                for endpoint in region.intervals[0]:
                    u = chart.point_u([endpoint])
                    gap = np.min(np.abs(np.abs(u) - chart.box))
                    assert gap <= 1e-10 * max(1.0, np.max(chart.box))

    def test_infeasible_demand_is_empty(self, balanced):
        chart = daam.build_chart(balanced, [25.0])  # reach is +-20
        region = daam.feasible_t_region(chart)
        assert region.empty

    def test_two_dim_bounds_and_membership(self, three_one):
        chart = daam.build_chart(three_one, [3.0])
        region = daam.feasible_t_region(chart)
        assert region.bounds.shape == (2, 2)
        assert region.contains(np.zeros(2))
        outside = region.bounds[:, 1] * 1.5
        assert not region.contains(outside)
        rng = np.random.default_rng(4)
        inside = 0
        for _ in range(500):
            t = rng.uniform(region.bounds[:, 0], region.bounds[:, 1])
            if region.contains(t, tol=0.0):
                inside += 1
                u = chart.point_u(t)
                assert np.all(np.abs(u) <= chart.box * (1 + 1e-9))
        assert inside > 100


class TestAchievableRange:
    def test_balanced_reach(self, balanced):
        reach = daam.achievable_range(balanced)
        assert np.allclose(reach, [[-20.0, 20.0]])

    def test_reach_bounds_hold(self, three_two):
        reach = daam.achievable_range(three_two)
        rng = np.random.default_rng(2)
        for _ in range(200):
            v = rng.uniform(-1, 1, 3) * three_two.critical_spins
            w = daam.allocate(three_two, v)
            assert np.all(w >= reach[:, 0] - 1e-9) and np.all(w <= reach[:, 1] + 1e-9)


class TestAnalyticFiber:
    def test_hand_value(self, three_two):
        v = daam.analytic_fiber_3x2(three_two, 3.0, 0.0, 1.0)
        assert np.allclose(v, [1.0, 1.0, 1.0], atol=1e-12)

    def test_satisfies_both_forces(self, three_two):
        rng = np.random.default_rng(6)
        for _ in range(200):
            w1, w2 = rng.uniform(-5, 5, 2)
            t = rng.uniform(-10, 10)
            v = daam.analytic_fiber_3x2(three_two, w1, w2, t)
            w = daam.allocate(three_two, v)
            assert np.linalg.norm(w - [w1, w2]) <= 1e-10 * (1 + abs(w1) + abs(w2))

    def test_degenerate_layouts_rejected(self):
        rotors = daam.preset("case3x2").rotors
        bad_third = VehicleModel(np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 0.5]]), rotors)
        with pytest.raises(ModelValidationError):
            daam.analytic_fiber_3x2(bad_third, 1.0, 0.0, 0.0)
        bad_denom = VehicleModel(np.array([[1.0, -1.0, 1.0], [1.0, -1.0, 0.0]]), rotors)
        with pytest.raises(ModelValidationError):
            daam.analytic_fiber_3x2(bad_denom, 1.0, 0.0, 0.0)

    def test_matches_chart_as_point_set(self, three_two):
        # one-sided Hausdorff in thrust coordinates: every feasible analytic
        # point lies on the chart line (exact projection), and every feasible
        # chart point reproduces through the analytic map at its own u3
        for w in ([3.0, 0.0], [1.0, 2.0], [-4.0, -1.5]):
            chart = daam.build_chart(three_two, w)
            region = daam.feasible_t_region(chart)
            (lo, hi), = region.intervals
            N = chart.nullspace_basis

            worst_analytic = 0.0
            for t3 in np.linspace(-10.0, 10.0, 401):
                v = daam.analytic_fiber_3x2(three_two, w[0], w[1], t3)
                u = daam.spin_to_thrust(v)
                if np.any(np.abs(u) > chart.box):
                    continue
                resid = u - chart.particular
                off = resid - N @ (N.T @ resid)
                t_proj = float((N.T @ resid)[0])
                assert lo - 1e-9 <= t_proj <= hi + 1e-9
                worst_analytic = max(worst_analytic, float(np.linalg.norm(off)))
            assert worst_analytic <= 1e-6

            worst_chart = 0.0
            for t in np.linspace(lo, hi, 401):
                u = chart.point_u([t])
                v_back = daam.analytic_fiber_3x2(three_two, w[0], w[1], float(u[2]))
                worst_chart = max(
                    worst_chart, float(np.linalg.norm(daam.spin_to_thrust(v_back) - u))
                )
            assert worst_chart <= 1e-6

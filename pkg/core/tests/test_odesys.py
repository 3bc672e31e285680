import math

import numpy as np
from django.test import SimpleTestCase
from scipy.integrate import solve_ivp

from core.numerics.exceptions import NumericError, OdeSingularityError
from core.numerics.fredholm import bundle_at, theta_product
from core.numerics.kernel import KernelSpec
from core.numerics.odesys import (
    DormandPrince,
    StepControls,
    SystemParams,
    SystemState,
    bootstrap,
    integrate,
    painleve_residual,
    painleve_rhs,
    residual_suite,
    rhs,
    stencil_bundles,
)
from core.numerics.specfun import airy_ai, airy_ai_prime

NODES = 40


class DormandPrinceTests(SimpleTestCase):

    def _fixed_error(self, h):
        solver = DormandPrince(lambda t, y: y * math.cos(t))
        times, values = solver.solve(0.0, np.array([1.0]), 2.0, StepControls(fixed_step=h))
        self.assertEqual(times[-1], 2.0)
        return abs(values[-1][0] - math.exp(math.sin(2.0)))

    def test_fifth_order_convergence(self):
        ratio = self._fixed_error(0.1) / self._fixed_error(0.05)
        self.assertTrue(20.0 < ratio < 45.0, ratio)

    def test_painleve_against_scipy(self):
        y0 = np.array([airy_ai(4.0), airy_ai_prime(4.0)])
        controls = StepControls(rtol=1e-11, atol=1e-14)
        _, values = DormandPrince(painleve_rhs).solve(4.0, y0, 0.0, controls)
        reference = solve_ivp(painleve_rhs, (4.0, 0.0), y0, method='DOP853', rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(values[-1], reference.y[:, -1], atol=1e-8)

    def test_outputs_are_hit_exactly(self):
        times, values = DormandPrince(lambda t, y: -y).solve(
            0.0, np.array([1.0]), 1.0, StepControls(), outputs=[0.25, 0.5, 0.75],
        )
        self.assertEqual(times, [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose([v[0] for v in values], np.exp(-np.array(times)), rtol=1e-8)

    def test_blow_up_reports_last_shift(self):
        with self.assertRaises(OdeSingularityError) as ctx:
            DormandPrince(lambda t, y: y ** 2).solve(0.0, np.array([1.0]), 2.0, StepControls())
        self.assertTrue(0.999 < ctx.exception.last_shift <= 1.0, ctx.exception.last_shift)

    def test_step_limit(self):
        with self.assertRaises(OdeSingularityError):
            DormandPrince(lambda t, y: -y).solve(0.0, np.array([1.0]), 10.0, StepControls(fixed_step=0.01, max_steps=50))


class SystemTests(SimpleTestCase):

    def test_single_time_reduces_to_painleve(self):
        params = SystemParams.build((0.0,), (0.5,))
        state = SystemState(
            shift=0.25,
            q=np.array([[0.3]]),
            dq=np.array([[-0.2]]),
            q_tilde=np.array([[0.3]]),
            dq_tilde=np.array([[-0.2]]),
            r=np.array([[0.1]]),
        )
        derivative = rhs(state, params)
        expected = painleve_rhs(0.75, np.array([0.3, -0.2]))
        self.assertAlmostEqual(derivative.q[0, 0], expected[0], delta=1e-16)
        self.assertAlmostEqual(derivative.dq[0, 0], expected[1], delta=1e-15)
        self.assertAlmostEqual(derivative.dq_tilde[0, 0], expected[1], delta=1e-15)
        self.assertAlmostEqual(derivative.r[0, 0], -0.09, delta=1e-15)

    def test_trace_of_r_derivative(self):
        rng = np.random.default_rng(11)
        params = SystemParams.build((0.0, 0.4, 1.3), (0.1, -0.2, 0.5))
        for _ in range(5):
            state = SystemState.from_vector(rng.uniform(-1.0, 1.0), rng.normal(size=5 * 9), 3)
            derivative = rhs(state, params)
            self.assertAlmostEqual(
                np.trace(derivative.r), -np.trace(theta_product(state.q, state.q_tilde)), delta=1e-12,
            )

    def test_non_finite_state(self):
        state = SystemState.zeros(0.0, 2)
        state.q[0, 1] = math.nan
        with self.assertRaises(NumericError):
            rhs(state, SystemParams.build((0.0, 1.0), (0.0, 0.0)))

    def test_params_length_mismatch(self):
        with self.assertRaises(ValueError):
            SystemParams.build((0.0, 1.0), (0.0,))

    def test_zero_state_stays_zero(self):
        params = SystemParams.build((0.0, 1.0), (0.0, 0.0))
        trajectory = integrate(SystemState.zeros(2.0, 2), 0.0, StepControls(), params)
        self.assertEqual(trajectory.final.shift, 0.0)
        self.assertFalse(np.any(trajectory.final.vector()))

    def test_left_limit(self):
        params = SystemParams.build((0.0, 1.0), (0.0, 0.5))
        with self.assertRaises(OdeSingularityError) as ctx:
            integrate(SystemState.zeros(2.0, 2), -4.0, StepControls(left_limit=-3.0), params)
        self.assertEqual(ctx.exception.last_shift, 2.0)

    def test_missing_output(self):
        params = SystemParams.build((0.0,), (0.0,))
        trajectory = integrate(SystemState.zeros(1.0, 1), 0.0, StepControls(), params, outputs=[0.5])
        self.assertEqual(list(trajectory.shifts), [1.0, 0.5, 0.0])
        with self.assertRaises(KeyError):
            trajectory.at(0.3)


class TrajectoryTests(SimpleTestCase):

    def _compare(self, tau, xi):
        params = SystemParams.build(tau, xi)
        initial = bootstrap(params, shift0=6.0, n=NODES)
        controls = StepControls.from_settings(rtol=1e-10, atol=1e-13)
        final = integrate(initial, 0.0, controls, params, outputs=[0.0]).at(0.0)
        oracle = bundle_at(KernelSpec.build(tau, xi), NODES)
        np.testing.assert_allclose(final.q, oracle.q, atol=1e-6)
        np.testing.assert_allclose(final.q_tilde, oracle.q_tilde, atol=1e-6)
        np.testing.assert_allclose(final.r, oracle.r, atol=1e-6)

    def test_single_time_trajectory(self):
        self._compare((0.0,), (0.0,))

    def test_two_time_trajectory(self):
        self._compare((0.0, 1.0), (0.0, 0.0))

    def test_three_time_trajectory_at_intermediate_shifts(self):
        tau, xi = (0.0, 0.5, 1.2), (0.2, -0.1, 0.4)
        params = SystemParams.build(tau, xi)
        initial = bootstrap(params, shift0=6.0, n=NODES)
        controls = StepControls.from_settings(rtol=1e-10, atol=1e-13)
        trajectory = integrate(initial, 0.0, controls, params, outputs=[3.0, 1.0, 0.0])
        spec = KernelSpec.build(tau, xi)
        for s in (3.0, 1.0, 0.0):
            oracle = bundle_at(spec.shifted(s), NODES)
            np.testing.assert_allclose(trajectory.at(s).q, oracle.q, atol=1e-6, err_msg=f"shift {s}")
            np.testing.assert_allclose(trajectory.at(s).r, oracle.r, atol=1e-6, err_msg=f"shift {s}")

    def test_single_time_q_tilde_tracks_q(self):
        params = SystemParams.build((0.0,), (0.0,))
        initial = bootstrap(params, shift0=6.0, n=NODES)
        trajectory = integrate(initial, 0.0, StepControls.from_settings(rtol=1e-10, atol=1e-13), params)
        self.assertGreater(len(trajectory.states), 2)
        for state in trajectory.states:
            np.testing.assert_allclose(state.q_tilde, state.q, atol=1e-10)
            np.testing.assert_allclose(state.dq_tilde, state.dq, atol=1e-10)

    def test_trace_of_r_along_trajectory(self):
        h = 1e-3
        params = SystemParams.build((0.0, 0.5), (0.0, 0.0))
        initial = bootstrap(params, shift0=6.0, n=NODES)
        controls = StepControls.from_settings(rtol=1e-11, atol=1e-14)
        trajectory = integrate(initial, 1.0 - h, controls, params, outputs=[1.0 + h, 1.0, 1.0 - h])
        slope = (np.trace(trajectory.at(1.0 + h).r) - np.trace(trajectory.at(1.0 - h).r)) / (2 * h)
        centre = trajectory.at(1.0)
        self.assertAlmostEqual(slope, -np.trace(theta_product(centre.q, centre.q_tilde)), delta=1e-6)

    def test_bootstrap_q_tilde_equals_q_for_one_time(self):
        state = bootstrap(SystemParams.build((0.0,), (0.0,)), shift0=5.0, n=NODES)
        np.testing.assert_array_equal(state.q, state.q_tilde)
        self.assertEqual(state.shift, 5.0)


class ResidualTests(SimpleTestCase):

    def test_equation_residuals(self):
        for tau, xi in (((0.0,), (0.0,)), ((0.0, 1.0), (0.0, 0.0)), ((0.0, 0.5, 1.2), (0.2, -0.1, 0.4))):
            report = residual_suite(stencil_bundles(KernelSpec.build(tau, xi), n=NODES))
            self.assertLessEqual(report.worst, 5e-4, (tau, report))

    def test_painleve_residual(self):
        for s in (0.0, 1.0, 2.0):
            stencil = stencil_bundles(KernelSpec.build((0.0,), (s,)), n=NODES)
            self.assertLessEqual(painleve_residual(stencil), 1e-4)

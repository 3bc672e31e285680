import dataclasses

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from pydantic import ValidationError
from scipy import integrate, special

from core.numerics.exceptions import KernelIndexError, NumericError
from core.numerics.kernel import (
    ALPHA_MARGIN,
    MAX_PANEL,
    NEGATIVE_TAIL,
    PANEL_PHASE,
    KernelSpec,
    ThresholdVector,
    TimeGrid,
    airy_kernel,
    k_entry,
    l_block,
    l_entry,
    negative_panel_edges,
    uses_complement,
)
from core.numerics.specfun import AI0, AIP0, airy_ai


class ValueObjectTests(SimpleTestCase):

    def test_times_must_increase(self):
        with self.assertRaises(ValidationError):
            TimeGrid(times=(0.0, 0.0))
        with self.assertRaises(ValidationError):
            TimeGrid(times=(1.0, 0.5))
        with self.assertRaises(ValidationError):
            TimeGrid(times=())
        self.assertEqual(TimeGrid(times=(0.0, 0.5, 2.0)).m, 3)

    def test_times_must_be_finite(self):
        with self.assertRaises(ValidationError):
            TimeGrid(times=(0.0, float('inf')))

    def test_alpha_defaults_below_thresholds(self):
        xi = ThresholdVector(thresholds=(1.0, -2.0))
        self.assertEqual(xi.alpha, -2.0 - ALPHA_MARGIN)

    def test_alpha_must_stay_below(self):
        with self.assertRaises(ValidationError):
            ThresholdVector(thresholds=(0.0, 1.0), alpha=0.0)

    def test_shift_moves_alpha(self):
        xi = ThresholdVector(thresholds=(0.0, 1.0), alpha=-4.0).shifted(2.5)
        self.assertEqual(xi.thresholds, (2.5, 3.5))
        self.assertEqual(xi.alpha, -1.5)

    def test_spec_length_mismatch(self):
        with self.assertRaises(ValueError):
            KernelSpec.build((0.0, 1.0), (0.0,))

    def test_spec_index_check(self):
        spec = KernelSpec.build((0.0, 1.0), (0.0, 0.0))
        self.assertEqual(spec.check_index(2), 1)
        for bad in (0, 3, True, 1.0):
            with self.assertRaises(KernelIndexError):
                spec.check_index(bad)


class KernelEntryTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.one = KernelSpec.build((0.0,), (0.0,))
        cls.two = KernelSpec.build((0.0, 1.0), (0.0, 0.0))

    def test_diagonal_block_is_airy_kernel(self):
        points = (-3.0, -1.0, 0.0, 0.5, 2.0, 3.0)
        for x in points:
            for y in points:
                self.assertAlmostEqual(
                    l_entry(self.one, 1, 1, x, y), airy_kernel(x, y), delta=1e-12,
                    msg=f"x={x}, y={y}",
                )

    def test_airy_kernel_at_origin(self):
        self.assertAlmostEqual(airy_kernel(0.0, 0.0), AIP0 ** 2, delta=1e-16)

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(
        st.floats(min_value=-4.0, max_value=4.0),
        st.floats(min_value=-4.0, max_value=4.0),
        st.sampled_from([1, 2]),
    )
    def test_diagonal_blocks_symmetric(self, x, y, i):
        self.assertAlmostEqual(l_entry(self.two, i, i, x, y), l_entry(self.two, i, i, y, x), delta=1e-15)

    def test_off_diagonal_signs(self):
        for x in (-2.0, 0.0, 1.5):
            self.assertLess(l_entry(self.two, 1, 2, x, x), 0.0)
            self.assertGreater(l_entry(self.two, 2, 1, x, x), 0.0)

    def test_complement_matches_direct_integral(self):
        direct = dataclasses.replace(KernelSpec.build((0.0, 1.0), (0.0, 0.0), z_order=512), split_gap=0.0)
        self.assertTrue(uses_complement(self.two, 1.0, np.array([0.0]), np.array([0.0])))
        self.assertFalse(uses_complement(direct, 1.0, np.array([0.0]), np.array([0.0])))
        for x, y in ((0.0, 0.0), (-1.0, 0.5), (1.0, 2.0)):
            self.assertAlmostEqual(l_entry(self.two, 1, 2, x, y), l_entry(direct, 1, 2, x, y), delta=1e-8)

    def test_decay_with_time_gap(self):
        previous = None
        diagonal = l_entry(self.one, 1, 1, 0.0, 0.0)
        for s in (5.0, 10.0, 20.0):
            spec = KernelSpec.build((0.0, s), (0.0, 0.0))
            value = l_entry(spec, 1, 2, 0.0, 0.0)
            self.assertLess(value, 0.0)
            self.assertLessEqual(abs(value + AI0 ** 2 / s), 2.0 / s ** 2)
            if previous is not None:
                self.assertLess(abs(value), abs(previous))
            previous = value
        self.assertLessEqual(abs(previous) / diagonal, 0.15)

    def test_block_matches_entries(self):
        xs = np.array([-1.0, 0.0, 2.0])
        ys = np.array([0.5, 1.0])
        block = l_block(self.two, 1, 2, xs, ys)
        self.assertEqual(block.shape, (3, 2))
        for a, x in enumerate(xs):
            for b, y in enumerate(ys):
                self.assertAlmostEqual(block[a, b], l_entry(self.two, 1, 2, x, y), delta=1e-13)

    def test_k_entry_indicator_is_right_continuous(self):
        spec = KernelSpec.build((0.0, 1.0), (0.0, 0.5))
        self.assertEqual(k_entry(spec, 1, 2, 0.0, 0.49), 0.0)
        self.assertEqual(k_entry(spec, 1, 2, 0.0, 0.5), l_entry(spec, 1, 2, 0.0, 0.5))
        self.assertEqual(k_entry(spec, 2, 1, 0.3, 0.2), l_entry(spec, 2, 1, 0.3, 0.2))

    def test_index_errors(self):
        with self.assertRaises(KernelIndexError):
            l_entry(self.two, 3, 1, 0.0, 0.0)
        with self.assertRaises(IndexError):
            k_entry(self.two, 1, 0, 0.0, 0.0)

    def test_non_finite_coordinates(self):
        with self.assertRaises(NumericError):
            l_entry(self.two, 1, 1, float('nan'), 0.0)
        with self.assertRaises(NumericError):
            l_block(self.two, 1, 2, [0.0], [0.0, float('inf')])

    def test_x_decay_follows_airy(self):
        airy_ratio = airy_ai(10.0) / airy_ai(5.0)
        for i, j in ((1, 1), (2, 1)):
            near = l_entry(self.two, i, j, 5.0, 0.0)
            far = l_entry(self.two, i, j, 10.0, 0.0)
            self.assertGreater(near, 0.0)
            self.assertLessEqual(abs(far / near), 2.0 * airy_ratio, (i, j))

    def test_entries_invariant_under_time_shift(self):
        moved = KernelSpec.build((3.7, 4.7), (0.0, 0.0))
        for i in (1, 2):
            for j in (1, 2):
                for x, y in ((0.0, 0.0), (-1.5, 0.7), (2.0, -0.5)):
                    self.assertAlmostEqual(
                        l_entry(self.two, i, j, x, y), l_entry(moved, i, j, x, y), delta=1e-14,
                        msg=f"block ({i}, {j}) at x={x}, y={y}",
                    )


class NegativeRouteTests(SimpleTestCase):
    """Small time gaps with deeply negative coordinates, where the complement is refused"""

    @staticmethod
    def reference(gap, x, y):
        def integrand(z):
            return np.exp(gap * z) * special.airy(x + z)[0] * special.airy(y + z)[0]

        edges = np.linspace(-NEGATIVE_TAIL / gap, 0.0, int(NEGATIVE_TAIL / gap) + 1)
        total = sum(
            integrate.quad(integrand, a, b, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
            for a, b in zip(edges[:-1], edges[1:])
        )
        return -total

    def test_matches_adaptive_quadrature_at_alpha(self):
        for tau, xi in (((0.0, 0.5), (-4.0, -4.0)), ((0.0, 0.3), (-10.0, -10.0))):
            spec = KernelSpec.build(tau, xi)
            gap = tau[1] - tau[0]
            x = spec.alpha
            self.assertFalse(uses_complement(spec, gap, np.array([x]), np.array([x])))
            self.assertAlmostEqual(l_entry(spec, 1, 2, x, x), self.reference(gap, x, x), delta=1e-10, msg=tau)

    def test_mixed_coordinates(self):
        spec = KernelSpec.build((0.0, 0.5), (-4.0, -4.0))
        x, y = -14.0, -12.0
        self.assertFalse(uses_complement(spec, 0.5, np.array([x]), np.array([y])))
        self.assertAlmostEqual(l_entry(spec, 1, 2, x, y), self.reference(0.5, x, y), delta=1e-10)

    def test_panel_edges(self):
        edges = negative_panel_edges(80.0, -14.0)
        self.assertEqual(edges[0], -80.0)
        self.assertEqual(edges[-1], 0.0)
        self.assertTrue(np.all(np.diff(edges) > 0.0))
        self.assertLessEqual(np.max(np.diff(edges)), MAX_PANEL)
        depth = 14.0 - edges
        phase = 4.0 / 3.0 * depth ** 1.5
        self.assertLessEqual(np.max(np.diff(-phase)), PANEL_PHASE + 1e-9)

    def test_panels_stay_few_without_oscillation(self):
        self.assertEqual(list(negative_panel_edges(2.0, 5.0)), [-2.0, 0.0])

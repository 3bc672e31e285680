import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
from scipy import special

from core.numerics.exceptions import AiryDomainError, AiryRangeError
from core.numerics.specfun import (
    AI0,
    AIP0,
    BI0,
    BIP0,
    X_ASYM,
    X_SWITCH,
    airy_ai,
    airy_ai_pair,
    airy_ai_prime,
    airy_ai_second,
    airy_all,
    airy_bi,
    airy_bi_prime,
    airy_eval,
)


class AiryValuesTests(SimpleTestCase):

    def test_values_at_zero(self):
        self.assertAlmostEqual(airy_ai(0.0), AI0, delta=1e-16)
        self.assertAlmostEqual(airy_ai_prime(0.0), AIP0, delta=1e-16)
        self.assertAlmostEqual(airy_bi(0.0), BI0, delta=1e-16)
        self.assertAlmostEqual(airy_bi_prime(0.0), BIP0, delta=1e-16)

    def test_matches_scipy_on_central_range(self):
        x = np.linspace(-10.0, 10.0, 2001)
        ai, aip, bi, bip = airy_all(x)
        ref_ai, ref_aip, ref_bi, ref_bip = special.airy(x)
        np.testing.assert_allclose(ai, ref_ai, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(aip, ref_aip, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(bi, ref_bi, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(bip, ref_bip, rtol=1e-12, atol=1e-13)

    def test_matches_scipy_far_out(self):
        right = np.linspace(10.0, 80.0, 141)
        ai, aip = airy_ai_pair(right)
        ref_ai, ref_aip, _, _ = special.airy(right)
        np.testing.assert_allclose(ai, ref_ai, rtol=1e-11)
        np.testing.assert_allclose(aip, ref_aip, rtol=1e-11)

        left = np.linspace(-40.0, -10.0, 121)
        ai, aip = airy_ai_pair(left)
        ref_ai, ref_aip, _, _ = special.airy(left)
        np.testing.assert_allclose(ai, ref_ai, atol=1e-12)
        np.testing.assert_allclose(aip, ref_aip, atol=5e-12)

    def test_branch_seams_are_continuous(self):
        for seam in (X_SWITCH, -X_SWITCH, X_ASYM, -X_ASYM):
            below = np.nextafter(seam, -math.inf)
            above = np.nextafter(seam, math.inf)
            for left, right in zip(airy_all(np.array([below])), airy_all(np.array([above]))):
                self.assertAlmostEqual(left[0], right[0], delta=1e-13 * max(1.0, abs(right[0])))

    def test_underflow_returns_zero(self):
        self.assertEqual(airy_ai(200.0), 0.0)
        self.assertEqual(airy_ai_prime(200.0), 0.0)

    def test_second_derivative_follows_airy_equation(self):
        for x in (-3.0, 0.5, 2.0):
            self.assertAlmostEqual(airy_ai_second(x), x * airy_ai(x), delta=1e-16)

    def test_eval_bundles_all_four(self):
        record = airy_eval(1.5)
        self.assertEqual(record.ai, airy_ai(1.5))
        self.assertEqual(record.bi_prime, airy_bi_prime(1.5))
        self.assertAlmostEqual(record.wronskian, 1.0 / math.pi, delta=1e-15)

    @hypothesis_settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=-10.0, max_value=10.0))
    def test_wronskian(self, x):
        record = airy_eval(x)
        self.assertLessEqual(abs(math.pi * record.wronskian - 1.0), 1e-12)


class AiryErrorTests(SimpleTestCase):

    def test_non_finite_argument(self):
        for bad in (math.nan, math.inf, -math.inf):
            with self.assertRaises(AiryDomainError):
                airy_ai(bad)
        with self.assertRaises(AiryDomainError):
            airy_all(np.array([0.0, math.nan]))

    def test_domain_error_is_value_error(self):
        with self.assertRaises(ValueError):
            airy_ai_prime(math.nan)

    def test_bi_cap(self):
        with self.assertRaises(AiryRangeError):
            airy_bi(15.5)
        with self.assertRaises(AiryRangeError):
            airy_bi_prime(16.0)

    @override_settings(AIRYPROC_BI_CAP=20.0)
    def test_bi_cap_follows_settings(self):
        _, _, ref_bi, _ = special.airy(16.0)
        self.assertAlmostEqual(airy_bi(16.0) / ref_bi, 1.0, delta=1e-11)

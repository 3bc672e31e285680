from unittest import mock

from django.test import SimpleTestCase

from core.numerics.exceptions import AiryRangeError
from core.numerics.validation import (
    CONFIGURATIONS,
    TRAJECTORY_SHIFTS,
    CheckResult,
    run_validation,
    suite,
    trajectory_agreement,
)


class ValidationSuiteTests(SimpleTestCase):

    def test_check_names(self):
        names = [name for name, _, _ in suite(40)]
        self.assertEqual(len(names), len(set(names)))
        for m in range(1, len(CONFIGURATIONS) + 1):
            self.assertIn(f'equation_residuals[m={m}]', names)
            self.assertIn(f'trajectory_agreement[m={m}]', names)
        self.assertIn('identity_plu', names)
        self.assertIn('block_cutoff', names)

    def test_block_cutoff_check(self):
        report = run_validation(nodes=40, only=['block_cutoff'])
        self.assertEqual([check.name for check in report.checks], ['block_cutoff'])
        self.assertTrue(report.passed, report.failures)

    def test_trajectory_agreement_at_intermediate_shifts(self):
        tau, xi = CONFIGURATIONS[-1]
        self.assertEqual(TRAJECTORY_SHIFTS, (3.0, 1.0, 0.0))
        self.assertLessEqual(trajectory_agreement(tau, xi, 40), 1e-6)

    def test_report_serializes_pass_field(self):
        check = CheckResult(name='airy_wronskian', residual=1e-15, tolerance=1e-12, passed=True)
        self.assertEqual(check.model_dump(by_alias=True)['pass'], True)
        self.assertNotIn('passed', check.model_dump(by_alias=True))

    def test_prefix_selection(self):
        report = run_validation(nodes=40, only=['painleve', 'time_shift'])
        self.assertEqual([check.name for check in report.checks], ['painleve_reduction', 'time_shift_invariance'])
        self.assertTrue(report.passed, report.failures)
        self.assertEqual(report.nodes, 40)

    def test_raising_check_is_reported(self):
        with mock.patch('core.numerics.validation.airy_wronskian', side_effect=AiryRangeError('out of range')):
            report = run_validation(nodes=40, only=['airy_wronskian', 'gauss_legendre'])
        failed, passed = report.checks
        self.assertFalse(failed.passed)
        self.assertIsNone(failed.residual)
        self.assertIn('AiryRangeError', failed.detail)
        self.assertTrue(passed.passed)
        self.assertEqual(report.failures, [failed])

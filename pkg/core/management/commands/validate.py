"""
Management command running the numerical validation suite

Prints a JSON report (name, residual, tolerance, passed per check) and
exits with code 3 when any check fails.

Usage:
    python manage.py validate
    python manage.py validate --nodes 120 --out report.json --overwrite
    python manage.py validate --only identity_ --only airy_wronskian
"""

import json

from django.core.management.base import CommandError

from core.forms import ValidateConfigForm
from core.management.base import EXIT_VALIDATION, NumericsCommand
from core.numerics.validation import run_validation
from core.utils.table_export import write_text


class Command(NumericsCommand):
    help = 'Check the numerics against exact identities and limits'

    form_class = ValidateConfigForm

    def add_arguments(self, parser):
        self.add_output_arguments(parser)
        parser.add_argument(
            '--only',
            action='append',
            help='Run only checks whose name starts with this prefix (repeatable)',
        )

    def handle(self, *args, **options):
        config = self.build_config(options)
        report = run_validation(nodes=config.nodes, only=options.get('only'))

        document = {**report.model_dump(mode='json', by_alias=True), 'passed': report.passed}
        write_text(json.dumps(document, indent=2) + '\n', config.out, self.stdout)

        failures = report.failures
        if failures:
            names = ', '.join(check.name for check in failures)
            raise CommandError(f"{len(failures)} check(s) failed: {names}", returncode=EXIT_VALIDATION)
        self.stderr.write(self.style.SUCCESS(f"All {len(report.checks)} checks passed"))

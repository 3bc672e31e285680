"""
Management command sweeping the joint distribution over a threshold lattice

One --xi per time: a single number or start:stop:step (stop included).
Rows are computed concurrently (AIRYPROC_THREADS workers) and written in
lexicographic lattice order; a failed row keeps its place with status
'error: ...'.

Usage:
    python manage.py sweep --tau 0 --xi=-4:4:0.5
    python manage.py sweep --tau 0,1 --xi=-2:2:1 --xi 0 --output json
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings
from django.core.management.base import CommandError

from core.forms import SweepConfigForm
from core.management.base import EXIT_DEGENERATE, NumericsCommand
from core.numerics.dist import DistributionOptions, joint_cdf
from core.numerics.exceptions import AiryProcessError
from core.utils.table_export import build_sweep_frame, frame_to_csv, frame_to_json, write_text

logger = logging.getLogger(__name__)


class Command(NumericsCommand):
    help = 'Joint distribution of the Airy process over a lattice of thresholds'

    form_class = SweepConfigForm

    def add_arguments(self, parser):
        parser.add_argument(
            '--tau',
            help='Comma-separated strictly increasing times',
        )
        parser.add_argument(
            '--xi',
            action='append',
            help='One per time: a number or start:stop:step (write --xi=-4:4:0.5 for negative starts)',
        )
        self.add_output_arguments(parser, route_default='fredholm')

    def handle(self, *args, **options):
        config = self.build_config(options)
        lattice = list(itertools.product(*config.axes))
        distribution_options = DistributionOptions(
            nodes=config.nodes,
            route=config.route,
            gradient=True,
            threads=1,
        )

        def compute(xi):
            try:
                result = joint_cdf(config.tau, xi, distribution_options)
            except (AiryProcessError, ValueError) as exc:
                logger.error(f"Sweep row xi={xi} failed: {exc}")
                return {'xi': xi, 'value': math.nan, 'gradient': None, 'residual': None, 'status': f'error: {exc}'}
            status = 'fallback' if 'ode_error' in result.grid else 'ok'
            return {
                'xi': xi,
                'value': result.value,
                'gradient': result.gradient,
                'residual': result.residual,
                'status': status,
            }

        workers = max(int(getattr(settings, 'AIRYPROC_THREADS', 1)), 1)
        logger.info(f"Sweeping {len(lattice)} lattice points on {workers} thread(s)")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                rows = list(executor.map(compute, lattice))
        else:
            rows = [compute(xi) for xi in lattice]

        frame = build_sweep_frame(rows, len(config.tau))
        text = frame_to_json(frame) if config.output == 'json' else frame_to_csv(frame)
        write_text(text, config.out, self.stdout)

        failed = sum(1 for row in rows if row['status'].startswith('error'))
        if failed == len(rows):
            raise CommandError(f"All {failed} sweep rows failed", returncode=EXIT_DEGENERATE)
        if failed:
            self.stderr.write(self.style.WARNING(f"{failed} of {len(rows)} sweep rows failed"))

"""
Management command for F2, the one-time distribution

F2(s) = P(A(0) <= s), the GUE largest-eigenvalue law, with the Painlevé II
residual of q reported in each result's grid.

Usage:
    python manage.py f2 --xi=-2,-1,0,1
    python manage.py f2 --xi 0 --route fredholm --output csv
"""

import json

from core.forms import F2ConfigForm
from core.management.base import NumericsCommand
from core.numerics.dist import f2
from core.numerics.exceptions import AiryProcessError
from core.utils.table_export import build_sweep_frame, frame_to_csv, write_text


class Command(NumericsCommand):
    help = 'GUE largest-eigenvalue distribution F2 at the given points'

    form_class = F2ConfigForm

    def add_arguments(self, parser):
        parser.add_argument(
            '--xi',
            help='Comma-separated points s (use --xi=-2,0 for a negative first value)',
        )
        self.add_output_arguments(parser, route_default='both')

    def handle(self, *args, **options):
        config = self.build_config(options)

        try:
            results = f2(config.xi, route=config.route, n=config.nodes)
        except AiryProcessError as exc:
            raise self.degenerate(exc)

        if config.output == 'csv':
            rows = [
                {
                    'xi': result.xi,
                    'value': result.value,
                    'gradient': result.gradient,
                    'residual': result.residual,
                    'status': 'fallback' if 'ode_error' in result.grid else 'ok',
                }
                for result in results
            ]
            text = frame_to_csv(build_sweep_frame(rows, 1))
        else:
            text = json.dumps([result.model_dump(mode='json') for result in results], indent=2) + '\n'

        write_text(text, config.out, self.stdout)

"""
Management command computing one joint distribution value

P(A(tau_1) <= xi_1, ..., A(tau_m) <= xi_m), with the log-det gradient.

Usage:
    python manage.py joint --tau 0,1 --xi 0,0
    python manage.py joint --tau 0,1 --xi=-1,0.5 --route both --output csv
    python manage.py joint --tau 0 --xi 0 --out f2.json --overwrite
"""

from core.management.base import NumericsCommand
from core.numerics.dist import DistributionOptions, joint_cdf
from core.numerics.exceptions import AiryProcessError
from core.utils.table_export import build_sweep_frame, frame_to_csv, result_to_json, write_text


class Command(NumericsCommand):
    help = 'Joint distribution of the Airy process at given times and thresholds'

    def add_arguments(self, parser):
        parser.add_argument(
            '--tau',
            help='Comma-separated strictly increasing times',
        )
        parser.add_argument(
            '--xi',
            help='Comma-separated thresholds (use --xi=-1,0 for a negative first value)',
        )
        self.add_output_arguments(parser, route_default='fredholm')

    def handle(self, *args, **options):
        config = self.build_config(options)

        try:
            result = joint_cdf(
                config.tau,
                config.xi,
                DistributionOptions(nodes=config.nodes, route=config.route, gradient=True),
            )
        except AiryProcessError as exc:
            raise self.degenerate(exc)

        if config.output == 'csv':
            status = 'fallback' if 'ode_error' in result.grid else 'ok'
            row = {
                'xi': result.xi,
                'value': result.value,
                'gradient': result.gradient,
                'residual': result.residual,
                'status': status,
            }
            text = frame_to_csv(build_sweep_frame([row], len(result.xi)))
        else:
            text = result_to_json(result)

        write_text(text, config.out, self.stdout)

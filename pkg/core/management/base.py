"""
Shared base for the numerics management commands

Exit codes:
    0  success
    1  usage error (bad flags, refused overwrite)
    2  numerical degeneracy or failure
    3  validation failure
"""

import logging
import sys
from functools import partial

from django.core.management.base import BaseCommand, CommandError

from core.forms import RunConfigForm

logger = logging.getLogger(__name__)


EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_VALIDATION = 3


def _usage_error(parser, message):
    """argparse errors exit with EXIT_USAGE instead of argparse's 2"""
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
    raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


class NumericsCommand(BaseCommand):
    """
    Flag validation through a Django form and output handling

    Subclasses set form_class and call build_config() first in handle().
    """

    form_class = RunConfigForm

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = partial(_usage_error, parser)
        return parser

    def add_output_arguments(self, parser, route_default=None):
        parser.add_argument(
            '--nodes',
            type=int,
            help='Nyström nodes per block (8..512, default AIRYPROC_NODES)',
        )
        if route_default is not None:
            parser.add_argument(
                '--route',
                choices=['fredholm', 'ode', 'both'],
                help=f'Computation route (default {route_default})',
            )
            parser.add_argument(
                '--output',
                choices=['json', 'csv'],
                help='Output format',
            )
        parser.add_argument(
            '--out',
            help='Write to this file instead of stdout',
        )
        parser.add_argument(
            '--overwrite',
            action='store_true',
            help='Replace --out if it exists',
        )

    def build_config(self, options):
        """
        Validate options through form_class

        Raises:
            CommandError: invalid flags (exit code 1)
        """
        data = {name: options.get(name) for name in self.form_class.base_fields}
        form = self.form_class(data=data)
        if not form.is_valid():
            messages = []
            for field, errors in form.errors.items():
                label = '' if field == '__all__' else f'--{field}: '
                messages.extend(f'{label}{error}' for error in errors)
            raise CommandError('; '.join(messages), returncode=EXIT_USAGE)
        return form.to_config()

    def degenerate(self, exc):
        logger.error(f"{type(exc).__name__}: {exc}")
        return CommandError(f"Numerical failure: {exc}", returncode=EXIT_DEGENERATE)

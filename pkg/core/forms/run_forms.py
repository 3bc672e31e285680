"""
Run Forms
=========

Forms validating command-line flags of the management commands
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from django import forms
from django.core.exceptions import ValidationError


ROUTE_CHOICES = [
    ('fredholm', 'Fredholm determinant'),
    ('ode', 'ODE system and exponential representation'),
    ('both', 'Both, with the difference as residual'),
]

OUTPUT_CHOICES = [
    ('json', 'JSON'),
    ('csv', 'CSV'),
]

MAX_LATTICE_POINTS = 10000


@dataclass(frozen=True)
class RunConfig:
    """Validated flags of one command invocation"""

    tau: Tuple[float, ...]
    xi: Tuple[float, ...]
    nodes: Optional[int]
    route: str
    output: str
    out: Optional[Path]
    overwrite: bool
    axes: Tuple[Tuple[float, ...], ...] = ()


def parse_numbers(value, label):
    """'0, 1.5, -2' -> (0.0, 1.5, -2.0)"""
    items = [item.strip() for item in str(value).split(',') if item.strip()]
    if not items:
        raise ValidationError(f'{label} needs at least one number')
    try:
        numbers = tuple(float(item) for item in items)
    except ValueError:
        raise ValidationError(f'{label} must be comma-separated numbers, got "{value}"')
    if not all(math.isfinite(number) for number in numbers):
        raise ValidationError(f'{label} must be finite')
    return numbers


def parse_axis(value):
    """
    One sweep coordinate: a number or start:stop:step (stop included)

    Returns:
        tuple of floats
    """
    parts = str(value).split(':')
    if len(parts) == 1:
        return parse_numbers(value, 'xi')
    if len(parts) != 3:
        raise ValidationError(f'Sweep coordinate must be a number or start:stop:step, got "{value}"')
    try:
        start, stop, step = (float(part) for part in parts)
    except ValueError:
        raise ValidationError(f'Sweep coordinate must be a number or start:stop:step, got "{value}"')
    if not all(math.isfinite(v) for v in (start, stop, step)):
        raise ValidationError('Sweep bounds must be finite')
    if step <= 0:
        raise ValidationError(f'Sweep step must be positive, got {step}')
    if stop < start:
        raise ValidationError(f'Sweep stop {stop} lies below start {start}')
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count > MAX_LATTICE_POINTS:
        raise ValidationError(f'Sweep coordinate has {count} points; at most {MAX_LATTICE_POINTS} allowed')
    return tuple(float(v) for v in start + step * np.arange(count))


class RunConfigForm(forms.Form):
    """
    Flags shared by joint, sweep and f2
    """

    tau = forms.CharField(help_text='Comma-separated strictly increasing times')
    xi = forms.CharField(help_text='Comma-separated thresholds, one per time')
    nodes = forms.IntegerField(required=False, min_value=8, max_value=512)
    route = forms.ChoiceField(choices=ROUTE_CHOICES, required=False)
    output = forms.ChoiceField(choices=OUTPUT_CHOICES, required=False)
    out = forms.CharField(required=False)
    overwrite = forms.BooleanField(required=False)

    default_route = 'fredholm'

    def clean_tau(self):
        """Validate times are strictly increasing"""
        tau = parse_numbers(self.cleaned_data['tau'], 'tau')
        if any(later <= earlier for earlier, later in zip(tau, tau[1:])):
            raise ValidationError('times must be strictly increasing')
        return tau

    def clean_xi(self):
        return parse_numbers(self.cleaned_data['xi'], 'xi')

    def clean_out(self):
        """Refuse to replace an existing file unless --overwrite is given"""
        out = self.cleaned_data.get('out')
        if not out:
            return None
        path = Path(out)
        if path.exists() and not self.data.get('overwrite'):
            raise ValidationError(f'{path} exists; pass --overwrite to replace it')
        return path

    def clean(self):
        cleaned_data = super().clean()
        tau = cleaned_data.get('tau')
        xi = cleaned_data.get('xi')
        if tau is not None and xi is not None and len(tau) != len(xi):
            raise ValidationError(f'{len(tau)} times but {len(xi)} thresholds')
        return cleaned_data

    def to_config(self):
        data = self.cleaned_data
        return RunConfig(
            tau=data.get('tau') or (),
            xi=data.get('xi') or (),
            nodes=data.get('nodes'),
            route=data.get('route') or self.default_route,
            output=data.get('output') or 'json',
            out=data.get('out'),
            overwrite=bool(data.get('overwrite')),
        )


class SweepConfigForm(RunConfigForm):
    """
    Flags of sweep: one xi entry per coordinate

    xi arrives as a list of strings, each a number or start:stop:step.
    """

    xi = forms.Field()

    def clean_xi(self):
        specs = self.cleaned_data['xi']
        if isinstance(specs, str):
            specs = [specs]
        if not specs:
            raise ValidationError('sweep needs one --xi per time')
        axes = tuple(parse_axis(spec) for spec in specs)
        total = int(np.prod([len(axis) for axis in axes]))
        if total > MAX_LATTICE_POINTS:
            raise ValidationError(f'Lattice has {total} points; at most {MAX_LATTICE_POINTS} allowed')
        return axes

    def to_config(self):
        config = super().to_config()
        axes = self.cleaned_data['xi']
        return RunConfig(
            tau=config.tau,
            xi=tuple(axis[0] for axis in axes),
            nodes=config.nodes,
            route=config.route,
            output=self.cleaned_data.get('output') or 'csv',
            out=config.out,
            overwrite=config.overwrite,
            axes=axes,
        )


class F2ConfigForm(RunConfigForm):
    """Flags of f2: thresholds only, the single time is 0"""

    tau = None

    default_route = 'both'

    def clean(self):
        cleaned_data = super(RunConfigForm, self).clean()
        cleaned_data['tau'] = (0.0,)
        return cleaned_data


class ValidateConfigForm(RunConfigForm):
    """Flags of validate: resolution and output file only"""

    tau = None
    xi = None

    def clean(self):
        return super(RunConfigForm, self).clean()

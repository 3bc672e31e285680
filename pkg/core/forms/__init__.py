"""
Forms Package
=============

Validation of management-command flags
"""

from .run_forms import (
    F2ConfigForm,
    RunConfig,
    RunConfigForm,
    SweepConfigForm,
    ValidateConfigForm,
)


__all__ = [
    'F2ConfigForm',
    'RunConfig',
    'RunConfigForm',
    'SweepConfigForm',
    'ValidateConfigForm',
]

"""
Django settings for the airyproc project.

The project has no web surface: Django supplies configuration, logging,
the management-command CLI and the test runner for the numerical library
in ``core.numerics``.

Every tunable is read through python-decouple so that it can be overridden
from the environment or a ``.env`` file.
"""

from pathlib import Path

from decouple import config


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config("SECRET_KEY", default="airyproc-local-only")

DEBUG = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core',
]


# Nothing is persisted; an in-memory database keeps the test runner and
# management commands free of file I/O.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True


# =============================================================================
# NUMERICS
# =============================================================================

# Worker threads for operator assembly and sweep rows
AIRYPROC_THREADS = config('AIRYPROC_THREADS', default=1, cast=int)

# Nyström nodes per block and block truncation length
AIRYPROC_NODES = config('AIRYPROC_NODES', default=80, cast=int)
AIRYPROC_BLOCK_CUTOFF = config('AIRYPROC_BLOCK_CUTOFF', default=14.0, cast=float)

# z-integrals inside the kernel entries
AIRYPROC_Z_ORDER = config('AIRYPROC_Z_ORDER', default=160, cast=int)
AIRYPROC_Z_MAX = config('AIRYPROC_Z_MAX', default=40.0, cast=float)

# Largest argument accepted by airy_bi
AIRYPROC_BI_CAP = config('AIRYPROC_BI_CAP', default=15.0, cast=float)

# ODE route
AIRYPROC_ODE_START = config('AIRYPROC_ODE_START', default=6.0, cast=float)
AIRYPROC_ODE_LEFT_LIMIT = config('AIRYPROC_ODE_LEFT_LIMIT', default=-3.0, cast=float)

# Exponential determinant representation
AIRYPROC_ETA_MAX = config('AIRYPROC_ETA_MAX', default=10.0, cast=float)


# =============================================================================
# LOGGING
# =============================================================================

LOG_LEVEL = config('LOG_LEVEL', default='WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['stderr'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'airyproc.settings')
django.setup()

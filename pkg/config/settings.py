"""
Django settings for the mvldp project.

The project has no web surface; Django provides settings, app registry,
management commands and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: nothing is served, the key only satisfies Django's checks
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-mvldp-local-only')

DEBUG = os.getenv('DJANGO_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'apps.expr',
    'apps.monotone',
    'apps.simulate',
    'apps.averaging',
    'apps.ldp',
    'apps.hjb',
    'apps.cli',
]

# No database: every test is a SimpleTestCase and no app defines models
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


REST_FRAMEWORK = {
    # serializers are used for config validation only
    'UNAUTHENTICATED_USER': None,
    'NON_FIELD_ERRORS_KEY': 'non_field_errors',
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': os.getenv('MVLDP_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Runtime defaults for the numerical apps
MVLDP = {
    'THREADS': int(os.getenv('MVLDP_THREADS', '1')),
    'OUTPUT_DIR': Path(os.getenv('MVLDP_OUT', BASE_DIR / 'runs')),
    'FIXTURES_DIR': BASE_DIR / 'apps' / 'cli' / 'fixtures',
    'DOMAIN_TOL': 1e-9,
    'FAST_GUARD': 20.0,
    'BLOCK_SIZE': 256,
    'GAMMA_EXPONENT': 2.0,
}

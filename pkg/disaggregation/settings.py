"""
Django settings for the disaggregation project.
"""

from pathlib import Path
from decouple import config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-change-me-in-production')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost', cast=lambda v: [s.strip() for s in v.split(',')])

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'mixture_estimation',
]

# Database
# SQLite by default, any dj-database-url target (e.g. PostgreSQL) via DATABASE_URL
DATABASES = {
    'default': dj_database_url.config(
        default=config('DATABASE_URL', default='sqlite:///' + str(BASE_DIR / 'db.sqlite3')),
        conn_max_age=600
    )
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Population autocovariance tables are cached per mixture descriptor
CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
        'LOCATION': 'disaggregation-tables',
        'TIMEOUT': config('TABLE_CACHE_TIMEOUT', default=86400, cast=int),
    }
}

# Numerical configuration
QUADRATURE_TOL = config('QUADRATURE_TOL', default=1e-10, cast=float)
QUADRATURE_MIN_NODES = config('QUADRATURE_MIN_NODES', default=32, cast=int)
QUADRATURE_MAX_NODES = config('QUADRATURE_MAX_NODES', default=4096, cast=int)
QUADRATURE_STRICT = config('QUADRATURE_STRICT', default=False, cast=bool)
MAX_GEGENBAUER_DEGREE = config('MAX_GEGENBAUER_DEGREE', default=30, cast=int)
CEPSTRAL_GRID_SIZE = config('CEPSTRAL_GRID_SIZE', default=16384, cast=int)
MA_MAX_LAGS = config('MA_MAX_LAGS', default=4096, cast=int)

# Estimator defaults
DEFAULT_GAMMA = config('DEFAULT_GAMMA', default=0.42, cast=float)
ESTIMATE_GRID_SIZE = config('ESTIMATE_GRID_SIZE', default=512, cast=int)

# Simulation / experiment harness
PANEL_BLOCK_SIZE = config('PANEL_BLOCK_SIZE', default=256, cast=int)
EXPERIMENT_FAILURE_THRESHOLD = config('EXPERIMENT_FAILURE_THRESHOLD', default=0.2, cast=float)
EXPERIMENT_WORKERS = config('EXPERIMENT_WORKERS', default=1, cast=int)
REPORT_PRECISION = config('REPORT_PRECISION', default=10, cast=int)
REPORT_SCHEMA_VERSION = config('REPORT_SCHEMA_VERSION', default='1.0')

# REST Framework settings (serializers only, no API surface)
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
}

# Logging configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'INFO',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
        'mixture_estimation': {
            'handlers': ['console'],
            'level': config('LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}

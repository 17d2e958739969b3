"""
Django settings for the biolabel project.

The project has no web surface: it is driven entirely through the
management commands of the ``labeling`` app (harvest, train, evaluate,
classify, report).
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv()

# Only Django itself reads the environment; tool inputs are command arguments.
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'biolabel-offline-toolchain-no-web-surface')

DEBUG = os.getenv('DJANGO_DEBUG', 'false').lower() == 'true'

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'labeling',
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [],
        },
    },
]

DATABASES = {}

LOG_LEVEL = os.getenv('LABELING_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'labeling': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': True,
        },
    },
}

LABELING_DATA_DIR = BASE_DIR / 'labeling' / 'data'

LABELING = {
    'DEFAULT_LEXICON': LABELING_DATA_DIR / 'default.lexicon',
    'GROUND_TRUTH': LABELING_DATA_DIR / 'ground_truth.jsonl',
    'DEFAULT_SEED': 42,
    'DEFAULT_ALGORITHM': 'svm',
    'TRAIN_FRACTION': 0.7,
    'CV_FOLDS': 10,
    'CV_REPEATS': 10,
    # Flow features see the receiver (Param 0) of instance methods.
    'RECEIVER_FLOWS': True,
    'HYPERPARAMETERS': {
        'nb': {'alpha': 1.0},
        'logistic': {'learning_rate': 0.1, 'l2': 1e-4, 'epochs': 200, 'batch_size': 32},
        'stump': {},
        'tree': {'max_depth': 8, 'min_leaf': 2},
        'svm': {'lam': 5e-3, 'epochs': 50, 'batch_size': 8},
    },
    'MEMORY_SAMPLE_INTERVAL': 0.1,
    # Entries in flight per worker in the classify pipeline.
    'WORKER_WINDOW': 8,
}

# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

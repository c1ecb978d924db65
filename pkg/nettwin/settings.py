"""
Django settings for the nettwin project.

Domain defaults (topology, simulator, model and training constants) are read
with python-decouple so that a `.env` file or the process environment can
override any of them without touching code.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

from pathlib import Path
import os
from decouple import config, Csv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config(
    'SECRET_KEY', default='django-insecure-nettwin-local-development-key')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1',
                       cast=Csv())


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Third party apps
    'rest_framework',

    # Local apps
    'netmodel',
    'simcore',
    'autodiff',
    'plannet',
    'trainer',
    'evalkit',
    'cli',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'nettwin.urls'

WSGI_APPLICATION = 'nettwin.wsgi.application'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]


# Database (run registry only)

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / config('DB_NAME', default='db.sqlite3'),
    }
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

STATIC_URL = config('STATIC_URL', default='/static/')

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

TEST_RUNNER = 'nettwin.test_runner.NetTwinTestRunner'

# Tests tagged 'slow' (desk-scale acceptance runs) only run on request
RUN_SLOW_TESTS = config('NETTWIN_RUN_SLOW', default=False, cast=bool)


# Topology (netmodel)

WIRED_CAPACITY_KBPS = config('WIRED_CAPACITY_KBPS', default=1000.0, cast=float)
WIRELESS_CAPACITY_KBPS = config(
    'WIRELESS_CAPACITY_KBPS', default=6000.0, cast=float)
EDGE_WEIGHT_CAP = config('EDGE_WEIGHT_CAP', default=10.0, cast=float)

# Log-distance loss model: PL(d) = pl0 + 10 * gamma * log10(d / 1 m)
RADIO_PTX_DBM = config('RADIO_PTX_DBM', default=16.0, cast=float)
RADIO_PL0_DB = config('RADIO_PL0_DB', default=41.0, cast=float)
RADIO_GAMMA = config('RADIO_GAMMA', default=3.0, cast=float)
RADIO_RX_SENS_DBM = config('RADIO_RX_SENS_DBM', default=-77.0, cast=float)

GRID_ROWS = config('GRID_ROWS', default=4, cast=int)
GRID_COLS = config('GRID_COLS', default=4, cast=int)
GRID_SPACING_M = config('GRID_SPACING_M', default=30.0, cast=float)
PERTURB_RADIUS_M = config('PERTURB_RADIUS_M', default=10.0, cast=float)

TRAFFIC_MEAN_SET = config('TRAFFIC_MEAN_SET', default='1,10,20',
                          cast=Csv(cast=float))
TRAFFIC_DATA_RATE_KBPS = config(
    'TRAFFIC_DATA_RATE_KBPS', default=100.0, cast=float)
TRAFFIC_NUM_PATHS = config('TRAFFIC_NUM_PATHS', default=10, cast=int)
TRAFFIC_MAX_HOPS = config('TRAFFIC_MAX_HOPS', default=3, cast=int)
PATH_PAIR_SEED = config('PATH_PAIR_SEED', default=2023, cast=int)


# Packet simulator (simcore)

SIM_DURATION_S = config('SIM_DURATION_S', default=30.0, cast=float)
SIM_PACKET_SIZE_B = config('SIM_PACKET_SIZE_B', default=512, cast=int)
SIM_QUEUE_CAPACITY = config('SIM_QUEUE_CAPACITY', default=100, cast=int)
SIM_BACKOFF_MEAN_S = config('SIM_BACKOFF_MEAN_S', default=0.001, cast=float)
SIM_PROP_DELAY_S = config('SIM_PROP_DELAY_S', default=1e-5, cast=float)


# Model (plannet)

MODEL_ITERATIONS = config('MODEL_ITERATIONS', default=3, cast=int)
MODEL_PATH_DIM = config('MODEL_PATH_DIM', default=32, cast=int)
MODEL_LINK_DIM = config('MODEL_LINK_DIM', default=16, cast=int)
MODEL_NODE_DIM = config('MODEL_NODE_DIM', default=16, cast=int)
MODEL_LINK_MLP_HIDDEN = config('MODEL_LINK_MLP_HIDDEN', default='32,64,128,32',
                               cast=Csv(cast=int))
MODEL_READOUT_HIDDEN = config('MODEL_READOUT_HIDDEN', default='64,32,16',
                              cast=Csv(cast=int))
MODEL_SHARE_WEIGHTS = config('MODEL_SHARE_WEIGHTS', default=False, cast=bool)

# Input feature scaling
FEATURE_TAU_SCALE = config('FEATURE_TAU_SCALE', default=20.0, cast=float)
FEATURE_CAPACITY_SCALE = config(
    'FEATURE_CAPACITY_SCALE', default=6000.0, cast=float)


# Training (trainer)

TRAIN_FOLDS = config('TRAIN_FOLDS', default=3, cast=int)
TRAIN_EPOCHS = config('TRAIN_EPOCHS', default=200, cast=int)
TRAIN_BATCH_SIZE = config('TRAIN_BATCH_SIZE', default=16, cast=int)
TRAIN_LR = config('TRAIN_LR', default=1e-3, cast=float)
TRAIN_L2 = config('TRAIN_L2', default=1e-4, cast=float)
TRAIN_PATIENCE = config('TRAIN_PATIENCE', default=20, cast=int)
TRAIN_SAMPLES = config('TRAIN_SAMPLES', default=300, cast=int)
TEST_SAMPLES = config('TEST_SAMPLES', default=100, cast=int)
# Reference sample counts the desk-scale defaults are scaled from
REFERENCE_TRAIN_SAMPLES = 1500
REFERENCE_TEST_SAMPLES = 1000
DATASET_MAX_SKIP_RATIO = config(
    'DATASET_MAX_SKIP_RATIO', default=0.01, cast=float)


# Evaluation (evalkit)

EVAL_ALPHA = config('EVAL_ALPHA', default=0.05, cast=float)
EVAL_SIM_SEED_OFFSET = config('EVAL_SIM_SEED_OFFSET', default=100000, cast=int)
BENCH_REPETITIONS = config('BENCH_REPETITIONS', default=20, cast=int)
# Per-path rate the benchmark starts from; doubled until queues overflow
BENCH_DATA_RATE_KBPS = config(
    'BENCH_DATA_RATE_KBPS', default=1000.0, cast=float)


# Command line defaults (cli)

DEFAULT_SEED = config('NETTWIN_SEED', default=0, cast=int)
DEFAULT_WORKERS = config('NETTWIN_WORKERS', default=os.cpu_count() or 1,
                         cast=int)


# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': os.path.join(BASE_DIR, 'logs', 'nettwin.log'),
            'formatter': 'verbose',
        },
        'console': {
            'level': config('CONSOLE_LOG_LEVEL', default='WARNING'),
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['file', 'console'],
        'level': 'INFO',
    },
}

# Create logs directory if it doesn't exist
os.makedirs(os.path.join(BASE_DIR, 'logs'), exist_ok=True)

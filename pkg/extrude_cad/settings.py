"""
Django settings for the extrude_cad project.

The project is a batch numerical tool: Django provides settings, management commands
(the command-line front end), the fit-run ledger (ORM + admin) and the test runner.

Every kernel default below can be overridden from the environment or a `.env` file in the
project root.
"""

from pathlib import Path
import environ
import dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load .env first so environ.Env sees its values
dotenv_path = BASE_DIR / ".env"
dotenv.load_dotenv(dotenv_path)

env = environ.Env()
if dotenv_path.exists():
    environ.Env.read_env(str(dotenv_path))


SECRET_KEY = env("SECRET_KEY", default="django-insecure-extrude-cad-local-only")

DEBUG = env.bool("DEBUG", default=True)

ALLOWED_HOSTS = env.list("ALLOWED_HOSTS", default=[])


# Application definition

INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
    # Kernel apps
    "sketch",
    "sdf2d",
    "extrude",
    "stump",
    "fitting",
    "shapeio",
    "cli",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

ROOT_URLCONF = "extrude_cad.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.debug",
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]


# Database (fit-run ledger)

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": env("LEDGER_DB", default=str(BASE_DIR / "db.sqlite3")),
        "OPTIONS": {
            # Add timeout to prevent database locked errors
            "timeout": 20,  # seconds
        },
    }
}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True

STATIC_URL = "static/"

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging

LOG_LEVEL = env("LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
        for app in ("sketch", "sdf2d", "extrude", "stump", "fitting", "shapeio", "cli")
    },
}


# Kernel defaults

# 0 keeps torch's own thread count
EXTRUDE_CAD_THREADS = env.int("EXTRUDE_CAD_THREADS", default=0)

SKETCH_CURVES = env.int("SKETCH_CURVES", default=4)
SKETCH_SAMPLES_PER_CURVE = env.int("SKETCH_SAMPLES_PER_CURVE", default=100)

SDF_EPSILON = env.float("SDF_EPSILON", default=1e-8)
SDF_NEAREST = env("SDF_NEAREST", default="brute")
SDF_QUERY_CHUNK = env.int("SDF_QUERY_CHUNK", default=4096)
# "sample" (nearest sample distance) or "segment" (project onto the adjacent polyline edges)
SDF_REFINE = env("SDF_REFINE", default="sample")

FIT_LEARNING_RATE = env.float("FIT_LEARNING_RATE", default=1e-2)
FIT_ITERATIONS = env.int("FIT_ITERATIONS", default=2000)
FIT_LAMBDA_P = env.float("FIT_LAMBDA_P", default=0.01)
FIT_LAMBDA_W = env.float("FIT_LAMBDA_W", default=0.001)
FIT_ETA = env.float("FIT_ETA", default=100.0)
FIT_ETA_DOUBLING_INTERVAL = env.int("FIT_ETA_DOUBLING_INTERVAL", default=0)
FIT_ETA_MAX = env.float("FIT_ETA_MAX", default=1e4)
FIT_FD_STEP = env.float("FIT_FD_STEP", default=1e-5)
FIT_SEED = env.int("FIT_SEED", default=0)
FIT_RESTARTS = env.int("FIT_RESTARTS", default=3)
FIT_GRID_RESOLUTION = env.int("FIT_GRID_RESOLUTION", default=32)
FIT_PADDING = env.float("FIT_PADDING", default=0.15)

STUMP_THRESHOLD = env.float("STUMP_THRESHOLD", default=0.5)

RECORD_FIT_RUNS = env.bool("RECORD_FIT_RUNS", default=True)

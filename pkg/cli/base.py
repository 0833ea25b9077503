"""Shared behaviour of every kernel management command."""
import logging
import sys
from functools import partial

import torch
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from extrude_cad.exceptions import (
    ConfigError,
    DomainError,
    FormatParseError,
    InvalidParameterError,
    NonFiniteLossError,
)
from fitting.config import FitConfig

logger = logging.getLogger(__name__)

# (exception types, machine-readable kind, exit code), checked in order
ERROR_CODES = [
    ((FileNotFoundError,), "missing_file", 3),
    ((FormatParseError, ConfigError), "malformed", 4),
    ((InvalidParameterError, DomainError), "invalid_parameter", 5),
    ((NonFiniteLossError,), "non_finite", 6),
]

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.INFO, 3: logging.DEBUG}

KERNEL_LOGGERS = ("sketch", "sdf2d", "extrude", "stump", "fitting", "shapeio", "cli")


def error_line(kind: str, detail) -> str:
    detail = str(detail).replace("\\", "\\\\").replace('"', '\\"').replace("\n", " ")
    return f'error={kind} detail="{detail}"'


def classify(exc: Exception):
    for types, kind, code in ERROR_CODES:
        if isinstance(exc, types):
            return kind, code
    return "internal", 1


class KernelCommand(BaseCommand):
    """
    Adds --threads and --config to every command and turns kernel exceptions into a
    CommandError carrying one `error=<kind> detail="..."` line and a distinct exit code.
    """

    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.add_argument("--threads", type=int, default=settings.EXTRUDE_CAD_THREADS,
                            help="Cap on torch worker threads (0 keeps the torch default)")
        parser.add_argument("--config", default=None, help="JSON file of FitConfig fields")
        parser.error = partial(self.usage_error, parser)
        return parser

    def usage_error(self, parser, message: str) -> None:
        """Bad flags exit 2 with the same error line as every other failure"""
        if not parser.called_from_command_line:
            raise CommandError("Error: %s" % message)
        parser.print_usage(sys.stderr)
        sys.stderr.write(error_line("usage", message) + "\n")
        sys.exit(2)

    def execute(self, *args, **options):
        self.configure(options)
        try:
            return super().execute(*args, **options)
        except CommandError:
            raise
        except Exception as e:
            kind, code = classify(e)
            if code == 1:
                logger.exception("Unexpected failure in %s", type(self).__module__)
            raise CommandError(error_line(kind, e), returncode=code)

    def configure(self, options) -> None:
        level = VERBOSITY_LEVELS.get(options.get("verbosity", 1), logging.INFO)
        for name in KERNEL_LOGGERS:
            logging.getLogger(name).setLevel(level)
        threads = options.get("threads") or 0
        if threads < 0:
            raise CommandError(error_line("invalid_parameter", f"--threads must be >= 0, got {threads}"),
                               returncode=5)
        if threads:
            torch.set_num_threads(threads)

    def report(self, **fields) -> None:
        """One key=value result line on stdout"""
        self.stdout.write(" ".join(f"{key}={value}" for key, value in fields.items()))


# flag -> FitConfig field; None values leave the file/settings value in place
FIT_FLAGS = {
    "iters": ("iterations", int),
    "lr": ("learning_rate", float),
    "seed": ("seed", int),
    "lambda_p": ("lambda_p", float),
    "lambda_w": ("lambda_w", float),
    "eta": ("eta", float),
    "eta_doubling": ("eta_doubling_interval", int),
    "samples": ("samples_per_curve", int),
    "gradient_mode": ("gradient_mode", str),
    "fd_step": ("fd_step", float),
    "refine": ("refine", str),
    "nearest": ("nearest", str),
    "curves": ("n_curves", int),
    "continuity": ("continuity_mode", str),
    "sketch_type": ("sketch_type", str),
    "restarts": ("restarts", int),
    "resolution": ("grid_resolution", int),
    "padding": ("padding", float),
    "threshold": ("threshold", float),
}


def add_fit_arguments(parser, flags) -> None:
    for flag in flags:
        field, kind = FIT_FLAGS[flag]
        parser.add_argument("--" + flag.replace("_", "-"), dest=flag, type=kind, default=None,
                            help=f"Overrides FitConfig.{field}")


def fit_config(options) -> FitConfig:
    overrides = {field: options.get(flag) for flag, (field, _) in FIT_FLAGS.items() if flag in options}
    return FitConfig.load(options.get("config"), **overrides)

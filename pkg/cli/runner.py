"""Entry point mapping `extrude-cad <command> ...` onto the management commands."""
import os
import sys
from typing import List, Optional

COMMANDS = ["fit2d", "fit3d", "eval-sdf", "binarize", "export", "metrics", "selftest", "make-target",
            "sdf-accuracy"]


def command_name(name: str) -> str:
    """eval-sdf -> eval_sdf"""
    return name.replace("-", "_")


def run(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code instead of exiting"""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "extrude_cad.settings")
    import django
    from django.core.management import load_command_class

    from cli.base import error_line

    django.setup()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help", "help"):
        sys.stdout.write("usage: extrude-cad <command> [options]\ncommands: " + ", ".join(COMMANDS) + "\n")
        return 0 if argv else 2
    name = command_name(argv[0])
    if name not in {command_name(c) for c in COMMANDS}:
        sys.stderr.write(error_line("usage", f"unknown command {argv[0]!r}") + "\n")
        return 2

    command = load_command_class("cli", name)
    try:
        command.run_from_argv(["extrude-cad", name] + argv[1:])
    except SystemExit as exit_:
        if exit_.code is None:
            return 0
        return exit_.code if isinstance(exit_.code, int) else 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

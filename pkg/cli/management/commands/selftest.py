from django.conf import settings
from django.core.management.base import CommandError
from django.test.utils import get_runner

from cli.base import KernelCommand, error_line

SUITES = ["sketch", "sdf2d", "extrude", "stump", "fitting", "shapeio", "cli"]


class Command(KernelCommand):
    help = "Run the property and oracle test suites (long fitting runs only with --include-slow)"

    def add_arguments(self, parser):
        parser.add_argument("suites", nargs="*", default=SUITES, help="Apps to test")
        parser.add_argument("--include-slow", action="store_true")
        parser.add_argument("--failfast", action="store_true")

    def handle(self, *args, **options):
        runner_class = get_runner(settings)
        exclude = set() if options["include_slow"] else {"slow"}
        runner = runner_class(verbosity=options["verbosity"], failfast=options["failfast"],
                              exclude_tags=exclude, interactive=False)
        failures = runner.run_tests(options["suites"])
        if failures:
            raise CommandError(error_line("selftest", f"{failures} test(s) failed"), returncode=1)
        self.report(selftest="passed", suites=",".join(options["suites"]))

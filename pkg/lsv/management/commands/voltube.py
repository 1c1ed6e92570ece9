"""
Management Command: voltube

Runs one experiment subcommand from a JSON config and writes CSV/JSON
artifacts. Exit codes: 0 success, 2 config error, 3 hypothesis violation,
4 numerical failure.
"""

from django.core.management.base import BaseCommand, CommandError

from lsv.exceptions import ConfigError, HypothesisViolationError, ModelSpecError, VoltubeError
from lsv.services.experiments import SUBCOMMANDS, ExperimentRunner, load_config
from lsv.services.experiments.persist import save_run

EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4


class Command(BaseCommand):
    help = "Run a voltube experiment (constants, curves, tube, tails, ...) from a JSON config"

    def add_arguments(self, parser):
        parser.add_argument(
            "subcommand",
            choices=SUBCOMMANDS,
            help="Experiment to run",
        )

        parser.add_argument(
            "--config",
            type=str,
            required=True,
            help="Path to the JSON experiment config",
        )

        parser.add_argument("--seed", type=int, default=None, help="Override run.seed")
        parser.add_argument("--paths", type=int, default=None, help="Override run.n_paths")
        parser.add_argument("--steps", type=int, default=None, help="Override run.n_steps")
        parser.add_argument("--out", type=str, default=None, help="Output directory (overrides output.directory)")
        parser.add_argument("--workers", type=int, default=None, help="Simulation threads (results do not depend on it)")

        parser.add_argument(
            "--allow-unverified",
            action="store_true",
            help="Proceed when the coefficient audit fails; violations are embedded in the output metadata",
        )

        parser.add_argument(
            "--save",
            action="store_true",
            help="Persist the run as an ExperimentRun row",
        )

        parser.add_argument(
            "--save-paths",
            type=str,
            default=None,
            help="Also write the simulated paths to this VTB1 file",
        )

    def handle(self, *args, **options):
        subcommand = options["subcommand"]

        # -----------------------------------------------------
        # Load config
        # -----------------------------------------------------
        overrides = {"seed": options["seed"], "n_paths": options["paths"], "n_steps": options["steps"]}
        try:
            config = load_config(options["config"], overrides)
            runner = ExperimentRunner(
                config,
                out_dir=options["out"],
                allow_unverified=options["allow_unverified"],
                workers=options["workers"],
                save_paths=options["save_paths"],
            )
        except (ConfigError, ModelSpecError) as exc:
            raise CommandError(f"Config error: {exc}", returncode=EXIT_CONFIG) from exc

        self.stdout.write(self.style.SUCCESS(f"Config: {options['config']} ({config.config_hash[:12]})"))
        self.stdout.write(self.style.SUCCESS(f"Model: {config.family} seed={config.seed}"))

        # -----------------------------------------------------
        # Hypothesis audit
        # -----------------------------------------------------
        try:
            report = runner.audit()
        except HypothesisViolationError as exc:
            raise CommandError(
                f"{exc} (use --allow-unverified to proceed anyway)", returncode=EXIT_HYPOTHESIS
            ) from exc
        if not report.passed:
            self.stdout.write(self.style.WARNING(f"UNVERIFIED: {report.summary()}"))

        # -----------------------------------------------------
        # Run
        # -----------------------------------------------------
        try:
            result = runner.run(subcommand)
        except ConfigError as exc:
            raise CommandError(f"Config error: {exc}", returncode=EXIT_CONFIG) from exc
        except VoltubeError as exc:
            raise CommandError(f"{subcommand} failed: {exc}", returncode=EXIT_NUMERICAL) from exc

        for path in result.artifacts:
            self.stdout.write(self.style.SUCCESS(f"✓ Wrote {path}"))

        if options["save"]:
            run = save_run(result)
            self.stdout.write(self.style.SUCCESS(f"✓ Saved run #{run.pk}"))

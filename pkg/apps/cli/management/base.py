import json
import logging
import time

from django.core.management.base import BaseCommand, CommandError

from apps.averaging.exceptions import AveragingError, DissipativityError, MixingRateError
from apps.expr.exceptions import ExprError
from apps.hjb.exceptions import HjbError
from apps.ldp.exceptions import LdpError
from apps.monotone.exceptions import InteriorOriginError, OperatorError
from apps.simulate.exceptions import NotInteriorError, SimulationError
from apps.simulate.parallel import default_threads

from ..config import load_config
from ..exceptions import ConfigError
from ..output import jsonable, out_dir, write_manifest

logger = logging.getLogger(__name__)

# a standing assumption does not hold for the configured system
ASSUMPTION_ERRORS = (DissipativityError, MixingRateError, NotInteriorError, InteriorOriginError)
NUMERIC_ERRORS = (SimulationError, AveragingError, LdpError, HjbError, OperatorError, ExprError)


class RunCommand(BaseCommand):
    """
    Shared flags and plumbing for the run commands: load the config, run
    the task, write artifacts and manifest.json, print a JSON summary.
    Exit codes: 1 usage/config error, 2 failed validation, 0 otherwise.
    """

    command = None
    config_required = True
    default_config = None
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--config', required=self.config_required, default=self.default_config,
                            help="run document (JSON or YAML) or a manifest.json to rerun")
        parser.add_argument('--out', help="output directory")
        parser.add_argument('--seed', type=int, help="root seed, overrides the config")
        parser.add_argument('--threads', type=int, help="worker threads (env MVLDP_THREADS)")
        parser.add_argument('--override', action='append', default=[], metavar='KEY=VALUE',
                            help="patch the config by dotted path; VALUE is parsed as JSON")

    def handle(self, *args, **options):
        try:
            config = load_config(options['config'], options['override'], options['seed'])
            self.check_config(config)
        except ConfigError as exc:
            self.stderr.write(json.dumps({'error': str(exc), 'errors': exc.errors}, indent=2))
            raise CommandError(str(exc), returncode=1)
        threads = options['threads'] if options['threads'] else default_threads()
        out = out_dir(options['out'], config, self.command)
        started = time.monotonic()
        logger.info("%s start name=%s seed=%d threads=%d out=%s", self.command, config.name, config.seed, threads, out)
        try:
            summary, outputs, passed = self.run(config, out, threads)
        except ASSUMPTION_ERRORS as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=2)
        except NUMERIC_ERRORS as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=1)
        write_manifest(out, config, self.command, outputs=outputs)
        logger.info("%s done passed=%s elapsed=%.2fs", self.command, passed, time.monotonic() - started)
        self.stdout.write(json.dumps(jsonable({'command': self.command, 'out': str(out), **summary}), sort_keys=True))
        if not passed:
            raise CommandError(f"{self.command}: validation failed", returncode=2)

    def require(self, config, *blocks):
        missing = [block for block in blocks if not getattr(config, block)]
        if missing:
            raise ConfigError(
                f"{self.command} needs the {', '.join(missing)} block(s)",
                {f'/{block}': [f"required by {self.command}"] for block in missing},
            )

    def check_config(self, config):
        """Raise ConfigError when the config lacks what the command needs."""

    def run(self, config, out, threads):
        """Return (summary dict, written files, passed)."""
        raise NotImplementedError

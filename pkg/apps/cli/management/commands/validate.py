from apps.monotone.operators import Zero

from ...exceptions import ConfigError
from ...golden import run_golden
from ...output import write_json
from ..base import RunCommand


class Command(RunCommand):
    help = ("Golden validation suite on the mean-reverting volatility scenario; exits 2 when a "
            "criterion fails. --quick scales the Monte Carlo budgets down.")
    command = 'validate'
    config_required = False
    default_config = 'example5.json'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--quick', action='store_true', help="smaller Monte Carlo budgets")

    def handle(self, *args, **options):
        self.quick = options['quick']
        return super().handle(*args, **options)

    def check_config(self, config):
        spec = config.spec
        errors = {}
        if (spec.n, spec.m) != (1, 1):
            errors['/system/n'] = ["the golden scenario is one-dimensional in x and y"]
        for name in ('s', 'nu'):
            if name not in spec.params:
                errors[f'/system/params/{name}'] = ["required by the golden scenario"]
        if spec.x_dependent_slow or spec.x_dependent_fast or not isinstance(spec.A, Zero):
            errors['/system'] = ["the golden scenario has x-free coefficients and no constraint"]
        if errors:
            raise ConfigError.from_errors(errors)

    def run(self, config, out, threads):
        results = run_golden(config, quick=self.quick, threads=threads)
        passed = all(r.passed for r in results)
        json_path = write_json(out / 'validate.json', {'quick': self.quick, 'passed': passed,
                                                       'criteria': [r.to_json() for r in results]})
        summary = {'passed': passed, 'criteria': {r.name: r.passed for r in results}}
        return summary, [json_path], passed

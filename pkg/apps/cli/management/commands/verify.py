import numpy as np

from apps.averaging.coefficients import averaged_coefficients
from apps.averaging.exceptions import AveragingError
from apps.monotone.operators import NormalConeBall, NormalConeBox, check_operator_assumption
from apps.simulate.scheme import run_paths
from apps.simulate.verifiers import (
    verify_discrete_vi,
    verify_dissipativity,
    verify_interior_estimate,
    verify_lyapunov,
    verify_slow_coefficients,
)

from ...exceptions import ConfigError
from ...output import write_json
from ..base import RunCommand


class Command(RunCommand):
    help = ("Check the standing assumptions on the configured system: interior origin, "
            "dissipativity, slow-coefficient growth, averaged diffusion, and on simulated "
            "paths the discrete variational inequality and interior estimate.")
    command = 'check'

    def check_config(self, config):
        lyapunov = config.check.lyapunov
        if lyapunov is not None and config.spec.m != 1:
            raise ConfigError("the Lyapunov grid is one-dimensional", {'/check/lyapunov/grid': ["requires m == 1"]})

    def run(self, config, out, threads):
        spec, task, seed = config.spec, config.check, config.seed
        report = {
            'operator': check_operator_assumption(spec.A),
            'dissipativity': verify_dissipativity(spec, task.samples, seed, task.radius).__dict__,
            'slow_coefficients': verify_slow_coefficients(spec, task.samples, seed, task.radius).__dict__,
        }
        passed = report['operator']['interior_origin']
        passed &= report['dissipativity']['passed'] and report['slow_coefficients']['passed']

        if report['dissipativity']['passed'] or config.averaging.override:
            try:
                point = averaged_coefficients(spec, spec.x0, config.averaging)
            except AveragingError as exc:
                report['averaged'] = {'passed': False, 'error': str(exc)}
            else:
                a = np.atleast_2d(point.a_bar.value)
                residual = float(np.linalg.norm(point.sigma_bar @ point.sigma_bar.T - a))
                report['averaged'] = {'min_eigenvalue': float(np.linalg.eigvalsh(a).min()),
                                      'sqrt_residual': residual, 'passed': residual <= 1e-8}
            passed &= report['averaged']['passed']

        if config.sim and config.scale and not spec.A.full_domain:
            sim = config.sim.replace(path_count=task.vi_paths)
            samples = spec.A.graph_sample(seed, 1000)
            paths = run_paths(spec, config.scale, sim, threads)
            vi = [verify_discrete_vi(path, spec.A, samples) for path in paths]
            report['discrete_vi'] = {'paths': len(vi), 'max_violation': max(r.max_violation for r in vi),
                                     'passed': all(r.passed for r in vi)}
            passed &= report['discrete_vi']['passed']
            if isinstance(spec.A, (NormalConeBox, NormalConeBall)) and report['operator']['interior_origin']:
                interior = [verify_interior_estimate(path, spec.A, np.zeros(spec.n)) for path in paths]
                report['interior_estimate'] = {'paths': len(interior), 'passed': all(r.passed for r in interior),
                                               'min_slack': min(r.lhs - r.rhs for r in interior)}
                passed &= report['interior_estimate']['passed']

        if task.lyapunov is not None:
            lyap = task.lyapunov
            low, high, count = lyap.grid
            result = verify_lyapunov(spec, lyap.zeta, np.linspace(low, high, int(count)), lyap.L1, lyap.L2,
                                     lyap.center, lyap.radius, x_points=lyap.x_points)
            report['lyapunov'] = result.__dict__
            passed &= result.passed

        report['passed'] = bool(passed)
        json_path = write_json(out / 'check.json', report)
        return {'passed': bool(passed)}, [json_path], bool(passed)

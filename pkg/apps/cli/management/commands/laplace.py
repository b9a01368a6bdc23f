from apps.averaging.coefficients import build_averaged
from apps.ldp.montecarlo import LAPLACE_HEADER, laplace, strictly_decreasing, tightness_probe
from apps.ldp.optimize import OptimizerConfig, variational_value

from ...output import write_csv, write_json
from ..base import RunCommand

TIGHTNESS_HEADER = ['epsilon', 'threshold', 'count', 'total', 'p_hat', 'stderr',
                    'log_p', 'log_low', 'log_high', 'censored']


class Command(RunCommand):
    help = ("Monte Carlo Laplace functional -eps log E exp(-h(X_t)/eps) for each configured "
            "scale, optionally the limit value and the tightness probe.")
    command = 'laplace'

    def check_config(self, config):
        self.require(config, 'laplace', 'scales')

    def run(self, config, out, threads):
        spec, task = config.spec, config.laplace
        estimates = [laplace(spec, scales, task.t, task.h, task.montecarlo, threads) for scales in config.scales]
        outputs = [write_csv(out / 'laplace.csv', LAPLACE_HEADER, [e.row() for e in estimates])]
        payload = {'t': task.t, 'h': task.h.to_source(),
                   'estimates': [{**e.to_json(), 'epsilon': e.epsilon, 'gamma': e.gamma, 'ess': e.ess}
                                 for e in estimates]}
        if task.limit:
            avg = build_averaged(spec, config.averaging, config.x_grid, threads)
            optimizer = config.rate.optimizer if config.rate else OptimizerConfig(seed=config.seed)
            u0 = variational_value(avg, spec.A, spec.x0, task.t, task.h, optimizer, threads).value
            payload['limit'] = u0
            payload['gaps'] = [abs(float(e.value) - u0) for e in estimates]
        if task.thresholds:
            horizon = task.tightness_t or task.t
            probes, rows = [], []
            for scales in config.scales:
                probe = tightness_probe(spec, scales, horizon, task.thresholds, task.montecarlo, threads=threads)
                probes.append({'epsilon': scales.epsilon, 'rows': [row.to_json() for row in probe],
                               'strictly_decreasing': strictly_decreasing(probe)})
                rows.extend([scales.epsilon, r.threshold, r.count, r.total, r.p_hat, r.stderr,
                             r.log_p, r.log_low, r.log_high, r.censored] for r in probe)
            outputs.append(write_csv(out / 'tightness.csv', TIGHTNESS_HEADER, rows))
            payload['tightness'] = probes
        outputs.append(write_json(out / 'laplace.json', payload))
        summary = {'values': [float(e.value) for e in estimates], 'limit': payload.get('limit')}
        return summary, outputs, True

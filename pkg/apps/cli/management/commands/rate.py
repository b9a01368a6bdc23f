import logging

from apps.averaging.coefficients import build_averaged
from apps.ldp.exceptions import UnreachableTargetError
from apps.ldp.optimize import rate

from ...output import write_csv, write_json
from ..base import RunCommand

logger = logging.getLogger(__name__)


class Command(RunCommand):
    help = "Rate function I(x; x0, t) at the configured targets; writes rate.csv and rate.json."
    command = 'rate'

    def check_config(self, config):
        self.require(config, 'rate')

    def run(self, config, out, threads):
        spec, task = config.spec, config.rate
        avg = build_averaged(spec, config.averaging, config.x_grid, threads)
        entries = []
        for target in task.targets:
            entry = {'target': target, 't': task.t, 'x0': spec.x0}
            try:
                result = rate(avg, spec.A, spec.x0, target, task.t, task.optimizer, threads)
            except UnreachableTargetError as exc:
                logger.warning("rate target=%s unreachable", target)
                entry.update(value=None, converged=False, diagnostic='unreachable',
                             message=str(exc), reachable=exc.reachable)
            else:
                entry.update(result.to_json(), diagnostic=None if result.converged else 'not converged')
            entries.append(entry)
        header = ['t'] + [f'x{i}' for i in range(spec.n)] + ['value', 'converged', 'terminal_gap', 'nonunique']
        rows = [[task.t, *e['target'], e['value'], e['converged'], e.get('terminal_gap'), e.get('nonunique')]
                for e in entries]
        csv_path = write_csv(out / 'rate.csv', header, rows)
        json_path = write_json(out / 'rate.json', {'results': entries})
        summary = {'targets': len(entries), 'converged': sum(bool(e['converged']) for e in entries),
                   'values': [e['value'] for e in entries]}
        return summary, [csv_path, json_path], True

from apps.averaging.coefficients import build_averaged
from apps.hjb.solver import residual_check, solve_1d

from ...output import write_csv, write_json
from ..base import RunCommand


class Command(RunCommand):
    help = "Solve the 1D limit HJB equation on a grid; writes hjb.csv (t, x, u) and hjb.json."
    command = 'hjb'

    def check_config(self, config):
        self.require(config, 'hjb')

    def run(self, config, out, threads):
        spec, task = config.spec, config.hjb
        avg = build_averaged(spec, config.averaging, config.x_grid, threads)
        sol = solve_1d(avg, spec.A, task.h, task.grid)
        residual = residual_check(sol, avg, spec.A)
        csv_path = write_csv(out / 'hjb.csv', ['t', 'x', 'u'], sol.rows(task.every))
        payload = {
            'dx': sol.dx, 'dt': sol.dt, 'steps': len(sol.t) - 1, 'theta': sol.theta, 'boundary': sol.boundary,
            'residual': {'max': residual.max_residual, 'checked': residual.checked, 'excluded': residual.excluded},
            'final': {'x': sol.x, 'u': sol.final},
        }
        json_path = write_json(out / 'hjb.json', payload)
        summary = {'points': sol.x.size, 'steps': len(sol.t) - 1, 'max_residual': residual.max_residual}
        return summary, [csv_path, json_path], True

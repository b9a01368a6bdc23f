import numpy as np
from django.conf import settings

from apps.simulate.scheme import run_paths, write_paths_csv

from ...output import write_json
from ..base import RunCommand


class Command(RunCommand):
    help = "Simulate paths of the slow-fast system; writes paths.csv and summary.json."
    command = 'simulate'

    def check_config(self, config):
        self.require(config, 'scales', 'sim')

    def run(self, config, out, threads):
        spec, scales, sim = config.spec, config.scale, config.sim
        paths = run_paths(spec, scales, sim, threads=threads)
        csv_path = out / 'paths.csv'
        write_paths_csv(paths, csv_path)
        terminal = np.stack([path.X[-1] for path in paths])
        distance = max(path.max_domain_distance(spec.A) for path in paths)
        summary = {
            'paths': len(paths),
            'steps': sim.steps,
            'epsilon': scales.epsilon,
            'gamma': scales.gamma,
            'mean_terminal_x': terminal.mean(axis=0),
            'max_domain_distance': distance,
            'mean_total_variation': float(np.mean([path.total_variation for path in paths])),
        }
        json_path = write_json(out / 'summary.json', summary)
        return summary, [csv_path, json_path], distance <= settings.MVLDP['DOMAIN_TOL']

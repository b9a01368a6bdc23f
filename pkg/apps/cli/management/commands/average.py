import numpy as np

from apps.averaging.coefficients import (
    AveragedPoint,
    averaged_diffusion,
    averaged_drift,
    averaged_header,
    sqrt_psd,
)
from apps.averaging.invariant import estimate_invariant
from apps.simulate.parallel import ordered_map

from ...exceptions import ConfigError
from ...output import write_csv, write_json
from ..base import RunCommand


class Command(RunCommand):
    help = ("Estimate the invariant measure of the frozen fast equation and the averaged "
            "coefficients at x0 or over average.x_grid; writes averaged.csv and invariant.json.")
    command = 'average'

    def check_config(self, config):
        if config.x_grid and config.spec.n != 1:
            raise ConfigError("average.x_grid is supported for n == 1", {'/average/x_grid': ["requires n == 1"]})

    def run(self, config, out, threads):
        spec, cfg = config.spec, config.averaging
        xs = [np.array([x]) for x in config.x_grid] if config.x_grid else [spec.x0]

        def at(x):
            measure = estimate_invariant(spec, x, cfg)
            b_bar = averaged_drift(spec, x, cfg, measure)
            a_bar = averaged_diffusion(spec, x, cfg, measure)
            return measure, AveragedPoint(x=x, b_bar=b_bar, a_bar=a_bar, sigma_bar=sqrt_psd(a_bar.value))

        results = ordered_map(at, xs, threads)
        csv_path = write_csv(out / 'averaged.csv', averaged_header(spec.n), [point.row() for _, point in results])
        payload = {
            'points': [point.to_json() for _, point in results],
            'measures': [
                {'x': measure.x, 'mean': measure.mean.to_json(), 'covariance': measure.covariance,
                 'second_moment': measure.second_moment, 'n_effective': measure.n_effective,
                 'alpha_hat': measure.alpha_hat}
                for measure, _ in results
            ],
        }
        json_path = write_json(out / 'invariant.json', payload)
        summary = {'points': len(results), 'alpha_hat': results[0][0].alpha_hat,
                   'a_bar': results[0][1].a_bar.value, 'b_bar': results[0][1].b_bar.value}
        return summary, [csv_path, json_path], True

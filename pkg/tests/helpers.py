from apps.monotone.operators import NormalConeBox, Zero
from apps.simulate.system import SystemSpec

EXAMPLE_PARAMS = {'r': 0.1, 's': 0.3, 'nu': 0.5}


def example_system(b1='0', sigma1='cos(y)', operator=None, x0=0.0, y0=0.0, **params):
    """The mean-reverting volatility example: b2 = s - y/2, sigma2 = nu."""
    values = {**EXAMPLE_PARAMS, **params}
    return SystemSpec.from_sources(
        (1, 1), b1=b1, sigma1=sigma1, b2='s - 0.5*y', sigma2='nu',
        A=operator or Zero(1), x0=[x0], y0=[y0], params=values,
    )


def scalar_system(b1, sigma1, b2, sigma2, operator=None, x0=0.0, y0=0.0, params=None):
    return SystemSpec.from_sources(
        (1, 1), b1=b1, sigma1=sigma1, b2=b2, sigma2=sigma2,
        A=operator or Zero(1), x0=[x0], y0=[y0], params=params,
    )


def unit_box():
    return NormalConeBox([-1.0], [1.0])

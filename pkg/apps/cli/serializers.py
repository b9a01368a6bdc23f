from dataclasses import fields

from django.conf import settings
from rest_framework import serializers

from apps.averaging.invariant import AveragingConfig
from apps.expr.exceptions import ExprError
from apps.expr.fields import CoeffField
from apps.hjb.solver import GridConfig
from apps.ldp.exceptions import LdpError
from apps.ldp.montecarlo import MonteCarloConfig, gamma_schedule
from apps.ldp.optimize import OptimizerConfig, TestFunction
from apps.monotone.operators import Zero
from apps.monotone.serializers import OperatorSerializer
from apps.simulate.exceptions import SimulationError
from apps.simulate.system import ScaleParams, SimConfig, SystemSpec

from .runconfig import CheckTask, HjbTask, LaplaceTask, LyapunovTask, RateTask, RunConfig

COEFFICIENTS = ('b1', 'sigma1', 'b2', 'sigma2')


def _config(cls, attrs, **extra):
    """Instantiate a config dataclass from the serializer attrs it declares."""
    names = {f.name for f in fields(cls)}
    return cls(**{key: value for key, value in attrs.items() if key in names}, **extra)


class ExpressionField(serializers.Field):
    """An expression string, a list of them (vector) or a list of lists (matrix)."""

    default_error_messages = {
        'invalid': 'Expected an expression string, a list of strings or a list of lists of strings.',
    }

    def to_internal_value(self, data):
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return str(data)
        if isinstance(data, str):
            return data
        if isinstance(data, list) and data:
            if all(isinstance(s, str) for s in data):
                return data
            if all(isinstance(row, list) and row and all(isinstance(s, str) for s in row) for row in data):
                return data
        self.fail('invalid')

    def to_representation(self, value):
        return value


class SystemSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=1)
    m = serializers.IntegerField(min_value=1)
    b1 = ExpressionField()
    sigma1 = ExpressionField()
    b2 = ExpressionField()
    sigma2 = ExpressionField()
    d1 = serializers.IntegerField(min_value=1, required=False)
    d2 = serializers.IntegerField(min_value=1, required=False)
    operator = OperatorSerializer(required=False)
    x0 = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    y0 = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    params = serializers.DictField(child=serializers.FloatField(), required=False)

    def to_internal_value(self, data):
        # the operator dimension defaults to the slow dimension
        if isinstance(data, dict) and isinstance(data.get('operator'), dict) and 'n' not in data['operator']:
            if isinstance(data.get('n'), int):
                data = {**data, 'operator': {**data['operator'], 'n': data['n']}}
        return super().to_internal_value(data)

    def validate(self, attrs):
        n, m = attrs['n'], attrs['m']
        params = attrs.get('params', {})
        errors = {}
        for name in COEFFICIENTS:
            try:
                CoeffField.parse(attrs[name], (n, m), params)
            except (ExprError, ValueError) as exc:
                errors[name] = [str(exc)]
        for name, dim in (('x0', n), ('y0', m)):
            if len(attrs[name]) != dim:
                errors[name] = [f"expected {dim} entries, got {len(attrs[name])}"]
        op = attrs['operator']['operator'] if 'operator' in attrs else Zero(n)
        if op.n != n:
            errors['operator'] = [f"operator acts on R^{op.n}, the slow variable lives in R^{n}"]
        if errors:
            raise serializers.ValidationError(errors)
        noise_dims = (attrs['d1'], attrs['d2']) if 'd1' in attrs and 'd2' in attrs else None
        try:
            attrs['spec'] = SystemSpec.from_sources(
                (n, m), b1=attrs['b1'], sigma1=attrs['sigma1'], b2=attrs['b2'], sigma2=attrs['sigma2'],
                A=op, x0=attrs['x0'], y0=attrs['y0'], params=params, noise_dims=noise_dims,
            )
        except (SimulationError, ExprError, ValueError) as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class ScheduleSerializer(serializers.Serializer):
    epsilons = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    gamma_exponent = serializers.FloatField(required=False)


class ScalesSerializer(serializers.Serializer):
    epsilon = serializers.FloatField(required=False)
    gamma = serializers.FloatField(required=False)
    schedule = ScheduleSerializer(required=False)

    def validate(self, attrs):
        if 'schedule' in attrs:
            if 'epsilon' in attrs or 'gamma' in attrs:
                raise serializers.ValidationError("give either epsilon and gamma or a schedule, not both")
            schedule = attrs['schedule']
            exponent = schedule.get('gamma_exponent', settings.MVLDP['GAMMA_EXPONENT'])
            try:
                attrs['params'] = gamma_schedule(schedule['epsilons'], exponent)
            except ValueError as exc:
                raise serializers.ValidationError({'schedule': {'gamma_exponent': [str(exc)]}})
            except SimulationError as exc:
                raise serializers.ValidationError({'schedule': {'epsilons': [str(exc)]}})
            return attrs

        errors = {}
        for name in ('epsilon', 'gamma'):
            if name not in attrs:
                errors[name] = ["This field is required."]
            elif not 0.0 < attrs[name] < 1.0:
                errors[name] = [f"{name}={attrs[name]} must lie strictly inside (0, 1)"]
        if errors:
            raise serializers.ValidationError(errors)
        ratio = attrs['gamma'] / attrs['epsilon']
        if ratio >= 1.0:
            raise serializers.ValidationError(
                {'gamma': [f"gamma/epsilon = {ratio:.3g} must be below 1 (the fast scale is faster)"]}
            )
        attrs['params'] = [ScaleParams(epsilon=attrs['epsilon'], gamma=attrs['gamma'])]
        return attrs


class SimSerializer(serializers.Serializer):
    dt = serializers.FloatField()
    horizon = serializers.FloatField()
    paths = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        try:
            attrs['config'] = SimConfig(dt=attrs['dt'], horizon=attrs['horizon'], path_count=attrs.get('paths', 1))
        except SimulationError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class AverageSerializer(serializers.Serializer):
    dt = serializers.FloatField(required=False)
    burn_in = serializers.FloatField(required=False, allow_null=True)
    thin = serializers.IntegerField(min_value=1, required=False)
    n = serializers.IntegerField(min_value=1, required=False)
    chains = serializers.IntegerField(min_value=1, required=False)
    batches = serializers.IntegerField(min_value=2, required=False)
    override = serializers.BooleanField(required=False)
    dissipativity_samples = serializers.IntegerField(min_value=100, required=False)
    x_grid = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)

    def validate(self, attrs):
        try:
            _config(AveragingConfig, attrs)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class RateSerializer(serializers.Serializer):
    t = serializers.FloatField()
    targets = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), allow_empty=False),
        allow_empty=False,
    )
    N = serializers.IntegerField(min_value=1, required=False)
    tol_gap = serializers.FloatField(required=False)
    max_iter = serializers.IntegerField(min_value=1, required=False)
    refine = serializers.BooleanField(required=False)
    restarts = serializers.IntegerField(min_value=0, required=False)

    def validate_t(self, value):
        if not value > 0:
            raise serializers.ValidationError("t must be positive")
        return value

    def validate(self, attrs):
        try:
            _config(OptimizerConfig, attrs)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class LaplaceSerializer(serializers.Serializer):
    h = serializers.CharField()
    t = serializers.FloatField()
    paths = serializers.IntegerField(min_value=1, required=False)
    dt = serializers.FloatField(required=False, allow_null=True)
    min_ess = serializers.FloatField(required=False)
    thresholds = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    tightness_t = serializers.FloatField(required=False)
    limit = serializers.BooleanField(required=False)

    def validate_t(self, value):
        if not value > 0:
            raise serializers.ValidationError("t must be positive")
        return value

    def validate_thresholds(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("thresholds must be strictly increasing")
        return value


class HjbSerializer(serializers.Serializer):
    h = serializers.CharField()
    dx = serializers.FloatField(required=False)
    T = serializers.FloatField(required=False)
    dt = serializers.FloatField(required=False, allow_null=True)
    window = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2, max_length=2)
    theta_factor = serializers.FloatField(required=False)
    cfl = serializers.FloatField(required=False)
    every = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        if 'window' in attrs:
            if not attrs['window'][0] < attrs['window'][1]:
                raise serializers.ValidationError({'window': ["window must be increasing"]})
            attrs['window'] = tuple(attrs['window'])
        try:
            _config(GridConfig, attrs)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class LyapunovSerializer(serializers.Serializer):
    zeta = serializers.CharField()
    L1 = serializers.FloatField()
    L2 = serializers.FloatField()
    center = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    radius = serializers.FloatField(min_value=0.0)
    grid = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    x_points = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), allow_empty=False), required=False,
    )

    def validate_grid(self, value):
        low, high, count = value
        if not low < high or count < 3 or count != int(count):
            raise serializers.ValidationError("grid is [low, high, count] with low < high and integral count >= 3")
        return value


class CheckSerializer(serializers.Serializer):
    samples = serializers.IntegerField(min_value=100, required=False)
    radius = serializers.FloatField(required=False)
    vi_paths = serializers.IntegerField(min_value=1, required=False)
    lyapunov = LyapunovSerializer(required=False)


class RunConfigSerializer(serializers.Serializer):
    """
    Validates a whole run document. Cross-block checks (dimensions of
    targets and test functions, the fast-scale guard on dt) run in
    validate(); save() returns a RunConfig.
    """

    name = serializers.CharField(required=False, default='run')
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, required=False, default=0)
    system = SystemSerializer()
    scales = ScalesSerializer(required=False)
    sim = SimSerializer(required=False)
    average = AverageSerializer(required=False)
    rate = RateSerializer(required=False)
    laplace = LaplaceSerializer(required=False)
    hjb = HjbSerializer(required=False)
    check = CheckSerializer(required=False)

    def validate(self, attrs):
        spec = attrs['system']['spec']
        params = spec.params
        errors = {}
        scales = attrs.get('scales', {}).get('params', [])
        if 'sim' in attrs and len(scales) == 1:
            guard = settings.MVLDP['FAST_GUARD']
            if attrs['sim']['dt'] > scales[0].gamma / guard * (1 + 1e-12):
                errors['sim'] = {'dt': [f"dt={attrs['sim']['dt']:g} exceeds gamma/{guard:g}={scales[0].gamma / guard:g}"]}
        if 'rate' in attrs:
            bad = {i: [f"expected {spec.n} coordinates"] for i, target in enumerate(attrs['rate']['targets'])
                   if len(target) != spec.n}
            if bad:
                errors['rate'] = {'targets': bad}
        for block in ('laplace', 'hjb'):
            if block in attrs:
                try:
                    attrs[block]['test_function'] = TestFunction.parse(attrs[block]['h'], spec.n, params)
                except (ExprError, LdpError, ValueError) as exc:
                    errors[block] = {'h': [str(exc)]}
        lyapunov = attrs.get('check', {}).get('lyapunov')
        if lyapunov is not None:
            try:
                lyapunov['field'] = CoeffField.parse(lyapunov['zeta'], (spec.n, spec.m), params, shape=())
            except (ExprError, ValueError) as exc:
                errors['check'] = {'lyapunov': {'zeta': [str(exc)]}}
        if errors:
            raise serializers.ValidationError(errors)
        return attrs

    def create(self, validated_data):
        seed = validated_data['seed']
        scales = validated_data.get('scales', {}).get('params', [])
        sim = validated_data.get('sim')
        average = validated_data.get('average', {})
        rate = validated_data.get('rate')
        laplace = validated_data.get('laplace')
        hjb = validated_data.get('hjb')
        check = validated_data.get('check', {})
        lyapunov = check.get('lyapunov')
        return RunConfig(
            name=validated_data['name'],
            seed=seed,
            spec=validated_data['system']['spec'],
            scales=scales,
            raw=self.initial_data,
            sim=sim['config'].replace(seed=seed) if sim else None,
            averaging=_config(AveragingConfig, average, seed=seed),
            x_grid=average.get('x_grid'),
            rate=RateTask(
                t=rate['t'], targets=rate['targets'], optimizer=_config(OptimizerConfig, rate, seed=seed),
            ) if rate else None,
            laplace=LaplaceTask(
                h=laplace['test_function'], t=laplace['t'],
                montecarlo=_config(MonteCarloConfig, laplace, seed=seed),
                thresholds=laplace.get('thresholds', []),
                tightness_t=laplace.get('tightness_t'),
                limit=laplace.get('limit', False),
            ) if laplace else None,
            hjb=HjbTask(
                h=hjb['test_function'], grid=_config(GridConfig, hjb), every=hjb.get('every', 1),
            ) if hjb else None,
            check=CheckTask(
                **{key: check[key] for key in ('samples', 'radius', 'vi_paths') if key in check},
                lyapunov=LyapunovTask(
                    zeta=lyapunov['field'], L1=lyapunov['L1'], L2=lyapunov['L2'],
                    center=lyapunov['center'], radius=lyapunov['radius'], grid=lyapunov['grid'],
                    x_points=lyapunov.get('x_points'),
                ) if lyapunov else None,
            ),
        )

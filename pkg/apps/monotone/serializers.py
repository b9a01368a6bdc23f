from rest_framework import serializers

from .exceptions import OperatorError
from .operators import OperatorKind, from_descriptor

_REQUIRED = {
    OperatorKind.ZERO: (),
    OperatorKind.BOX: ('lower', 'upper'),
    OperatorKind.BALL: ('center', 'radius'),
    OperatorKind.ABS: ('weight',),
    OperatorKind.QUADRATIC: ('Q',),
}


class OperatorSerializer(serializers.Serializer):
    """Validates an operator descriptor such as {"kind": "box", "lower": [-1], "upper": [1]}."""

    kind = serializers.ChoiceField(choices=OperatorKind.choices)
    lower = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    upper = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    center = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    radius = serializers.FloatField(required=False)
    weight = serializers.FloatField(required=False)
    Q = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), allow_empty=False),
        required=False,
        allow_empty=False,
    )
    n = serializers.IntegerField(required=False, min_value=1)

    def validate(self, attrs):
        missing = [name for name in _REQUIRED[attrs['kind']] if name not in attrs]
        if missing:
            raise serializers.ValidationError({name: ["This field is required."] for name in missing})
        dim = self.context.get('n')
        simulation = self.context.get('simulation', False)
        try:
            attrs['operator'] = from_descriptor(attrs, n=dim, simulation=simulation)
        except (OperatorError, ValueError) as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

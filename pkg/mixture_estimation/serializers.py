from django.conf import settings
from rest_framework import serializers

from .exceptions import InvalidParameterError
from .models import ExperimentRun
from .presets import experiment_preset
from .services.estimator import EstimatorConfig
from .services.harness import ExperimentSpec
from .services.mixture import build_mixture


class MixtureSerializer(serializers.Serializer):
    """Mixture descriptor from a spec file or the command line."""
    family = serializers.ChoiceField(choices=[
        'beta_two_component', 'beta_uniform', 'farima', 'compensator', 'product', 'tabulated', 'case',
    ])
    case = serializers.IntegerField(required=False, min_value=1)
    w = serializers.FloatField(required=False)
    a_star = serializers.FloatField(required=False)
    p1 = serializers.FloatField(required=False)
    q1 = serializers.FloatField(required=False)
    p2 = serializers.FloatField(required=False)
    q2 = serializers.FloatField(required=False)
    p3 = serializers.FloatField(required=False)
    q3 = serializers.FloatField(required=False)
    d = serializers.FloatField(required=False)
    kappa = serializers.FloatField(required=False)
    path = serializers.CharField(required=False)
    x = serializers.ListField(child=serializers.FloatField(), required=False)
    values = serializers.ListField(child=serializers.FloatField(), required=False)

    def validate(self, data):
        """Build the mixture once so parameter errors surface as validation errors"""
        try:
            data['instance'] = build_mixture(data)
        except InvalidParameterError as e:
            raise serializers.ValidationError(str(e))
        return data


class EstimatorConfigSerializer(serializers.Serializer):
    alpha = serializers.FloatField(required=False, allow_null=True, default=None)
    d = serializers.FloatField(required=False, allow_null=True, default=None)
    gamma = serializers.FloatField(required=False)
    kn = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=0)
    use_alpha_rule = serializers.BooleanField(required=False, default=False)

    def validate(self, data):
        try:
            data['config'] = EstimatorConfig(
                alpha=data.get('alpha'),
                gamma=data.get('gamma', getattr(settings, 'DEFAULT_GAMMA', 0.42)),
                kn_override=data.get('kn'),
                d=data.get('d'),
                use_alpha_rule=data.get('use_alpha_rule', False),
            )
        except InvalidParameterError as e:
            raise serializers.ValidationError(str(e))
        return data


class PanelSizeField(serializers.Field):
    """Positive integer N or the string 'limit'."""

    def to_internal_value(self, data):
        if data == 'limit':
            return data
        try:
            value = int(data)
        except (TypeError, ValueError):
            raise serializers.ValidationError("N must be a positive integer or 'limit'")
        if value < 1 or str(value) != str(data).strip():
            raise serializers.ValidationError("N must be a positive integer or 'limit'")
        return value

    def to_representation(self, value):
        return value


class ExperimentSpecSerializer(EstimatorConfigSerializer):
    """
    Experiment spec file: {mixture{...}, n, N|limit, M, alpha|d, gamma|kn, eval_points[], seed, n_grid[]}.
    """
    case_id = serializers.IntegerField(required=False, allow_null=True, default=None)
    mixture = MixtureSerializer(required=False)
    n = serializers.IntegerField(min_value=8)
    N = PanelSizeField(required=False, default='limit')
    M = serializers.IntegerField(min_value=2)
    eval_points = serializers.ListField(
        child=serializers.FloatField(min_value=-1.0, max_value=1.0), required=False, default=list
    )
    grid_size = serializers.IntegerField(required=False, min_value=2)
    seed = serializers.IntegerField(required=False, default=0, min_value=0, max_value=2 ** 64 - 1)
    n_grid = serializers.ListField(child=serializers.IntegerField(min_value=8), required=False, default=list)
    sigma_eps2 = serializers.FloatField(required=False, allow_null=True, default=None, min_value=0.0)
    route = serializers.ChoiceField(choices=['panel', 'synthesis'], required=False)

    def validate_eval_points(self, value):
        if any(abs(x) >= 1 for x in value):
            raise serializers.ValidationError("Evaluation points must lie strictly inside (-1, 1)")
        return value

    def validate(self, data):
        if 'mixture' not in data:
            if data.get('case_id') is None:
                raise serializers.ValidationError("Either mixture or case_id is required")
            mixture = MixtureSerializer(data={'family': 'case', 'case': data['case_id']})
            mixture.is_valid(raise_exception=True)
            data['mixture'] = mixture.validated_data
        if data.get('case_id') is not None and data.get('alpha') is None and data.get('d') is None:
            case = experiment_preset(data['case_id'])
            data['alpha'], data['d'] = case['alpha'], case['d']
        route = data.pop('route', None)
        if route is not None and route != ('synthesis' if data['N'] == 'limit' else 'panel'):
            raise serializers.ValidationError(
                {'route': f"route {route!r} does not match N={data['N']!r}; "
                           "'panel' needs an integer N, 'synthesis' needs N='limit'"}
            )
        if data.get('sigma_eps2') is not None and data['sigma_eps2'] <= 0:
            raise serializers.ValidationError("sigma_eps2 must be positive")
        return super().validate(data)

    def create(self, validated_data):
        return ExperimentSpec(
            mixture=validated_data['mixture']['instance'],
            n=validated_data['n'],
            M=validated_data['M'],
            estimator=validated_data['config'],
            eval_points=validated_data['eval_points'],
            N=validated_data['N'],
            grid_size=validated_data.get('grid_size', getattr(settings, 'ESTIMATE_GRID_SIZE', 512)),
            seed=validated_data['seed'],
            n_grid=validated_data['n_grid'],
            sigma_eps2=validated_data['sigma_eps2'],
            case_id=validated_data['case_id'],
        )


class ExperimentRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRun
        fields = ['id', 'kind', 'status', 'seed', 'failed', 'total', 'elapsed_seconds', 'created_at']
        read_only_fields = fields

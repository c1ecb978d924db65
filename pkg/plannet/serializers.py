from rest_framework import serializers

from nettwin.exceptions import InvalidArgument
from .config import VARIANTS, ModelConfig


class ModelConfigSerializer(serializers.Serializer):
    """Serializer for the model section of checkpoint manifests."""

    variant = serializers.ChoiceField(choices=VARIANTS)
    iterations = serializers.IntegerField(min_value=1)
    path_dim = serializers.IntegerField(min_value=2)
    link_dim = serializers.IntegerField(min_value=1)
    node_dim = serializers.IntegerField(min_value=1)
    link_mlp_hidden = serializers.ListField(child=serializers.IntegerField(min_value=1))
    readout_hidden = serializers.ListField(child=serializers.IntegerField(min_value=1))
    share_weights = serializers.BooleanField()
    tau_scale = serializers.FloatField()
    capacity_scale = serializers.FloatField()
    gnn_hidden = serializers.IntegerField(min_value=1, required=False, default=32)
    output_width = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)

    def validate(self, attrs):
        try:
            attrs['config'] = ModelConfig(**attrs)
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs


def model_config_from_dict(data):
    serializer = ModelConfigSerializer(data=data)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid model config: {serializer.errors}")
    return serializer.validated_data['config']

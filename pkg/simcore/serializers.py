from rest_framework import serializers

from nettwin.exceptions import InvalidArgument
from .types import FlowKpis, SimConfig


class FlowKpisSerializer(serializers.Serializer):
    """Serializer for the per-path KPI records of a sample."""

    delay_ms = serializers.FloatField(allow_null=True)
    jitter_ms = serializers.FloatField(allow_null=True)
    throughput_kbps = serializers.FloatField()
    drops = serializers.FloatField(min_value=0)
    tx = serializers.FloatField(source='tx_packets', min_value=0)
    rx = serializers.FloatField(source='rx_packets', min_value=0)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        # single-run counts stay integers on the wire
        for key in ('drops', 'tx', 'rx'):
            if float(data[key]).is_integer():
                data[key] = int(data[key])
        return data

    def validate(self, attrs):
        if attrs['rx_packets'] > attrs['tx_packets']:
            raise serializers.ValidationError("rx cannot exceed tx")
        if abs(attrs['drops'] - (attrs['tx_packets'] - attrs['rx_packets'])) > 1e-9:
            raise serializers.ValidationError("drops must equal tx - rx")
        if attrs['rx_packets'] < 1 and attrs['delay_ms'] is not None:
            raise serializers.ValidationError("delay is undefined without received packets")
        return attrs

    def create(self, validated_data):
        return FlowKpis(**validated_data)


class SimConfigSerializer(serializers.Serializer):
    """Serializer for simulator settings stored in dataset metadata."""

    duration = serializers.FloatField()
    packet_size = serializers.IntegerField()
    queue_capacity = serializers.IntegerField()
    backoff_mean = serializers.FloatField()
    interference_radius = serializers.FloatField(allow_null=True, required=False, default=None)
    prop_delay = serializers.FloatField()
    seed = serializers.IntegerField(required=False, default=0)

    def validate(self, attrs):
        try:
            SimConfig(**attrs)
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs

    def create(self, validated_data):
        return SimConfig(**validated_data)


def kpis_to_dicts(kpis):
    return [dict(row) for row in FlowKpisSerializer(kpis, many=True).data]


def kpis_from_dicts(rows):
    serializer = FlowKpisSerializer(data=rows, many=True)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid KPI records: {serializer.errors}")
    return [FlowKpis(**row) for row in serializer.validated_data]

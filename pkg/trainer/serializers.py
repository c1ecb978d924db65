import json
import logging

from rest_framework import serializers

from netmodel.serializers import (
    RadioConfigSerializer, TopologySerializer, TrafficSerializer, paths_from_lists,
)
from netmodel.types import Scenario
from nettwin.exceptions import InvalidArgument
from simcore.serializers import FlowKpisSerializer, SimConfigSerializer
from simcore.types import KPI_FIELDS, FlowKpis, SimConfig
from .types import FAMILIES, GeneratorSpec, Sample, TrainConfig

logger = logging.getLogger(__name__)


class SampleSerializer(TrafficSerializer):
    """
    Serializer for one dataset line: inline topology, link-id paths,
    traffic, ground-truth KPIs and the sample seed.
    """

    topology = TopologySerializer()
    paths = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField(min_value=0)))
    kpis = FlowKpisSerializer(many=True)
    seed = serializers.IntegerField()

    def to_representation(self, instance):
        scenario = instance.scenario
        return {
            'topology': TopologySerializer(scenario.graph).data,
            'paths': [list(path.links) for path in scenario.paths],
            'traffic': [list(row) for row in scenario.traffic.rows],
            'data_rate_kbps': scenario.traffic.data_rate,
            'kpis': FlowKpisSerializer(instance.kpis, many=True).data,
            'seed': instance.seed,
        }

    def validate(self, attrs):
        attrs = super().validate(attrs)
        graph = attrs['topology']['graph']
        try:
            paths = paths_from_lists(graph, attrs['paths'])
            attrs['sample'] = Sample(
                scenario=Scenario(graph=graph, paths=paths, traffic=attrs['matrix']),
                kpis=[FlowKpis(**row) for row in attrs['kpis']],
                seed=attrs['seed'])
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs


class GeneratorSpecSerializer(serializers.Serializer):
    """Serializer for the generator spec recorded in dataset metadata."""

    family = serializers.ChoiceField(choices=FAMILIES)
    num_paths = serializers.IntegerField(min_value=1)
    max_hops = serializers.IntegerField(min_value=1)
    mean_set = serializers.ListField(child=serializers.FloatField(), min_length=1)
    data_rate = serializers.FloatField()
    pair_seed = serializers.IntegerField()
    rows = serializers.IntegerField(min_value=2)
    cols = serializers.IntegerField(min_value=2)
    spacing = serializers.FloatField()
    perturb_radius = serializers.FloatField(min_value=0)
    radio = RadioConfigSerializer(allow_null=True, required=False, default=None)
    sim = SimConfigSerializer()

    def validate(self, attrs):
        radio = attrs.pop('radio', None)
        sim = attrs.pop('sim')
        extra = {'radio': radio['config']} if radio else {}
        try:
            attrs['spec'] = GeneratorSpec(sim=SimConfig(**sim), **extra, **attrs)
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs


class TrainConfigSerializer(serializers.Serializer):
    """Serializer for the training section of checkpoint manifests."""

    kpi = serializers.ChoiceField(choices=sorted(KPI_FIELDS))
    folds = serializers.IntegerField(min_value=2)
    epochs = serializers.IntegerField(min_value=1)
    batch_size = serializers.IntegerField(min_value=1)
    lr = serializers.FloatField()
    l2 = serializers.FloatField(min_value=0)
    patience = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField()

    def validate_lr(self, value):
        if not value > 0:
            raise serializers.ValidationError("learning rate must be positive")
        return value

    def validate(self, attrs):
        attrs['config'] = TrainConfig(**attrs)
        return attrs


def sample_to_line(sample):
    return json.dumps(SampleSerializer(sample).data)


def sample_from_line(line):
    try:
        data = json.loads(line)
    except ValueError as e:
        raise InvalidArgument(f"sample record is not JSON: {e}")
    serializer = SampleSerializer(data=data)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid sample record: {serializer.errors}")
    return serializer.validated_data['sample']


def spec_from_dict(data):
    serializer = GeneratorSpecSerializer(data=data)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid generator spec: {serializer.errors}")
    return serializer.validated_data['spec']


def train_config_from_dict(data):
    serializer = TrainConfigSerializer(data=data)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid training config: {serializer.errors}")
    return serializer.validated_data['config']

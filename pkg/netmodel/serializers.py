import json
import logging
from pathlib import Path

from rest_framework import serializers

from nettwin.exceptions import InvalidArgument
from .types import Link, NetworkGraph, Node, PathSpec, RadioConfig, TrafficMatrix

logger = logging.getLogger(__name__)


class RadioConfigSerializer(serializers.Serializer):
    """Serializer for log-distance radio constants."""

    ptx_dbm = serializers.FloatField()
    pl0_db = serializers.FloatField()
    gamma = serializers.FloatField()
    rx_sens_dbm = serializers.FloatField()

    def validate(self, attrs):
        try:
            attrs['config'] = RadioConfig(**attrs)
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs


class NodeSerializer(serializers.Serializer):
    """Serializer for node records."""

    id = serializers.IntegerField(min_value=0)
    pos = serializers.ListField(
        source='position', child=serializers.FloatField(), min_length=2, max_length=2)


class LinkSerializer(serializers.Serializer):
    """Serializer for directed link records."""

    src = serializers.IntegerField(min_value=0)
    dst = serializers.IntegerField(min_value=0)
    capacity_kbps = serializers.FloatField(source='capacity')
    weight = serializers.FloatField()


class TopologySerializer(serializers.Serializer):
    """
    Serializer for the topology file format.

    Renders a NetworkGraph instance; on input, `validated_data['graph']`
    holds the rebuilt graph.
    """

    nodes = NodeSerializer(many=True)
    links = LinkSerializer(many=True)
    family = serializers.CharField(required=False, default='custom')
    radio = RadioConfigSerializer(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        radio = attrs.get('radio')
        try:
            attrs['graph'] = NetworkGraph(
                nodes=[Node(n['id'], tuple(n['position'])) for n in attrs['nodes']],
                links=[Link(l['src'], l['dst'], l['capacity'], l['weight'])
                       for l in attrs['links']],
                family=attrs.get('family', 'custom'),
                radio=radio['config'] if radio else None,
            )
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs


class TrafficSerializer(serializers.Serializer):
    """Serializer for a traffic matrix (rows of [tau_on, tau_off])."""

    traffic = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2))
    data_rate_kbps = serializers.FloatField()

    def validate(self, attrs):
        try:
            attrs['matrix'] = TrafficMatrix(
                rows=[tuple(row) for row in attrs['traffic']], data_rate=attrs['data_rate_kbps'])
        except InvalidArgument as e:
            raise serializers.ValidationError(str(e))
        return attrs


def graph_to_dict(graph):
    return json.loads(json.dumps(TopologySerializer(graph).data))


def graph_from_dict(data):
    serializer = TopologySerializer(data=data)
    if not serializer.is_valid():
        raise InvalidArgument(f"invalid topology: {serializer.errors}")
    return serializer.validated_data['graph']


def paths_from_lists(graph, link_lists):
    paths = []
    for links in link_lists:
        if not links:
            raise InvalidArgument("a path needs at least one link")
        if any(not 0 <= link < graph.num_links for link in links):
            raise InvalidArgument(f"path {links} references unknown link ids")
        first, last = graph.links[links[0]], graph.links[links[-1]]
        paths.append(PathSpec(first.src, last.dst, links).validate(graph))
    return paths


def write_topology(graph, path):
    """Write `graph` as deterministic, indented topology JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(graph_to_dict(graph), indent=2) + '\n', encoding='utf-8')
    logger.info(f"Wrote topology with {graph.num_nodes} nodes, {graph.num_links} links to {path}")
    return path


def read_topology(path):
    with open(path, encoding='utf-8') as handle:
        return graph_from_dict(json.load(handle))

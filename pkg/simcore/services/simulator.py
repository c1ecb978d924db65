"""
Event-driven packet simulator.

Every directed link owns a FIFO queue and a server process. Sources follow
on/off cycles and emit constant-rate packets while on. On wireless graphs a
node starts a transmission only when no node within the interference radius
(itself included) is transmitting; blocked transmitters back off for an
exponential delay and retry. Packets arriving at a full queue are dropped,
which is the only loss mechanism.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np
import simpy

from nettwin.exceptions import InvalidArgument
from nettwin.seeding import derive_seed
from netmodel.services import max_link_distance, random_shortest_path
from simcore.types import FlowKpis
from .kpis import kpis_from_records
from .onoff import exponential_from_uniform, sample_onoff

logger = logging.getLogger(__name__)


@dataclass
class SimTrace:
    """Optional event log: (start, end, node, link, packet) per transmission."""

    transmissions: List[Tuple[float, float, int, int, int]] = field(default_factory=list)
    enqueues: List[Tuple[float, int, int]] = field(default_factory=list)


@dataclass
class _Packet:
    uid: int
    path_index: int
    record_index: int
    hop: int = 0


class _Run:
    """State of a single simulation run."""

    def __init__(self, graph, paths, traffic, config, trace=None):
        self.graph = graph
        self.paths = paths
        self.traffic = traffic
        self.config = config
        self.trace = trace
        self.env = simpy.Environment()
        self.rng = np.random.default_rng(config.seed)
        self.queues = [simpy.Store(self.env) for _ in graph.links]
        self.records = [[] for _ in paths]
        self.next_uid = 0
        self.transmitting = np.zeros(graph.num_nodes, dtype=bool)
        self.neighborhoods = self._neighborhoods() if graph.wireless else None

    def _neighborhoods(self):
        radius = self.config.interference_radius
        if radius is None:
            radius = max_link_distance(self.graph.radio)
        positions = np.array([node.position for node in self.graph.nodes], dtype=float)
        distances = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
        return [np.flatnonzero(row <= radius * (1.0 + 1e-9)) for row in distances]

    def service_time(self, link_id):
        return self.config.packet_bits / (self.graph.links[link_id].capacity * 1000.0)

    def source(self, path_index):
        tau_on, tau_off = self.traffic.rows[path_index]
        interval = self.config.packet_bits / (self.traffic.data_rate * 1000.0)
        duration = self.config.duration
        while self.env.now < duration:
            t_on, t_off = sample_onoff(tau_on, tau_off, self.rng)
            on_end = min(self.env.now + t_on, duration)
            while self.env.now < on_end:
                self.emit(path_index)
                yield self.env.timeout(interval)
            if self.env.now < duration:
                # the last emission interval may overrun the on phase
                off_end = max(self.env.now, on_end + t_off)
                yield self.env.timeout(off_end - self.env.now)

    def emit(self, path_index):
        records = self.records[path_index]
        packet = _Packet(self.next_uid, path_index, len(records))
        self.next_uid += 1
        records.append([self.env.now, None])
        self.enqueue(packet)

    def enqueue(self, packet):
        link_id = self.paths[packet.path_index].links[packet.hop]
        queue = self.queues[link_id]
        if len(queue.items) >= self.config.queue_capacity:
            return
        if self.trace is not None:
            self.trace.enqueues.append((self.env.now, link_id, packet.uid))
        queue.put(packet)

    def medium_busy(self, node):
        return bool(self.transmitting[self.neighborhoods[node]].any())

    def server(self, link_id):
        link = self.graph.links[link_id]
        queue = self.queues[link_id]
        service = self.service_time(link_id)
        while True:
            packet = yield queue.get()
            if self.neighborhoods is not None:
                while self.medium_busy(link.src):
                    backoff = exponential_from_uniform(self.config.backoff_mean, self.rng.random())
                    yield self.env.timeout(backoff)
                self.transmitting[link.src] = True
            start = self.env.now
            yield self.env.timeout(service)
            if self.neighborhoods is not None:
                self.transmitting[link.src] = False
            if self.trace is not None:
                self.trace.transmissions.append((start, self.env.now, link.src, link_id, packet.uid))
            arrival = self.env.timeout(self.config.prop_delay)
            arrival.callbacks.append(lambda _event, packet=packet: self.arrive(packet))

    def arrive(self, packet):
        path = self.paths[packet.path_index]
        if packet.hop + 1 == path.hops:
            self.records[packet.path_index][packet.record_index][1] = self.env.now
            return
        packet.hop += 1
        self.enqueue(packet)

    def run(self):
        for link_id in range(self.graph.num_links):
            self.env.process(self.server(link_id))
        for path_index in range(len(self.paths)):
            self.env.process(self.source(path_index))
        # sources stop at `duration`; in-flight packets drain afterwards
        self.env.run()
        return [
            kpis_from_records([tuple(record) for record in records], self.config)
            for records in self.records]


def simulate(graph, paths, traffic, config, trace=None):
    """Simulate one run and return the FlowKpis of every path, in path order."""
    paths = list(paths)
    if len(traffic) != len(paths):
        raise InvalidArgument(f"traffic has {len(traffic)} rows for {len(paths)} paths")
    for path in paths:
        path.validate(graph)
    kpis = _Run(graph, paths, traffic, config, trace=trace).run()
    logger.debug(
        f"Simulated {len(paths)} paths on {graph.family} graph, seed {config.seed}: "
        f"{sum(k.rx_packets for k in kpis)}/{sum(k.tx_packets for k in kpis)} packets delivered")
    return kpis


def _mean_defined(values):
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def simulate_avg(graph, paths, traffic, config, runs, reroute=False):
    """
    Average `runs` independent simulations seeded seed, seed+1, ...

    Undefined KPI values are left out of each mean. With `reroute`, every
    run draws each path anew among the equal-hop routes of its endpoints.
    """
    if runs < 1:
        raise InvalidArgument(f"runs must be at least 1, got {runs}")
    paths = list(paths)
    results = []
    for offset in range(runs):
        run_config = replace(config, seed=config.seed + offset)
        run_paths = paths
        if reroute:
            rng = np.random.default_rng(derive_seed(run_config.seed, 'reroute'))
            run_paths = [
                random_shortest_path(graph, path.source, path.destination, rng) for path in paths]
        results.append(simulate(graph, run_paths, traffic, run_config))
    if runs == 1:
        return results[0]
    averaged = []
    for per_run in zip(*results):
        averaged.append(FlowKpis(
            delay_ms=_mean_defined([k.delay_ms for k in per_run]),
            jitter_ms=_mean_defined([k.jitter_ms for k in per_run]),
            throughput_kbps=_mean_defined([k.throughput_kbps for k in per_run]),
            drops=_mean_defined([k.drops for k in per_run]),
            tx_packets=_mean_defined([k.tx_packets for k in per_run]),
            rx_packets=_mean_defined([k.rx_packets for k in per_run]),
        ))
    return averaged

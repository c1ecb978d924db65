"""Simulator configuration and per-path KPI records."""
from dataclasses import dataclass, field
from typing import Optional

from django.conf import settings

from nettwin.exceptions import InvalidArgument

# KPI name -> FlowKpis attribute
KPI_FIELDS = {
    'delay': 'delay_ms',
    'jitter': 'jitter_ms',
    'throughput': 'throughput_kbps',
    'drops': 'drops',
}


def _setting(name):
    return lambda: getattr(settings, name)


@dataclass(frozen=True)
class SimConfig:
    """
    Knobs of one simulation run.

    `interference_radius` of None means the radio range of the graph
    being simulated; it is ignored for wired graphs.
    """

    duration: float = field(default_factory=_setting('SIM_DURATION_S'))
    packet_size: int = field(default_factory=_setting('SIM_PACKET_SIZE_B'))
    queue_capacity: int = field(default_factory=_setting('SIM_QUEUE_CAPACITY'))
    backoff_mean: float = field(default_factory=_setting('SIM_BACKOFF_MEAN_S'))
    interference_radius: Optional[float] = None
    prop_delay: float = field(default_factory=_setting('SIM_PROP_DELAY_S'))
    seed: int = 0

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgument(f"duration must be positive, got {self.duration}")
        if not self.packet_size > 0:
            raise InvalidArgument(f"packet size must be positive, got {self.packet_size}")
        if self.queue_capacity < 1:
            raise InvalidArgument(f"queue capacity must be at least 1, got {self.queue_capacity}")
        if not self.backoff_mean > 0:
            raise InvalidArgument(f"backoff mean must be positive, got {self.backoff_mean}")
        if self.interference_radius is not None and self.interference_radius < 0:
            raise InvalidArgument(
                f"interference radius must be non-negative, got {self.interference_radius}")
        if self.prop_delay < 0:
            raise InvalidArgument(f"propagation delay must be non-negative, got {self.prop_delay}")

    @property
    def packet_bits(self):
        return self.packet_size * 8

    def as_dict(self):
        return {
            'duration': self.duration,
            'packet_size': self.packet_size,
            'queue_capacity': self.queue_capacity,
            'backoff_mean': self.backoff_mean,
            'interference_radius': self.interference_radius,
            'prop_delay': self.prop_delay,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class FlowKpis:
    """
    KPIs of one path. Undefined delay/jitter are None, never 0.

    Counts are integers for a single run; simulator averages carry the
    mean counts as floats.
    """

    delay_ms: Optional[float]
    jitter_ms: Optional[float]
    throughput_kbps: float
    drops: float
    tx_packets: float
    rx_packets: float

    def value(self, kpi):
        """KPI by its short name (delay, jitter, throughput, drops)."""
        try:
            attribute = KPI_FIELDS[kpi]
        except KeyError:
            raise InvalidArgument(f"unknown KPI {kpi!r}, expected one of {sorted(KPI_FIELDS)}")
        value = getattr(self, attribute)
        return None if value is None else float(value)

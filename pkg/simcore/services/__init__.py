# Services package for the packet simulator
from .kpis import kpis_from_records
from .onoff import exponential_from_uniform, sample_onoff
from .simulator import SimTrace, simulate, simulate_avg

__all__ = [
    'kpis_from_records', 'exponential_from_uniform', 'sample_onoff',
    'SimTrace', 'simulate', 'simulate_avg',
]

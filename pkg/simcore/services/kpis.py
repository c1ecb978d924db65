"""Per-path KPI extraction from packet records."""
import numpy as np

from simcore.types import FlowKpis


def kpis_from_records(records, config):
    """
    Compute FlowKpis from (send_time, recv_time) records ordered by send
    time, recv_time None marking a dropped packet. Jitter is the mean
    absolute difference of successive delays in delivery order.
    """
    tx = len(records)
    received = sorted(
        ((recv, index, recv - send) for index, (send, recv) in enumerate(records) if recv is not None),
        key=lambda item: (item[0], item[1]))
    rx = len(received)
    delays = np.array([delay for _, _, delay in received], dtype=float) * 1000.0
    delay_ms = float(delays.mean()) if rx >= 1 else None
    jitter_ms = float(np.abs(np.diff(delays)).mean()) if rx >= 2 else None
    return FlowKpis(
        delay_ms=delay_ms,
        jitter_ms=jitter_ms,
        throughput_kbps=rx * config.packet_size * 8 / config.duration / 1000,
        drops=tx - rx,
        tx_packets=tx,
        rx_packets=rx,
    )

"""Bandwidth unit helpers.

Bandwidth is stored internally as integer kbps, which gives exactly the
0.001 Mbps resolution the scenario format allows. All residual arithmetic
therefore stays in integers and never accumulates float error.
"""

from __future__ import annotations

KBPS_PER_MBPS = 1000


def mbps_to_kbps(mbps: float) -> int:
    return round(mbps * KBPS_PER_MBPS)


def kbps_to_mbps(kbps: int) -> float:
    return kbps / KBPS_PER_MBPS

"""QoE engine: the MOS model, experience agreements and admission prediction.

MOS is modeled as 1 + 4 * q_bw * q_delay * q_loss * q_stall with each factor
in [0, 1], so one exhausted dimension pins the score at 1 and a sample that
meets every optimum scores 5. Jitter enters through an effective delay of
delay + 2 * jitter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import EmptyHistory, InvalidRange
from .units import KBPS_PER_MBPS
from .service import AppProfile, ChainRequest, LinkPath, path_metrics

if TYPE_CHECKING:
    from .service import ServiceCatalog


@dataclass(frozen=True)
class FlowSample:
    """One measurement window's raw figures for a flow."""

    flow_id: int
    window_index: int
    throughput_mbps: float
    delay_ms: float
    jitter_ms: float
    loss_pct: float
    stall_ratio: float

    def __post_init__(self):
        if self.window_index < 0:
            raise InvalidRange("window_index must be non-negative")
        for field_name in ("throughput_mbps", "delay_ms", "jitter_ms", "loss_pct"):
            if getattr(self, field_name) < 0:
                raise InvalidRange(f"{field_name} must be non-negative")
        if not 0 <= self.stall_ratio <= 1:
            raise InvalidRange("stall_ratio must be within [0, 1]")


@dataclass(frozen=True)
class QoeSample:
    """A scored window: the MOS plus its four quality factors."""

    flow_id: int
    window_index: int
    mos: float
    q_bw: float
    q_delay: float
    q_loss: float
    q_stall: float

    def __post_init__(self):
        for field_name in ("q_bw", "q_delay", "q_loss", "q_stall"):
            if not 0 <= getattr(self, field_name) <= 1:
                raise InvalidRange(f"{field_name} must be within [0, 1]")
        expected = 1.0 + 4.0 * self.q_bw * self.q_delay * self.q_loss * self.q_stall
        if abs(self.mos - expected) > 1e-9:
            raise InvalidRange("mos does not match its factors")


@dataclass(frozen=True)
class Ela:
    """Experience level agreement for one flow."""

    target_mos: float
    window_ms: int
    breach_windows: int
    compliance_budget: float

    def __post_init__(self):
        if not 1.0 <= self.target_mos <= 5.0:
            raise InvalidRange("target_mos must be within [1, 5]")
        if self.window_ms <= 0:
            raise InvalidRange("window_ms must be positive")
        if self.breach_windows < 1:
            raise InvalidRange("breach_windows must be at least 1")
        if not 0 <= self.compliance_budget <= 1:
            raise InvalidRange("compliance_budget must be within [0, 1]")


def _clamp01(value: float) -> float:
    return 0.0 if value < 0.0 else 1.0 if value > 1.0 else value


def estimate_mos(sample: FlowSample, profile: AppProfile) -> QoeSample:
    """Score one window against a profile.

    d_eff = delay + 2 * jitter
    q_bw = min(1, throughput / bw_req)
    q_delay = 1 if d_eff <= delay_opt,
              else clamp((delay_max - d_eff) / (delay_max - delay_opt), 0, 1)
    q_loss = max(0, 1 - loss / loss_max)
    q_stall = max(0, 1 - stall_ratio / stall_max)
    mos = 1 + 4 * q_bw * q_delay * q_loss * q_stall
    """
    d_eff = sample.delay_ms + 2.0 * sample.jitter_ms
    q_bw = min(1.0, sample.throughput_mbps / profile.bw_req_mbps)
    if d_eff <= profile.delay_opt_ms:
        q_delay = 1.0
    else:
        span = profile.delay_max_ms - profile.delay_opt_ms
        q_delay = _clamp01((profile.delay_max_ms - d_eff) / span)
    q_loss = max(0.0, 1.0 - sample.loss_pct / profile.loss_max_pct)
    q_stall = max(0.0, 1.0 - sample.stall_ratio / profile.stall_max)
    mos = 1.0 + 4.0 * q_bw * q_delay * q_loss * q_stall
    return QoeSample(
        flow_id=sample.flow_id,
        window_index=sample.window_index,
        mos=mos,
        q_bw=q_bw,
        q_delay=q_delay,
        q_loss=q_loss,
        q_stall=q_stall,
    )


def ela_breached(history: Sequence[QoeSample], ela: Ela) -> bool:
    """True iff the most recent breach_windows samples all score below target.

    The comparison is strict: a window exactly at target does not breach.
    A history shorter than the rule cannot breach yet.
    """
    k = ela.breach_windows
    if len(history) < k:
        return False
    return all(sample.mos < ela.target_mos for sample in history[-k:])


def ela_compliance(history: Sequence[QoeSample], ela: Ela) -> float:
    """Fraction of windows at or above target. Raises EmptyHistory on []."""
    if not history:
        raise EmptyHistory("cannot compute compliance of an empty history")
    good = sum(1 for sample in history if sample.mos >= ela.target_mos)
    return good / len(history)


def predict_mos(
    request: ChainRequest,
    segments: Iterable[LinkPath],
    net,
    catalog: "ServiceCatalog",
) -> QoeSample:
    """Admission-time MOS prediction for a candidate embedding.

    Builds a synthetic sample from the candidate's path metrics. Throughput
    is the smallest residual bandwidth along the path capped at the profile
    requirement, and stalling is assumed absent at admission time. `net` is
    anything with the NetworkState read interface, including planning views.
    """
    segments = tuple(segments)
    profile = catalog.profile(request.profile)
    metrics = path_metrics(
        segments, net, catalog.proc_latencies(request.vnf_sequence)
    )
    links = [link_id for segment in segments for link_id in segment]
    bw_req_kbps = round(profile.bw_req_mbps * KBPS_PER_MBPS)
    if links:
        floor_kbps = min(net.available_bw(link_id) for link_id in links)
        throughput_kbps = min(floor_kbps, bw_req_kbps)
    else:
        throughput_kbps = bw_req_kbps
    sample = FlowSample(
        flow_id=request.id,
        window_index=0,
        throughput_mbps=max(0, throughput_kbps) / KBPS_PER_MBPS,
        delay_ms=metrics.latency_ms,
        jitter_ms=metrics.jitter_ms,
        loss_pct=metrics.loss_pct,
        stall_ratio=0.0,
    )
    return estimate_mos(sample, profile)

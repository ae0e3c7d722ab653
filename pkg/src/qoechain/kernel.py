"""Discrete-event kernel.

Time is integer milliseconds. Events dispatch in (time, seq) order where
seq is the scheduling order, so same-time ties resolve the same way every
run: measurement windows are scheduled first, then the scenario's declared
events in file order, then anything spawned while running (departures).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from .controller import Controller, PolicyConfig, Rejected
from .errors import InvariantViolation, TimeTravel
from .network import NetworkState, build_network
from .orchestrator import TERMINAL, Orchestrator, audit_lifecycle
from .qoe import QoeSample, ela_compliance
from .report import FlowSummary, QoeRow, SimReport
from .rng import SplitMix64
from .scenario import ScenarioDoc
from .service import ServiceCatalog, validate_forwarding_graph


@dataclass(frozen=True)
class Arrival:
    time: int
    request: object


@dataclass(frozen=True)
class Departure:
    time: int
    request_id: int


@dataclass(frozen=True)
class MeasureWindow:
    time: int
    index: int


@dataclass(frozen=True)
class HostFailure:
    time: int
    host_id: int


@dataclass(frozen=True)
class LinkDegradation:
    time: int
    link_id: int
    latency_ms: float | None
    jitter_ms: float | None
    loss_pct: float | None


@dataclass(frozen=True)
class StallInjection:
    time: int
    flow_id: int
    stall_ratio: float


class EventQueue:
    """Min-heap on (time, seq); scheduling into the past is an error."""

    def __init__(self):
        self._heap: list[tuple[int, int, object]] = []
        self._seq = 0
        self.now = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, event) -> None:
        if event.time < self.now:
            msg = f"event at {event.time}ms scheduled at clock {self.now}ms"
            raise TimeTravel(msg)
        heapq.heappush(self._heap, (event.time, self._seq, event))
        self._seq += 1

    def peek_time(self) -> int:
        return self._heap[0][0]

    def pop(self):
        time, _, event = heapq.heappop(self._heap)
        self.now = time
        return event


def run(
    doc: ScenarioDoc,
    seed: int | None = None,
    alpha: float | None = None,
    strict_debug: bool = False,
    event_hook: Callable | None = None,
) -> SimReport:
    """Execute a scenario to its horizon and return the report.

    seed and alpha override the scenario's own values. strict_debug re-runs
    the global conservation and validity audits after every event instead of
    only at the end. event_hook(event, state) is a test seam called after
    each dispatch, before the audits.
    """
    state = build_network(doc.nodes, doc.links)
    catalog = ServiceCatalog(doc.vnf_types, doc.profiles)
    policy = doc.policy
    if alpha is not None:
        policy = PolicyConfig(alpha, policy.max_reroute_attempts)
    controller = Controller(state, catalog, doc.ela, policy)
    orchestrator = Orchestrator(controller)

    effective_seed = doc.seed if seed is None else seed
    queue = EventQueue()
    windows = doc.duration_ms // doc.window_ms
    for index in range(windows):
        queue.schedule(MeasureWindow(time=(index + 1) * doc.window_ms, index=index))
    rng = SplitMix64(effective_seed)
    for request in doc.requests:
        arrival = request.arrival_ms
        if doc.arrival_jitter_ms > 0:
            span = 2 * doc.arrival_jitter_ms + 1
            arrival = max(0, arrival + rng.next_below(span) - doc.arrival_jitter_ms)
        queue.schedule(Arrival(time=arrival, request=request))
    for failure in doc.host_failures:
        queue.schedule(HostFailure(time=failure.time_ms, host_id=failure.host))
    for degradation in doc.link_degradations:
        queue.schedule(
            LinkDegradation(
                time=degradation.time_ms,
                link_id=degradation.link,
                latency_ms=degradation.latency_ms,
                jitter_ms=degradation.jitter_ms,
                loss_pct=degradation.loss_pct,
            )
        )
    for stall in doc.stall_injections:
        queue.schedule(
            StallInjection(
                time=stall.time_ms, flow_id=stall.flow, stall_ratio=stall.stall_ratio
            )
        )

    rows: list[QoeRow] = []
    histories: dict[int, list[QoeSample]] = {}
    breaches: dict[int, list[int]] = {}
    measured = 0

    while queue and queue.peek_time() <= doc.duration_ms:
        event = queue.pop()
        if isinstance(event, Arrival):
            result = orchestrator.submit_request(event.request, event.time)
            if not isinstance(result, Rejected):
                queue.schedule(
                    Departure(
                        time=event.time + event.request.holding_ms,
                        request_id=event.request.id,
                    )
                )
        elif isinstance(event, Departure):
            entry = orchestrator.db.entries.get(event.request_id)
            # A flow that already failed has nothing left to tear down.
            if entry is not None and entry.status not in TERMINAL:
                orchestrator.complete_request(event.request_id, event.time)
        elif isinstance(event, MeasureWindow):
            samples, alerts = controller.monitor_window(event.index)
            measured += 1
            for sample in samples:
                rows.append(
                    QoeRow(
                        time_ms=event.time,
                        flow_id=sample.flow_id,
                        mos=sample.mos,
                        q_bw=sample.q_bw,
                        q_delay=sample.q_delay,
                        q_loss=sample.q_loss,
                        q_stall=sample.q_stall,
                    )
                )
                histories.setdefault(sample.flow_id, []).append(sample)
            for alert in alerts:
                breaches.setdefault(alert.flow_id, []).append(alert.window_index)
                action = controller.handle_breach(alert.flow_id)
                orchestrator.apply_action(action, event.time)
        elif isinstance(event, HostFailure):
            evicted = state.fail_host(event.host_id)
            for action in controller.handle_host_failure(event.host_id, evicted):
                orchestrator.apply_action(action, event.time)
        elif isinstance(event, LinkDegradation):
            state.degrade_link(
                event.link_id, event.latency_ms, event.jitter_ms, event.loss_pct
            )
        elif isinstance(event, StallInjection):
            controller.set_stall(event.flow_id, event.stall_ratio)
        else:  # pragma: no cover - the queue only ever holds the types above
            msg = f"unknown event {event!r}"
            raise InvariantViolation(msg)
        if event_hook is not None:
            event_hook(event, state)
        if strict_debug:
            _audit_or_die(state, controller, orchestrator, catalog)

    _audit_or_die(state, controller, orchestrator, catalog)
    lifecycle_violations = audit_lifecycle(orchestrator.db)
    if lifecycle_violations:
        raise InvariantViolation("; ".join(lifecycle_violations))
    _audit_counters(controller, orchestrator)
    if measured != windows:
        msg = f"measured {measured} windows, expected {windows}"
        raise InvariantViolation(msg)

    flow_summaries: dict[int, FlowSummary] = {}
    for request_id in sorted(orchestrator.db.entries):
        entry = orchestrator.db.entries[request_id]
        history = histories.get(request_id, [])
        if history:
            ela = controller.ela_for(entry.request)
            compliance = ela_compliance(history, ela)
            compliant = compliance >= ela.compliance_budget
        else:
            compliance = None
            compliant = None
        flow_summaries[request_id] = FlowSummary(
            windows_observed=len(history),
            compliance=compliance,
            compliant=compliant,
            breach_windows=breaches.get(request_id, []),
            final_status=entry.status.value,
        )

    return SimReport(
        scenario_name=doc.name,
        seed=effective_seed,
        duration_ms=doc.duration_ms,
        window_ms=doc.window_ms,
        windows=windows,
        counters=controller.counters.as_dict(),
        flows=flow_summaries,
        rows=rows,
        db_dump=orchestrator.db.dump(),
    )


def audit_conservation(
    state: NetworkState,
    controller: Controller,
    orchestrator: Orchestrator,
    catalog: ServiceCatalog,
) -> list[str]:
    """Cross-check residuals against what non-terminal flows should hold."""
    violations: list[str] = []
    expected_cpu: dict[int, int] = {}
    expected_mem: dict[int, int] = {}
    expected_bw: dict[int, int] = {}
    expected_pids: dict[tuple[int, int], int] = {}
    live_ids = []
    for request_id, entry in orchestrator.db.entries.items():
        if entry.status in TERMINAL:
            continue
        live_ids.append(request_id)
        graph = entry.graph
        for position, (name, host_id) in enumerate(graph.placements):
            vnf = catalog.vnf(name)
            expected_cpu[host_id] = expected_cpu.get(host_id, 0) + vnf.cpu_demand
            expected_mem[host_id] = expected_mem.get(host_id, 0) + vnf.mem_demand
            expected_pids[(request_id, position)] = host_id
        for link_id, kbps in graph.link_usage().items():
            expected_bw[link_id] = expected_bw.get(link_id, 0) + kbps

    for host_id in state.residual_cpu:
        node = state.nodes[host_id]
        used_cpu = node.cpu_capacity - state.residual_cpu[host_id]
        used_mem = node.mem_capacity - state.residual_mem[host_id]
        if used_cpu != expected_cpu.get(host_id, 0):
            violations.append(
                f"host {host_id}: cpu ledger says {expected_cpu.get(host_id, 0)}, "
                f"state says {used_cpu}"
            )
        if used_mem != expected_mem.get(host_id, 0):
            violations.append(
                f"host {host_id}: mem ledger says {expected_mem.get(host_id, 0)}, "
                f"state says {used_mem}"
            )
    for link_id, link in state.links.items():
        used_bw = link.bandwidth_kbps - state.residual_bw[link_id]
        if used_bw != expected_bw.get(link_id, 0):
            violations.append(
                f"link {link_id}: bandwidth ledger says {expected_bw.get(link_id, 0)}, "
                f"state says {used_bw}"
            )

    actual_pids = {pid: rec.host_id for pid, rec in state.placements.items()}
    if actual_pids != expected_pids:
        violations.append("placement registry does not match live flows")
    if sorted(controller.flows) != sorted(live_ids):
        violations.append("controller flow map does not match non-terminal entries")
    for request_id in sorted(controller.flows):
        record = controller.flows[request_id]
        problems = validate_forwarding_graph(record.graph, record.request, state)
        for problem in problems:
            violations.append(f"flow {request_id}: {problem}")
    return violations


def _audit_or_die(state, controller, orchestrator, catalog) -> None:
    violations = audit_conservation(state, controller, orchestrator, catalog)
    if violations:
        raise InvariantViolation("; ".join(violations))


def _audit_counters(controller: Controller, orchestrator: Orchestrator) -> None:
    counters = controller.counters
    entries = orchestrator.db.entries.values()
    checks = [
        ("admitted", counters.admitted, len(orchestrator.db.entries)),
        (
            "completed",
            counters.completed,
            sum(1 for entry in entries if entry.status.value == "Completed"),
        ),
        (
            "failed",
            counters.failed,
            sum(1 for entry in entries if entry.status.value == "Failed"),
        ),
        (
            "rerouted+migrated",
            counters.rerouted + counters.migrated,
            sum(
                1
                for entry in entries
                for _, src, dst in entry.log
                if src.value == "Migrating" and dst.value == "Active"
            ),
        ),
    ]
    for label, counted, derived in checks:
        if counted != derived:
            msg = f"counter {label}={counted} disagrees with database ({derived})"
            raise InvariantViolation(msg)

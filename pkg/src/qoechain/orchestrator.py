"""NFV orchestrator: the VNFs database and the flow lifecycle automaton.

The database is the system of record for every request ever submitted,
including terminal ones. Status changes go through one guarded transition
helper so any controller/orchestrator disagreement dies loudly instead of
corrupting the record.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .controller import Action, ActionKind, Controller, Rejected
from .errors import (
    AlreadyTerminal,
    DuplicateRequest,
    IllegalTransition,
    UnknownRequest,
)
from .service import ChainRequest, ForwardingGraph
from .units import kbps_to_mbps


class LifecycleStatus(str, Enum):
    REQUESTED = "Requested"
    ACTIVE = "Active"
    DEGRADED = "Degraded"
    MIGRATING = "Migrating"
    FAILED = "Failed"
    COMPLETED = "Completed"


LEGAL_TRANSITIONS: dict[LifecycleStatus, frozenset[LifecycleStatus]] = {
    LifecycleStatus.REQUESTED: frozenset(
        {LifecycleStatus.ACTIVE, LifecycleStatus.FAILED}
    ),
    LifecycleStatus.ACTIVE: frozenset(
        {
            LifecycleStatus.DEGRADED,
            LifecycleStatus.MIGRATING,
            LifecycleStatus.COMPLETED,
            LifecycleStatus.FAILED,
        }
    ),
    LifecycleStatus.DEGRADED: frozenset(
        {
            LifecycleStatus.ACTIVE,
            LifecycleStatus.MIGRATING,
            LifecycleStatus.FAILED,
            LifecycleStatus.COMPLETED,
        }
    ),
    LifecycleStatus.MIGRATING: frozenset(
        {LifecycleStatus.ACTIVE, LifecycleStatus.FAILED}
    ),
    LifecycleStatus.FAILED: frozenset(),
    LifecycleStatus.COMPLETED: frozenset(),
}

TERMINAL = frozenset({LifecycleStatus.FAILED, LifecycleStatus.COMPLETED})


@dataclass
class DbEntry:
    request: ChainRequest
    graph: ForwardingGraph
    status: LifecycleStatus
    # (time_ms, from, to), append-only with non-decreasing timestamps.
    log: list[tuple[int, LifecycleStatus, LifecycleStatus]] = field(default_factory=list)


class VnfDb:
    def __init__(self):
        self.entries: dict[int, DbEntry] = {}

    def transition(self, entry: DbEntry, to: LifecycleStatus, now: int) -> None:
        if to not in LEGAL_TRANSITIONS[entry.status]:
            msg = (
                f"request {entry.request.id}: illegal transition "
                f"{entry.status.value} -> {to.value}"
            )
            raise IllegalTransition(msg)
        if entry.log and now < entry.log[-1][0]:
            msg = f"request {entry.request.id}: lifecycle log time went backwards"
            raise IllegalTransition(msg)
        entry.log.append((now, entry.status, to))
        entry.status = to

    def dump(self) -> list[dict]:
        """JSON-ready dump of every entry, sorted by request id."""
        out = []
        for request_id in sorted(self.entries):
            entry = self.entries[request_id]
            request = entry.request
            graph = entry.graph
            out.append(
                {
                    "request_id": request_id,
                    "request": {
                        "id": request.id,
                        "ingress": request.ingress,
                        "egress": request.egress,
                        "vnfs": list(request.vnf_sequence),
                        "profile": request.profile,
                        "ela_target": request.ela_target,
                        "arrival_ms": request.arrival_ms,
                        "holding_ms": request.holding_ms,
                    },
                    "status": entry.status.value,
                    "forwarding_graph": {
                        "placements": [
                            {"vnf": name, "host": host_id}
                            for name, host_id in graph.placements
                        ],
                        "segments": [list(segment) for segment in graph.segments],
                        "reserved_bw_mbps": kbps_to_mbps(graph.reserved_bw_kbps),
                        "status": graph.status.value,
                    },
                    "lifecycle": [
                        {"time_ms": time_ms, "from": src.value, "to": dst.value}
                        for time_ms, src, dst in entry.log
                    ],
                }
            )
        return out


class Orchestrator:
    """Request intake and lifecycle management on top of the controller."""

    def __init__(self, controller: Controller):
        self.controller = controller
        self.db = VnfDb()

    def submit_request(self, request: ChainRequest, now: int) -> ForwardingGraph | Rejected:
        """Admit a new request through the controller and record it.

        Rejected requests leave no database entry; rejection is an
        admission outcome, not a lifecycle.
        """
        if request.id in self.db.entries:
            raise DuplicateRequest(f"request {request.id} already submitted")
        result = self.controller.admit(request)
        if isinstance(result, Rejected):
            return result
        entry = DbEntry(request=request, graph=result, status=LifecycleStatus.REQUESTED)
        self.db.entries[request.id] = entry
        self.db.transition(entry, LifecycleStatus.ACTIVE, now)
        return result

    def complete_request(self, request_id: int, now: int) -> dict[str, int]:
        """Tear down a flow that ran its course; returns what was released."""
        entry = self.db.entries.get(request_id)
        if entry is None:
            raise UnknownRequest(f"unknown request {request_id}")
        if entry.status in TERMINAL:
            msg = f"request {request_id} is already {entry.status.value}"
            raise AlreadyTerminal(msg)
        released = self.controller.release_flow(request_id)
        self.db.transition(entry, LifecycleStatus.COMPLETED, now)
        return released

    def apply_action(self, action: Action, now: int) -> DbEntry:
        """Replay a controller action onto the database.

        Reroutes and migrations pass through Migrating and land on Active,
        both logged at the same timestamp. Marking an already-degraded flow
        degraded again is a no-op rather than a self-transition, which the
        automaton does not have.
        """
        entry = self.db.entries.get(action.flow_id)
        if entry is None:
            raise UnknownRequest(f"action for unknown request {action.flow_id}")
        if action.kind in (ActionKind.REROUTED, ActionKind.MIGRATED):
            self.db.transition(entry, LifecycleStatus.MIGRATING, now)
            self.db.transition(entry, LifecycleStatus.ACTIVE, now)
            entry.graph = action.new_graph
        elif action.kind is ActionKind.MARKED_DEGRADED:
            if entry.status is not LifecycleStatus.DEGRADED:
                self.db.transition(entry, LifecycleStatus.DEGRADED, now)
        elif action.kind is ActionKind.FAILED:
            self.db.transition(entry, LifecycleStatus.FAILED, now)
        return entry


def audit_lifecycle(db: VnfDb) -> list[str]:
    """Replay every entry's log against the automaton; return violations."""
    violations: list[str] = []
    for request_id in sorted(db.entries):
        entry = db.entries[request_id]
        status = LifecycleStatus.REQUESTED
        last_time = None
        for time_ms, src, dst in entry.log:
            label = f"request {request_id} at {time_ms}ms"
            if src is not status:
                violations.append(f"{label}: log jumps from {status.value} to {src.value}")
            if dst not in LEGAL_TRANSITIONS[src]:
                violations.append(f"{label}: illegal {src.value} -> {dst.value}")
            if last_time is not None and time_ms < last_time:
                violations.append(f"{label}: timestamps not monotone")
            status = dst
            last_time = time_ms
        if status is not entry.status:
            violations.append(
                f"request {request_id}: log ends at {status.value}, "
                f"entry says {entry.status.value}"
            )
    return violations

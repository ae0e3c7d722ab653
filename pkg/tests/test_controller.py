"""Controller behavior: admission, oracle, monitoring and self-healing."""

from random import Random

import pytest

from qoechain import (
    Controller,
    Ela,
    LinkSpec,
    NodeKind,
    NodeSpec,
    OracleLimits,
    PolicyConfig,
    Rejected,
    RejectReason,
    ServiceCatalog,
    VnfType,
    build_network,
    validate_forwarding_graph,
)
from qoechain.controller import ActionKind
from qoechain.errors import DuplicateRequest, InstanceTooLarge, InvalidRange, UnknownFlow
from qoechain.network import PlacementRecord
from qoechain.service import FlowStatus

from generators import (
    line_network,
    make_profile,
    make_request,
    random_catalog,
    random_network,
    random_request,
    small_catalog,
    square_network,
)

ELA = Ela(target_mos=3.0, window_ms=1000, breach_windows=2, compliance_budget=0.9)


def _controller(net=None, catalog=None, policy=PolicyConfig()):
    return Controller(net or line_network(), catalog or small_catalog(), ELA, policy)


def _pair_catalog(**profile_kwargs):
    return ServiceCatalog([], [make_profile(name="stream", **profile_kwargs)])


def _parallel_pair(latencies=(10.0, 12.0), bw=10_000):
    nodes = [NodeSpec(0, NodeKind.ENDPOINT), NodeSpec(1, NodeKind.ENDPOINT)]
    links = [
        LinkSpec(i, 0, 1, bandwidth_kbps=bw, latency_ms=lat)
        for i, lat in enumerate(latencies)
    ]
    return build_network(nodes, links)


def test_admit_reserves_everything_transactionally():
    ctl = _controller()
    request = make_request()
    graph = ctl.admit(request)
    assert graph.placements == (("fw", 1),)
    assert graph.segments == ((0,), (1,))
    assert graph.reserved_bw_kbps == 4000
    assert ctl.network.available_cpu(1) == 6
    assert ctl.network.available_mem(1) == 6
    assert ctl.network.available_bw(0) == 6000
    assert ctl.network.available_bw(1) == 6000
    assert ctl.network.placements[(0, 0)].host_id == 1
    assert ctl.counters.admitted == 1
    assert validate_forwarding_graph(graph, request, ctl.network) == []


def test_admit_twice_raises():
    ctl = _controller()
    ctl.admit(make_request())
    with pytest.raises(DuplicateRequest):
        ctl.admit(make_request())


def test_consecutive_vnfs_may_share_a_host():
    ctl = _controller()
    graph = ctl.admit(make_request(vnfs=("fw", "nat")))
    assert graph.placements == (("fw", 1), ("nat", 1))
    assert graph.segments == ((0,), (), (1,))
    assert ctl.network.available_cpu(1) == 5  # 8 - 2 - 1


def test_host_tie_breaks_on_utilization_then_id():
    # Symmetric square: equal path latency to both hosts.
    net = square_network()
    ctl = Controller(net, small_catalog(), ELA)
    graph = ctl.admit(make_request(ingress=0, egress=3))
    assert graph.placements == (("fw", 1),)  # equal everything: lowest id

    net2 = square_network()
    net2.reserve(placements=[PlacementRecord((99, 0), host_id=1, cpu=2, mem=0)])
    ctl2 = Controller(net2, small_catalog(), ELA)
    graph2 = ctl2.admit(make_request(ingress=0, egress=3))
    assert graph2.placements == (("fw", 2),)  # loaded host loses the tie


def test_reject_reasons():
    hungry = ServiceCatalog(
        [VnfType("fw", cpu_demand=99, mem_demand=1, proc_latency_ms=1.0)],
        [make_profile()],
    )
    ctl = Controller(line_network(), hungry, ELA)
    result = ctl.admit(make_request())
    assert result == Rejected(RejectReason.NO_HOST)
    assert ctl.counters.rejected["NoHost"] == 1

    thirsty = ServiceCatalog([], [make_profile(bw=20.0)])
    ctl = Controller(line_network(), thirsty, ELA)
    result = ctl.admit(make_request(vnfs=()))
    assert result == Rejected(RejectReason.NO_PATH)
    assert ctl.counters.rejected["NoPath"] == 1

    tight = ServiceCatalog(
        [VnfType("fw", 2, 2, 1.0)], [make_profile(delay_opt=1.0, delay_max=10.0)]
    )
    ctl = Controller(line_network(), tight, ELA)
    result = ctl.admit(make_request())
    assert isinstance(result, Rejected)
    assert result.reason is RejectReason.QOE_BELOW_TARGET
    assert result.predicted_mos == pytest.approx(1.0)
    assert ctl.counters.rejected["QoeBelowTarget"] == 1
    assert ctl.counters.as_dict()["rejected_total"] == 1
    # Rejections never leak reservations.
    assert ctl.network.snapshot() == line_network().snapshot()


def test_admission_honors_per_request_target():
    # d_eff 11 on the line network; make q_delay about 0.5.
    catalog = ServiceCatalog(
        [VnfType("fw", 2, 2, 1.0)], [make_profile(delay_opt=1.0, delay_max=21.0)]
    )
    ctl = Controller(line_network(), catalog, ELA)
    assert isinstance(ctl.admit(make_request(rid=0, target=3.5)), Rejected)
    assert not isinstance(ctl.admit(make_request(rid=1, target=2.5)), Rejected)


def test_plan_does_not_starve_itself_on_shared_links():
    # One 4 Mbps request over 5 Mbps links: the chain's own pending demand
    # must not depress its own predicted throughput.
    nodes = [
        NodeSpec(0, NodeKind.ENDPOINT),
        NodeSpec(1, NodeKind.HOST, cpu_capacity=4, mem_capacity=4),
        NodeSpec(2, NodeKind.ENDPOINT),
    ]
    links = [
        LinkSpec(0, 0, 1, bandwidth_kbps=5000, latency_ms=5.0),
        LinkSpec(1, 1, 2, bandwidth_kbps=5000, latency_ms=5.0),
    ]
    ctl = Controller(build_network(nodes, links), small_catalog(), ELA)
    graph = ctl.admit(make_request(target=4.9))
    assert not isinstance(graph, Rejected)


def test_exact_embed_beats_greedy_on_crafted_gap():
    nodes = [
        NodeSpec(0, NodeKind.ENDPOINT),
        NodeSpec(1, NodeKind.HOST, cpu_capacity=4, mem_capacity=4),
        NodeSpec(2, NodeKind.HOST, cpu_capacity=4, mem_capacity=4),
        NodeSpec(3, NodeKind.ENDPOINT),
    ]
    links = [
        LinkSpec(0, 0, 1, bandwidth_kbps=10_000, latency_ms=1.0),
        LinkSpec(1, 0, 2, bandwidth_kbps=10_000, latency_ms=2.0),
        LinkSpec(2, 1, 3, bandwidth_kbps=10_000, latency_ms=10.0),
        LinkSpec(3, 2, 3, bandwidth_kbps=10_000, latency_ms=2.0),
    ]
    catalog = ServiceCatalog([VnfType("fw", 1, 1, 0.0)], [make_profile()])
    net = build_network(nodes, links)
    ctl = Controller(net, catalog, ELA)
    request = make_request(ingress=0, egress=3)

    exact = ctl.exact_embed(request)
    assert exact.placements == (("fw", 2),)
    assert exact.segments == ((1,), (3,))
    assert ctl.graph_latency(exact, request) == pytest.approx(4.0)
    assert net.snapshot() == build_network(nodes, links).snapshot()  # no reservation

    greedy = ctl.embed_chain(request)
    assert greedy.placements == (("fw", 1),)
    assert ctl.graph_latency(greedy, request) == pytest.approx(6.0)


def test_exact_embed_infeasible_returns_none():
    catalog = ServiceCatalog([VnfType("fw", 99, 99, 0.0)], [make_profile()])
    ctl = Controller(square_network(), catalog, ELA)
    assert ctl.exact_embed(make_request(ingress=0, egress=3)) is None


def test_exact_embed_enforces_limits():
    nodes = [NodeSpec(0, NodeKind.ENDPOINT), NodeSpec(1, NodeKind.ENDPOINT)]
    nodes += [NodeSpec(i, NodeKind.HOST, cpu_capacity=1, mem_capacity=1) for i in range(2, 9)]
    links = [LinkSpec(0, 0, 1, bandwidth_kbps=10_000, latency_ms=1.0)]
    ctl = Controller(build_network(nodes, links), small_catalog(), ELA)
    with pytest.raises(InstanceTooLarge):
        ctl.exact_embed(make_request(ingress=0, egress=1, vnfs=()))

    ctl = _controller()
    with pytest.raises(InstanceTooLarge):
        ctl.exact_embed(make_request(vnfs=("fw",) * 4))

    ctl = Controller(square_network(), small_catalog(), ELA)
    with pytest.raises(InstanceTooLarge):
        ctl.exact_embed(
            make_request(ingress=0, egress=3, vnfs=()),
            OracleLimits(max_paths_per_pair=1),
        )


def _spur_network(spur_bw_kbps: int):
    # Host 3 hangs off the path on a spur, so placing there crosses the
    # spur link in both directions: 8 Mbps of aggregate demand on it.
    nodes = [
        NodeSpec(0, NodeKind.ENDPOINT),
        NodeSpec(1, NodeKind.HOST, cpu_capacity=1, mem_capacity=1),  # too small
        NodeSpec(2, NodeKind.ENDPOINT),
        NodeSpec(3, NodeKind.HOST, cpu_capacity=4, mem_capacity=4),
    ]
    links = [
        LinkSpec(0, 0, 1, bandwidth_kbps=6000, latency_ms=1.0),
        LinkSpec(1, 1, 2, bandwidth_kbps=6000, latency_ms=1.0),
        LinkSpec(2, 1, 3, bandwidth_kbps=spur_bw_kbps, latency_ms=5.0),
    ]
    return build_network(nodes, links)


def test_exact_embed_enforces_aggregate_bandwidth_per_link():
    catalog = ServiceCatalog([VnfType("fw", 2, 2, 0.0)], [make_profile()])
    request = make_request(ingress=0, egress=2)

    roomy = Controller(_spur_network(spur_bw_kbps=9000), catalog, ELA)
    graph = roomy.exact_embed(request)
    assert graph.placements == (("fw", 3),)
    # Out and back over the spur: link 2 appears in both segments.
    assert graph.segments == ((0, 2), (2, 1))

    tight = Controller(_spur_network(spur_bw_kbps=7000), catalog, ELA)
    # 7 Mbps covers one crossing but not both; no embedding remains.
    assert tight.exact_embed(request) is None


def test_monitor_window_scores_and_smooths():
    net = _parallel_pair()
    ctl = Controller(net, _pair_catalog(delay_opt=50.0, delay_max=250.0), ELA)
    request = make_request(ingress=0, egress=1, vnfs=(), profile="stream")
    ctl.admit(request)

    for window in (0, 1):
        samples, alerts = ctl.monitor_window(window)
        assert [s.mos for s in samples] == [5.0]
        assert alerts == []

    net.degrade_link(0, latency_ms=300.0)
    expected_delay = 10.0
    expected = []
    alert_trail = []
    for window in (2, 3, 4):
        expected_delay = 0.3 * 300.0 + 0.7 * expected_delay
        expected.append(expected_delay)
        samples, alerts = ctl.monitor_window(window)
        q_delay = (250.0 - expected_delay) / 200.0
        assert samples[0].mos == pytest.approx(1.0 + 4.0 * q_delay, abs=1e-9)
        alert_trail.append(alerts)
    assert expected == pytest.approx([97.0, 157.9, 200.53])
    # Windows 3 and 4 score below 3.0; the second consecutive miss alerts.
    assert alert_trail[0] == [] and alert_trail[1] == []
    assert len(alert_trail[2]) == 1
    assert alert_trail[2][0].window_index == 4


def test_monitor_reports_flows_in_ascending_id_order():
    ctl = Controller(square_network(), small_catalog(), ELA)
    ctl.admit(make_request(rid=7, ingress=0, egress=3))
    ctl.admit(make_request(rid=3, ingress=3, egress=0))
    samples, _ = ctl.monitor_window(0)
    assert [s.flow_id for s in samples] == [3, 7]


def test_stall_injection_shapes_q_stall():
    ctl = _controller()
    ctl.admit(make_request())
    ctl.set_stall(0, 0.1)  # stall_max is 0.2
    samples, _ = ctl.monitor_window(0)
    assert samples[0].q_stall == pytest.approx(0.5)
    assert samples[0].mos == pytest.approx(3.0)
    with pytest.raises(InvalidRange):
        ctl.set_stall(0, 1.5)


def test_reserved_bandwidth_insulates_throughput():
    # Admission reserved the flow's bandwidth, so later contention on the
    # same links never starves it: measurement offers its own share back.
    ctl = _controller()
    ctl.admit(make_request())  # 4 of 10 Mbps
    ctl.network.reserve(link_demands={0: 6000, 1: 6000})  # links now fully booked
    samples, _ = ctl.monitor_window(0)
    assert samples[0].q_bw == 1.0
    assert samples[0].mos > 4.9


def test_predict_flow_throughput_is_ewma_of_observations():
    ctl = _controller()
    ctl.admit(make_request())
    ctl.monitor_window(0)
    ctl.flows[0].throughput_obs = [10.0, 20.0]
    assert ctl.predict_flow_throughput(0) == pytest.approx(13.0)
    with pytest.raises(UnknownFlow):
        ctl.predict_flow_throughput(99)


def test_handle_breach_reroutes_to_the_spare_link():
    net = _parallel_pair()
    ctl = Controller(net, _pair_catalog(delay_opt=50.0, delay_max=250.0), ELA)
    ctl.admit(make_request(ingress=0, egress=1, vnfs=(), profile="stream"))
    net.degrade_link(0, latency_ms=300.0)
    action = ctl.handle_breach(0)
    assert action.kind is ActionKind.REROUTED
    assert action.new_graph.segments == ((1,),)
    assert ctl.counters.rerouted == 1
    assert net.available_bw(0) == 10_000  # old reservation released
    assert net.available_bw(1) == 6000
    assert ctl.flows[0].smoothed is None  # smoothing restarts on the new path


def test_handle_breach_escalates_to_migration():
    net = square_network()
    ctl = Controller(net, small_catalog(), ELA)
    ctl.admit(make_request(ingress=0, egress=3))
    net.degrade_link(0, loss_pct=50.0)  # worst link, latency untouched
    action = ctl.handle_breach(0)
    # Reroute alone cannot help: the cheapest segments are unchanged, so the
    # first attempt fails and the re-embed shuns the lossy link.
    assert action.kind is ActionKind.MIGRATED
    assert action.new_graph.placements == (("fw", 2),)
    assert action.new_graph.segments == ((1,), (3,))
    assert ctl.counters.migrated == 1
    assert net.available_cpu(1) == 4
    assert net.available_cpu(2) == 2
    assert net.placements[(0, 0)].host_id == 2


def test_handle_breach_marks_degraded_when_out_of_options():
    net = _parallel_pair(latencies=(10.0,))
    ctl = Controller(net, _pair_catalog(), ELA)
    ctl.admit(make_request(ingress=0, egress=1, vnfs=(), profile="stream"))
    net.degrade_link(0, latency_ms=1000.0)
    action = ctl.handle_breach(0)
    assert action.kind is ActionKind.MARKED_DEGRADED
    assert ctl.flows[0].graph.status is FlowStatus.DEGRADED
    # Degraded flows stay monitored.
    samples, _ = ctl.monitor_window(0)
    assert len(samples) == 1
    with pytest.raises(UnknownFlow):
        ctl.handle_breach(99)


def test_single_attempt_policy_skips_migration():
    net = square_network()
    ctl = Controller(net, small_catalog(), ELA, PolicyConfig(max_reroute_attempts=1))
    ctl.admit(make_request(ingress=0, egress=3))
    net.degrade_link(0, loss_pct=50.0)
    action = ctl.handle_breach(0)
    assert action.kind is ActionKind.MARKED_DEGRADED


def test_host_failure_migrates_evicted_positions():
    net = square_network()
    ctl = Controller(net, small_catalog(), ELA)
    ctl.admit(make_request(ingress=0, egress=3))
    evicted = net.fail_host(1)
    actions = ctl.handle_host_failure(1, evicted)
    assert [a.kind for a in actions] == [ActionKind.MIGRATED]
    graph = actions[0].new_graph
    assert graph.placements == (("fw", 2),)
    assert graph.segments == ((1,), (3,))
    assert net.available_bw(0) == 10_000
    assert net.available_bw(1) == 6000
    assert net.available_cpu(2) == 2
    assert ctl.counters.migrated == 1
    assert validate_forwarding_graph(graph, ctl.flows[0].request, net) == []


def test_host_failure_without_refuge_fails_the_flow():
    nodes = [
        NodeSpec(0, NodeKind.ENDPOINT),
        NodeSpec(1, NodeKind.HOST, cpu_capacity=4, mem_capacity=4),
        NodeSpec(2, NodeKind.HOST, cpu_capacity=1, mem_capacity=1),  # too small
        NodeSpec(3, NodeKind.ENDPOINT),
    ]
    links = [
        LinkSpec(0, 0, 1, bandwidth_kbps=10_000, latency_ms=5.0),
        LinkSpec(1, 0, 2, bandwidth_kbps=10_000, latency_ms=5.0),
        LinkSpec(2, 1, 3, bandwidth_kbps=10_000, latency_ms=5.0),
        LinkSpec(3, 2, 3, bandwidth_kbps=10_000, latency_ms=5.0),
    ]
    net = build_network(nodes, links)
    ctl = Controller(net, small_catalog(), ELA)
    ctl.admit(make_request(ingress=0, egress=3))
    actions = ctl.handle_host_failure(1, net.fail_host(1))
    assert [a.kind for a in actions] == [ActionKind.FAILED]
    assert 0 not in ctl.flows
    assert ctl.counters.failed == 1
    # Everything the flow held is back.
    assert net.available_bw(0) == 10_000
    assert net.available_bw(2) == 10_000
    assert net.placements == {}


def test_host_failure_handles_flows_in_id_order_until_room_runs_out():
    net = square_network()
    # Host 2 starts three-quarters full, so both admissions pick host 1.
    net.reserve(placements=[PlacementRecord((99, 0), host_id=2, cpu=3, mem=3)])
    ctl = Controller(net, small_catalog(), ELA)
    ctl.admit(make_request(rid=5, ingress=0, egress=3, vnfs=("nat",)))
    ctl.admit(make_request(rid=2, ingress=3, egress=0, vnfs=("nat",)))
    evicted = net.fail_host(1)
    assert evicted == [(2, 0), (5, 0)]
    actions = ctl.handle_host_failure(1, evicted)
    assert [a.flow_id for a in actions] == [2, 5]
    # Host 2 has one spare unit: flow 2 migrates first and takes it.
    assert actions[0].kind is ActionKind.MIGRATED
    assert actions[0].new_graph.placements == (("nat", 2),)
    assert actions[1].kind is ActionKind.FAILED
    assert 5 not in ctl.flows
    assert 2 in ctl.flows


def test_release_flow_returns_holdings_and_restores_state():
    ctl = _controller()
    pristine = ctl.network.snapshot()
    ctl.admit(make_request())
    released = ctl.release_flow(0)
    assert released == {"cpu": 2, "mem": 2, "bandwidth_kbps": 8000}
    assert ctl.network.snapshot() == pristine
    assert ctl.counters.completed == 1
    with pytest.raises(UnknownFlow):
        ctl.release_flow(0)


def test_embedding_is_deterministic():
    for trial_seed in (1, 2, 3):
        rng_a, rng_b = Random(trial_seed), Random(trial_seed)
        plans = []
        for rng in (rng_a, rng_b):
            net = random_network(rng)
            catalog = random_catalog(rng)
            ctl = Controller(net, catalog, ELA)
            outcome = []
            for rid in range(6):
                result = ctl.admit(random_request(rng, rid, net, catalog, target=1.0))
                outcome.append(
                    result if isinstance(result, Rejected) else (result.placements, result.segments)
                )
            plans.append(outcome)
        assert plans[0] == plans[1]

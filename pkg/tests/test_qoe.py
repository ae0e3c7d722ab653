"""MOS model, agreement rules and admission prediction."""

import pytest
from hypothesis import given, strategies as st

from qoechain import Ela, FlowSample, QoeSample, ela_breached, ela_compliance, estimate_mos, predict_mos
from qoechain.controller import predict_traffic
from qoechain.errors import EmptyHistory, InvalidRange

from generators import line_network, make_profile, make_request, small_catalog


def _sample(thr=4.0, delay=100.0, jitter=25.0, loss=1.0, stall=0.05, window=0):
    return FlowSample(0, window, thr, delay, jitter, loss, stall)


def test_mos_worked_example():
    profile = make_profile()  # bw 4, delay 50..400, loss_max 5, stall_max 0.2
    scored = estimate_mos(_sample(), profile)
    # d_eff 150, q_delay 250/350, q_loss 0.8, q_stall 0.75 -> 1 + 12/7
    assert scored.mos == pytest.approx(2.7142857142857144, abs=1e-9)
    assert scored.q_bw == pytest.approx(1.0)
    assert scored.q_delay == pytest.approx(250.0 / 350.0, abs=1e-12)
    assert scored.q_loss == pytest.approx(0.8, abs=1e-12)
    assert scored.q_stall == pytest.approx(0.75, abs=1e-12)


def test_perfect_sample_scores_five():
    profile = make_profile()
    scored = estimate_mos(_sample(thr=10.0, delay=10.0, jitter=0.0, loss=0.0, stall=0.0), profile)
    assert scored.mos == 5.0


def test_one_exhausted_factor_pins_mos_at_one():
    profile = make_profile()
    scored = estimate_mos(_sample(loss=5.0), profile)
    assert scored.q_loss == 0.0
    assert scored.mos == 1.0


def test_delay_boundaries():
    profile = make_profile()
    at_opt = estimate_mos(_sample(delay=50.0, jitter=0.0), profile)
    assert at_opt.q_delay == 1.0
    at_max = estimate_mos(_sample(delay=400.0, jitter=0.0), profile)
    assert at_max.q_delay == 0.0
    beyond = estimate_mos(_sample(delay=1000.0, jitter=0.0), profile)
    assert beyond.q_delay == 0.0


def test_jitter_counts_double():
    profile = make_profile()
    with_jitter = estimate_mos(_sample(delay=100.0, jitter=25.0), profile)
    flat = estimate_mos(_sample(delay=150.0, jitter=0.0), profile)
    assert with_jitter.q_delay == flat.q_delay


def test_throughput_above_requirement_does_not_overshoot():
    profile = make_profile()
    assert estimate_mos(_sample(thr=400.0), profile).q_bw == 1.0
    assert estimate_mos(_sample(thr=2.0), profile).q_bw == pytest.approx(0.5)
    assert estimate_mos(_sample(thr=0.0), profile).q_bw == 0.0


def test_flow_sample_validation():
    with pytest.raises(InvalidRange):
        _sample(thr=-0.1)
    with pytest.raises(InvalidRange):
        _sample(stall=1.1)
    with pytest.raises(InvalidRange):
        FlowSample(0, -1, 1.0, 1.0, 1.0, 1.0, 0.0)


def test_qoe_sample_rejects_inconsistent_mos():
    with pytest.raises(InvalidRange):
        QoeSample(0, 0, mos=4.0, q_bw=1.0, q_delay=1.0, q_loss=1.0, q_stall=1.0)
    with pytest.raises(InvalidRange):
        QoeSample(0, 0, mos=5.0, q_bw=1.0, q_delay=1.2, q_loss=1.0, q_stall=1.0)


def test_ela_validation():
    with pytest.raises(InvalidRange):
        Ela(0.5, 1000, 1, 1.0)
    with pytest.raises(InvalidRange):
        Ela(3.0, 0, 1, 1.0)
    with pytest.raises(InvalidRange):
        Ela(3.0, 1000, 0, 1.0)
    with pytest.raises(InvalidRange):
        Ela(3.0, 1000, 1, 1.5)


def _history(*mos_values):
    out = []
    for index, mos in enumerate(mos_values):
        q = (mos - 1.0) / 4.0
        out.append(QoeSample(0, index, mos=1.0 + 4.0 * q, q_bw=1.0, q_delay=q, q_loss=1.0, q_stall=1.0))
    return out


def test_breach_needs_k_consecutive_strictly_below():
    ela = Ela(3.0, 1000, 2, 0.9)
    assert not ela_breached(_history(2.0), ela)  # shorter than K
    assert not ela_breached(_history(2.0, 3.0), ela)
    assert not ela_breached(_history(2.0, 3.0, 2.5), ela)
    assert ela_breached(_history(3.5, 2.0, 2.5), ela)
    # Exactly at target is not a breach; the comparison is strict.
    assert not ela_breached(_history(2.0, 3.0 + 0.0), ela)
    assert not ela_breached(_history(3.0, 3.0), ela)


def test_breach_window_of_one():
    ela = Ela(3.0, 1000, 1, 0.9)
    assert ela_breached(_history(4.0, 2.9), ela)
    assert not ela_breached(_history(2.0, 3.0), ela)


def test_compliance_counts_at_or_above_target():
    ela = Ela(3.0, 1000, 2, 0.9)
    history = _history(3.0, 2.9, 5.0, 1.0)
    assert ela_compliance(history, ela) == pytest.approx(0.5)
    with pytest.raises(EmptyHistory):
        ela_compliance([], ela)


def test_predict_traffic_ewma():
    assert predict_traffic([10.0, 20.0], alpha=0.3) == pytest.approx(13.0, abs=1e-12)
    assert predict_traffic([7.5]) == 7.5
    assert predict_traffic([1.0, 2.0, 3.0], alpha=1.0) == 3.0
    with pytest.raises(EmptyHistory):
        predict_traffic([])
    with pytest.raises(InvalidRange):
        predict_traffic([1.0], alpha=0.0)
    with pytest.raises(InvalidRange):
        predict_traffic([1.0], alpha=1.5)


def test_predict_mos_uses_path_and_residuals():
    net = line_network()
    catalog = small_catalog()
    request = make_request()
    predicted = predict_mos(request, ((0,), (1,)), net, catalog)
    # 11 ms effective delay against delay_opt 50 -> every factor is 1.
    assert predicted.mos == 5.0
    net.reserve(link_demands={0: 9000})  # 1 Mbps left on link 0
    starved = predict_mos(request, ((0,), (1,)), net, catalog)
    assert starved.q_bw == pytest.approx(0.25)


def test_predict_mos_without_links_assumes_requirement_met():
    net = line_network()
    catalog = small_catalog()
    request = make_request(vnfs=())
    predicted = predict_mos(request, ((),), net, catalog)
    assert predicted.q_bw == 1.0


profiles = st.builds(
    make_profile,
    bw=st.floats(0.1, 10.0),
    delay_opt=st.floats(0.0, 100.0),
    delay_max=st.floats(101.0, 800.0),
    loss_max=st.floats(0.5, 100.0),
    stall_max=st.floats(0.05, 1.0),
)
samples = st.builds(
    _sample,
    thr=st.floats(0.0, 20.0),
    delay=st.floats(0.0, 1000.0),
    jitter=st.floats(0.0, 100.0),
    loss=st.floats(0.0, 100.0),
    stall=st.floats(0.0, 1.0),
)


@given(profiles, samples)
def test_mos_bounds_and_consistency(profile, sample):
    scored = estimate_mos(sample, profile)
    assert 1.0 <= scored.mos <= 5.0
    for factor in (scored.q_bw, scored.q_delay, scored.q_loss, scored.q_stall):
        assert 0.0 <= factor <= 1.0
    product = scored.q_bw * scored.q_delay * scored.q_loss * scored.q_stall
    assert scored.mos == pytest.approx(1.0 + 4.0 * product, abs=1e-9)


@given(profiles, samples, st.floats(0.1, 200.0))
def test_more_delay_never_helps(profile, sample, extra):
    base = estimate_mos(sample, profile)
    worse = estimate_mos(
        FlowSample(
            sample.flow_id,
            sample.window_index,
            sample.throughput_mbps,
            sample.delay_ms + extra,
            sample.jitter_ms,
            sample.loss_pct,
            sample.stall_ratio,
        ),
        profile,
    )
    assert worse.mos <= base.mos + 1e-9

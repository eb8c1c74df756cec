from hypothesis import given, settings
from hypothesis import strategies as st

from coopchain.core_model import backhaul_load, build_topology, draw_channel
from coopchain.dof_engine import construct_beams, verify_receiver
from coopchain.ledger import Ledger, check_transaction, coin_endowment
from coopchain.oracle import fig1_scheme
from coopchain.protocol import CM, run_protocol

Ks = st.integers(min_value=1, max_value=60)


@given(K=Ks, seed=st.integers(0, 2**32 - 1))
def test_channel_support_equals_links(K, seed):
    topo = build_topology(K)
    ch = draw_channel(topo, seed)
    assert set(ch.entries) == {(rx, tx) for tx, rx in topo.links}


@given(st.data())
def test_backhaul_permutation_and_concatenation(data):
    K = data.draw(st.integers(1, 8))
    sets = data.draw(st.lists(st.sets(st.integers(1, K), max_size=3), min_size=K, max_size=K))
    permuted = [sorted(s, reverse=True) for s in sets]
    assert backhaul_load(sets) == backhaul_load(permuted)
    other = data.draw(st.lists(st.sets(st.integers(1, K), max_size=3), min_size=K, max_size=K))
    joined = [set(s) for s in sets] + [{j + K for j in s} for s in other]
    assert backhaul_load(joined) == (backhaul_load(sets) + backhaul_load(other)) / 2


@given(K=Ks)
def test_protocol_respects_budget_and_cap(K):
    r = run_protocol(K)
    assert backhaul_load(r.assignment) <= 1
    assert all(len(t) <= 2 for t in r.assignment.transmit_sets)
    assert r.cm_messages_sent == K - 1
    for t in r.transactions:
        check_transaction(t, K)


@given(st.integers(1, 15))
def test_cm_trace_periodic(n):
    K = 4 * n
    r = run_protocol(K)
    pattern = {1: CM.CM3, 2: CM.CM4, 3: CM.CM2, 0: CM.CM1}
    assert all(cm is pattern[i % 4] for i, cm in enumerate(r.cm_trace, start=1))
    assert r.assignment.total_instances == K


@given(K=Ks)
def test_coin_conservation(K):
    endow = coin_endowment(K)
    led = Ledger(K).extend(run_protocol(K).transactions)
    assert sum(led.balances(endow).values()) == sum(endow.values())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), factor=st.floats(0.01, 100).map(lambda x: x * (-1) ** int(x)))
def test_scale_invariance(seed, factor):
    s = fig1_scheme(8)
    ch = draw_channel(build_topology(8), seed)
    flags = []
    for c in (ch, ch.scaled(factor)):
        beams = construct_beams(s, c)
        flags.append([verify_receiver(s, beams, c, i).decodable for i in sorted(s.active_receivers)])
    assert flags[0] == flags[1]


@settings(max_examples=25, deadline=None)
@given(K=st.integers(2, 6), seed=st.integers(0, 1000))
def test_foreign_aggregates_vanish(K, seed):
    r = run_protocol(K)
    s = r.scheme()
    ch = draw_channel(build_topology(K), seed)
    beams = construct_beams(s, ch)
    for i in s.active_receivers:
        rc = verify_receiver(s, beams, ch, i)
        assert rc.max_interference_residual <= 1e-9
        assert abs(rc.desired_coeff) >= 1e-6

from fractions import Fraction

import pytest

from coopchain.core_model import (
    DofResult,
    MessageAssignment,
    ModelError,
    backhaul_load,
    build_topology,
    draw_channel,
)


def test_single_pair_topology():
    assert build_topology(1).links == ((1, 1),)


def test_four_user_links():
    assert set(build_topology(4).links) == {
        (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4)
    }


@pytest.mark.parametrize("K", [1, 2, 5, 17])
def test_link_count(K):
    assert len(build_topology(K).links) == 2 * K - 1


def test_interferers_only_predecessor():
    topo = build_topology(3)
    assert topo.interferers_at(2) == {1}
    assert topo.interferers_at(1) == set()
    assert topo.receivers_of(3) == (3,)


def test_zero_users_rejected():
    with pytest.raises(ModelError):
        build_topology(0)


def test_draw_is_deterministic():
    topo = build_topology(2)
    assert draw_channel(topo, 11).entries == draw_channel(topo, 11).entries


def test_draw_support_matches_links():
    topo = build_topology(4)
    ch = draw_channel(topo, 3)
    assert len(ch.entries) == 7
    assert set(ch.entries) == {(rx, tx) for tx, rx in topo.links}
    assert all(v != 0 for v in ch.entries.values())
    assert ch.gain(1, 2) == 0.0


def test_different_seeds_differ():
    topo = build_topology(3)
    for s in range(100):
        a = draw_channel(topo, 2 * s).entries
        b = draw_channel(topo, 2 * s + 1).entries
        assert a != b


def test_backhaul_fig1_block():
    assert backhaul_load([{1, 2}, {2}, set(), {3}]) == 1


def test_backhaul_identity_assignment():
    assert backhaul_load([{1}, {2}, {3}, {4}]) == 1


def test_backhaul_over_budget():
    load = backhaul_load([{1, 2}, {2}, {3}, {4}])
    assert load == Fraction(5, 4)
    assert isinstance(load, Fraction)


def test_backhaul_rejects_out_of_range():
    with pytest.raises(ModelError):
        backhaul_load([{1, 5}, {2}])


def test_dof_result_sums():
    r = DofResult((1, 1, 0, 1))
    assert r.sum == 3
    assert r.per_user_avg == Fraction(3, 4)
    with pytest.raises(ModelError):
        DofResult((2,))


def test_assignment_key_sorts_lexicographically():
    a = MessageAssignment.from_lists([[2, 1], []])
    assert a.key() == ((1, 2), ())

from fractions import Fraction

from coopchain.fairness import rotation_schedule, run_rotation


def test_phase0_inactive():
    assert rotation_schedule(8).phases[0].inactive == {3, 7}


def test_phase1_inactive():
    assert rotation_schedule(8).phases[1].inactive == {4, 8}


def test_each_node_idle_once():
    for K in (4, 5, 7, 8, 13):
        plan = rotation_schedule(K)
        for i in range(1, K + 1):
            assert sum(i in ph.inactive for ph in plan.phases) == 1


def test_parts_in_order():
    plan = rotation_schedule(8)
    for i in range(1, 9):
        parts = [ph.parts[i] for ph in plan.phases if ph.parts[i] is not None]
        assert parts == [1, 2, 3]


def test_rotation_k8():
    rot = run_rotation(8)
    assert rot.per_user_dof[1:] == [Fraction(3, 4)] * 7
    # node 1 cannot rent transmitter 0 in phase 1
    assert rot.per_user_dof[0] == Fraction(1, 2)
    assert rot.puDoF == Fraction(23, 32)
    assert all(rot.nets[i] == 0 for i in rot.interior)
    for i in range(2, 9):
        assert [part for _, part in rot.parts_delivered[i]] == [1, 2, 3]
    assert rot.ledger.validate()
    assert len(rot.ledger.blocks) == 4


def test_rotation_k4_regression():
    rot = run_rotation(4)
    assert rot.puDoF == Fraction(11, 16)
    assert rot.nets == {1: 0, 2: 0, 3: 0, 4: 0}
    assert rot.balances == {1: 2, 2: 0, 3: 0, 4: 0}
    assert rot.min_balance_seen == -3


def test_rotation_equalizes_vs_single_phase():
    rot = run_rotation(16)
    single = rot.phases[0]
    assert {i for i in range(5, 13) if i not in single.active_receivers} == {7, 11}
    assert all(rot.per_user_dof[i - 1] == Fraction(3, 4) for i in rot.interior)


def test_rotation_tends_to_three_quarters():
    for K in (8, 12, 20):
        assert run_rotation(K, trials=5).puDoF == Fraction(3 * K - 1, 4 * K)


def test_truncated_rotations_run():
    for K in (1, 2, 3, 5, 6, 7, 9, 10):
        rot = run_rotation(K, trials=5)
        assert rot.ledger.validate()
        assert all(p.assignment.total_instances <= K for p in rot.phases)

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_min_states
from strategies import machines
from substrate.abstraction import (
    abs_apply,
    bisimilar,
    check_coarse_graining,
    index_quotient,
    quotient,
    reachable,
    refine_partition,
)
from substrate.errors import AlphabetMismatch, UnknownState
from substrate.machines import EncodedMachine, mod8_feedback, mod8_feedforward, mod_counter, step


def named(fm, label_map, label):
    return fm.display(abs_apply(label_map, label))


def test_reachable_drops_unreachable_state():
    m = EncodedMachine(("00", "01", "10"), ("a",), ("x",), ((1,), (0,), (0,)), (0, 0, 0), 0)
    r = reachable(m)
    assert r.states == ("00", "01")
    assert r.delta == ((1,), (0,))


def test_reachable_fixpoint():
    m = mod8_feedback()
    assert reachable(m) is m
    assert reachable(reachable(m)) is m


def test_quotient_block_anchors():
    fm1, a1 = quotient(mod8_feedback())
    fm2, a2 = quotient(mod8_feedforward())
    assert named(fm1, a1, "100") == "H"
    assert named(fm2, a2, "111") == "H"
    # encodings differ and so do their successor labels, yet both are E
    assert named(fm1, a1, "111") == named(fm2, a2, "001") == "E"
    assert step(mod8_feedback(), "111", "car")[0] == "011"
    assert step(mod8_feedforward(), "001", "car")[0] == "101"


def test_distinct_outputs_give_singleton_blocks():
    m = EncodedMachine(("00", "01", "10"), ("a",), ("x", "y", "z"), ((1,), (2,), (0,)), (0, 1, 2), 0)
    fm, amap = quotient(m)
    assert len(fm.states) == 3
    assert all(len(members) == 1 for members in amap.blocks().values())


def test_abs_apply_root_and_errors():
    m = EncodedMachine(("00", "01", "10"), ("a",), ("x",), ((1,), (0,), (0,)), (0, 0, 0), 0)
    fm, amap = quotient(m)
    assert abs_apply(amap, "00") == fm.initial == "F0"
    with pytest.raises(UnknownState):
        abs_apply(amap, "10")  # unreachable
    with pytest.raises(UnknownState):
        abs_apply(amap, "111")  # foreign


def test_bisimilar_examples():
    fb, ff = mod8_feedback(), mod8_feedforward()
    w = bisimilar(fb, ff)
    assert ("100", "111") in w and ("111", "001") in w
    assert bisimilar(fb, fb).relation == frozenset((s, s) for s in fb.states)
    assert bisimilar(fb, mod_counter(4)) is None
    with pytest.raises(AlphabetMismatch):
        bisimilar(fb, mod8_feedback(binary_input=True))


def test_coarse_graining_examples():
    fb = mod8_feedback()
    assert check_coarse_graining(fb, quotient(fb)[1])
    one = EncodedMachine(("0",), ("a",), ("x",), ((0,),), (0,), 0)
    assert not check_coarse_graining(one, quotient(one)[1])
    full = EncodedMachine(("0", "1"), ("a",), ("0", "1"), ((1,), (0,)), (0, 1), 0)
    assert not check_coarse_graining(full, quotient(full)[1])


def test_refine_partition_numbers_blocks_by_lowest_index():
    m = EncodedMachine(("00", "01", "10", "11"), ("a",), ("x", "y"), ((1,), (2,), (3,), (0,)), (1, 0, 1, 0), 0)
    assert refine_partition(m) == [0, 1, 0, 1]


@given(machines(max_states=6, max_inputs=3, max_outputs=3))
def test_transition_commutation_and_output_preservation(m):
    fm, amap = quotient(m)
    table = amap.as_dict()
    for label, fs in table.items():
        assert fm.output_of(fs) == m.output_of(label)
        for x in m.inputs:
            assert table[step(m, label, x)[0]] == fm.step(fs, x)
    assert set(table.values()) == set(fm.states)
    assert table[m.initial_label] == fm.initial


@given(machines(max_states=5, max_inputs=2, max_outputs=3))
def test_quotient_is_minimal(m):
    r = reachable(m)
    fm, _ = quotient(m)
    assert len(fm.states) == brute_min_states(r.delta, r.out)


@given(machines(max_states=4), machines(max_states=4))
def test_bisimulation_witness_is_a_bisimulation(m1, m2):
    if m1.inputs != m2.inputs or m1.outputs != m2.outputs:
        return
    w = bisimilar(m1, m2)
    if w is None:
        return
    assert (m1.initial_label, m2.initial_label) in w
    for a, b in w.relation:
        assert m1.output_of(a) == m2.output_of(b)
        for x in m1.inputs:
            assert (step(m1, a, x)[0], step(m2, b, x)[0]) in w


@given(machines(max_states=5))
def test_quotient_is_deterministic_and_idempotent(m):
    fm, _ = quotient(m)
    again = EncodedMachine(
        tuple(format(i, "03b") for i in range(len(fm.states))),
        fm.inputs,
        fm.outputs,
        fm.delta,
        tuple(fm.outputs.index(o) for o in fm.out),
        0,
    )
    fm2, _ = quotient(again)
    assert fm2.delta == fm.delta and fm2.out == fm.out


@given(machines(max_states=5, max_outputs=3), st.permutations(range(3)))
def test_renaming_outputs_keeps_blocks(m, perm):
    x_order = tuple(range(len(m.inputs)))
    fdelta, fout, fid = index_quotient(m.delta, m.out, m.initial, x_order)
    renamed = tuple(perm[o] for o in m.out)
    rdelta, rout, rfid = index_quotient(m.delta, renamed, m.initial, x_order)
    assert (rdelta, rfid) == (fdelta, fid)
    assert rout == tuple(perm[o] for o in fout)

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_io_equivalent, has_cycle
from strategies import machines
from substrate.abstraction import bisimilar, quotient
from substrate.errors import AlphabetMismatch, HorizonTooLarge, MachineError, UnknownInput, UnknownState
from substrate.machines import (
    GATE_CLOSED,
    GATE_OPEN,
    MOD8_FEEDFORWARD_RELABEL,
    EncodedMachine,
    Trace,
    dependency_graph,
    distinguishing_word,
    dump_machine,
    io_equivalent,
    load_machine,
    machine_from_dict,
    machine_to_dict,
    mod8_feedback,
    mod8_feedforward,
    mod_counter,
    relabel,
    run,
    split_state,
    step,
)


@pytest.fixture(scope="module")
def fb():
    return mod8_feedback()


@pytest.fixture(scope="module")
def ff():
    return mod8_feedforward()


def test_step_anchors(fb, ff):
    assert step(fb, "111", "car")[0] == "011"
    assert step(ff, "001", "car")[0] == "101"
    assert step(ff, "111", "car")[0] == "000"


def test_step_errors(fb):
    with pytest.raises(UnknownState):
        step(fb, "1111", "car")
    with pytest.raises(UnknownInput):
        step(fb, "000", "truck")


def test_run_empty_input(fb):
    t = run(fb, [])
    assert t.states == ("000",) and t.outputs == (GATE_OPEN,) and t.inputs == ()


def test_trace_length_invariant():
    with pytest.raises(ValueError):
        Trace(("0",), ("a", "b"), ())


def test_eight_cars_close_the_cycle(fb, ff):
    a, b = run(fb, ["car"] * 8), run(ff, ["car"] * 8)
    assert a.states[-1] == a.states[0]
    raised = [i for i in range(1, 9) if a.outputs[i - 1] == GATE_CLOSED and a.outputs[i] == GATE_OPEN]
    assert raised == [8]
    assert a.outputs == b.outputs
    assert a.states != b.states


def test_fixture_shapes(fb, ff):
    assert len(fb.states) == len(ff.states) == 8
    assert len(quotient(fb)[0].states) == 8


def test_relabel_constant_maps_feedback_onto_feedforward(fb, ff):
    assert relabel(fb, MOD8_FEEDFORWARD_RELABEL).transitions() == ff.transitions()


def test_dependency_graphs(fb, ff):
    g_fb, g_ff = dependency_graph(fb), dependency_graph(ff)
    assert g_fb.has_feedback() and has_cycle(g_fb.nodes, g_fb.edges)
    assert g_ff.is_acyclic() and not has_cycle(g_ff.nodes, g_ff.edges)
    # bit j is the j-th character; the feedforward labels are LSB first, so bit 1 reads the carry from bit 0
    assert (0, 1) in g_ff.edges


def test_dependency_graph_ignores_current_bit():
    m = EncodedMachine(("0", "1"), ("a",), ("z",), ((1,), (1,)), (0, 0), 0)
    assert dependency_graph(m).edges == frozenset()


def _naive_edges(m):
    reach = {m.states[i] for i in _reachable(m)}
    edges = set()
    for s in reach:
        for j in range(m.width):
            other = s[:j] + ("1" if s[j] == "0" else "0") + s[j + 1:]
            if other not in reach:
                continue
            for x in m.inputs:
                a, b = step(m, s, x)[0], step(m, other, x)[0]
                edges |= {(j, i) for i in range(m.width) if a[i] != b[i]}
    return frozenset(edges)


def _reachable(m):
    seen, todo = {m.initial}, [m.initial]
    while todo:
        s = todo.pop()
        for t in m.delta[s]:
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return seen


@given(machines(max_states=6))
def test_dependency_graph_matches_flip_definition(m):
    g = dependency_graph(m)
    assert g.edges == _naive_edges(m)
    assert g.has_feedback() == has_cycle(g.nodes, g.edges)


def test_io_equivalence_examples(fb, ff):
    assert io_equivalent(fb, fb)
    assert io_equivalent(fb, ff, 12)
    m4 = mod_counter(4)
    assert not io_equivalent(fb, m4, 4)
    # the fourth car reopens the Mod-4 gate while the Mod-8 gate stays closed
    assert distinguishing_word(fb, m4) == ("car",) * 4


def test_io_equivalent_guards(fb):
    with pytest.raises(HorizonTooLarge):
        io_equivalent(mod8_feedback(binary_input=True), mod8_feedforward(binary_input=True), 17)
    with pytest.raises(AlphabetMismatch):
        io_equivalent(fb, mod8_feedback(binary_input=True))


@given(machines(max_states=3), machines(max_states=3))
def test_io_equivalence_agrees_with_bisimulation(m1, m2):
    if m1.inputs != m2.inputs or m1.outputs != m2.outputs:
        return
    h = len(m1.states) * len(m2.states)
    expected = brute_io_equivalent(m1, m2, h)
    assert io_equivalent(m1, m2, h) == expected
    assert (bisimilar(m1, m2) is not None) == expected


def test_binary_input_variant_holds_on_idle():
    m = mod8_feedback(binary_input=True)
    assert step(m, "110", "none")[0] == "110"


@given(machines(max_states=5), st.data())
def test_split_state_is_bisimilar(m, data):
    s = data.draw(st.integers(0, len(m.states) - 1))
    incoming = [(src, x) for src in range(len(m.states)) for x in range(len(m.inputs)) if m.delta[src][x] == s]
    chosen = data.draw(st.lists(st.sampled_from(incoming), unique=True)) if incoming else []
    split = split_state(m, s, chosen)
    assert len(split.states) == len(m.states) + 1
    assert bisimilar(m, split) is not None


def test_split_rejects_foreign_edge(fb):
    with pytest.raises(MachineError):
        split_state(fb, 0, [(0, 0)])


def test_relabel_must_be_injective(fb):
    with pytest.raises(MachineError):
        relabel(fb, {"000": "001"})


@pytest.mark.parametrize("bad", [
    dict(states=("0", "10"), delta=((0,), (1,))),
    dict(states=("0", "0"), delta=((0,), (1,))),
    dict(states=("0", "2"), delta=((0,), (1,))),
    dict(states=("0", "1"), delta=((0,), (2,))),
    dict(states=("0", "1"), delta=((0,),)),
])
def test_malformed_machines(bad):
    with pytest.raises(MachineError):
        EncodedMachine(bad["states"], ("a",), ("z",), bad["delta"], (0,) * len(bad["states"]), 0)


def test_partial_transition_table_rejected():
    d = machine_to_dict(mod_counter(2))
    d["transitions"] = d["transitions"][:1]
    with pytest.raises(MachineError, match="missing transition"):
        machine_from_dict(d)


def test_four_field_transition_records():
    d = {
        "states": ["0", "1"],
        "inputs": ["a"],
        "outputs": ["x", "y"],
        "initial": "0",
        "transitions": [["0", "a", "1", "y"], ["1", "a", "0", "x"]],
    }
    m = machine_from_dict(d)
    assert m.output_of("1") == "y" and m.output_of("0") == "x"
    d["transitions"].append(["1", "a", "1", "y"])
    with pytest.raises(MachineError, match="duplicate"):
        machine_from_dict(d)


@given(machines(max_states=6))
def test_file_round_trip(m):
    back = machine_from_dict(machine_to_dict(m))
    assert back == m and back.digest == m.digest


def test_dump_and_load(tmp_path, fb):
    dump_machine(fb, tmp_path / "m.json")
    loaded = load_machine(tmp_path / "m.json")
    assert loaded == fb and loaded.alias_table() == fb.alias_table()


def test_shipped_fixture_files_match_constructors(fixtures_dir, fb, ff):
    assert load_machine(fixtures_dir / "mod8_feedback.machine.json") == fb
    assert load_machine(fixtures_dir / "mod8_feedforward.machine.json") == ff


def test_mod_counter_gate_period():
    for n in (2, 3, 5):
        outs = run(mod_counter(n), ["car"] * (3 * n)).outputs
        assert [i for i, o in enumerate(outs) if o == GATE_OPEN] == [0, n, 2 * n, 3 * n]


def test_every_two_state_pair_io_equivalence_is_symmetric():
    ms = [EncodedMachine(("0", "1"), ("a",), ("x", "y"), d, o, 0)
          for d in itertools.product([(0,), (1,)], repeat=2) for o in itertools.product(range(2), repeat=2)]
    for a, b in itertools.product(ms, repeat=2):
        assert io_equivalent(a, b, 4) == io_equivalent(b, a, 4)

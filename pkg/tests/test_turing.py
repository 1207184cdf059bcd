import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import decode_description, simulate_tm, tm_index_table
from substrate.errors import BoundsExceeded, InvalidInputSymbol, MachineError, NotHalted, StepCountMismatch
from substrate.turing import (
    Configuration,
    RunStatus,
    Terminal,
    TuringMachine,
    binary_increment,
    encode_machine,
    even_parity,
    fixtures,
    load_tm,
    tm_from_dict,
    tm_run,
    tm_step,
    tm_to_dict,
    trace_correspondence,
    unary_successor,
    utm,
    utm_run,
    utm_tape,
)

FIXTURES = {tm.name: tm for tm in fixtures()}


def words(tm, max_len):
    return [w for n in range(max_len + 1) for w in itertools.product(tm.input_alphabet, repeat=n)]


def test_step_on_accepting_state_is_terminal():
    tm = unary_successor()
    c = Configuration("halt", (), 0)
    assert tm_step(tm, c) == Terminal(RunStatus.HALTED, c)


def test_step_unary_successor_scans_right():
    tm = unary_successor()
    nxt = tm_step(tm, Configuration.initial(tm, "11"))
    assert nxt == Configuration("scan", ((0, "1"), (1, "1")), 1)


def test_step_without_rule_is_stuck():
    tm = TuringMachine.build(("a", "f"), ("_", "1"), "_", ("1",), {("a", "_"): ("f", "_", "R")}, "a", {"f"})
    c = Configuration.initial(tm, "1")
    assert tm_step(tm, c) == Terminal(RunStatus.STUCK, c)
    r = tm_run(tm, "1")
    assert r.status is RunStatus.STUCK and r.registry_trace == ("a",)


def test_run_examples():
    r = tm_run(unary_successor(), "11")
    assert r.status is RunStatus.HALTED and r.final_tape == ("1", "1", "1") and r.steps == 3
    assert tm_run(binary_increment(), "1011").final_tape == tuple("1100")
    assert tm_run(binary_increment(), "11").final_tape == tuple("100")
    zero = tm_run(unary_successor(), "11", fuel=0)
    assert zero.status is RunStatus.FUEL_EXHAUSTED and zero.registry_trace == ("scan",)


def test_even_parity_appends_verdict_bit():
    tm = even_parity()
    for w in words(tm, 5):
        r = tm_run(tm, w)
        bit = "1" if w.count("1") % 2 == 0 else "0"
        assert r.status is RunStatus.HALTED
        assert "".join(r.final_tape) == "".join(w).lstrip("_") + bit
        assert r.registry_trace[-1] == ("accept" if bit == "1" else "reject")


def test_binary_increment_adds_one():
    tm = binary_increment()
    for w in words(tm, 6):
        if not w:
            continue
        got = "".join(tm_run(tm, w).final_tape)
        assert int(got, 2) == int("".join(w), 2) + 1


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_runs_match_independent_simulator(name):
    tm = FIXTURES[name]
    accepting, table = tm_index_table(tm)
    symbols = [tm.blank] + [s for s in tm.tape_alphabet if s != tm.blank]
    for w in words(tm, 5):
        r = tm_run(tm, w)
        halted, tape, seq = simulate_tm(table, set(accepting), 0, tm.states.index(tm.initial),
                                        [symbols.index(s) for s in w], 10**5)
        assert halted == (r.status is RunStatus.HALTED)
        assert tuple(symbols[i] for i in tape) == r.final_tape
        assert tuple(tm.states[q] for q in seq) == r.registry_trace


def test_invalid_input_symbol():
    with pytest.raises(InvalidInputSymbol):
        tm_run(unary_successor(), "12")
    with pytest.raises(InvalidInputSymbol):
        utm_run(unary_successor(), "_")


def test_machine_validation():
    with pytest.raises(MachineError):
        TuringMachine.build(("a",), ("_", "1"), "_", ("_",), {}, "a", ())
    with pytest.raises(MachineError):
        TuringMachine.build(("a", "f"), ("_",), "_", (), {("f", "_"): ("a", "_", "R")}, "a", {"f"})
    with pytest.raises(MachineError):
        TuringMachine.build(("a",), ("_",), "_", (), {("a", "_"): ("b", "_", "R")}, "a", ())


def test_encoding_literal_and_round_trip():
    assert encode_machine(unary_successor()) == "<11,>1,1,11,11,R;1,11,1,11,R;."
    for tm in fixtures():
        assert decode_description(encode_machine(tm)) == tm_index_table(tm)


def test_encoding_is_injective_and_monotone():
    codes = [encode_machine(tm) for tm in fixtures()]
    assert len(set(codes)) == len(codes)
    base = TuringMachine.build(("a", "b", "f"), ("_", "1"), "_", ("1",), {("a", "1"): ("b", "1", "R")}, "a", {"f"})
    more = TuringMachine.build(("a", "b", "f"), ("_", "1"), "_", ("1",),
                               {("a", "1"): ("b", "1", "R"), ("b", "_"): ("f", "1", "L")}, "a", {"f"})
    assert len(encode_machine(more)) > len(encode_machine(base))


def test_encoder_bounds():
    many = TuringMachine.build(tuple(f"q{i}" for i in range(9)), ("_", "1"), "_", ("1",), {}, "q0", ())
    with pytest.raises(BoundsExceeded):
        encode_machine(many)
    wide = TuringMachine.build(("a",), ("_", "1", "2", "3", "4"), "_", ("1",), {}, "a", ())
    with pytest.raises(BoundsExceeded):
        utm_run(wide, "1")


def test_utm_tape_layout():
    tape = utm_tape(unary_successor(), "11")
    assert tape == "<11,>1,1,11,11,R;1,11,1,11,R;.$10000000|Bb"
    assert utm_tape(unary_successor(), "").endswith("|A")


def test_utm_is_a_plain_machine():
    U = utm()
    assert U.accepting == frozenset({"halt"})
    assert "done" in U.states and U.initial == "fetch"
    assert U is utm()


def test_utm_unary_successor():
    direct = tm_run(unary_successor(), "11")
    universal = utm_run(unary_successor(), "11")
    assert universal.simulated_tape == ("1", "1", "1")
    assert universal.result.steps > direct.steps
    assert len(universal.boundary_marks) == direct.steps
    mapping = trace_correspondence(direct, universal)
    assert len(mapping) == 4 and list(mapping) == sorted(set(mapping))
    assert universal.simulated_states == direct.registry_trace


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_utm_matches_direct_runs(name):
    tm = FIXTURES[name]
    for w in words(tm, 4):
        direct, universal = tm_run(tm, w), utm_run(tm, w)
        assert universal.simulated_tape == direct.final_tape
        assert len(universal.boundary_marks) == direct.steps
        if direct.steps:
            assert universal.result.steps > direct.steps


def test_utm_fuel_exhaustion_keeps_partial_marks():
    tm = binary_increment()
    full = utm_run(tm, "1011")
    cut = utm_run(tm, "1011", fuel=full.boundary_marks[2] + 1)
    assert cut.status is RunStatus.FUEL_EXHAUSTED
    assert cut.boundary_marks == full.boundary_marks[:3]
    with pytest.raises(NotHalted):
        trace_correspondence(tm_run(tm, "1011"), cut)


def test_utm_gets_stuck_when_machine_does():
    tm = TuringMachine.build(("a", "f"), ("_", "1"), "_", ("1",), {("a", "1"): ("a", "1", "R")}, "a", {"f"})
    assert tm_run(tm, "11").status is RunStatus.STUCK
    assert utm_run(tm, "11").status is RunStatus.STUCK


def test_immediate_halt_maps_one_index():
    tm = TuringMachine.build(("f",), ("_", "1"), "_", ("1",), {}, "f", {"f"})
    direct, universal = tm_run(tm, ""), utm_run(tm, "")
    assert trace_correspondence(direct, universal) == (0,)


def test_step_count_mismatch_is_reported():
    tm = unary_successor()
    other = utm_run(tm, "1")
    with pytest.raises(StepCountMismatch):
        trace_correspondence(tm_run(tm, "11"), other)


@given(st.sampled_from(sorted(FIXTURES)), st.data())
def test_runs_are_deterministic(name, data):
    tm = FIXTURES[name]
    w = data.draw(st.lists(st.sampled_from(tm.input_alphabet), max_size=5))
    assert tm_run(tm, w) == tm_run(tm, w)
    assert utm_run(tm, w) == utm_run(tm, w)


def test_file_round_trip(tmp_path, fixtures_dir):
    for tm in fixtures():
        assert tm_from_dict(tm_to_dict(tm)) == tm
        assert load_tm(fixtures_dir / f"{tm.name}.tm.json") == tm
    with pytest.raises(MachineError):
        tm_from_dict({**tm_to_dict(unary_successor()), "transitions": [["scan", "1", "scan", "1"]]})

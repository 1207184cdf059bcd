"""Single-tape Turing machines and a universal interpreter for them.

The universal machine ``utm()`` is itself an ordinary :class:`TuringMachine`.
It reads the description produced by :func:`encode_machine` from its own
tape and simulates the described machine on a tape region of its own.  The
tape layout and the encoding grammar are documented in ``docs/utm-encoding.md``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache

from .canonical import json_digest
from .errors import (
    BoundsExceeded,
    InvalidInputSymbol,
    MachineError,
    NotHalted,
    StepCountMismatch,
)

DEFAULT_FUEL = 10**6
MAX_STATES = 8
MAX_SYMBOLS = 4


class Move(str, Enum):
    L = "L"
    R = "R"


class RunStatus(str, Enum):
    HALTED = "Halted"
    FUEL_EXHAUSTED = "FuelExhausted"
    STUCK = "Stuck"


@dataclass(frozen=True)
class TuringMachine:
    states: tuple[str, ...]
    tape_alphabet: tuple[str, ...]
    blank: str
    input_alphabet: tuple[str, ...]
    transitions: tuple  # sorted ((state, read), (next, write, move)) pairs
    initial: str
    accepting: frozenset
    name: str = field(default="", compare=False)

    def __post_init__(self):
        Q, G = set(self.states), set(self.tape_alphabet)
        if not Q or not G:
            raise MachineError("states and tape alphabet must be nonempty")
        if len(Q) != len(self.states) or len(G) != len(self.tape_alphabet):
            raise MachineError("duplicate state or symbol")
        if self.blank not in G:
            raise MachineError("blank must belong to the tape alphabet")
        if self.blank in self.input_alphabet or not set(self.input_alphabet) <= G:
            raise MachineError("input alphabet must be a subset of tape alphabet minus blank")
        if self.initial not in Q or not set(self.accepting) <= Q:
            raise MachineError("initial/accepting states must be declared")
        seen = set()
        for (q, a), (p, b, m) in self.transitions:
            if (q, a) in seen:
                raise MachineError(f"duplicate transition for ({q}, {a})")
            seen.add((q, a))
            if q in self.accepting:
                raise MachineError(f"transition defined on accepting state {q}")
            if q not in Q or p not in Q or a not in G or b not in G:
                raise MachineError(f"transition ({q}, {a}) -> ({p}, {b}, {m}) references undeclared items")
            if m not in ("L", "R"):
                raise MachineError(f"move must be L or R, got {m!r}")

    @classmethod
    def build(cls, states, tape_alphabet, blank, input_alphabet, delta, initial, accepting, name=""):
        trans = tuple(sorted(((q, a), (p, b, str(Move(m).value))) for (q, a), (p, b, m) in delta.items()))
        return cls(tuple(states), tuple(tape_alphabet), blank, tuple(input_alphabet), trans, initial,
                   frozenset(accepting), name)

    @cached_property
    def delta(self):
        return dict(self.transitions)

    @cached_property
    def digest(self):
        return json_digest(tm_to_dict(self, include_name=False))

    def __repr__(self):
        return f"TuringMachine({self.name or self.digest[:8]}, {len(self.states)} states)"


@dataclass(frozen=True)
class Configuration:
    registry: str
    tape: tuple  # sorted (position, symbol) pairs, blanks omitted
    head: int

    @classmethod
    def initial(cls, tm, word):
        word = _check_input(tm, word)
        return cls(tm.initial, tuple((i, s) for i, s in enumerate(word) if s != tm.blank), 0)

    def read(self, blank):
        return dict(self.tape).get(self.head, blank)


@dataclass(frozen=True)
class Terminal:
    status: RunStatus
    config: Configuration


@dataclass(frozen=True)
class RunResult:
    status: RunStatus
    final_tape: tuple
    registry_trace: tuple
    steps: int


@dataclass(frozen=True)
class UniversalRun:
    """A run of the universal machine plus the instrumentation read off it."""

    result: RunResult  # U's own run (final_tape is U's whole tape)
    boundary_marks: tuple  # configuration indices where one simulated step completed
    simulated_states: tuple  # simulated registry decoded at index 0 and at every boundary
    simulated_tape: tuple  # trimmed simulated tape at the end of the run

    @property
    def status(self):
        return self.result.status


@dataclass(frozen=True)
class UniversalSystem:
    """The substitution target: U with X_M preloaded, run on M's inputs."""

    machine: TuringMachine

    @property
    def name(self):
        return f"U[{self.machine.name or self.machine.digest[:8]}]"


def _check_input(tm, word):
    word = tuple(word)
    bad = [s for s in word if s not in tm.input_alphabet]
    if bad:
        raise InvalidInputSymbol(f"symbols {bad} are not in the input alphabet {tm.input_alphabet}")
    return word


def tm_step(tm, config):
    """One transition, or a :class:`Terminal` marker when none applies."""
    if config.registry in tm.accepting:
        return Terminal(RunStatus.HALTED, config)
    rule = tm.delta.get((config.registry, config.read(tm.blank)))
    if rule is None:
        return Terminal(RunStatus.STUCK, config)
    nxt, write, move = rule
    tape = dict(config.tape)
    if write == tm.blank:
        tape.pop(config.head, None)
    else:
        tape[config.head] = write
    return Configuration(nxt, tuple(sorted(tape.items())), config.head + (1 if move == "R" else -1))


def _trim(tape, blank):
    cells = [p for p, s in tape.items() if s != blank]
    if not cells:
        return ()
    return tuple(tape.get(p, blank) for p in range(min(cells), max(cells) + 1))


def _execute(tm, tape, head, fuel, watch=None, on_watch=None):
    """Fast interpreter loop over a mutable tape dict.

    ``on_watch(tape, index)`` is called each time the registry enters ``watch``.
    """
    delta, accepting, blank = tm.delta, tm.accepting, tm.blank
    q = tm.initial
    trace = [q]
    steps = 0
    while True:
        if q in accepting:
            status = RunStatus.HALTED
            break
        rule = delta.get((q, tape.get(head, blank)))
        if rule is None:
            status = RunStatus.STUCK
            break
        if steps >= fuel:
            status = RunStatus.FUEL_EXHAUSTED
            break
        q, tape[head], move = rule
        head += 1 if move == "R" else -1
        steps += 1
        trace.append(q)
        if q == watch:
            on_watch(tape, steps)
    return status, trace, steps


def tm_run(tm, word, fuel=DEFAULT_FUEL):
    word = _check_input(tm, word)
    tape = dict(enumerate(word))
    status, trace, steps = _execute(tm, tape, 0, fuel)
    return RunResult(status, _trim(tape, tm.blank), tuple(trace), steps)


# --------------------------------------------------------------------------- description encoding

ONE, FIELD, RECORD = "1", ",", ";"
BEGIN, END_ACCEPT, END = "<", ">", "."
REG_MARK, REG_ZERO, TAPE_MARK = "$", "0", "|"
CELLS, HEAD_CELLS = "abcd", "ABCD"
U_BLANK = "_"


def symbol_order(tm):
    """Blank first, then the other tape symbols in declared order."""
    return (tm.blank,) + tuple(s for s in tm.tape_alphabet if s != tm.blank)


def _check_bounds(tm):
    if len(tm.states) > MAX_STATES or len(tm.tape_alphabet) > MAX_SYMBOLS:
        raise BoundsExceeded(
            f"encoder handles <= {MAX_STATES} states and <= {MAX_SYMBOLS} symbols; "
            f"got {len(tm.states)} and {len(tm.tape_alphabet)}"
        )


def encode_machine(tm):
    """X_M: ``<`` accepting-list ``>`` records ``.`` with unary (index+1) fields."""
    _check_bounds(tm)
    qi = {q: i for i, q in enumerate(tm.states)}
    si = {s: i for i, s in enumerate(symbol_order(tm))}

    def unary(i):
        return ONE * (i + 1)

    parts = [BEGIN]
    parts += [unary(qi[q]) + FIELD for q in sorted(tm.accepting, key=qi.__getitem__)]
    parts.append(END_ACCEPT)
    records = sorted(((qi[q], si[a]), (qi[p], si[b], m)) for (q, a), (p, b, m) in tm.transitions)
    for (q, a), (p, b, m) in records:
        parts.append(FIELD.join((unary(q), unary(a), unary(p), unary(b), m)) + RECORD)
    parts.append(END)
    return "".join(parts)


def _register(index):
    return ONE * (index + 1) + REG_ZERO * (MAX_STATES - index - 1)


# --------------------------------------------------------------------------- the universal machine

FETCH_COMPLETE = "done"


@lru_cache(maxsize=1)
def utm():
    """The fixed interpreter machine.

    Each simulated step: rewind, read the state register, test it against the
    accepting list, read the head cell, scan the records for a match, rewrite
    the register, write the cell, move the head mark (shifting the simulated
    tape right when the head falls off its left end), then pass through
    ``done``.  Control buffers at most one state index and one symbol index.
    """
    desc = BEGIN + END_ACCEPT + ONE + FIELD + RECORD + "LR" + END
    alphabet = (U_BLANK,) + tuple(dict.fromkeys(desc + REG_MARK + REG_ZERO + TAPE_MARK + CELLS + HEAD_CELLS))
    delta = {}

    def rule(state, read, nxt, move, write=None):
        delta[(state, read)] = (nxt, read if write is None else write, move)

    def sweep(state, stop, move):
        # keep moving over everything except the symbols in ``stop``
        for a in alphabet:
            if a not in stop and (state, a) not in delta:
                rule(state, a, state, move)

    Q, S = MAX_STATES, MAX_SYMBOLS
    rule("fetch", BEGIN, "rdreg", "R")
    sweep("fetch", BEGIN + U_BLANK, "L")
    rule("rdreg", REG_MARK, "reg0", "R")
    sweep("rdreg", REG_MARK + U_BLANK, "R")
    for c in range(Q + 1):
        if c < Q:
            rule(f"reg{c}", ONE, f"reg{c + 1}", "R")
        if c >= 1:
            for a in (REG_ZERO, TAPE_MARK):
                rule(f"reg{c}", a, f"accback{c - 1}", "L")
    for q in range(Q):
        rule(f"accback{q}", BEGIN, f"acc{q}_0", "R")
        sweep(f"accback{q}", BEGIN + U_BLANK, "L")
        for c in range(Q + 1):
            if c < Q:
                rule(f"acc{q}_{c}", ONE, f"acc{q}_{c + 1}", "R")
            if c >= 1:
                rule(f"acc{q}_{c}", FIELD, "halt" if c - 1 == q else f"acc{q}_0", "R")
        rule(f"acc{q}_0", END_ACCEPT, f"findhead{q}", "R")
        for r in range(S):
            rule(f"findhead{q}", HEAD_CELLS[r], f"torec{q}_{r}", "L")
            rule(f"torec{q}_{r}", END_ACCEPT, f"m{q}_{r}_0", "R")
            sweep(f"torec{q}_{r}", END_ACCEPT + U_BLANK, "L")
            # state field of the current record
            rule(f"m{q}_{r}_0", END, "stuck", "R")
            for c in range(Q + 1):
                if c < Q:
                    rule(f"m{q}_{r}_{c}", ONE, f"m{q}_{r}_{c + 1}", "R")
                if c >= 1:
                    rule(f"m{q}_{r}_{c}", FIELD, f"mr{q}_{r}_0" if c - 1 == q else f"skip{q}_{r}", "R")
            rule(f"skip{q}_{r}", RECORD, f"m{q}_{r}_0", "R")
            sweep(f"skip{q}_{r}", RECORD + U_BLANK, "R")
            # read-symbol field
            for c in range(S + 1):
                if c < S:
                    rule(f"mr{q}_{r}_{c}", ONE, f"mr{q}_{r}_{c + 1}", "R")
                if c >= 1:
                    rule(f"mr{q}_{r}_{c}", FIELD, "ns_0" if c - 1 == r else f"skip{q}_{r}", "R")
        sweep(f"findhead{q}", HEAD_CELLS + U_BLANK, "R")
    # matched record: next-state, write, move
    for c in range(Q + 1):
        if c < Q:
            rule(f"ns_{c}", ONE, f"ns_{c + 1}", "R")
        if c >= 1:
            rule(f"ns_{c}", FIELD, f"wr{c - 1}_0", "R")
    for p in range(Q):
        for c in range(S + 1):
            if c < S:
                rule(f"wr{p}_{c}", ONE, f"wr{p}_{c + 1}", "R")
            if c >= 1:
                rule(f"wr{p}_{c}", FIELD, f"mv{p}_{c - 1}", "R")
        for w in range(S):
            for m in "LR":
                rule(f"mv{p}_{w}", m, f"toreg{p}_{w}_{m}", "R")
                rule(f"toreg{p}_{w}_{m}", REG_MARK, f"wreg{p}_{w}_{m}_0", "R")
                sweep(f"toreg{p}_{w}_{m}", REG_MARK + U_BLANK, "R")
                for i in range(Q):
                    nxt = f"wreg{p}_{w}_{m}_{i + 1}" if i + 1 < Q else f"gohead{w}_{m}"
                    for a in (ONE, REG_ZERO):
                        rule(f"wreg{p}_{w}_{m}_{i}", a, nxt, "R", write=ONE if i <= p else REG_ZERO)
    for w in range(S):
        for m in "LR":
            for r in range(S):
                rule(f"gohead{w}_{m}", HEAD_CELLS[r], f"land{m}", m, write=CELLS[w])
            sweep(f"gohead{w}_{m}", HEAD_CELLS + U_BLANK, "R")
    for r in range(S):
        rule("landR", CELLS[r], FETCH_COMPLETE, "L", write=HEAD_CELLS[r])
        rule("landL", CELLS[r], FETCH_COMPLETE, "L", write=HEAD_CELLS[r])
        rule("shift", CELLS[r], f"carry{r}", "R", write=HEAD_CELLS[0])
        for z in range(S):
            rule(f"carry{r}", CELLS[z], f"carry{z}", "R", write=CELLS[r])
        rule(f"carry{r}", U_BLANK, FETCH_COMPLETE, "L", write=CELLS[r])
    rule("landR", U_BLANK, FETCH_COMPLETE, "L", write=HEAD_CELLS[0])
    rule("landL", TAPE_MARK, "shift", "R")
    sweep(FETCH_COMPLETE, U_BLANK, "L")
    for a in alphabet:
        if (FETCH_COMPLETE, a) in delta:
            delta[(FETCH_COMPLETE, a)] = ("fetch", a, "L")

    states = sorted({q for q, _ in delta} | {p for p, _, _ in delta.values()} | {"halt", "stuck"})
    states.remove("fetch")
    states.insert(0, "fetch")
    return TuringMachine.build(
        states, alphabet, U_BLANK, alphabet[1:], delta, "fetch", {"halt"}, name="UTM"
    )


def utm_tape(tm, word):
    """U's initial tape for simulating ``tm`` on ``word``: X_M $ register | cells."""
    word = _check_input(tm, word)
    si = {s: i for i, s in enumerate(symbol_order(tm))}
    cells = [CELLS[si[s]] for s in word] or [CELLS[0]]
    cells[0] = cells[0].upper()
    return encode_machine(tm) + REG_MARK + _register(tm.states.index(tm.initial)) + TAPE_MARK + "".join(cells)


def _decode_register(tm, tape, start):
    count = sum(1 for i in range(MAX_STATES) if tape.get(start + i) == ONE)
    return tm.states[count - 1]


def _decode_cells(tm, tape, start):
    symbols = symbol_order(tm)
    out = {}
    pos = start
    while tape.get(pos, U_BLANK) != U_BLANK:
        out[pos] = symbols[(CELLS + HEAD_CELLS).index(tape[pos]) % MAX_SYMBOLS]
        pos += 1
    return _trim(out, tm.blank)


def utm_run(tm, word, fuel=DEFAULT_FUEL):
    """Run U on ``tm``'s description and ``word``; instrument the fetch-complete state."""
    _check_bounds(tm)
    initial = utm_tape(tm, word)
    reg_start = len(encode_machine(tm)) + 1
    U = utm()
    tape = dict(enumerate(initial))
    marks, decoded = [], [tm.initial]

    def on_boundary(t, index):
        marks.append(index)
        decoded.append(_decode_register(tm, t, reg_start))

    status, trace, steps = _execute(U, tape, 0, fuel, watch=FETCH_COMPLETE, on_watch=on_boundary)
    result = RunResult(status, _trim(tape, U.blank), tuple(trace), steps)
    sim_tape = _decode_cells(tm, tape, reg_start + MAX_STATES + 1)
    return UniversalRun(result, tuple(marks), tuple(decoded), sim_tape)


def trace_correspondence(direct, universal):
    """Map each index of M's registry trace to the matching configuration index of U.

    Index 0 (the initial configuration) maps to U's initial configuration;
    index k maps to the k-th boundary mark.
    """
    if direct.status is not RunStatus.HALTED or universal.status is not RunStatus.HALTED:
        raise NotHalted(f"both runs must halt (direct: {direct.status.value}, universal: {universal.status.value})")
    if len(universal.boundary_marks) != direct.steps:
        raise StepCountMismatch(f"{len(universal.boundary_marks)} boundary marks for {direct.steps} direct steps")
    if universal.simulated_states != direct.registry_trace:
        raise StepCountMismatch("decoded simulated registry diverges from the direct run")
    return (0,) + universal.boundary_marks


# --------------------------------------------------------------------------- fixtures


def unary_successor():
    return TuringMachine.build(
        ("scan", "halt"), ("_", "1"), "_", ("1",),
        {("scan", "1"): ("scan", "1", "R"), ("scan", "_"): ("halt", "1", "R")},
        "scan", {"halt"}, name="unary_successor",
    )


def binary_increment():
    return TuringMachine.build(
        ("right", "carry", "done"), ("_", "0", "1"), "_", ("0", "1"),
        {
            ("right", "0"): ("right", "0", "R"),
            ("right", "1"): ("right", "1", "R"),
            ("right", "_"): ("carry", "_", "L"),
            ("carry", "1"): ("carry", "0", "L"),
            ("carry", "0"): ("done", "1", "L"),
            ("carry", "_"): ("done", "1", "L"),
        },
        "right", {"done"}, name="binary_increment",
    )


def even_parity():
    """Scans the word and appends 1 if it holds an even number of 1s, else 0."""
    return TuringMachine.build(
        ("even", "odd", "accept", "reject"), ("_", "0", "1"), "_", ("0", "1"),
        {
            ("even", "0"): ("even", "0", "R"),
            ("even", "1"): ("odd", "1", "R"),
            ("odd", "0"): ("odd", "0", "R"),
            ("odd", "1"): ("even", "1", "R"),
            ("even", "_"): ("accept", "1", "R"),
            ("odd", "_"): ("reject", "0", "R"),
        },
        "even", {"accept", "reject"}, name="even_parity",
    )


def fixtures():
    return (unary_successor(), binary_increment(), even_parity())


# --------------------------------------------------------------------------- file format


def tm_to_dict(tm, include_name=True):
    d = {
        "states": list(tm.states),
        "tape_alphabet": list(tm.tape_alphabet),
        "blank": tm.blank,
        "input_alphabet": list(tm.input_alphabet),
        "initial": tm.initial,
        "accepting": sorted(tm.accepting),
        "transitions": [[q, a, p, b, m] for (q, a), (p, b, m) in tm.transitions],
    }
    if include_name and tm.name:
        d["name"] = tm.name
    return d


def tm_from_dict(d):
    for key in ("states", "tape_alphabet", "blank", "input_alphabet", "initial", "accepting", "transitions"):
        if key not in d:
            raise MachineError(f"Turing machine file missing field {key!r}")
    delta = {}
    for rec in d["transitions"]:
        if len(rec) != 5:
            raise MachineError(f"transition record must have 5 fields: {rec!r}")
        q, a, p, b, m = rec
        if (q, a) in delta:
            raise MachineError(f"duplicate transition for ({q}, {a})")
        delta[(q, a)] = (p, b, m)
    try:
        return TuringMachine.build(d["states"], d["tape_alphabet"], d["blank"], d["input_alphabet"], delta,
                                   d["initial"], d["accepting"], name=d.get("name", ""))
    except ValueError as exc:
        raise MachineError(str(exc)) from None


def load_tm(path):
    with open(path, encoding="utf-8") as fh:
        return tm_from_dict(json.load(fh))

"""Encoded (bit-labelled) deterministic Moore machines.

An ``EncodedMachine`` is the level of description where every state carries
a concrete binary label.  Internally the tables are index based so the
exhaustive sweeps stay cheap; labels are only touched at the boundaries.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .canonical import json_digest
from .errors import AlphabetMismatch, HorizonTooLarge, MachineError, UnknownInput, UnknownState

DEFAULT_HORIZON = 12
DEFAULT_IO_BUDGET = 2**16
_BITS = frozenset("01")


@dataclass(frozen=True)
class EncodedMachine:
    states: tuple[str, ...]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    delta: tuple[tuple[int, ...], ...]  # delta[state][input] -> state index
    out: tuple[int, ...]  # out[state] -> output index
    initial: int
    name: str = field(default="", compare=False)
    aliases: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        states = self.states
        if not states:
            raise MachineError("machine needs at least one state")
        width = len(states[0])
        if width == 0:
            raise MachineError("state labels must be nonempty bit strings")
        if any(len(s) != width for s in states) or not set("".join(states)) <= _BITS:
            bad = next(s for s in states if len(s) != width or set(s) - _BITS)
            raise MachineError(f"state label {bad!r} is not a {width}-bit string")
        n, k = len(states), len(self.inputs)
        if len(set(states)) != n:
            raise MachineError("state labels must be distinct")
        if not k:
            raise MachineError("input alphabet is empty")
        if len(set(self.inputs)) != k or len(set(self.outputs)) != len(self.outputs):
            raise MachineError("alphabet symbols must be distinct")
        if len(self.delta) != n or any(len(row) != k for row in self.delta):
            raise MachineError("transition table must be total on states x inputs")
        flat = [t for row in self.delta for t in row]
        if min(flat) < 0 or max(flat) >= n:
            raise MachineError("transition leaves the state set")
        if len(self.out) != n or min(self.out) < 0 or max(self.out) >= len(self.outputs):
            raise MachineError("output map must be total into the output alphabet")
        if not 0 <= self.initial < n:
            raise MachineError("initial state out of range")

    @classmethod
    def build(cls, states, inputs, outputs, transitions, output, initial, name="", aliases=None):
        """Build from label-level tables: ``transitions[(state, input)] -> state``,
        ``output[state] -> symbol``."""
        states = tuple(states)
        inputs = tuple(inputs)
        outputs = tuple(outputs)
        sidx = {s: i for i, s in enumerate(states)}
        xidx = {x: i for i, x in enumerate(inputs)}
        oidx = {o: i for i, o in enumerate(outputs)}
        delta = []
        for s in states:
            row = []
            for x in inputs:
                try:
                    t = transitions[(s, x)]
                except KeyError:
                    raise MachineError(f"missing transition for ({s}, {x})") from None
                if t not in sidx:
                    raise MachineError(f"transition ({s}, {x}) -> {t!r} leaves the state set")
                row.append(sidx[t])
            delta.append(tuple(row))
        extra = {key for key in transitions if key[0] not in sidx or key[1] not in xidx}
        if extra:
            raise MachineError(f"transitions reference undeclared states/inputs: {sorted(extra)}")
        try:
            out = tuple(oidx[output[s]] for s in states)
        except KeyError as exc:
            raise MachineError(f"output map incomplete or symbol undeclared: {exc}") from None
        if initial not in sidx:
            raise MachineError(f"initial state {initial!r} is not declared")
        return cls(
            states, inputs, outputs, tuple(delta), out, sidx[initial], name, tuple(sorted((aliases or {}).items()))
        )

    @property
    def width(self):
        return len(self.states[0])

    @property
    def initial_label(self):
        return self.states[self.initial]

    @cached_property
    def state_index(self):
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def input_index(self):
        return {x: i for i, x in enumerate(self.inputs)}

    def transitions(self):
        """Label-level transition table."""
        return {
            (s, x): self.states[self.delta[i][j]] for i, s in enumerate(self.states) for j, x in enumerate(self.inputs)
        }

    def output_of(self, label):
        try:
            return self.outputs[self.out[self.state_index[label]]]
        except KeyError:
            raise UnknownState(f"unknown state {label!r}") from None

    def alias_table(self):
        return dict(self.aliases)

    @cached_property
    def digest(self):
        return json_digest(machine_to_dict(self, include_name=False))

    def __repr__(self):
        tag = self.name or self.digest[:8]
        return f"EncodedMachine({tag}, {len(self.states)} states, width {self.width})"


@dataclass(frozen=True)
class Trace:
    states: tuple[str, ...]
    outputs: tuple[str, ...]
    inputs: tuple[str, ...]

    def __post_init__(self):
        if len(self.states) != len(self.inputs) + 1 or len(self.outputs) != len(self.states):
            raise ValueError("trace lengths violate |states| = |inputs| + 1 = |outputs|")


def step(machine, state, symbol):
    """Apply one transition: returns (next_state, output_of_next)."""
    try:
        i = machine.state_index[state]
    except KeyError:
        raise UnknownState(f"unknown state {state!r}") from None
    try:
        j = machine.input_index[symbol]
    except KeyError:
        raise UnknownInput(f"unknown input {symbol!r}") from None
    t = machine.delta[i][j]
    return machine.states[t], machine.outputs[machine.out[t]]


def run_indices(machine, input_indices):
    """Index-level run from the initial state; returns the visited state indices."""
    delta = machine.delta
    s = machine.initial
    seq = [s]
    for j in input_indices:
        s = delta[s][j]
        seq.append(s)
    return seq


def run(machine, inputs):
    inputs = tuple(inputs)
    try:
        idx = [machine.input_index[x] for x in inputs]
    except KeyError as exc:
        raise UnknownInput(f"unknown input {exc.args[0]!r}") from None
    seq = run_indices(machine, idx)
    states = tuple(machine.states[s] for s in seq)
    outputs = tuple(machine.outputs[machine.out[s]] for s in seq)
    return Trace(states, outputs, inputs)


def reachable_indices(machine):
    """Indices reachable from the initial state, in breadth-first order."""
    seen = {machine.initial}
    order = [machine.initial]
    queue = deque(order)
    while queue:
        s = queue.popleft()
        for t in machine.delta[s]:
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


# --------------------------------------------------------------------------- component graph


@dataclass(frozen=True)
class ComponentGraph:
    """Bit-level dependency graph: edge (j, i) means bit i's next value reads bit j."""

    width: int
    edges: frozenset

    @property
    def nodes(self):
        return tuple(range(self.width))

    def has_feedback(self):
        """True iff some cycle passes through two or more distinct bits.

        A self-loop is a component holding its own state (every counter bit
        toggles itself); it is not feedback between components, so it does
        not count.
        """
        succ = {i: set() for i in range(self.width)}
        for j, i in self.edges:
            if i != j:
                succ[j].add(i)
        color = dict.fromkeys(succ, 0)

        def visit(u):
            color[u] = 1
            for v in succ[u]:
                if color[v] == 1 or (color[v] == 0 and visit(v)):
                    return True
            color[u] = 2
            return False

        return any(color[u] == 0 and visit(u) for u in sorted(succ))

    def is_acyclic(self):
        return not self.has_feedback()


def dependency_graph(machine):
    """Flip-test every reachable state on every bit and input.

    Bit j of a label is its j-th character.  Flips that land outside the
    reachable state set are skipped: the machine is not defined there and
    inventing successors would fabricate edges.
    """
    reach = reachable_indices(machine)
    width = machine.width
    value = [int(label, 2) for label in machine.states]
    in_reach = {value[s]: s for s in reach}
    delta = machine.delta
    k = len(machine.inputs)
    masks = [1 << (width - 1 - j) for j in range(width)]
    edges = set()
    for s in reach:
        v = value[s]
        for j, mask in enumerate(masks):
            other = in_reach.get(v ^ mask)
            if other is None:
                continue
            diff = 0
            for x in range(k):
                diff |= value[delta[s][x]] ^ value[delta[other][x]]
            if diff:
                for i, m_i in enumerate(masks):
                    if diff & m_i:
                        edges.add((j, i))
    return ComponentGraph(width, frozenset(edges))


# --------------------------------------------------------------------------- I/O equivalence


def io_equivalent(m1, m2, horizon=DEFAULT_HORIZON, budget=DEFAULT_IO_BUDGET):
    """Exhaustively compare output sequences on every input word of length <= horizon."""
    if set(m1.inputs) != set(m2.inputs) or set(m1.outputs) != set(m2.outputs):
        raise AlphabetMismatch("machines must share input and output alphabets")
    symbols = sorted(m1.inputs)
    if len(symbols) ** horizon > budget:
        raise HorizonTooLarge(f"{len(symbols)}^{horizon} sequences exceed budget {budget}")
    x1 = [m1.input_index[x] for x in symbols]
    x2 = [m2.input_index[x] for x in symbols]
    o1 = [m1.outputs[o] for o in m1.out]
    o2 = [m2.outputs[o] for o in m2.out]
    d1, d2 = m1.delta, m2.delta
    # depth-first walk of the input-word tree; each node is one concrete word
    stack = [(m1.initial, m2.initial, 0)]
    while stack:
        s1, s2, depth = stack.pop()
        if o1[s1] != o2[s2]:
            return False
        if depth < horizon:
            for a, b in zip(x1, x2):
                stack.append((d1[s1][a], d2[s2][b], depth + 1))
    return True


def distinguishing_word(m1, m2, horizon=DEFAULT_HORIZON):
    """Shortest input word whose output sequences differ, or None within horizon."""
    symbols = sorted(m1.inputs)
    for length in range(horizon + 1):
        for word in itertools.product(symbols, repeat=length):
            if run(m1, word).outputs != run(m2, word).outputs:
                return word
    return None


# --------------------------------------------------------------------------- transforms


def relabel(machine, mapping, name=None):
    """Re-encode states through ``mapping`` (labels absent from it are kept)."""
    new_states = tuple(mapping.get(s, s) for s in machine.states)
    if len(set(new_states)) != len(new_states):
        raise MachineError("relabelling is not injective on this machine")
    return EncodedMachine(
        new_states,
        machine.inputs,
        machine.outputs,
        machine.delta,
        machine.out,
        machine.initial,
        machine.name if name is None else name,
        machine.aliases,
    )


def binary_labels(n, width=None):
    width = width or max(1, (n - 1).bit_length())
    return tuple(format(i, f"0{width}b") for i in range(n))


def split_state(machine, state, redirected, name=None):
    """Duplicate ``state`` and point the incoming edges in ``redirected`` at the copy.

    ``redirected`` is a collection of (source_index, input_index) pairs whose
    target is ``state``.  The copy has the same output and successors, so the
    result is bisimilar to the original.  States are re-encoded as plain
    binary indices at the width the larger machine needs.
    """
    n = len(machine.states)
    delta = [list(row) for row in machine.delta]
    for src, x in redirected:
        if machine.delta[src][x] != state:
            raise MachineError(f"edge ({src}, {x}) does not enter state {state}")
        delta[src][x] = n
    delta.append(list(machine.delta[state]))
    return EncodedMachine(
        binary_labels(n + 1),
        machine.inputs,
        machine.outputs,
        tuple(tuple(r) for r in delta),
        machine.out + (machine.out[state],),
        machine.initial,
        name if name is not None else machine.name,
        machine.aliases,
    )


# --------------------------------------------------------------------------- fixtures

GATE_CLOSED, GATE_OPEN = "closed", "open"
LETTERS = "ABCDEFGH"

# counter phase -> label; anchored so that 111 -> 011, abs(100) = H, abs(111) = E
_FEEDBACK_LABELS = ("000", "001", "010", "110", "111", "011", "101", "100")


def _counter(labels, binary_input, name):
    n = len(labels)
    inputs = ("car", "none") if binary_input else ("car",)
    transitions = {}
    for phase, lab in enumerate(labels):
        transitions[(lab, "car")] = labels[(phase + 1) % n]
        if binary_input:
            transitions[(lab, "none")] = lab
    # the gate opens as every n-th car completes the cycle, so phase 0 carries it
    output = {lab: GATE_OPEN if phase == 0 else GATE_CLOSED for phase, lab in enumerate(labels)}
    aliases = {f"F{i}": LETTERS[i] for i in range(n)} if n <= len(LETTERS) else None
    return EncodedMachine.build(
        labels, inputs, (GATE_CLOSED, GATE_OPEN), transitions, output, labels[0], name=name, aliases=aliases
    )


def lsb_counter_labels(n):
    """Binary counter labels written least-significant bit first."""
    width = max(1, (n - 1).bit_length())
    return tuple(format(i, f"0{width}b")[::-1] for i in range(n))


def mod8_feedback(binary_input=False):
    """Mod-8 tollbooth counter whose 3 bits all read one another (recurrent encoding).

    The gate opens on the 8th vehicle of every cycle.
    """
    return _counter(_FEEDBACK_LABELS, binary_input, "mod8_feedback")


def mod8_feedforward(binary_input=False):
    """Mod-8 tollbooth as a cascade: an LSB-first ripple counter.

    Bit i reads only bits < i (plus itself), so the component graph has no
    feedback.  Functionally identical to :func:`mod8_feedback`.
    """
    return _counter(lsb_counter_labels(8), binary_input, "mod8_feedforward")


def mod_counter(n, binary_input=False):
    """Generic mod-n tollbooth counter, gate open on phase 0."""
    return _counter(lsb_counter_labels(n), binary_input, f"mod{n}_counter")


# mapping that re-encodes the feedback fixture as the feedforward one, phase by phase
MOD8_FEEDFORWARD_RELABEL = dict(zip(_FEEDBACK_LABELS, lsb_counter_labels(8)))


# --------------------------------------------------------------------------- file format


def machine_to_dict(machine, include_name=True):
    d = {
        "states": list(machine.states),
        "inputs": list(machine.inputs),
        "outputs": list(machine.outputs),
        "initial": machine.initial_label,
        "transitions": [
            [s, x, machine.states[machine.delta[i][j]]]
            for i, s in enumerate(machine.states)
            for j, x in enumerate(machine.inputs)
        ],
        "output": {s: machine.outputs[machine.out[i]] for i, s in enumerate(machine.states)},
    }
    if include_name:
        if machine.name:
            d["name"] = machine.name
        if machine.aliases:
            d["aliases"] = dict(machine.aliases)
    return d


def machine_from_dict(d):
    for key in ("states", "inputs", "outputs", "initial", "transitions"):
        if key not in d:
            raise MachineError(f"machine file missing field {key!r}")
    transitions = {}
    output = dict(d.get("output", {}))
    for rec in d["transitions"]:
        if len(rec) not in (3, 4):
            raise MachineError(f"transition record must have 3 or 4 fields: {rec!r}")
        s, x, t = rec[:3]
        if (s, x) in transitions:
            raise MachineError(f"duplicate transition for ({s}, {x}); machines are deterministic")
        transitions[(s, x)] = t
        if len(rec) == 4:
            if output.setdefault(t, rec[3]) != rec[3]:
                raise MachineError(f"inconsistent output for state {t!r}")
    return EncodedMachine.build(
        d["states"],
        d["inputs"],
        d["outputs"],
        transitions,
        output,
        d["initial"],
        name=d.get("name", ""),
        aliases=d.get("aliases"),
    )


def load_machine(path):
    with open(path, encoding="utf-8") as fh:
        return machine_from_dict(json.load(fh))


def dump_machine(machine, path):
    Path(path).write_text(json.dumps(machine_to_dict(machine), indent=2) + "\n", encoding="utf-8")

"""From encoded machines to functional machines.

``quotient`` is Moore-style partition refinement: start from the partition
by output symbol and split blocks by the blocks of their successors until
nothing changes.  The resulting blocks are the functional states; the map
from encoded labels to blocks is the abstraction map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .canonical import json_digest
from .errors import AlphabetMismatch, UnknownState
from .machines import EncodedMachine, reachable_indices


@dataclass(frozen=True)
class FunctionalMachine:
    """Minimal, encoding-free Moore machine. States are ``F0..Fn`` in BFS order."""

    states: tuple[str, ...]
    inputs: tuple[str, ...]  # sorted
    outputs: tuple[str, ...]  # output alphabet of the source machine
    delta: tuple[tuple[int, ...], ...]
    out: tuple[str, ...]  # output symbol per functional state
    aliases: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    initial = "F0"

    def step(self, state, symbol):
        i = self.states.index(state)
        return self.states[self.delta[i][self.inputs.index(symbol)]]

    def output_of(self, state):
        return self.out[self.states.index(state)]

    def display(self, state):
        return dict(self.aliases).get(state, state)

    @property
    def signature(self):
        """Digest of the canonical tables; equal iff the pointed machines are isomorphic."""
        return functional_signature(self.inputs, self.delta, self.out)


@lru_cache(maxsize=65536)
def functional_signature(inputs, delta, out):
    return json_digest({"inputs": list(inputs), "delta": [list(r) for r in delta], "out": list(out)})


@dataclass(frozen=True)
class AbstractionMap:
    mapping: tuple[tuple[str, str], ...]  # (encoded label, functional state), sorted
    source: str  # digest of the encoded machine
    target: str  # signature of the functional machine

    def as_dict(self):
        return dict(self.mapping)

    def blocks(self):
        out = {}
        for label, fs in self.mapping:
            out.setdefault(fs, []).append(label)
        return out


@dataclass(frozen=True)
class BisimWitness:
    relation: frozenset  # pairs (label in m1, label in m2)

    def __contains__(self, pair):
        return pair in self.relation


def reachable(machine):
    """Restrict to the states reachable from the initial state (declared order kept)."""
    keep = sorted(reachable_indices(machine))
    if len(keep) == len(machine.states):
        return machine
    new_index = {old: new for new, old in enumerate(keep)}
    return EncodedMachine(
        tuple(machine.states[i] for i in keep),
        machine.inputs,
        machine.outputs,
        tuple(tuple(new_index[t] for t in machine.delta[i]) for i in keep),
        tuple(machine.out[i] for i in keep),
        new_index[machine.initial],
        machine.name,
        machine.aliases,
    )


def refine_partition(machine):
    """Block number per state index of a reachable machine.

    Blocks are numbered in order of their lowest state index.
    """
    x_order = tuple(sorted(range(len(machine.inputs)), key=machine.inputs.__getitem__))
    return _refine(machine.delta, machine.out, x_order)


def _refine(delta, out, x_order):
    return _refine_columns(tuple(tuple(row[x] for row in delta) for x in x_order), out)


def _refine_columns(cols, out):
    """Moore refinement on successor columns; blocks numbered by first appearance.

    A state's signature is its block followed by its successors' blocks,
    folded into one integer.  Refinement stops once a round splits nothing.
    """
    n = len(out)
    numbering = {}
    block = [numbering.setdefault(o, len(numbering)) for o in out]
    count = len(numbering)
    if count == n:
        return block
    while True:
        key = block
        for col in cols:
            key = [k * n + block[t] for k, t in zip(key, col)]
        if len(set(key)) == count:
            return block
        numbering = {}
        block = [numbering.setdefault(k, len(numbering)) for k in key]
        count = len(numbering)


@lru_cache(maxsize=4096)
def _structure(delta, initial, x_order):
    """Output-independent part of the quotient: reachable states, local tables."""
    order = [initial]
    seen = {initial}
    for s in order:
        for t in delta[s]:
            if t not in seen:
                seen.add(t)
                order.append(t)
    if len(order) == len(delta):
        keep, sub_delta, start = None, delta, initial
    else:
        keep = tuple(sorted(order))
        local = {old: new for new, old in enumerate(keep)}
        sub_delta = tuple(tuple(local[t] for t in delta[s]) for s in keep)
        start = local[initial]
    cols = tuple(tuple(row[x] for row in sub_delta) for x in x_order)
    rows = tuple(tuple(row[x] for x in x_order) for row in sub_delta)
    return keep, start, cols, rows


def index_quotient(delta, out, initial, x_order):
    """Encoding-free core of the quotient.

    Returns ``(fdelta, fout, fid)``: the functional transition table, the
    output index per functional state and the functional id of every state
    index (``None`` for unreachable states).  Functional ids follow
    breadth-first order from the initial block, inputs in ``x_order``.
    """
    # the blocks depend on which states share an output, not on the output values
    numbering = {}
    pattern = tuple([numbering.setdefault(o, len(numbering)) for o in out])
    fdelta, reps, fid = _pattern_quotient(delta, pattern, initial, x_order)
    return fdelta, tuple([out[r] for r in reps]), fid


@lru_cache(maxsize=65536)
def _pattern_quotient(delta, pattern, initial, x_order):
    keep, start, cols, rows = _structure(delta, initial, x_order)
    sub_out = pattern if keep is None else tuple(pattern[s] for s in keep)
    block = _refine_columns(cols, sub_out)
    first = {}
    for s, b in enumerate(block):
        first.setdefault(b, s)
    b0 = block[start]
    fid = {b0: 0}
    queue = [b0]
    fdelta = []
    for b in queue:
        row = []
        for t in rows[first[b]]:
            nb = block[t]
            f = fid.get(nb)
            if f is None:
                f = fid[nb] = len(fid)
                queue.append(nb)
            row.append(f)
        fdelta.append(tuple(row))
    if keep is None:
        return tuple(fdelta), tuple([first[b] for b in queue]), tuple([fid[b] for b in block])
    state_fid = [None] * len(delta)
    for i, s in enumerate(keep):
        state_fid[s] = fid[block[i]]
    return tuple(fdelta), tuple([keep[first[b]] for b in queue]), tuple(state_fid)


def input_order(machine):
    return tuple(sorted(range(len(machine.inputs)), key=machine.inputs.__getitem__))


def quotient(machine):
    """Return ``(FunctionalMachine, AbstractionMap)`` for the reachable part of ``machine``."""
    return _quotient(machine)


@lru_cache(maxsize=4096)
def _quotient(machine):
    x_order = input_order(machine)
    fdelta, fout, state_fid = index_quotient(machine.delta, machine.out, machine.initial, x_order)
    names = tuple(f"F{i}" for i in range(len(fdelta)))
    aliases = tuple((k, v) for k, v in machine.aliases if k in names)
    fm = FunctionalMachine(
        names,
        tuple(machine.inputs[x] for x in x_order),
        machine.outputs,
        fdelta,
        tuple(machine.outputs[o] for o in fout),
        aliases,
    )
    mapping = tuple(sorted((machine.states[s], names[f]) for s, f in enumerate(state_fid) if f is not None))
    return fm, AbstractionMap(mapping, machine.digest, fm.signature)


def abs_apply(abs_map, encoded_state):
    for label, fs in abs_map.mapping:
        if label == encoded_state:
            return fs
    raise UnknownState(f"{encoded_state!r} is not a reachable state of machine {abs_map.source[:12]}")


def bisimilar(m1, m2):
    """Bisimulation witness between the reachable parts, or None.

    Decided by comparing canonical quotients: two pointed deterministic
    machines are bisimilar iff their minimal quotients are isomorphic, and
    BFS numbering makes the isomorphism the identity on ``F`` names.
    """
    if set(m1.inputs) != set(m2.inputs) or set(m1.outputs) != set(m2.outputs):
        raise AlphabetMismatch("bisimulation needs identical input and output alphabets")
    f1, a1 = quotient(m1)
    f2, a2 = quotient(m2)
    if (f1.delta, f1.out) != (f2.delta, f2.out):
        return None
    by_block = a2.blocks()
    relation = frozenset((h1, h2) for h1, fs in a1.mapping for h2 in by_block[fs])
    return BisimWitness(relation)


def check_coarse_graining(machine, abs_map):
    """True iff outputs are a well-defined, non-invertible function of functional states."""
    blocks = abs_map.blocks()
    image = set()
    for members in blocks.values():
        outs = {machine.output_of(h) for h in members}
        if len(outs) != 1:
            return False
        image |= outs
    return len(blocks) > len(image)

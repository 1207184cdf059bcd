"""Exhaustive small-machine enumeration and the Level-1 invariance sweep.

Canonical machines are generated directly in breadth-first form: transitions
are assigned state by state, inputs in order, and a target may only be an
already discovered state or the next fresh one.  Every complete,
initially-connected Moore machine appears exactly once up to renaming of its
states.
"""

from __future__ import annotations

import gc
import itertools
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import BudgetExceeded, ValidationError
from .framework import Battery, Provenance, Dataset, VariationKind, classify_datasets
from .machines import EncodedMachine, binary_labels, relabel, split_state
from .observation import observe_machine
from .theories import FeedbackSensitive, Level1Functional

GENERATORS = ("relabel", "split")
DEFAULT_BUDGET = 10**7
MAX_COUNTEREXAMPLES = 10


@dataclass(frozen=True)
class EnumerationParams:
    max_states: int
    n_inputs: int = 2
    n_outputs: int = 2
    generators: tuple = GENERATORS
    budget: int = DEFAULT_BUDGET
    canonical: bool = True
    min_states: int = 1

    def __post_init__(self):
        if self.max_states < 1 or self.n_inputs < 1 or self.n_outputs < 1:
            raise ValidationError("params", "state and alphabet sizes must be positive")
        if not 1 <= self.min_states <= self.max_states:
            raise ValidationError("params.min_states", "must lie in 1..max_states")
        unknown = set(self.generators) - set(GENERATORS)
        if unknown:
            raise ValidationError("params.generators", f"unknown generator(s) {sorted(unknown)}")
        if self.budget < 1:
            raise ValidationError("params.budget", "must be positive")

    @property
    def sizes(self):
        return range(self.min_states, self.max_states + 1)


def raw_machine_count(n_states, n_inputs, n_outputs):
    """Transition tables times output tables for exactly ``n_states`` states."""
    return n_states ** (n_states * n_inputs) * n_outputs**n_states


@lru_cache(maxsize=None)
def canonical_structure_count(n_states, n_inputs):
    """Number of breadth-first-canonical transition tables with all states reachable."""
    slots = n_states * n_inputs

    @lru_cache(maxsize=None)
    def count(pos, found):
        if pos == slots:
            return 1 if found == n_states else 0
        if pos // n_inputs >= found:
            return 0
        total = found * count(pos + 1, found)
        if found < n_states:
            total += count(pos + 1, found + 1)
        return total

    return count(0, 1)


def machine_count(params):
    if params.canonical:
        return sum(canonical_structure_count(n, params.n_inputs) * params.n_outputs**n for n in params.sizes)
    return sum(raw_machine_count(n, params.n_inputs, params.n_outputs) for n in params.sizes)


def _canonical_tables(n, k):
    slots = [0] * (n * k)

    def fill(pos, found):
        if pos == n * k:
            if found == n:
                yield tuple(tuple(slots[i * k:(i + 1) * k]) for i in range(n))
            return
        if pos // k >= found:
            return
        for t in range(min(found + 1, n)):
            slots[pos] = t
            yield from fill(pos + 1, found + 1 if t == found else found)

    yield from fill(0, 1)


def _raw_tables(n, k):
    for flat in itertools.product(range(n), repeat=n * k):
        yield tuple(tuple(flat[i * k:(i + 1) * k]) for i in range(n))


def alphabets(params):
    return tuple(f"i{j}" for j in range(params.n_inputs)), tuple(f"o{j}" for j in range(params.n_outputs))


def enumerate_tables(params):
    """Index-level stream of ``(delta, out)`` pairs; sizes ascending, tables then outputs lexicographic.

    State 0 is initial.  This is the enumeration behind :func:`enumerate_machines`
    without the cost of building labelled machines.
    """
    total = machine_count(params)
    if total > params.budget:
        raise BudgetExceeded(f"{total} machines exceed the budget of {params.budget}")
    tables = _canonical_tables if params.canonical else _raw_tables
    for n in params.sizes:
        outs = list(itertools.product(range(params.n_outputs), repeat=n))
        for delta in tables(n, params.n_inputs):
            for out in outs:
                yield delta, out


def enumerate_machines(params):
    """Deterministic stream of machines in :func:`enumerate_tables` order."""
    inputs, outputs = alphabets(params)
    labels = {n: binary_labels(n) for n in params.sizes}
    for delta, out in enumerate_tables(params):
        yield EncodedMachine(labels[len(delta)], inputs, outputs, delta, out, 0)


def canonical_form(machine):
    """Breadth-first renumbering of the reachable part: ``(delta, out)`` at index level."""
    order = {machine.initial: 0}
    queue = [machine.initial]
    for s in queue:
        for t in machine.delta[s]:
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    by_new = sorted(order, key=order.__getitem__)
    return (
        tuple(tuple(order[t] for t in machine.delta[s]) for s in by_new),
        tuple(machine.out[s] for s in by_new),
    )


# --------------------------------------------------------------------------- variation generators


def relabelings(machine, extra_width=1):
    """Every injective re-encoding at the minimal width and up to ``extra_width`` more bits."""
    n = len(machine.states)
    w0 = max(1, (n - 1).bit_length())
    for w in range(w0, w0 + extra_width + 1):
        for labels in itertools.permutations(binary_labels(2**w, w), n):
            yield f"relabel:{','.join(labels)}", relabel(machine, dict(zip(machine.states, labels)))


def splits(machine):
    """Every single-state split: duplicate a state, redirect a nonempty subset of its incoming edges."""
    n, k = len(machine.states), len(machine.inputs)
    for s in range(n):
        incoming = [(src, x) for src in range(n) for x in range(k) if machine.delta[src][x] == s]
        for r in range(1, len(incoming) + 1):
            for subset in itertools.combinations(incoming, r):
                yield f"split:{s}:{subset}", split_state(machine, s, subset)


def variants(machine, generators):
    if "relabel" in generators:
        yield from relabelings(machine)
    if "split" in generators:
        yield from splits(machine)


# --------------------------------------------------------------------------- the check


@dataclass
class CheckReport:
    theory: str
    params: EnumerationParams
    machines: int = 0
    classifications: int = 0
    counts: dict = field(default_factory=lambda: {k.value: 0 for k in VariationKind})
    counterexamples: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def type2(self):
        return self.counts[VariationKind.TYPE2.value]

    def as_dict(self):
        return {
            "theory": self.theory,
            "max_states": self.params.max_states,
            "inputs": self.params.n_inputs,
            "outputs": self.params.n_outputs,
            "generators": list(self.params.generators),
            "machines": self.machines,
            "classifications": self.classifications,
            "counts": dict(sorted(self.counts.items())),
            "counterexamples": self.counterexamples,
        }


@contextmanager
def paused_gc():
    """Suspend the cyclic collector around bulk enumeration.

    The loops allocate millions of short-lived tuples but no reference
    cycles; generation sweeps over the quotient memo would otherwise cost
    about a quarter of the runtime.
    """
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def sweep_battery(params):
    """All input words of length ``max_states``: their prefixes reach every reachable state."""
    inputs, _ = alphabets(params)
    return Battery(words=tuple(itertools.product(inputs, repeat=params.max_states)))


def _dataset(machine, battery, sid):
    p, i, trace = observe_machine(machine, battery)
    return Dataset(p, i, Provenance(sid, battery.digest, "sweep", machine), trace)


THEORIES = {"Level1Functional": Level1Functional, "FeedbackSensitive": FeedbackSensitive}


def exhaustive_theorem_check(params, theory="Level1Functional", progress=None):
    return exhaustive_check(params, (theory,), progress)[theory]


def exhaustive_check(params, theories=("Level1Functional",), progress=None):
    """Classify every generated variation of every enumerated machine under each theory.

    Observations are shared between theories; each theory classifies them
    independently and gets its own :class:`CheckReport`.
    """
    for name in theories:
        if name not in THEORIES:
            raise ValidationError("theory", f"sweeps support {sorted(THEORIES)}, got {name!r}")
    preds = {name: THEORIES[name]() for name in theories}
    reports = {name: CheckReport(name, params) for name in theories}
    start = time.perf_counter()
    battery = sweep_battery(params)
    machines = 0
    with paused_gc():
        for machine in enumerate_machines(params):
            machines += 1
            sid = f"m{machines}"
            base = _dataset(machine, battery, sid)
            base_preds = {name: frozenset(pred(base)) for name, pred in preds.items()}
            for vname, variant in variants(machine, params.generators):
                o_var = _dataset(variant, battery, f"{sid}|{vname}")
                for name, pred in preds.items():
                    c = classify_datasets(base, o_var, pred, base_preds[name])
                    r = reports[name]
                    r.classifications += 1
                    r.counts[c.kind.value] += 1
                    if c.kind is VariationKind.TYPE2 and len(r.counterexamples) < MAX_COUNTEREXAMPLES:
                        r.counterexamples.append({
                            "machine": {"delta": [list(row) for row in machine.delta], "out": list(machine.out)},
                            "variation": vname,
                            "pred": sorted(c.evidence.pred),
                            "variant_pred": sorted(c.evidence.variant_pred),
                        })
            if progress and machines % 250 == 0:
                progress(f"{machines} machines")
    elapsed = time.perf_counter() - start
    for r in reports.values():
        r.machines = machines
        r.elapsed = elapsed
    return reports

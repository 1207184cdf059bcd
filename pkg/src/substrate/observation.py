"""``obs`` for each system family: run the battery and serialize both contents.

Prediction content is the internal trace (encoded state labels, hidden
vectors, registry states); inference content is the externally visible
output (Moore outputs, network outputs, halting status plus trimmed tape).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache, partial
from operator import itemgetter

import numpy as np

from .canonical import Writer
from .errors import NotHalted, UnknownInput, WrongSystemFamily
from .framework import ContentKind, InferenceContent, PredictionContent
from .machines import EncodedMachine
from .rnn import Rnn, WitnessedRnn, random_battery, rnn_run_batch
from .turing import DEFAULT_FUEL, RunStatus, TuringMachine, UniversalSystem, tm_run, utm_run


@dataclass(frozen=True)
class MachineTrace:
    words: tuple  # input index words
    runs: tuple  # visited state indices per word


@dataclass(frozen=True)
class RnnTrace:
    inputs: np.ndarray  # (trials, T, I)
    hidden: np.ndarray  # (trials, T, H)


@dataclass(frozen=True)
class TmTrace:
    words: tuple
    runs: tuple  # RunResult per word (UniversalRun for the universal wrapper)


_U32 = struct.Struct("<I")


@lru_cache(maxsize=1024)
def _index_words(inputs, words):
    index = {x: i for i, x in enumerate(inputs)}
    try:
        return tuple(tuple(index[x] for x in w) for w in words)
    except KeyError as exc:
        raise UnknownInput(f"battery symbol {exc.args[0]!r} is not in the input alphabet {inputs}") from None


@lru_cache(maxsize=65536)
def _index_runs(delta, initial, words):
    runs = []
    for w in words:
        s = initial
        seq = [s]
        for j in w:
            s = delta[s][j]
            seq.append(s)
        runs.append(tuple(seq))
    return tuple(runs)


@lru_cache(maxsize=65536)
def _layout(runs, n_states):
    """Gather plan for one payload: state indices interleaved with length headers.

    Headers are addressed past the end of the per-state table, so a payload
    is ``head + join(getter(per_state + headers))`` with the same bytes as
    ``Writer.texts`` per run.
    """
    lengths = sorted({len(seq) for seq in runs})
    slot = {L: n_states + i for i, L in enumerate(lengths)}
    order = []
    for seq in runs:
        order.append(slot[len(seq)])
        order.extend(seq)
    headers = [_U32.pack(L) for L in lengths]
    getter = itemgetter(*order) if len(order) > 1 else (lambda t: (t[order[0]],))
    return getter, headers, b"\x00" + _U32.pack(len(runs))


@lru_cache(maxsize=4096)
def _packed(text):
    b = text.encode("utf-8")
    return _U32.pack(len(b)) + b


def observe_machine(machine, battery):
    words = _index_words(machine.inputs, battery.words)
    runs = _index_runs(machine.delta, machine.initial, words)
    head = b"\x00" + _U32.pack(len(runs))
    if runs:
        getter, headers, head = _layout(runs, len(machine.states))
        outs = machine.outputs
        prediction = head + b"".join(getter([_packed(s) for s in machine.states] + headers))
        inference = head + b"".join(getter([_packed(outs[o]) for o in machine.out] + headers))
    else:
        prediction = inference = head
    return (
        PredictionContent(prediction, ContentKind.ENCODED_STATE_TRACE),
        InferenceContent(inference),
        MachineTrace(words, runs),
    )


def rnn_inputs(battery, input_dim):
    if battery.is_uniform:
        return random_battery(input_dim, battery.trials, battery.horizon, battery.seed)
    return np.asarray(battery.words, dtype=np.float64).reshape(len(battery.words), -1, input_dim)


def observe_rnn(net, battery):
    X = rnn_inputs(battery, net.input_dim)
    H, O = rnn_run_batch(net, X)
    pw = Writer().u8(1).u32(net.hidden_dim).u32(H.shape[0]).u32(H.shape[1]).f64_array(H.ravel())
    iw = Writer().u8(1).u32(net.output_dim).u32(O.shape[0]).u32(O.shape[1]).f64_array(O.ravel())
    return (
        PredictionContent(pw.getvalue(), ContentKind.HIDDEN_VECTOR_TRACE),
        InferenceContent(iw.getvalue()),
        RnnTrace(X, H),
    )


def _tm_payloads(runs, tape_of):
    pw, iw = Writer().u8(2).u32(len(runs)), Writer().u8(2).u32(len(runs))
    for r in runs:
        res = getattr(r, "result", r)
        if res.status is RunStatus.FUEL_EXHAUSTED:
            raise NotHalted(f"run exhausted its fuel after {res.steps} steps")
        pw.texts(res.registry_trace)
        iw.text(res.status.value).texts(tape_of(r))
    return pw.getvalue(), iw.getvalue()


def observe_tm(tm, battery, fuel=DEFAULT_FUEL):
    runs = tuple(tm_run(tm, w, fuel) for w in battery.words)
    p, i = _tm_payloads(runs, lambda r: r.final_tape)
    return PredictionContent(p, ContentKind.REGISTRY_STATE_TRACE), InferenceContent(i), TmTrace(battery.words, runs)


def observe_universal(system, battery, fuel=DEFAULT_FUEL):
    """U preloaded with X_M; inference content is the simulated tape region."""
    runs = tuple(utm_run(system.machine, w, fuel) for w in battery.words)
    p, i = _tm_payloads(runs, lambda r: r.simulated_tape)
    return PredictionContent(p, ContentKind.REGISTRY_STATE_TRACE), InferenceContent(i), TmTrace(battery.words, runs)


def observe(system, battery, fuel=DEFAULT_FUEL):
    if isinstance(system, EncodedMachine):
        return observe_machine(system, battery)
    if isinstance(system, WitnessedRnn):
        return observe_rnn(system.net, battery)
    if isinstance(system, Rnn):
        return observe_rnn(system, battery)
    if isinstance(system, TuringMachine):
        return observe_tm(system, battery, fuel)
    if isinstance(system, UniversalSystem):
        return observe_universal(system, battery, fuel)
    raise WrongSystemFamily(f"no observation rule for {type(system).__name__}")


def make_observer(fuel=DEFAULT_FUEL):
    return partial(observe, fuel=fuel)

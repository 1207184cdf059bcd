"""Prediction theories and the inference rule.

``Level1Functional`` predicts from functional states only: it maps every
element of the prediction trace to its functional state and then through an
assignment.  The two foils read encoding-level structure instead:
``FeedbackSensitive`` looks at the component dependency graph and
``DimensionSensitive`` at the hidden-state dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .abstraction import functional_signature, index_quotient, input_order, quotient
from .canonical import sha256
from .errors import UnknownState, UnmappedReport, ValidationError, WrongSystemFamily
from .machines import EncodedMachine, dependency_graph
from .rnn import DEFAULT_TOL, Rnn, WitnessedRnn, hidden_traces_correspond, identity_witness, rnn_run_batch
from .turing import DEFAULT_FUEL, RunStatus, TuringMachine, UniversalSystem, tm_run, trace_correspondence

THEORY_NAMES = ("Level1Functional", "FeedbackSensitive", "DimensionSensitive")
INF_RULES = ("report",)


@dataclass(frozen=True)
class TheoryDescriptor:
    name: str
    parameters: dict = field(default_factory=dict, hash=False)

    def as_dict(self):
        return {"name": self.name, "parameters": dict(self.parameters)}


@dataclass(frozen=True)
class Level1Functional:
    """pred = pred' o abs.

    Without an explicit assignment every functional state ``Fk`` of a
    functional machine with signature ``sig`` predicts ``{"exp:Fk@sig8"}``:
    the most discriminating Level-1 theory there is.  An explicit assignment
    (keyed by alias or by ``Fk``) applies to encoded machines only.
    Continuous systems use the witness regime: a network's hidden state
    ``h'_t`` is the functional state of the reference network's ``h_t`` when
    the registered witness carries one onto the other.
    """

    assignment: tuple = ()  # sorted (key, tuple of labels)
    tolerance: float = DEFAULT_TOL
    fuel: int = DEFAULT_FUEL
    name: str = field(default="Level1Functional", init=False)

    def __post_init__(self):
        for key, labels in self.assignment:
            if not labels:
                raise ValidationError("pred_theory.parameters.assignment", f"empty prediction set for {key!r}")

    def __call__(self, dataset):
        return self.pred(dataset)

    def pred(self, dataset):
        system = dataset.provenance.system
        if isinstance(system, EncodedMachine):
            return self._pred_machine(system, dataset.trace)
        if isinstance(system, (Rnn, WitnessedRnn)):
            return self._pred_rnn(system, dataset.trace)
        if isinstance(system, TuringMachine):
            tag = system.digest[:8]
            return frozenset(f"exp:{q}@{tag}" for r in dataset.trace.runs for q in r.registry_trace)
        if isinstance(system, UniversalSystem):
            return self._pred_universal(system, dataset.trace)
        raise WrongSystemFamily(f"no abstraction regime for {type(system).__name__}")

    def assigned(self, fm, fs):
        if not self.assignment:
            return (f"exp:{fs}@{fm.signature[:8]}",)
        table = dict(self.assignment)
        for key in (fm.display(fs), fs):
            if key in table:
                return table[key]
        raise UnknownState(f"assignment has no entry for functional state {fs} ({fm.display(fs)})")

    def _pred_machine(self, machine, trace):
        x_order = input_order(machine)
        fdelta, fout, fid = index_quotient(machine.delta, machine.out, machine.initial, x_order)
        visited = {fid[s] for seq in trace.runs for s in seq}
        if not self.assignment:
            sig = functional_signature(
                tuple(machine.inputs[x] for x in x_order), fdelta, tuple(machine.outputs[o] for o in fout)
            )
            return frozenset(f"exp:F{f}@{sig[:8]}" for f in visited)
        fm, _ = quotient(machine)
        result = set()
        for f in visited:
            result.update(self.assigned(fm, f"F{f}"))
        return frozenset(result)

    def _pred_rnn(self, system, trace):
        if isinstance(system, WitnessedRnn):
            reference, witness = system.reference, system.witness
        else:
            reference, witness = system, identity_witness(system)
        H_ref, _ = rnn_run_batch(reference, trace.inputs)
        if not hidden_traces_correspond(witness, H_ref, trace.hidden, self.tolerance):
            raise UnknownState("hidden trace is not carried onto the reference trace by the registered witness")
        tag = reference.digest[:8]
        flat = H_ref.reshape(-1, H_ref.shape[-1])
        return frozenset(f"exp:{sha256(h.tobytes())[:16]}@{tag}" for h in flat)

    def _pred_universal(self, system, trace):
        tm = system.machine
        tag = tm.digest[:8]
        result = set()
        for word, urun in zip(trace.words, trace.runs):
            direct = tm_run(tm, word, self.fuel)
            if direct.status is RunStatus.HALTED and urun.status is RunStatus.HALTED:
                trace_correspondence(direct, urun)
            elif urun.simulated_states != direct.registry_trace:
                raise UnknownState("simulated registry does not correspond to the direct run")
            result.update(f"exp:{q}@{tag}" for q in urun.simulated_states)
        return frozenset(result)


@dataclass(frozen=True)
class FeedbackSensitive:
    """Stand-in for causal-structure theories: predicts from the presence of feedback
    among state bits.  It is not an integrated-information calculation."""

    name: str = field(default="FeedbackSensitive", init=False)
    stand_in: bool = field(default=True, init=False)

    def __call__(self, dataset):
        return pred_feedback(dataset)


@dataclass(frozen=True)
class DimensionSensitive:
    name: str = field(default="DimensionSensitive", init=False)

    def __call__(self, dataset):
        return pred_dim(dataset)


@lru_cache(maxsize=65536)
def _feedback_label(machine):
    return "cyclic" if dependency_graph(machine).has_feedback() else "acyclic"


def pred_feedback(dataset):
    system = dataset.provenance.system
    if not isinstance(system, EncodedMachine):
        raise WrongSystemFamily("FeedbackSensitive applies to encoded machines only")
    return frozenset({_feedback_label(system)})


def pred_dim(dataset):
    system = dataset.provenance.system
    if isinstance(system, WitnessedRnn):
        system = system.net
    if not isinstance(system, Rnn):
        raise WrongSystemFamily("DimensionSensitive applies to recurrent networks only")
    return frozenset({f"dim:{system.hidden_dim}"})


@dataclass(frozen=True)
class ReportRule:
    """inf: one experience per inference content.

    The report class of an output is ``report:<first 16 hex digits of its
    sha256>``.  Without a table that class is the experience (injective);
    with a table it is looked up and unknown classes are an error.
    """

    table: tuple = ()  # sorted (report class, experience label)
    name: str = field(default="report", init=False)

    def __call__(self, dataset):
        return inf_from_outputs(dataset, self)


def report_class(inference):
    return "report:" + sha256(inference.payload)[:16]


def inf_from_outputs(dataset, rule=None):
    key = report_class(dataset.inference)
    if rule is None or not rule.table:
        return key
    table = dict(rule.table)
    if key not in table:
        raise UnmappedReport(f"report table has no entry for {key}")
    return table[key]


# --------------------------------------------------------------------------- construction from descriptors


def _labels(where, value):
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, (list, tuple)) or not value or not all(isinstance(v, str) and v for v in value):
        raise ValidationError(where, "must be a nonempty label or list of nonempty labels")
    return tuple(sorted(set(value)))


def make_theory(descriptor, experience_space=None):
    name, params = descriptor.name, dict(descriptor.parameters)
    where = "pred_theory.parameters"
    if name == "Level1Functional":
        unknown = set(params) - {"assignment", "tolerance", "fuel"}
        if unknown:
            raise ValidationError(where, f"unknown parameter(s) {sorted(unknown)}")
        raw = params.get("assignment") or {}
        if not isinstance(raw, dict):
            raise ValidationError(f"{where}.assignment", "must be an object keyed by functional state")
        assignment = tuple(sorted((str(k), _labels(f"{where}.assignment.{k}", v)) for k, v in raw.items()))
        if experience_space is not None:
            for k, labels in assignment:
                missing = set(labels) - set(experience_space)
                if missing:
                    raise ValidationError(f"{where}.assignment.{k}", f"labels {sorted(missing)} not in experience_space")
        tol = params.get("tolerance", DEFAULT_TOL)
        if not isinstance(tol, (int, float)) or tol < 0:
            raise ValidationError(f"{where}.tolerance", "must be a nonnegative number")
        fuel = params.get("fuel", DEFAULT_FUEL)
        if not isinstance(fuel, int) or fuel < 1:
            raise ValidationError(f"{where}.fuel", "must be a positive integer")
        return Level1Functional(assignment, float(tol), fuel)
    if name in ("FeedbackSensitive", "DimensionSensitive"):
        if params:
            raise ValidationError(where, f"{name} takes no parameters")
        return FeedbackSensitive() if name == "FeedbackSensitive" else DimensionSensitive()
    raise ValidationError("pred_theory.name", f"unknown theory {name!r}; expected one of {', '.join(THEORY_NAMES)}")


def make_inf_rule(spec, experience_space=None):
    """``spec`` is a rule name or ``{"name": ..., "table": {...}}``."""
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ValidationError("inf_rule", "must be a rule name or an object with a name")
    if spec["name"] not in INF_RULES:
        raise ValidationError("inf_rule.name", f"unknown inference rule {spec['name']!r}")
    table = spec.get("table") or {}
    if not isinstance(table, dict):
        raise ValidationError("inf_rule.table", "must map report classes to experience labels")
    for key, value in table.items():
        if not isinstance(value, str):
            raise ValidationError(
                f"inf_rule.table.{key}",
                "inf must return a single experience; set-valued inference is not supported",
            )
        if experience_space is not None and value not in experience_space:
            raise ValidationError(f"inf_rule.table.{key}", f"label {value!r} not in experience_space")
    return ReportRule(tuple(sorted(table.items())))

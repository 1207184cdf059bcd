"""Experiments, datasets, variations and the verdicts built on them.

An experiment bundles a registry of systems, one input battery and the three
correspondences ``obs``, ``pred`` and ``inf``.  Experiences are plain string
labels and experience sets are frozensets of them.  Datasets compare by the
canonical bytes of their prediction and inference contents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Mapping

from .canonical import json_digest, sha256
from .errors import EmptyRestriction, NonEnumerable, UnknownProvenance, VariationError, WrongSystemFamily


class ContentKind(str, Enum):
    ENCODED_STATE_TRACE = "EncodedStateTrace"
    HIDDEN_VECTOR_TRACE = "HiddenVectorTrace"
    REGISTRY_STATE_TRACE = "RegistryStateTrace"


@dataclass(frozen=True)
class PredictionContent:
    payload: bytes
    kind: ContentKind

    @property
    def digest(self):
        return sha256(self.payload)


@dataclass(frozen=True)
class InferenceContent:
    payload: bytes

    @property
    def digest(self):
        return sha256(self.payload)


@dataclass(frozen=True)
class Provenance:
    system_id: str
    battery_id: str
    experiment_id: str = ""
    # the generating system itself; pred theories read structure off it
    system: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Dataset:
    prediction: PredictionContent
    inference: InferenceContent
    provenance: Provenance
    # family-specific decoded trace kept for the theories; not part of equality
    trace: Any = field(default=None, compare=False, repr=False)

    @property
    def digest(self):
        return sha256(self.prediction.payload + b"\x00" + self.inference.payload)


@dataclass(frozen=True)
class Battery:
    """Ordered input sequences: symbol words, or a seeded uniform(-1, 1) vector battery."""

    words: tuple = ()
    seed: int | None = None
    trials: int = 0
    horizon: int = 0

    @property
    def is_uniform(self):
        return self.seed is not None

    def as_dict(self):
        if self.is_uniform:
            return {"uniform": {"seed": self.seed, "trials": self.trials, "horizon": self.horizon}}
        return {"words": [list(w) for w in self.words]}

    @cached_property
    def digest(self):
        return json_digest(self.as_dict())


@dataclass(frozen=True)
class InfiniteFamily:
    """Registry entry standing for an infinite class of systems."""

    name: str


@dataclass(frozen=True)
class Variation:
    name: str
    transform: Callable = field(compare=False)
    applies_to: Callable = field(default=lambda system: True, compare=False, repr=False)

    def __call__(self, system):
        if not self.applies_to(system):
            raise WrongSystemFamily(f"variation {self.name!r} is not declared for {type(system).__name__}")
        return self.transform(system)


class VariationKind(str, Enum):
    NOT_INFERENCE_PRESERVING = "NotInferencePreserving"
    NOT_A_VARIATION = "NotAVariation"
    TYPE1 = "Type1"
    TYPE2 = "Type2"


@dataclass(frozen=True)
class Evidence:
    dataset: Dataset
    variant: Dataset
    pred: frozenset
    variant_pred: frozenset


@dataclass(frozen=True)
class VariationClass:
    kind: VariationKind
    evidence: Evidence


class VerdictKind(str, Enum):
    NOT_PRE_FALSIFIED = "NotPreFalsified"
    PRE_FALSIFIED = "PreFalsifiedOrInferencesWrong"


@dataclass(frozen=True)
class Witness:
    system_id: str
    variation: str
    classification: VariationClass


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    witness: Witness | None = None

    def __post_init__(self):
        if (self.kind is VerdictKind.PRE_FALSIFIED) != (self.witness is not None):
            raise ValueError("a pre-falsification verdict needs exactly one Type-2 witness")


ObsFn = Callable[[Any, Battery], tuple]


@dataclass(frozen=True)
class Experiment:
    """``observe(system, battery)`` returns ``(PredictionContent, InferenceContent, trace)``."""

    systems: Mapping[str, Any]
    battery: Battery
    pred: Callable[[Dataset], frozenset]
    inf: Callable[[Dataset], str]
    observe: ObsFn

    @cached_property
    def identity(self):
        parts = {}
        for sid in sorted(self.systems):
            s = self.systems[sid]
            parts[sid] = getattr(s, "digest", None) or repr(s)
        return json_digest({"systems": parts, "battery": self.battery.digest})

    def system(self, system_id):
        base, _, _ = system_id.partition("|")
        if base not in self.systems:
            raise UnknownProvenance(f"system {system_id!r} is not registered")
        return self.systems[base]

    def obs(self, system_id, system=None):
        """Dataset of a registered system, or of ``system`` derived from it under ``system_id``."""
        if system is None:
            system = self.system(system_id)
        if isinstance(system, InfiniteFamily):
            raise NonEnumerable(f"{system.name} is an infinite family")
        prediction, inference, trace = self.observe(system, self.battery)
        prov = Provenance(system_id, self.battery.digest, self.identity, system)
        return Dataset(prediction, inference, prov, trace)

    def check_provenance(self, dataset):
        p = dataset.provenance
        if p.experiment_id != self.identity or p.battery_id != self.battery.digest:
            raise UnknownProvenance(f"dataset for {p.system_id!r} was not produced by this experiment")
        self.system(p.system_id)

    def datasets(self):
        for sid in sorted(self.systems):
            if isinstance(self.systems[sid], InfiniteFamily):
                raise NonEnumerable(f"registry entry {sid!r} declares an infinite family")
        return [self.obs(sid) for sid in sorted(self.systems)]


def falsified_at(experiment, dataset):
    experiment.check_provenance(dataset)
    return experiment.inf(dataset) not in experiment.pred(dataset)


def minimally_informative(experiment):
    """Every dataset has a partner (possibly itself) with a disjoint prediction set."""
    preds = [frozenset(experiment.pred(o)) for o in experiment.datasets()]
    return bool(preds) and all(any(p.isdisjoint(q) for q in preds) for p in preds)


def classify_datasets(o, o_var, pred, base_pred=None):
    """Classify a dataset pair given a ``pred`` correspondence.

    ``base_pred`` may carry an already computed ``pred(o)``.
    """
    p = frozenset(pred(o)) if base_pred is None else base_pred
    p_var = frozenset(pred(o_var))
    evidence = Evidence(o, o_var, p, p_var)
    if o.inference != o_var.inference:
        kind = VariationKind.NOT_INFERENCE_PRESERVING
    elif o.prediction == o_var.prediction:
        kind = VariationKind.NOT_A_VARIATION
    elif p & p_var:
        kind = VariationKind.TYPE1
    else:
        kind = VariationKind.TYPE2
    return VariationClass(kind, evidence)


def classify_variation(experiment, system_id, variation):
    system = experiment.system(system_id)
    o = experiment.obs(system_id)
    try:
        variant = variation(system)
    except WrongSystemFamily:
        raise
    except Exception as exc:
        raise VariationError(f"variation {variation.name!r} failed on {system_id!r}: {exc}") from exc
    o_var = experiment.obs(f"{system_id}|{variation.name}", variant)
    return classify_datasets(o, o_var, experiment.pred)


def _applicable(experiment, variation):
    for sid in sorted(experiment.systems):
        system = experiment.systems[sid]
        if not isinstance(system, InfiniteFamily) and variation.applies_to(system):
            yield sid


def is_substitution(experiment, transform, inference_class):
    """A system ``p`` in the restriction whose image under ``transform`` stays in it
    and has a disjoint prediction set, or None."""
    restriction = [sid for sid in sorted(experiment.systems)
                   if not isinstance(experiment.systems[sid], InfiniteFamily)
                   and experiment.obs(sid).inference == inference_class]
    if not restriction:
        raise EmptyRestriction("no registered system produces the given inference content")
    for sid in restriction:
        if not transform.applies_to(experiment.systems[sid]):
            continue
        c = classify_variation(experiment, sid, transform)
        if c.kind is VariationKind.TYPE2:
            return Witness(sid, transform.name, c)
    return None


def independence_witness(experiment, variations):
    """First (variation, class) that is inference-preserving and changes prediction content."""
    for v in variations:
        for sid in _applicable(experiment, v):
            c = classify_variation(experiment, sid, v)
            if c.kind in (VariationKind.TYPE1, VariationKind.TYPE2):
                return v, c
    return None


def theorem1_verdict(experiment, variations):
    for v in variations:
        for sid in _applicable(experiment, v):
            c = classify_variation(experiment, sid, v)
            if c.kind is VariationKind.TYPE2:
                return Verdict(VerdictKind.PRE_FALSIFIED, Witness(sid, v.name, c))
    return Verdict(VerdictKind.NOT_PRE_FALSIFIED)

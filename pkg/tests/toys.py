"""Toy systems whose contents and experiences are spelled out directly."""

from dataclasses import dataclass

from substrate.framework import Battery, ContentKind, Experiment, InferenceContent, PredictionContent


@dataclass(frozen=True)
class Toy:
    name: str
    state: bytes  # prediction payload
    report: str  # inference payload, also the inferred experience
    experiences: frozenset = frozenset()


def observe(system, battery):
    return (
        PredictionContent(system.state, ContentKind.ENCODED_STATE_TRACE),
        InferenceContent(system.report.encode()),
        None,
    )


def pred(dataset):
    return dataset.provenance.system.experiences


def inf(dataset):
    return dataset.inference.payload.decode()


def experiment(*toys):
    return Experiment({t.name: t for t in toys}, Battery(), pred, inf, observe)


def toy(name, state, report, *experiences):
    return Toy(name, state.encode(), report, frozenset(experiences))

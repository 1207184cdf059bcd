"""Executable falsification framework over encoded machines, recurrent networks and Turing machines."""

from .abstraction import bisimilar, quotient
from .framework import (
    Battery,
    Dataset,
    Experiment,
    Variation,
    VariationKind,
    VerdictKind,
    classify_variation,
    falsified_at,
    independence_witness,
    is_substitution,
    minimally_informative,
    theorem1_verdict,
)
from .machines import EncodedMachine, io_equivalent, mod8_feedback, mod8_feedforward
from .scenario import emit_report, load_scenario, run_scenario

__all__ = [
    "Battery",
    "Dataset",
    "EncodedMachine",
    "Experiment",
    "Variation",
    "VariationKind",
    "VerdictKind",
    "bisimilar",
    "classify_variation",
    "emit_report",
    "falsified_at",
    "independence_witness",
    "io_equivalent",
    "is_substitution",
    "load_scenario",
    "minimally_informative",
    "mod8_feedback",
    "mod8_feedforward",
    "quotient",
    "run_scenario",
    "theorem1_verdict",
]

"""Scenario files, experiment runs and reports.

A scenario is a JSON document naming systems, one battery, a prediction
theory, an inference rule and the variations to try.  ``run_scenario``
classifies every (system, variation) pair it can and folds the results into a
deterministic :class:`Report`.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .canonical import json_digest
from .errors import BudgetExceeded, MachineError, ParseError, SubstrateError, ValidationError
from .framework import (
    Battery,
    Experiment,
    Variation,
    VariationKind,
    VerdictKind,
    classify_variation,
    falsified_at,
    minimally_informative,
)
from .machines import EncodedMachine, machine_from_dict, relabel, split_state
from .observation import make_observer
from .rnn import Rnn, WitnessedRnn, pad_hidden, permute_hidden, rnn_from_dict
from .theories import Level1Functional, TheoryDescriptor, make_inf_rule, make_theory
from .turing import DEFAULT_FUEL, TuringMachine, UniversalSystem, tm_from_dict

SCHEMA_VERSION = "1.0"
MAX_LISTED = 32
SYSTEM_KINDS = ("machine", "rnn", "tm")
VARIATION_KINDS = ("identity", "relabel", "split", "pad_hidden", "permute_hidden", "utm")


def tool_version():
    try:
        return version("substrate")
    except PackageNotFoundError:  # running from a source tree
        return "0.0.0"


@dataclass(frozen=True)
class VariationSpec:
    name: str
    kind: str
    parameters: tuple = ()  # sorted (key, json-encoded value)
    systems: tuple | None = None  # restrict to these system ids

    def targets(self, system_id):
        return self.systems is None or system_id in self.systems

    def params(self):
        return {k: json.loads(v) for k, v in self.parameters}

    def as_dict(self):
        d = {"name": self.name, "kind": self.kind, "parameters": self.params()}
        if self.systems is not None:
            d["systems"] = list(self.systems)
        return d


@dataclass(frozen=True)
class Scenario:
    name: str
    systems: tuple  # (id, system) in declaration order
    battery: Battery
    theory: TheoryDescriptor
    inf_rule: dict = field(hash=False)
    variations: tuple = ()
    experience_space: tuple | None = None
    fuel: int = DEFAULT_FUEL
    source: str = ""  # digest of the scenario document

    def system_map(self):
        return dict(self.systems)

    def with_overrides(self, theory=None, seed=None, fuel=None):
        s = self
        if theory is not None and theory != s.theory.name:
            s = replace(s, theory=TheoryDescriptor(theory))
        if seed is not None:
            if not s.battery.is_uniform:
                raise ValidationError("battery", "--seed applies to uniform batteries only")
            s = replace(s, battery=replace(s.battery, seed=seed))
        if fuel is not None:
            if fuel < 1:
                raise ValidationError("budgets.fuel", "must be positive")
            s = replace(s, fuel=fuel)
        return s


# --------------------------------------------------------------------------- loading


def _require(doc, key, where=""):
    if key not in doc:
        raise ValidationError(f"{where}{key}", "required field is missing")
    return doc[key]


def _load_system(entry, base, i):
    where = f"systems[{i}]"
    if not isinstance(entry, dict):
        raise ValidationError(where, "must be an object")
    sid = _require(entry, "id", f"{where}.")
    kind = _require(entry, "kind", f"{where}.")
    if not isinstance(sid, str) or not sid or "|" in sid:
        raise ValidationError(f"{where}.id", "must be a nonempty string without '|'")
    if kind not in SYSTEM_KINDS:
        raise ValidationError(f"{where}.kind", f"unknown system kind {kind!r}; expected one of {SYSTEM_KINDS}")
    if "file" in entry:
        path = base / entry["file"]
        if not path.is_file():
            raise ValidationError(f"{where}.file", f"file {entry['file']!r} does not exist")
        try:
            body = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    elif "definition" in entry:
        body = entry["definition"]
    else:
        raise ValidationError(where, "needs either 'file' or 'definition'")
    loader = {"machine": machine_from_dict, "rnn": rnn_from_dict, "tm": tm_from_dict}[kind]
    try:
        return sid, loader(body)
    except SubstrateError as exc:
        raise ValidationError(where, str(exc)) from None


def _load_battery(raw):
    if isinstance(raw, list):
        words = []
        for i, w in enumerate(raw):
            if not isinstance(w, (list, str)):
                raise ValidationError(f"battery[{i}]", "must be a sequence of inputs")
            words.append(tuple(tuple(x) if isinstance(x, list) else x for x in w))
        return Battery(words=tuple(words))
    if isinstance(raw, dict) and "uniform" in raw:
        u = raw["uniform"]
        for key in ("seed", "trials", "horizon"):
            v = _require(u, key, "battery.uniform.")
            if not isinstance(v, int) or v < 0:
                raise ValidationError(f"battery.uniform.{key}", "must be a nonnegative integer")
        return Battery(seed=u["seed"], trials=u["trials"], horizon=u["horizon"])
    raise ValidationError("battery", "must be a list of input sequences or {'uniform': {...}}")


def _load_variation(raw, i):
    where = f"variations[{i}]"
    if not isinstance(raw, dict):
        raise ValidationError(where, "must be an object")
    name = _require(raw, "name", f"{where}.")
    kind = _require(raw, "kind", f"{where}.")
    if kind not in VARIATION_KINDS:
        raise ValidationError(f"{where}.kind", f"unknown variation kind {kind!r}")
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        raise ValidationError(f"{where}.parameters", "must be an object")
    need = {"relabel": ("mapping",), "split": ("state", "redirected"), "pad_hidden": ("extra",),
            "permute_hidden": ("perm",)}.get(kind, ())
    for key in need:
        _require(params, key, f"{where}.parameters.")
    only = raw.get("systems")
    if only is not None and (not isinstance(only, list) or not all(isinstance(x, str) for x in only)):
        raise ValidationError(f"{where}.systems", "must be a list of system ids")
    return VariationSpec(name, kind, tuple(sorted((k, json.dumps(v, sort_keys=True)) for k, v in params.items())),
                         tuple(only) if only is not None else None)


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    return scenario_from_dict(doc, path.parent, name=doc.get("name", path.stem))


def scenario_from_dict(doc, base=Path("."), name="scenario"):
    base = Path(base)
    raw_systems = _require(doc, "systems")
    if not isinstance(raw_systems, list) or not raw_systems:
        raise ValidationError("systems", "must be a nonempty list")
    systems = [_load_system(e, base, i) for i, e in enumerate(raw_systems)]
    ids = [sid for sid, _ in systems]
    if len(set(ids)) != len(ids):
        raise ValidationError("systems", "system ids must be unique")
    battery = _load_battery(_require(doc, "battery"))
    raw_theory = _require(doc, "pred_theory")
    if not isinstance(raw_theory, dict) or "name" not in raw_theory:
        raise ValidationError("pred_theory", "must be an object with a name")
    params = raw_theory.get("parameters", {})
    if not isinstance(params, dict):
        raise ValidationError("pred_theory.parameters", "must be an object")
    theory = TheoryDescriptor(raw_theory["name"], params)
    space = doc.get("experience_space")
    if space is not None and (not isinstance(space, list) or not all(isinstance(e, str) and e for e in space)):
        raise ValidationError("experience_space", "must be a list of nonempty labels")
    space = tuple(space) if space is not None else None
    make_theory(theory, space)
    inf_rule = doc.get("inf_rule", "report")
    make_inf_rule(inf_rule, space)
    variations = tuple(_load_variation(v, i) for i, v in enumerate(doc.get("variations", [])))
    for i, v in enumerate(variations):
        unknown = set(v.systems or ()) - set(ids)
        if unknown:
            raise ValidationError(f"variations[{i}].systems", f"unknown system id(s) {sorted(unknown)}")
    if len({v.name for v in variations}) != len(variations):
        raise ValidationError("variations", "variation names must be unique")
    budgets = doc.get("budgets", {})
    fuel = budgets.get("fuel", DEFAULT_FUEL)
    if not isinstance(fuel, int) or fuel < 1:
        raise ValidationError("budgets.fuel", "must be a positive integer")
    seeds = doc.get("seeds", {})
    if battery.is_uniform and "battery" in seeds and seeds["battery"] != battery.seed:
        raise ValidationError("seeds.battery", "disagrees with battery.uniform.seed")
    inf_rule = inf_rule if isinstance(inf_rule, dict) else {"name": inf_rule}
    return Scenario(name, tuple(systems), battery, theory, inf_rule, variations, space, fuel, json_digest(doc))


# --------------------------------------------------------------------------- variations


def _rewire_rnn(system, rewrite):
    net, reference, witness = (system.net, system.reference, system.witness) if isinstance(system, WitnessedRnn) \
        else (system, system, None)
    new, w = rewrite(net)
    return WitnessedRnn(new, reference, w if witness is None else witness.then(w))


def build_variation(spec):
    p = spec.params()
    is_machine = lambda s: isinstance(s, EncodedMachine)  # noqa: E731
    is_rnn = lambda s: isinstance(s, (Rnn, WitnessedRnn))  # noqa: E731
    if spec.kind == "identity":
        return Variation(spec.name, lambda s: s)
    if spec.kind == "relabel":
        return Variation(spec.name, lambda m: relabel(m, p["mapping"]), is_machine)
    if spec.kind == "split":
        def split(m):
            try:
                src = [(m.state_index[a], m.input_index[x]) for a, x in p["redirected"]]
                return split_state(m, m.state_index[p["state"]], src)
            except KeyError as exc:
                raise MachineError(f"split references unknown state or input {exc.args[0]!r}") from None
        return Variation(spec.name, split, is_machine)
    if spec.kind == "pad_hidden":
        return Variation(spec.name, lambda s: _rewire_rnn(s, lambda n: pad_hidden(n, p["extra"])), is_rnn)
    if spec.kind == "permute_hidden":
        return Variation(spec.name, lambda s: _rewire_rnn(s, lambda n: permute_hidden(n, p["perm"])), is_rnn)
    if spec.kind == "utm":
        return Variation(spec.name, UniversalSystem, lambda s: isinstance(s, TuringMachine))
    raise ValidationError("variations.kind", f"unknown variation kind {spec.kind!r}")


# --------------------------------------------------------------------------- running


@dataclass(frozen=True)
class Report:
    data: dict = field(hash=False)
    elapsed: float = field(default=0.0, compare=False)

    @property
    def verdict(self):
        return VerdictKind(self.data["verdict"]["kind"])


def build_experiment(scenario):
    space = scenario.experience_space
    pred = make_theory(scenario.theory, space)
    if isinstance(pred, Level1Functional) and "fuel" not in scenario.theory.parameters:
        pred = replace(pred, fuel=scenario.fuel)
    inf = make_inf_rule(scenario.inf_rule, space)
    return Experiment(scenario.system_map(), scenario.battery, pred, inf, make_observer(scenario.fuel))


def _set_summary(s):
    s = sorted(s)
    if len(s) <= MAX_LISTED:
        return {"size": len(s), "members": s}
    return {"size": len(s), "digest": json_digest(s)}


def _dataset_entry(experiment, o):
    return {
        "system": o.provenance.system_id,
        "digest": o.digest,
        "prediction_kind": o.prediction.kind.value,
        "prediction_digest": o.prediction.digest,
        "inference_digest": o.inference.digest,
    }


def _with_context(exc, context):
    exc.args = (f"[{context}] {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
    return exc


def only_variation(scenario, name):
    """The scenario restricted to one named variation."""
    keep = tuple(v for v in scenario.variations if v.name == name)
    if not keep:
        known = ", ".join(v.name for v in scenario.variations) or "none"
        raise ValidationError("variation", f"no variation named {name!r} (declared: {known})")
    return replace(scenario, variations=keep)


def run_scenario(scenario, include_timing=False, progress=None, budget=None):
    """Classify every applicable (system, variation) pair and assemble the report.

    ``budget`` caps the number of classifications.
    """
    start = time.perf_counter()
    experiment = build_experiment(scenario)
    if budget is not None:
        pairs = sum(spec.targets(sid) and build_variation(spec).applies_to(s)
                    for spec in scenario.variations for sid, s in experiment.systems.items())
        if pairs > budget:
            raise BudgetExceeded(f"{pairs} classifications exceed the budget of {budget}")
    datasets = {}
    for sid in sorted(experiment.systems):
        try:
            datasets[sid] = experiment.obs(sid)
        except SubstrateError as exc:
            raise _with_context(exc, f"system {sid}") from exc
    entries = []
    for sid, o in datasets.items():
        p = frozenset(experiment.pred(o))
        e = experiment.inf(o)
        entry = _dataset_entry(experiment, o)
        entry.update({"pred": _set_summary(p), "inf": e, "falsified": falsified_at(experiment, o)})
        entries.append(entry)

    classifications = []
    verdict_witness = None
    for spec in scenario.variations:
        v = build_variation(spec)
        for sid in sorted(experiment.systems):
            if not (spec.targets(sid) and v.applies_to(experiment.systems[sid])):
                continue
            if progress:
                progress(f"classify {spec.name} on {sid}")
            try:
                c = classify_variation(experiment, sid, v)
            except SubstrateError as exc:
                raise _with_context(exc, f"system {sid}, variation {spec.name}") from exc
            ev = c.evidence
            record = {
                "variation": spec.name,
                "system": sid,
                "class": c.kind.value,
                "evidence": {
                    "dataset": ev.dataset.digest,
                    "variant_dataset": ev.variant.digest,
                    "pred": _set_summary(ev.pred),
                    "variant_pred": _set_summary(ev.variant_pred),
                    "inference_digest": ev.dataset.inference.digest,
                },
            }
            classifications.append(record)
            if c.kind is VariationKind.TYPE2 and verdict_witness is None:
                verdict_witness = record

    substitutions = []
    for spec in scenario.variations:
        by_class = {}
        for r in classifications:
            if r["variation"] == spec.name:
                by_class.setdefault(r["evidence"]["inference_digest"], []).append(r)
        for inf_digest in sorted(by_class):
            hit = next((r["system"] for r in by_class[inf_digest] if r["class"] == VariationKind.TYPE2.value), None)
            substitutions.append({"variation": spec.name, "inference_digest": inf_digest, "witness": hit})

    independent = next((r for r in classifications if r["class"] in ("Type1", "Type2")), None)
    try:
        informative = minimally_informative(experiment)
    except SubstrateError:
        informative = None
    kind = VerdictKind.PRE_FALSIFIED if verdict_witness else VerdictKind.NOT_PRE_FALSIFIED
    theory = make_theory(scenario.theory, scenario.experience_space)
    notes = ["inf is a single-valued function; set-valued inference is not supported"]
    if getattr(theory, "stand_in", False):
        notes.append("FeedbackSensitive is a feedback-detection stand-in, not an integrated-information measure")
    data = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "substrate", "version": tool_version()},
        "scenario": {"name": scenario.name, "digest": scenario.source},
        "theory": {"name": scenario.theory.name, "parameters": dict(scenario.theory.parameters),
                   "stand_in": bool(getattr(theory, "stand_in", False))},
        "inf_rule": scenario.inf_rule["name"],
        "battery": {"digest": scenario.battery.digest, **_battery_summary(scenario.battery)},
        "datasets": entries,
        "classifications": classifications,
        "substitutions": substitutions,
        "independence": None if independent is None else
        {"variation": independent["variation"], "system": independent["system"], "class": independent["class"]},
        "minimally_informative": informative,
        "verdict": {"kind": kind.value, "witness": verdict_witness},
        "notes": notes,
    }
    elapsed = time.perf_counter() - start
    if include_timing:
        data["timing"] = {"seconds": round(elapsed, 6)}
    return Report(data, elapsed)


def _battery_summary(battery):
    if battery.is_uniform:
        return {"uniform": {"seed": battery.seed, "trials": battery.trials, "horizon": battery.horizon}}
    return {"sequences": len(battery.words)}


# --------------------------------------------------------------------------- emission


def emit_report(report, fmt="text"):
    data = report.data if isinstance(report, Report) else report
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False).encode("utf-8") + b"\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [
        f"scenario   {data['scenario']['name']}  ({data['scenario']['digest'][:12]})",
        f"theory     {data['theory']['name']}" + ("  [stand-in]" if data["theory"].get("stand_in") else ""),
        f"inf rule   {data['inf_rule']}",
        f"battery    {data['battery']['digest'][:12]}",
        "",
        "datasets",
    ]
    for d in data["datasets"]:
        pred = d["pred"]
        shown = ", ".join(pred["members"]) if "members" in pred else f"{pred['size']} labels ({pred['digest'][:12]})"
        lines.append(f"  {d['system']:<24} {d['digest'][:12]}  pred {{{shown}}}  inf {d['inf']}"
                     + ("  FALSIFIED" if d["falsified"] else ""))
    lines += ["", "variations"]
    if not data["classifications"]:
        lines.append("  (none)")
    for c in data["classifications"]:
        ev = c["evidence"]
        lines.append(f"  {c['variation']:<24} on {c['system']:<20} {c['class']:<24} "
                     f"{ev['dataset'][:12]} -> {ev['variant_dataset'][:12]}")
    subs = [s for s in data["substitutions"] if s["witness"]]
    lines += ["", "substitutions"]
    lines += [f"  {s['variation']} witness {s['witness']} (inference {s['inference_digest'][:12]})" for s in subs] \
        or ["  (none)"]
    mi = data["minimally_informative"]
    lines += ["", f"minimally informative  {'n/a' if mi is None else ('yes' if mi else 'no')}"]
    ind = data["independence"]
    lines.append("independence           " + ("none found" if ind is None else
                                              f"{ind['variation']} on {ind['system']} ({ind['class']})"))
    w = data["verdict"]["witness"]
    lines.append(f"verdict                {data['verdict']['kind']}"
                 + (f"  (witness: {w['variation']} on {w['system']})" if w else ""))
    for note in data["notes"]:
        lines.append(f"note: {note}")
    if "timing" in data:
        lines.append(f"elapsed {data['timing']['seconds']:.3f}s")
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_report(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read report {path}: {exc}") from None
    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"expected {SCHEMA_VERSION!r}")
    return Report(data)

import copy
import json

import jsonschema
import pytest

from conftest import ROOT
from substrate.errors import BudgetExceeded, ParseError, ValidationError
from substrate.framework import VerdictKind
from substrate.scenario import (
    build_experiment,
    build_variation,
    emit_report,
    load_report,
    load_scenario,
    only_variation,
    run_scenario,
    scenario_from_dict,
)

SCHEMA = json.loads((ROOT / "docs" / "report.schema.json").read_text())
SCENARIOS = ("mod8", "rnn", "tm", "tm_binary")


def raw(fixtures_dir, name):
    return json.loads((fixtures_dir / f"{name}.scenario.json").read_text())


@pytest.fixture(scope="module")
def reports(fixtures_dir):
    return {name: run_scenario(load_scenario(fixtures_dir / f"{name}.scenario.json")) for name in SCENARIOS}


def test_shipped_scenarios_load(fixtures_dir):
    for name in SCENARIOS:
        s = load_scenario(fixtures_dir / f"{name}.scenario.json")
        assert s.systems and len(s.source) == 64


def test_missing_battery_is_named(fixtures_dir):
    doc = raw(fixtures_dir, "mod8")
    del doc["battery"]
    with pytest.raises(ValidationError, match="battery") as info:
        scenario_from_dict(doc, fixtures_dir)
    assert info.value.field == "battery"


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["pred_theory"].update(name="Phi"), "pred_theory"),
    (lambda d: d["systems"][0].update(kind="cellular"), "systems[0].kind"),
    (lambda d: d["systems"][0].update(file="missing.json"), "systems[0].file"),
    (lambda d: d["variations"][0].update(kind="shuffle"), "variations[0].kind"),
    (lambda d: d["variations"][0].update(systems=["nobody"]), "variations[0].systems"),
    (lambda d: d["variations"].append({"name": "identity", "kind": "identity"}), "variations"),
    (lambda d: d.update(budgets={"fuel": 0}), "budgets.fuel"),
    (lambda d: d["systems"].append(dict(d["systems"][0])), "systems"),
])
def test_invalid_scenarios(fixtures_dir, mutate, field):
    doc = raw(fixtures_dir, "mod8")
    mutate(doc)
    with pytest.raises(ValidationError) as info:
        scenario_from_dict(doc, fixtures_dir)
    assert info.value.field.startswith(field)


def test_unreadable_scenarios(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_scenario(bad)
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "absent.json")


def test_shipped_verdicts(reports):
    for name in SCENARIOS:
        assert reports[name].verdict is VerdictKind.NOT_PRE_FALSIFIED
    classes = {c["variation"]: c["class"] for c in reports["tm"].data["classifications"]}
    assert classes == {"run_on_utm": "Type1"}
    rnn = {c["variation"]: c["class"] for c in reports["rnn"].data["classifications"]}
    assert rnn == {"pad_hidden_1": "Type1", "permute_201": "Type1"}


def test_feedback_theory_pre_falsifies_mod8(fixtures_dir):
    s = load_scenario(fixtures_dir / "mod8.scenario.json").with_overrides(theory="FeedbackSensitive")
    report = run_scenario(s)
    assert report.verdict is VerdictKind.PRE_FALSIFIED
    witness = report.data["verdict"]["witness"]
    assert witness["variation"] == "feedback_to_feedforward" and witness["class"] == "Type2"
    assert report.data["theory"]["stand_in"]
    jsonschema.validate(report.data, SCHEMA)


def test_reports_match_schema(reports):
    for report in reports.values():
        jsonschema.validate(report.data, SCHEMA)
        jsonschema.validate(json.loads(emit_report(report, "json")), SCHEMA)


def test_schema_rejects_malformed_reports(reports):
    data = copy.deepcopy(reports["mod8"].data)
    data["verdict"]["kind"] = "Maybe"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(data, SCHEMA)


def test_evidence_digests_reverify(fixtures_dir, reports):
    for name in SCENARIOS:
        scenario = load_scenario(fixtures_dir / f"{name}.scenario.json")
        experiment = build_experiment(scenario)
        report = reports[name].data
        by_system = {d["system"]: d for d in report["datasets"]}
        for c in report["classifications"]:
            o = experiment.obs(c["system"])
            assert c["evidence"]["dataset"] == o.digest == by_system[c["system"]]["digest"]
            assert c["evidence"]["inference_digest"] == o.inference.digest
            variant = next(v for v in scenario.variations if v.name == c["variation"])
            system = build_variation(variant)(experiment.systems[c["system"]])
            o2 = experiment.obs(f"{c['system']}|{variant.name}", system)
            assert c["evidence"]["variant_dataset"] == o2.digest


def test_emission_is_deterministic(fixtures_dir, reports):
    again = run_scenario(load_scenario(fixtures_dir / "mod8.scenario.json"))
    for fmt in ("json", "text"):
        assert emit_report(again, fmt) == emit_report(reports["mod8"], fmt)
    text = emit_report(reports["mod8"], "text").decode()
    assert "verdict                NotPreFalsified" in text
    assert "timing" not in reports["mod8"].data
    timed = run_scenario(load_scenario(fixtures_dir / "mod8.scenario.json"), include_timing=True)
    assert timed.data["timing"]["seconds"] >= 0


def test_load_report_round_trip(tmp_path, reports):
    path = tmp_path / "r.json"
    path.write_bytes(emit_report(reports["rnn"], "json"))
    back = load_report(path)
    assert emit_report(back, "json") == emit_report(reports["rnn"], "json")
    path.write_text(json.dumps({"schema_version": "0.9"}))
    with pytest.raises(ValidationError):
        load_report(path)


def test_only_variation_and_budget(fixtures_dir):
    s = load_scenario(fixtures_dir / "mod8.scenario.json")
    one = only_variation(s, "split_phase0")
    report = run_scenario(one)
    assert [c["variation"] for c in report.data["classifications"]] == ["split_phase0"]
    with pytest.raises(ValidationError):
        only_variation(s, "absent")
    with pytest.raises(BudgetExceeded):
        run_scenario(s, budget=1)

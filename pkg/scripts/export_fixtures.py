"""Write the shipped machine, network, Turing machine and scenario files into fixtures/."""

import argparse
import json
from pathlib import Path

import numpy as np

from substrate.machines import (
    LETTERS,
    MOD8_FEEDFORWARD_RELABEL,
    machine_to_dict,
    mod8_feedback,
    mod8_feedforward,
    mod_counter,
)
from substrate.rnn import Activation, random_rnn, rnn_to_dict
from substrate.turing import binary_increment, even_parity, tm_to_dict, unary_successor

ROOT = Path(__file__).resolve().parents[1]


def write(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT)}")


def car_words(*lengths):
    return [["car"] * n for n in lengths]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "fixtures")
    args = ap.parse_args(argv)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    write(out / "mod8_feedback.machine.json", machine_to_dict(mod8_feedback()))
    write(out / "mod8_feedforward.machine.json", machine_to_dict(mod8_feedforward()))
    write(out / "mod4_counter.machine.json", machine_to_dict(mod_counter(4)))

    letters = list(LETTERS[:8])
    write(out / "mod8.scenario.json", {
        "name": "mod8_tollbooth",
        "systems": [
            {"id": "mod8_feedback", "kind": "machine", "file": "mod8_feedback.machine.json"},
            {"id": "mod8_feedforward", "kind": "machine", "file": "mod8_feedforward.machine.json"},
        ],
        "battery": car_words(3, 12),
        "pred_theory": {
            "name": "Level1Functional",
            "parameters": {"assignment": {a: f"exp:{a}" for a in letters}},
        },
        "inf_rule": "report",
        "experience_space": [f"exp:{a}" for a in letters] + ["cyclic", "acyclic"],
        "variations": [
            {
                "name": "feedback_to_feedforward",
                "kind": "relabel",
                "parameters": {"mapping": MOD8_FEEDFORWARD_RELABEL},
                "systems": ["mod8_feedback"],
            },
            {
                "name": "split_phase0",
                "kind": "split",
                "parameters": {"state": "000", "redirected": [["100", "car"]]},
                "systems": ["mod8_feedback"],
            },
            {"name": "identity", "kind": "identity"},
        ],
    })

    net = random_rnn(np.random.default_rng(7), 2, 3, 2, Activation.TANH, name="tanh3")
    write(out / "rnn_tanh3.net.json", rnn_to_dict(net))
    write(out / "rnn.scenario.json", {
        "name": "rnn_substitution",
        "systems": [{"id": "tanh3", "kind": "rnn", "file": "rnn_tanh3.net.json"}],
        "battery": {"uniform": {"seed": 0, "trials": 50, "horizon": 20}},
        "seeds": {"battery": 0},
        "pred_theory": {"name": "Level1Functional", "parameters": {"tolerance": 1e-9}},
        "inf_rule": "report",
        "variations": [
            {"name": "pad_hidden_1", "kind": "pad_hidden", "parameters": {"extra": 1}},
            {"name": "permute_201", "kind": "permute_hidden", "parameters": {"perm": [2, 0, 1]}},
        ],
    })

    tms = {tm.name: tm for tm in (unary_successor(), binary_increment(), even_parity())}
    for name, tm in tms.items():
        write(out / f"{name}.tm.json", tm_to_dict(tm))
    write(out / "tm.scenario.json", {
        "name": "utm_substitution",
        "systems": [{"id": name, "kind": "tm", "file": f"{name}.tm.json"} for name in tms],
        "battery": [["1"] * n for n in range(5)],
        "pred_theory": {"name": "Level1Functional"},
        "inf_rule": "report",
        "budgets": {"fuel": 1000000},
        "variations": [{"name": "run_on_utm", "kind": "utm"}],
    })
    words = [[]] + [list(format(i, f"0{n}b")) for n in (1, 2, 3) for i in range(2**n)]
    write(out / "tm_binary.scenario.json", {
        "name": "utm_substitution_binary",
        "systems": [{"id": name, "kind": "tm", "file": f"{name}.tm.json"} for name in ("binary_increment", "even_parity")],
        "battery": words,
        "pred_theory": {"name": "Level1Functional"},
        "inf_rule": "report",
        "variations": [{"name": "run_on_utm", "kind": "utm"}],
    })


if __name__ == "__main__":
    main()

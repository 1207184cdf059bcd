"""Pad and permute random RNNs; report output drift and how two theories classify the change."""

import argparse
import json

import numpy as np

from substrate.framework import Battery, Experiment, classify_variation
from substrate.observation import make_observer
from substrate.rnn import Activation, pad_hidden, permute_hidden, random_battery, random_rnn, rnn_run_batch
from substrate.scenario import VariationSpec, build_variation
from substrate.theories import DimensionSensitive, Level1Functional, ReportRule


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--networks", type=int, default=6)
    ap.add_argument("--hidden", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'net':<4} {'act':<8} {'pad drift':>10} {'perm drift':>11}  Level1(pad/perm)      Dimension(pad)")
    for i in range(args.networks):
        rng = np.random.default_rng(args.seed + i)
        act = list(Activation)[i % 3]
        net = random_rnn(rng, 2, args.hidden, 2, act)
        perm = [int(v) for v in rng.permutation(args.hidden)]
        X = random_battery(net.input_dim, 50, 20, seed=args.seed + i)
        O = rnn_run_batch(net, X)[1]
        pad_drift = np.max(np.abs(O - rnn_run_batch(pad_hidden(net, 1)[0], X)[1]))
        perm_drift = np.max(np.abs(O - rnn_run_batch(permute_hidden(net, perm)[0], X)[1]))

        battery = Battery(seed=args.seed + i, trials=50, horizon=20)
        pad = build_variation(VariationSpec("pad", "pad_hidden", (("extra", "1"),)))
        shuffle = build_variation(VariationSpec("perm", "permute_hidden", (("perm", json.dumps(perm)),)))
        level1 = Experiment({"net": net}, battery, Level1Functional(), ReportRule(), make_observer())
        dims = Experiment({"net": net}, battery, DimensionSensitive(), ReportRule(), make_observer())
        l1 = f"{classify_variation(level1, 'net', pad).kind.value}/{classify_variation(level1, 'net', shuffle).kind.value}"
        dm = classify_variation(dims, "net", pad).kind.value
        print(f"{i:<4} {act.value:<8} {pad_drift:>10.1e} {perm_drift:>11.1e}  {l1:<21} {dm}")


if __name__ == "__main__":
    main()

"""Fit the basic model to samples drawn from a known basic model.

Prints held-out average log-likelihood of the fit and of the generating
model, plus the Pearson correlation of their predicted probabilities.
"""

import argparse

import numpy as np

from editoutcome import synthetic
from editoutcome.dataset import chronological_split
from editoutcome.evaluation import average_log_likelihood
from editoutcome.models import Predictor, scores, sigmoid
from editoutcome.training import TrainConfig, sgd_fit


def run(seed, n_users, n_items, n_obs, rate, epochs, lr):
    truth, data = synthetic.basic_model(n_users, n_items, n_obs, rate=rate, seed=seed)
    train, held = chronological_split(data, 0.9)
    pred = sgd_fit(train, TrainConfig(variant="basic", epochs=epochs, learning_rate=lr, seed=seed))
    oracle = Predictor(truth, data.users, data.items, float(np.mean(train.q)))
    p_true = sigmoid(scores(truth, held.u, held.i))
    p_fit = np.array([pred.predict(u, i) for u, i in zip(held.raw_users(), held.raw_items())])
    return {
        "seed": seed,
        "acceptance_rate": float(np.mean(data.q)),
        "ll_fit": average_log_likelihood(pred, held),
        "ll_true": average_log_likelihood(oracle, held),
        "pearson": float(np.corrcoef(p_true, p_fit)[0, 1]),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--users", type=int, default=50)
    ap.add_argument("--items", type=int, default=30)
    ap.add_argument("--obs", type=int, default=20000)
    ap.add_argument("--rate", type=float, default=0.72)
    ap.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    ap.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    args = ap.parse_args()

    print("seed\taccept\tll_fit\tll_true\tgap\tpearson")
    for seed in args.seeds:
        r = run(seed, args.users, args.items, args.obs, args.rate, args.epochs, args.lr)
        print(f"{seed}\t{r['acceptance_rate']:.3f}\t{r['ll_fit']:.4f}\t{r['ll_true']:.4f}\t"
              f"{r['ll_true'] - r['ll_fit']:.4f}\t{r['pearson']:.4f}")


if __name__ == "__main__":
    main()

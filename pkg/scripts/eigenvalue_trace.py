"""Per-epoch discriminant eigenvalues for two objectives.

Trains the same network once on the selected-smallest-eigenvalue loss and
once on the mean of all C-1 eigenvalues, and writes one CSV row per epoch
with the full-training-set eigenvalues of each, to see whether the mean
objective concentrates separation in a few directions.

    python3 scripts/eigenvalue_trace.py out.csv [--classes 5] [--epochs 60]
"""
import argparse
import csv

import numpy as np

from deeplda.classifier import evaluate
from deeplda.data import Standardizer, blob_splits
from deeplda.network import LayerSpec, init_model
from deeplda.optim import TrainConfig, train


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_csv")
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    c = args.classes

    train_ds, test_ds = blob_splits(300 * c, 100 * c, c, seed=args.seed)
    st = Standardizer.fit(train_ds.features)
    train_ds, test_ds = st.apply(train_ds), st.apply(test_ds)
    layers = [
        LayerSpec.dense(2, 64), LayerSpec.batchnorm(64), LayerSpec.relu(),
        LayerSpec.dense(64, 64), LayerSpec.batchnorm(64), LayerSpec.relu(),
        LayerSpec.dense(64, 2 * c),
    ]

    traces = {}
    for objective in ("deeplda", "deeplda_mean_diagnostic"):
        cfg = TrainConfig(epochs=args.epochs, batch_size=60 * c, objective=objective,
                          seed=args.seed, full_eigen_probe=True)
        model = init_model(layers, np.random.default_rng([args.seed, 1]))
        model, metrics = train(model, train_ds, cfg=cfg)
        traces[objective] = [r.full_eigenvalues for r in metrics.records]
        last = metrics[-1].full_eigenvalues
        print(f"{objective:24s} test acc {evaluate(model, metrics.projection, test_ds)[0]:.3f}  "
              f"final eigenvalues min {last.min():.3g} max {last.max():.3g}")

    with open(args.out_csv, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch"] + [f"{o}_v{i + 1}" for o in traces for i in range(c - 1)])
        for epoch in range(args.epochs):
            w.writerow([epoch + 1] + [repr(float(v)) for o in traces for v in traces[o][epoch]])
    print(f"wrote {args.out_csv}")


if __name__ == "__main__":
    main()

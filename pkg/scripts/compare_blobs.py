"""DeepLDA vs cross-entropy vs plain LDA on the warped blobs.

    python3 scripts/compare_blobs.py [--epochs 200] [--seeds 0 1 2]
"""
import argparse
import time

import numpy as np

from deeplda.classifier import evaluate, fit_projection_latent, predict_many
from deeplda.data import Standardizer, blob_splits
from deeplda.network import LayerSpec, init_model
from deeplda.objective import DeepLdaConfig
from deeplda.optim import TrainConfig, train


def hidden_net(d_out):
    return [
        LayerSpec.dense(2, 64), LayerSpec.batchnorm(64), LayerSpec.relu(),
        LayerSpec.dense(64, 64), LayerSpec.batchnorm(64), LayerSpec.relu(),
        LayerSpec.dense(64, d_out),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = parser.parse_args()

    train_ds, test_ds = blob_splits()
    st = Standardizer.fit(train_ds.features)
    train_ds, test_ds = st.apply(train_ds), st.apply(test_ds)

    # linear baseline: LDA straight on the inputs
    proj = fit_projection_latent(train_ds.features, train_ds.labels, 3, DeepLdaConfig())
    _, pred = predict_many(proj, test_ds.features)
    print(f"linear LDA on raw inputs: test acc {np.mean(pred == test_ds.labels):.3f}")

    runs = {
        "deeplda": (10, dict(objective="deeplda", batch_size=150)),
        "cce": (3, dict(objective="cce", batch_size=128)),
    }
    for seed in args.seeds:
        for name, (d_out, kw) in runs.items():
            cfg = TrainConfig(epochs=args.epochs, seed=seed, **kw)
            model = init_model(hidden_net(d_out), np.random.default_rng([seed, 1]))
            start = time.perf_counter()
            model, metrics = train(model, train_ds, cfg=cfg)
            acc, conf = evaluate(model, metrics.projection, test_ds)
            extra = ""
            if name == "deeplda":
                extra = (f", separation {metrics[0].mean_selected:.3g} -> "
                         f"{metrics[-1].mean_selected:.3g}")
            print(f"seed {seed} {name:8s} test acc {acc:.3f} ({time.perf_counter() - start:.1f}s){extra}")


if __name__ == "__main__":
    main()

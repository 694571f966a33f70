"""Command line entry point.

    deeplda train <config>
    deeplda eval <checkpoint> <dataset...>
    deeplda gradcheck [--seed N]
    deeplda project <checkpoint> <dataset...> <out.csv>
    deeplda synth <out_dir>

A dataset is one CSV file or an IDX image/label file pair. Exit codes:
0 success, 1 usage or configuration error, 2 data error, 3 numerical failure.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .classifier import evaluate, latent
from .config import load_config
from .data import Dataset, Standardizer, blob_splits, load_csv, load_idx, write_csv
from .errors import ConfigError, DataError, NumericalError
from .gradcheck import run_gradcheck
from .network import check_topology, default_layers, init_model
from .optim import train

OUTPUT_DIR_ENV = "DEEPLDA_OUTPUT_DIR"
GRADCHECK_TOL = 1e-4

log = logging.getLogger("deeplda")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_dataset(paths, fmt=None, csv_header=False, num_classes=None):
    """One path is a CSV file, two paths are IDX images + labels."""
    if fmt is None:
        fmt = "idx" if len(paths) == 2 else "csv"
    if fmt == "idx":
        if len(paths) != 2:
            raise UsageError("an IDX dataset needs an image file and a label file")
        return load_idx(paths[0], paths[1], num_classes)
    if len(paths) != 1:
        raise UsageError("a CSV dataset is a single file")
    return load_csv(paths[0], skip_header=csv_header, num_classes=num_classes)


def _concat(a, b):
    return Dataset(np.concatenate([a.features, b.features]), np.concatenate([a.labels, b.labels]),
                   max(a.num_classes, b.num_classes))


def prepare_data(cfg):
    """Load the train/validation/test splits a run config names."""
    if cfg.format == "blobs":
        train_ds, test_ds = blob_splits(cfg.blobs_train, cfg.blobs_test, cfg.blobs_classes, cfg.blobs_seed)
        val_ds = None
    else:
        def load(paths):
            return load_dataset(paths, cfg.format, cfg.csv_header) if paths else None

        train_ds, val_ds, test_ds = load(cfg.train), load(cfg.validation), load(cfg.test)
    splits = [s for s in (train_ds, val_ds, test_ds) if s is not None]
    num_classes = cfg.num_classes or max(s.num_classes for s in splits)
    train_ds, val_ds, test_ds = (s.with_num_classes(num_classes) if s is not None else None
                                 for s in (train_ds, val_ds, test_ds))
    if cfg.train_subset:
        train_ds = train_ds.subset(np.arange(min(cfg.train_subset, len(train_ds))))
    if cfg.merge_validation and val_ds is not None:
        train_ds, val_ds = _concat(train_ds, val_ds), None
    standardizer = None
    if cfg.standardize:
        standardizer = Standardizer.fit(train_ds.features)
        train_ds, val_ds, test_ds = (standardizer.apply(s) if s is not None else None
                                     for s in (train_ds, val_ds, test_ds))
    return train_ds, val_ds, test_ds, standardizer


def build_layers(cfg, d_in, num_classes):
    tcfg = cfg.train_cfg
    if cfg.layers:
        layers = cfg.layers
    else:
        d_out = num_classes if not tcfg.uses_lda else cfg.latent_dim
        layers = default_layers(d_in, d_out, cfg.hidden, cfg.dropout)
    d_out = check_topology(layers, d_in)
    if tcfg.uses_lda and d_out < num_classes - 1:
        raise ConfigError(f"latent dimension {d_out} is below C-1 = {num_classes - 1}")
    if not tcfg.uses_lda and d_out != num_classes:
        raise ConfigError(f"a cce network needs {num_classes} outputs, this one has {d_out}")
    return layers


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def metrics_header(num_classes, full_probe):
    eig = [f"v{i + 1}" for i in range(num_classes - 1)]
    cols = ["epoch", "lr", "loss", "train_acc", "val_acc", *eig, "k", "mean_selected"]
    if full_probe:
        cols += [f"full_v{i + 1}" for i in range(num_classes - 1)]
    return ",".join(cols)


def metrics_line(rec, num_classes, full_probe):
    def eig(values):
        if values is None:
            return [""] * (num_classes - 1)
        return [_fmt(v) for v in values]

    cols = [str(rec.epoch), _fmt(rec.lr), _fmt(rec.loss), _fmt(rec.train_acc), _fmt(rec.val_acc),
            *eig(rec.eigenvalues), _fmt(rec.selected_k), _fmt(rec.mean_selected)]
    if full_probe:
        cols += eig(rec.full_eigenvalues)
    return ",".join(cols)


def cmd_train(config_path, output_dir=None):
    cfg = load_config(config_path)
    out = output_dir or os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    tcfg = cfg.train_cfg

    train_ds, val_ds, test_ds, standardizer = prepare_data(cfg)
    c = train_ds.num_classes
    layers = build_layers(cfg, train_ds.dim, c)
    model = init_model(layers, np.random.default_rng([tcfg.seed, 1]))

    metrics_path = os.path.join(out, "metrics.csv")
    partial = metrics_path + ".partial"
    for stale in (metrics_path, os.path.join(out, "summary.json")):
        if os.path.exists(stale):
            os.remove(stale)
    with open(partial, "w") as f:
        f.write(metrics_header(c, tcfg.full_eigen_probe) + "\n")

        def on_epoch(rec):
            f.write(metrics_line(rec, c, tcfg.full_eigen_probe) + "\n")
            f.flush()

        model, metrics = train(model, train_ds, val_ds, tcfg, on_epoch=on_epoch)
    os.replace(partial, metrics_path)

    meta = {"objective": tcfg.objective, "num_classes": c, "epochs": tcfg.epochs, "seed": tcfg.seed}
    final = Checkpoint(model, metrics.projection, standardizer, dict(meta, kind="final"))
    save_checkpoint(os.path.join(out, "final.dlda"), final)
    chosen = final
    if metrics.best_model is not None:
        best = Checkpoint(metrics.best_model, metrics.best_projection, standardizer,
                          dict(meta, kind="best", epoch=metrics.best_epoch))
        save_checkpoint(os.path.join(out, "best.dlda"), best)
        if cfg.keep_best:
            chosen = best

    summary = {"epochs_run": len(metrics), "num_classes": c, "objective": tcfg.objective,
               "reported_checkpoint": chosen.meta["kind"], "best_epoch": metrics.best_epoch}
    if len(metrics):
        summary["final_train_acc"] = metrics[-1].train_acc
        summary["final_val_acc"] = metrics[-1].val_acc
    if test_ds is not None:
        summary["test_acc"] = evaluate(chosen.model, chosen.projection, test_ds)[0]
    with open(os.path.join(out, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    for key in sorted(summary):
        print(f"{key}: {summary[key]}")
    return 0


def _checkpoint_data(ckpt_path, paths, fmt, csv_header):
    ckpt = load_checkpoint(ckpt_path)
    num_classes = ckpt.meta.get("num_classes")
    ds = load_dataset(paths, fmt, csv_header, num_classes)
    if ckpt.standardizer is not None:
        ds = ckpt.standardizer.apply(ds)
    return ckpt, ds


def cmd_eval(ckpt_path, paths, fmt=None, csv_header=False):
    ckpt, ds = _checkpoint_data(ckpt_path, paths, fmt, csv_header)
    acc, conf = evaluate(ckpt.model, ckpt.projection, ds)
    print(f"accuracy: {acc!r}")
    print(f"samples: {len(ds)}")
    print("confusion (rows: true class, columns: predicted):")
    for row in conf:
        print(" ".join(f"{v:6d}" for v in row))
    return 0


def cmd_project(ckpt_path, paths, out_csv, fmt=None, csv_header=False):
    ckpt, ds = _checkpoint_data(ckpt_path, paths, fmt, csv_header)
    if ckpt.projection is None:
        raise DataError(f"{ckpt_path} has no LDA projection (trained with cce?)")
    z = ckpt.projection.project(latent(ckpt.model, ds.features))
    with open(out_csv, "w") as f:
        f.write(",".join([f"z{i + 1}" for i in range(z.shape[1])] + ["label"]) + "\n")
        for row, label in zip(z, ds.labels):
            f.write(",".join([repr(float(v)) for v in row] + [str(int(label))]) + "\n")
    print(f"wrote {len(ds)} rows of {z.shape[1]} projected dimensions to {out_csv}")
    return 0


def cmd_gradcheck(seed=0, instances=20, tol=GRADCHECK_TOL):
    report = run_gradcheck(seed=seed, instances=instances)
    for n, d, c, k, err in report.errors:
        print(f"N={n:3d} d={d} C={c} k={k} rel_err={err:.3e}")
    print(f"checked {report.checked} instances, skipped {report.skipped} near-multiplicity instances")
    print(f"max rel err {report.max_rel_err:.3e} (tolerance {tol:.0e})")
    if not report.passed(tol):
        print("gradcheck FAILED", file=sys.stderr)
        return 3
    return 0


def cmd_synth(out_dir, seed=0, n_train=1500, n_test=500, num_classes=3):
    os.makedirs(out_dir, exist_ok=True)
    train_ds, test_ds = blob_splits(n_train, n_test, num_classes, seed)
    write_csv(os.path.join(out_dir, "blobs_train.csv"), train_ds)
    write_csv(os.path.join(out_dir, "blobs_test.csv"), test_ds)
    print(f"wrote blobs_train.csv ({n_train}) and blobs_test.csv ({n_test}) to {out_dir}")
    return 0


def build_parser():
    parser = _Parser(prog="deeplda", description="Train and evaluate DeepLDA networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a network from a config file")
    p.add_argument("config")
    p.add_argument("--output-dir", help=f"overrides the config and ${OUTPUT_DIR_ENV}")

    for name, extra in (("eval", False), ("project", True)):
        p = sub.add_parser(name, help="evaluate a checkpoint" if not extra
                           else "write projected latents as CSV")
        p.add_argument("checkpoint")
        p.add_argument("paths", nargs="+", metavar="dataset" if not extra else "dataset... out.csv")
        p.add_argument("--format", choices=("csv", "idx"))
        p.add_argument("--csv-header", action="store_true", help="skip one header line")

    p = sub.add_parser("gradcheck", help="finite-difference check of the DeepLDA gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)

    p = sub.add_parser("synth", help="write the bundled warped-blob dataset as CSV")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=1500)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--classes", type=int, default=3)
    return parser


def _dispatch(args):
    if args.command == "train":
        return cmd_train(args.config, args.output_dir)
    if args.command == "eval":
        return cmd_eval(args.checkpoint, args.paths, args.format, args.csv_header)
    if args.command == "project":
        if len(args.paths) < 2:
            raise UsageError("project needs a dataset and an output CSV path")
        return cmd_project(args.checkpoint, args.paths[:-1], args.paths[-1], args.format, args.csv_header)
    if args.command == "gradcheck":
        return cmd_gradcheck(args.seed, args.instances)
    return cmd_synth(args.out_dir, args.seed, args.n_train, args.n_test, args.classes)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (UsageError, ConfigError) as exc:
        print(f"deeplda: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"deeplda: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"deeplda: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

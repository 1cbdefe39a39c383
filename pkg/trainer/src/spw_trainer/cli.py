"""Command line trainer.

Produces the full artifact set the lab consumes: model.spww plus an IDX
fixture pair with its JSON manifest. Golden predictions always come from
re-parsing the exported container, so the manifest certifies the bytes on
disk rather than the tensors in memory.
"""

import argparse
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import export, fpeval, synth, training
from .quantize import quantize_model

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="spw-train",
        description="Train the digit classifier and export lab artifacts.")
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-count", type=int, default=24000,
                   help="synthetic training corpus size")
    p.add_argument("--test-count", type=int, default=6000,
                   help="synthetic held-out corpus size")
    p.add_argument("--fixture-count", type=int, default=1000,
                   help="fixture size, drawn class-balanced from the test set")
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight-dropout", type=float, default=0.25,
                   help="per-weight drop probability during training")
    p.add_argument("--min-accuracy", type=float, default=0.985,
                   help="float test accuracy the run must reach")
    p.add_argument("--mnist-dir", default=None,
                   help="directory holding MNIST IDX files; when absent a "
                        "synthetic font-rendered corpus is generated")
    return p


def _load_mnist(path, split, count):
    images_name, labels_name = MNIST_FILES[split]
    images = export.read_idx_images(Path(path) / images_name)
    labels = export.read_idx_labels(Path(path) / labels_name)
    return images[:count], labels[:count]


def _load_data(args, log):
    if args.mnist_dir:
        log(f"loading MNIST from {args.mnist_dir}")
        train = _load_mnist(args.mnist_dir, "train", args.train_count)
        test = _load_mnist(args.mnist_dir, "test", args.test_count)
        return train, test, "mnist"
    t0 = time.monotonic()
    bank = synth.GlyphBank()
    log(f"rendering synthetic corpus from {len(bank)} fonts")
    train = synth.make_corpus(args.train_count, [args.seed, 0], bank)
    test = synth.make_corpus(args.test_count, [args.seed, 1], bank)
    log(f"corpus ready in {time.monotonic() - t0:.1f}s")
    return train, test, "synthetic-fonts"


def _fixture_indices(labels, per_class):
    """First per_class occurrences of every class, in corpus order."""
    counts = np.zeros(10, np.int64)
    picked = []
    for i, lab in enumerate(np.asarray(labels)):
        if counts[lab] < per_class:
            counts[lab] += 1
            picked.append(i)
    if len(picked) != per_class * 10:
        short = ", ".join(str(d) for d in range(10) if counts[d] < per_class)
        raise ValueError(f"test corpus too small for classes {short}")
    return np.asarray(picked)


def _run_validator(model_path, log):
    tool = shutil.which("spw-faultlab")
    if tool is None:
        log("spw-faultlab not on PATH, skipping container validation")
        return True
    proc = subprocess.run([tool, "validate-model", str(model_path)],
                          capture_output=True, text=True)
    for line in (proc.stdout + proc.stderr).strip().splitlines():
        log(f"validate-model: {line}")
    return proc.returncode == 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.fixture_count % 10:
        print("--fixture-count must be a multiple of 10", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log = print

    (train_images, train_labels), (test_images, test_labels), source = \
        _load_data(args, log)

    model = training.train(
        train_images, train_labels, epochs=args.epochs, seed=args.seed,
        batch_size=args.batch_size, lr=args.lr,
        weight_dropout=args.weight_dropout, log=log)
    float_test = training.float_accuracy(model, test_images, test_labels)
    log(f"float test accuracy {float_test:.4f} on {len(test_labels)} images")

    layers = quantize_model(model)
    model_path = out / "model.spww"
    export.write_model(layers, model_path)
    parsed = export.read_model(model_path)
    for (name, w, b), (pname, pw, pb) in zip(layers, parsed):
        if not (np.array_equal(w, pw) and np.array_equal(b, pb)):
            raise RuntimeError(f"round trip mismatch in layer {name}")
    log(f"wrote {model_path} ({model_path.stat().st_size} bytes)")

    idx = _fixture_indices(test_labels, args.fixture_count // 10)
    fix_images = test_images[idx]
    fix_labels = test_labels[idx]
    golden = fpeval.predict(parsed, fix_images)
    fixture_q = float(np.mean(golden == fix_labels))
    fixture_f = training.float_accuracy(model, fix_images, fix_labels)
    log(f"fixture: quantized {fixture_q:.4f}, float {fixture_f:.4f}")
    if abs(fixture_q - fixture_f) > 0.005:
        log("warning: quantized fixture accuracy drifts >0.5pp from float")

    export.write_idx_images(fix_images, out / "images.idx3-ubyte")
    export.write_idx_labels(fix_labels, out / "labels.idx1-ubyte")
    export.write_manifest(
        out / "manifest.json", fix_labels, golden, fixture_f,
        extras={
            "float_test_accuracy": float_test,
            "quantized_fixture_accuracy": fixture_q,
            "source": source,
            "seed": args.seed,
            "epochs": args.epochs,
            "weight_dropout": args.weight_dropout,
        })
    log(f"wrote fixture set under {out}")

    ok = _run_validator(model_path, log)
    if not ok:
        print("exported container failed validation", file=sys.stderr)
        return 1
    if float_test < args.min_accuracy:
        print(f"float test accuracy {float_test:.4f} below required "
              f"{args.min_accuracy}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

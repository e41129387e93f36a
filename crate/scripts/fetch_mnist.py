#!/usr/bin/env python3
"""Fetch MNIST digits as gzip-compressed IDX files.

Two sources are supported:

  official  the four original IDX archives, downloaded from a mirror URL
  npm       the 10,000-digit subset bundled with the `mnist` npm package
            (MIT licensed), converted to IDX. Useful when only a package
            registry is reachable.

The npm subset stores pixels as floats rounded to three decimals; they are
mapped back to bytes with round(v * 255). Digits are interleaved by class
so that any prefix of the file is roughly balanced.

Usage:
  scripts/fetch_mnist.py --source npm --out data/mnist
  scripts/fetch_mnist.py --source official --out data/mnist-official \
      --mirror https://ossci-datasets.s3.amazonaws.com/mnist
"""

import argparse
import gzip
import json
import os
import struct
import subprocess
import tarfile
import tempfile
import urllib.request

OFFICIAL_FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]


def write_idx(out_dir, prefix, images, labels):
    n = len(images)
    img_path = os.path.join(out_dir, f"{prefix}-images-idx3-ubyte.gz")
    lbl_path = os.path.join(out_dir, f"{prefix}-labels-idx1-ubyte.gz")
    # mtime=0 keeps the archives byte-reproducible
    with open(img_path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(lbl_path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(labels))
    print(f"wrote {n} digits to {img_path} / {lbl_path}")


def from_npm(out_dir, package_dir=None):
    tmp = None
    if package_dir is None:
        tmp = tempfile.TemporaryDirectory()
        subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp.name, check=True)
        with tarfile.open(os.path.join(tmp.name, "mnist-1.1.0.tgz")) as tar:
            tar.extractall(tmp.name)
        package_dir = os.path.join(tmp.name, "package")
    per_class = []
    for digit in range(10):
        with open(os.path.join(package_dir, "src", "digits", f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        imgs = [
            [min(255, max(0, round(v * 255))) for v in flat[i : i + 784]]
            for i in range(0, len(flat), 784)
        ]
        per_class.append(imgs)
    images, labels = [], []
    longest = max(len(c) for c in per_class)
    for i in range(longest):
        for digit, imgs in enumerate(per_class):
            if i < len(imgs):
                images.append(imgs[i])
                labels.append(digit)
    write_idx(out_dir, "train", images, labels)
    if tmp is not None:
        tmp.cleanup()


def from_official(out_dir, mirror):
    for name in OFFICIAL_FILES:
        dest = os.path.join(out_dir, name)
        if os.path.exists(dest):
            continue
        url = f"{mirror.rstrip('/')}/{name}"
        print(f"fetching {url}")
        urllib.request.urlretrieve(url, dest)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--source", choices=["npm", "official"], default="npm")
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--mirror", default="https://ossci-datasets.s3.amazonaws.com/mnist")
    ap.add_argument("--package-dir", help="already-extracted npm package directory")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    if args.source == "npm":
        from_npm(args.out, args.package_dir)
    else:
        from_official(args.out, args.mirror)


if __name__ == "__main__":
    main()

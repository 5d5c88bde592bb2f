#!/usr/bin/env python3
"""Write a 5000-digit MNIST sample as IDX files.

The sample ships inside the mlxtend wheel (mlxtend/data/data/mnist_5k.csv.gz:
784 pixel columns followed by the label, 500 digits per class).

usage: fetch_mnist5k.py OUT_DIR [--wheel PATH]
"""
import argparse
import glob
import gzip
import io
import os
import struct
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def find_wheel(path):
    if path:
        return path
    tmp = tempfile.mkdtemp()
    subprocess.run([sys.executable, "-m", "pip", "download", "mlxtend==0.24.0",
                    "--no-deps", "-q", "-d", tmp], check=True)
    return glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--wheel")
    args = ap.parse_args()

    with zipfile.ZipFile(find_wheel(args.wheel)) as wheel:
        text = gzip.decompress(wheel.read(MEMBER)).decode()

    pixels = bytearray()
    labels = bytearray()
    for line in io.StringIO(text):
        cells = line.strip().split(",")
        if len(cells) != 785:
            continue
        pixels.extend(int(float(c)) for c in cells[:784])
        labels.append(int(float(cells[784])))

    os.makedirs(args.out_dir, exist_ok=True)
    n = len(labels)
    with open(os.path.join(args.out_dir, "images.idx"), "wb") as f:
        f.write(struct.pack(">IIII", 2051, n, 28, 28))
        f.write(pixels)
    with open(os.path.join(args.out_dir, "labels.idx"), "wb") as f:
        f.write(struct.pack(">II", 2049, n))
        f.write(labels)
    print(f"wrote {n} digits to {args.out_dir}")


if __name__ == "__main__":
    main()

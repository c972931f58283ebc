#!/usr/bin/env python3
"""Write the 5,000-digit MNIST subset bundled with mlxtend as an IDX pair.

The mlxtend wheel ships mnist_5k.csv.gz (500 training digits per class, raw
0-255 pixels, label in the last column). Usage:

    pip download --no-deps mlxtend==0.24.0 -d /tmp/wheel
    python3 tools/make_mnist_subset.py /tmp/wheel/mlxtend-0.24.0-py3-none-any.whl data/
"""
import gzip
import struct
import sys
import zipfile
from pathlib import Path


def main() -> None:
    wheel, out = Path(sys.argv[1]), Path(sys.argv[2])
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    rows = [list(map(int, line.split(","))) for line in raw.strip().split("\n")]
    assert all(len(r) == 785 for r in rows)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "mnist5k-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(rows), 28, 28))
        f.write(bytes(p for r in rows for p in r[:784]))
    with open(out / "mnist5k-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(rows)))
        f.write(bytes(r[784] for r in rows))


if __name__ == "__main__":
    main()

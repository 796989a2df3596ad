#!/usr/bin/env python3
"""Regenerate data/digits/ from scikit-learn's bundled handwritten digits corpus.

Writes the 1797 scanned 8x8 digit images as a standard IDX image/label file
pair (the same container format the MNIST distribution uses). Pixel values
0..16 are rescaled to 0..255. Output is deterministic; the files are committed
so the test suite does not depend on Python being installed.

Usage: python3 tools/make_digits_fixture.py [outdir]
"""

import struct
import sys
from pathlib import Path

from sklearn.datasets import load_digits


def write_idx_images(path: Path, images) -> None:
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, h, w))
        f.write(images.tobytes())


def write_idx_labels(path: Path, labels) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/digits")
    outdir.mkdir(parents=True, exist_ok=True)

    bunch = load_digits()
    images = ((bunch.images * 255.0) / 16.0).round().astype("uint8")
    labels = bunch.target.astype("uint8")

    write_idx_images(outdir / "digits-images-idx3-ubyte", images)
    write_idx_labels(outdir / "digits-labels-idx1-ubyte", labels)
    print(f"wrote {len(labels)} images to {outdir}")


if __name__ == "__main__":
    main()

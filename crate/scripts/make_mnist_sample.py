"""Build the bundled MNIST sample in IDX format.

Source: the `mnist` npm package (MIT, 10,000 MNIST digits stored as
784-float JSON rows). Usage:

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_sample.py package/src/digits crates/core/data/mnist-sample

Writes a class-balanced split: the first TRAIN_PER_CLASS digits of every
class go to the dictionary pool, the next TEST_PER_CLASS to the test pool.
Pixels are re-quantized to bytes with round(255 * v).
"""

import json
import struct
import sys
from pathlib import Path

TRAIN_PER_CLASS = 150
TEST_PER_CLASS = 50


def write_idx(prefix, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main(src, dst):
    src, dst = Path(src), Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    train, test = ([], []), ([], [])
    for digit in range(10):
        flat = json.loads((src / f"{digit}.json").read_text())["data"]
        rows = [flat[k : k + 784] for k in range(0, len(flat), 784)]
        for k, row in enumerate(rows[: TRAIN_PER_CLASS + TEST_PER_CLASS]):
            pixels = [min(255, max(0, round(255 * v))) for v in row]
            split = train if k < TRAIN_PER_CLASS else test
            split[0].append(pixels)
            split[1].append(digit)
    write_idx(dst / "train", *train)
    write_idx(dst / "t10k", *test)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])

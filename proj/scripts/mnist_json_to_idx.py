#!/usr/bin/env python3
"""Convert the digit JSON files from the npm 'mnist' package into IDX files.

The package ships ~1000 images per digit class as flat arrays of pixel
intensities normalized to [0,1] with three decimals. Values are x/255
rounded, so round(v*255) recovers the original byte exactly.

Usage: mnist_json_to_idx.py <digits_dir> <out_dir>

Writes <out_dir>/train-images-idx3-ubyte and <out_dir>/train-labels-idx1-ubyte
(big-endian IDX, magic 0x00000803 / 0x00000801).
"""
import json
import os
import struct
import sys


def main():
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    digits_dir, out_dir = sys.argv[1], sys.argv[2]
    os.makedirs(out_dir, exist_ok=True)

    images = bytearray()
    labels = bytearray()
    n = 0
    for digit in range(10):
        with open(os.path.join(digits_dir, f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        if len(flat) % 784 != 0:
            raise ValueError(f"digit {digit}: length {len(flat)} not a multiple of 784")
        count = len(flat) // 784
        images.extend(round(v * 255) for v in flat)
        labels.extend([digit] * count)
        n += count
        print(f"digit {digit}: {count} images")

    with open(os.path.join(out_dir, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">iiii", 0x00000803, n, 28, 28))
        f.write(bytes(images))
    with open(os.path.join(out_dir, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">ii", 0x00000801, n))
        f.write(bytes(labels))
    print(f"wrote {n} images to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

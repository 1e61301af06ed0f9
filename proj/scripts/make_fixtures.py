#!/usr/bin/env python3
"""Regenerate the committed test fixtures: tests/fixtures/tiny_cnn.json and
tests/fixtures/sample.png.

The model file doubles as a worked example of the micam-model exchange
format: a JSON operator graph with base64-encoded little-endian float32
weight tensors. Conv weights are laid out [out][in/groups][kh][kw] and dense
weights [out][in], both row-major.
"""

import base64
import json
import pathlib

import numpy as np
from PIL import Image

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"


def b64(tensor: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(tensor, dtype="<f4").tobytes()).decode()


def tiny_cnn() -> dict:
    rng = np.random.default_rng(42)

    conv1_w = np.zeros((4, 3, 3, 3), dtype=np.float32)
    conv1_w[0, 0, 1, 1] = 1.0                      # channel 0: red center tap
    conv1_w[1, 1] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]  # channel 1: green edges
    conv1_w[2, :, :, :] = 1.0 / 27.0               # channel 2: box blur
    conv1_w[3, 2, 1, 1] = -1.0                     # channel 3: inverted blue tap
    conv1_b = np.array([0.0, 0.0, 0.0, 0.5], dtype=np.float32)

    conv2_w = rng.uniform(-0.5, 0.5, size=(6, 4, 3, 3)).astype(np.float32)
    conv2_b = np.full(6, 0.05, dtype=np.float32)

    fc_w = rng.uniform(-1.0, 1.0, size=(3, 6)).astype(np.float32)
    fc_b = np.array([0.1, -0.05, 0.02], dtype=np.float32)

    return {
        "format": "micam-model",
        "version": 1,
        "name": "tiny_cnn",
        "input": {
            "height": 16,
            "width": 16,
            "channels": 3,
            "mean": [0.0, 0.0, 0.0],
            "std": [1.0, 1.0, 1.0],
        },
        "classes": 3,
        "output": "logits",
        "layers": [
            {
                "name": "conv1",
                "type": "conv2d",
                "in_channels": 3,
                "out_channels": 4,
                "kernel": [3, 3],
                "stride": [1, 1],
                "padding": [1, 1],
                "activation": "relu",
                "weights": b64(conv1_w),
                "bias": b64(conv1_b),
            },
            {"name": "pool1", "type": "max_pool", "kernel": 2, "stride": 2},
            {
                "name": "conv2",
                "type": "conv2d",
                "in_channels": 4,
                "out_channels": 6,
                "kernel": [3, 3],
                "stride": [1, 1],
                "padding": [1, 1],
                "activation": "relu",
                "weights": b64(conv2_w),
                "bias": b64(conv2_b),
            },
            {"name": "gap", "type": "global_avg_pool"},
            {
                "name": "fc",
                "type": "dense",
                "in": 6,
                "out": 3,
                "weights": b64(fc_w),
                "bias": b64(fc_b),
            },
        ],
    }


def sample_image() -> np.ndarray:
    rng = np.random.default_rng(7)
    img = np.zeros((32, 32, 3), dtype=np.float64)
    img[:, :, 2] = np.linspace(30, 120, 32)[None, :]          # horizontal blue ramp
    yy, xx = np.mgrid[0:32, 0:32]
    disk = (yy - 11) ** 2 + (xx - 13) ** 2 <= 49
    img[disk, 0] = 220                                        # bright red disk
    img[disk, 1] = 160
    img += rng.uniform(0, 25, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "tiny_cnn.json").write_text(json.dumps(tiny_cnn(), indent=2) + "\n")
    Image.fromarray(sample_image(), mode="RGB").save(FIXTURES / "sample.png")
    print(f"wrote {FIXTURES / 'tiny_cnn.json'}")
    print(f"wrote {FIXTURES / 'sample.png'}")


if __name__ == "__main__":
    main()

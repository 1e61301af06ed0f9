#!/usr/bin/env python3
"""Run the full explanation + evaluation pipeline on a folder of images.

Drives the `micam` CLI: writes per-image overlays, saliency matrices and
weight vectors, then the quantitative summary (average drop / increase,
deletion and insertion AUC, and localization metrics when an annotation
file is given). Results at full benchmark scale require the corresponding
dataset; this script reports the same quantities on whatever folder you
point it at.

Example:
    python3 scripts/run_pipeline.py \
        --micam-bin build/tools/micam \
        --model tests/fixtures/tiny_cnn.json \
        --images my_images/ --out results/
"""

import argparse
import json
import pathlib
import shutil
import subprocess
import sys

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


def find_binary(explicit: str | None) -> str:
    if explicit:
        return explicit
    for candidate in ("build/tools/micam", "micam"):
        path = shutil.which(candidate) or (candidate if pathlib.Path(candidate).exists() else None)
        if path:
            return path
    sys.exit("error: micam binary not found; build it or pass --micam-bin")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--micam-bin", help="path to the micam CLI binary")
    parser.add_argument("--model", required=True, help="model file (micam-model JSON)")
    parser.add_argument("--images", required=True, help="folder of PNG/JPEG images")
    parser.add_argument("--out", default="pipeline_out", help="output directory")
    parser.add_argument("--method", default="mi-cam",
                        choices=["mi-cam", "score-cam", "eigen-cam"])
    parser.add_argument("--layer", default="", help="capture layer (default: last conv)")
    parser.add_argument("--bins", type=int, default=256)
    parser.add_argument("--annotations", default="",
                        help="bounding-box JSON enabling pointing game and EBPG")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    binary = find_binary(args.micam_bin)
    images = sorted(p for p in pathlib.Path(args.images).iterdir()
                    if p.suffix.lower() in IMAGE_SUFFIXES)
    if not images:
        sys.exit(f"error: no images found in {args.images}")

    out = pathlib.Path(args.out)
    common = ["-m", args.model, "--bins", str(args.bins), "--workers", str(args.workers)]
    if args.layer:
        common += ["--layer", args.layer]
    inputs: list[str] = []
    for image in images:
        inputs += ["-i", str(image)]

    print(f"explaining {len(images)} image(s) with {args.method} ...")
    subprocess.run([binary, "explain", *common, *inputs, "--method", args.method,
                    "-o", str(out / "explanations")], check=True)

    print("evaluating ...")
    evaluate = [binary, "evaluate", *common, *inputs, "--method", args.method,
                "-o", str(out / "evaluation")]
    if args.annotations:
        evaluate += ["--annotations", args.annotations]
    subprocess.run(evaluate, check=True)

    summary = json.loads((out / "evaluation" / "summary.json").read_text())
    print(json.dumps(summary, indent=2))
    print(f"\noverlays and CSVs in {out / 'explanations'}; per-image metrics in "
          f"{out / 'evaluation' / 'evaluation.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

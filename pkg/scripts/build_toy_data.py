#!/usr/bin/env python3
"""Regenerate the bundled toy dataset under data/toy (deterministic, seed 7)."""

from pathlib import Path

from ppikg.synthetic import build_toy_data

if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "data" / "toy"
    paths = build_toy_data(out, seed=7)
    for name, path in sorted(paths.items()):
        print(f"{name:20s} {path}")

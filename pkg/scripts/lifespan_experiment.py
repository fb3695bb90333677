#!/usr/bin/env python3
"""Rotation sweep of the proxy lifespan for a fixed compression pulse.

Runs the nonlinear solver over eps in {inf, 1, 0.5, 0.25, 0.1} at sound
speed 10 (so c*eps >= 1 along the sweep) with a fixed gradient-blow-up
threshold, and writes the (eps, T*) table together with the predicted
lower-bound scaling for a chosen exponent q.

At 64^3 this takes on the order of twenty minutes; pass a smaller n for
a quick look.
"""
import json
import sys
import tempfile
from pathlib import Path

from rotcomp import cli


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 64
    out = sys.argv[2] if len(sys.argv) > 2 else "lifespan.csv"
    config = {
        "n": n, "box_len": 7.0, "c": 10.0, "alpha": 0.5,
        "amplitude": 6.0, "width": 0.9,
        "t_end": 4.5, "sample_every": 4,
        "eps_list": ["inf", 1.0, 0.5, 0.25, 0.1],
        "q": 3.0,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        cfg_path = fh.name
    code = cli.main(["lifespan-sweep", "--config", cfg_path, "--out", out])
    Path(cfg_path).unlink()
    print(f"wrote {out} (exit {code})")
    return code


if __name__ == "__main__":
    raise SystemExit(main())

#!/usr/bin/env python3
"""Run the three headline decay-rate cells and write decay.csv.

The cells measure the sup-norm decay of the inertial branch with shell
localization only (optimal 1/t rate), the inertial branch with full
anisotropic localization, and the acoustic branch with horizontal
localization (both in the t^{-3/2} regime).
"""
import json
import sys
import tempfile
from pathlib import Path

from rotcomp import cli

CONFIG = {
    "cells": [
        {
            "name": "omega_shell_only",
            "n": 128, "box_len": 210.0, "c": 1.0, "eps": 1.0,
            "branch": "omega", "loc": {"k": 0},
            "data": {"kind": "pole_gaussian", "sigma": 0.30, "pole": 1.0},
            "times": {"min": 6.0, "max": 100.0, "num": 16},
            "fit_window": [10.0, 100.0],
        },
        {
            "name": "omega_anisotropic",
            "n": 128, "box_len": 120.0, "c": 1.0, "eps": 1.0,
            "branch": "omega", "loc": {"k": 0, "p": 0, "q": 0},
            "data": {"kind": "ones"},
            "times": {"min": 8.0, "max": 60.0, "num": 14},
            "fit_window": [10.0, 60.0],
        },
        {
            "name": "sigma_horizontal",
            "n": 128, "box_len": 93.0, "c": 1.0, "eps": 1.0,
            "branch": "sigma", "loc": {"k": 0, "p": -1},
            "data": {"kind": "ones"},
            "times": {"min": 6.4, "max": 45.0, "num": 14},
            "fit_window": [8.0, 45.0],
        },
    ]
}


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "decay.csv"
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        cfg_path = fh.name
    code = cli.main(["decay", "--config", cfg_path, "--out", out])
    Path(cfg_path).unlink()
    print(f"wrote {out} (exit {code})")
    return code


if __name__ == "__main__":
    raise SystemExit(main())

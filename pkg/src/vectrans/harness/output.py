"""CSV and VTK emission for harness runs.

CSV files start with ``# key=value`` metadata lines followed by a header row.
Floating-point values are written with 17 significant digits so reruns are
bit-comparable. Wall-clock timings go to a separate ``.timing.txt`` file.
"""

import os
import subprocess

import numpy as np

_ROOT = os.path.dirname(os.path.abspath(__file__))


def git_revision():
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], cwd=_ROOT, capture_output=True,
                             text=True, timeout=5, check=True)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def fmt(value):
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, columns, rows, metadata=None):
    with open(path, "w") as fh:
        for k, v in (metadata or {}).items():
            fh.write(f"# {k}={fmt(v)}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path):
    """(metadata dict, column names, rows of strings)."""
    meta, rows, cols = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif cols is None:
                cols = line.split(",")
            elif line:
                rows.append(line.split(","))
    return meta, cols, rows


def write_timing(path, seconds):
    with open(path, "w") as fh:
        fh.write(f"runtime_seconds={seconds:.3f}\n")

"""CSV trajectories and JSON summaries, written atomically.

Numbers are printed with 17 significant digits, which is enough for every
double to survive a write/read round trip unchanged.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import Rep
from .integrate import Trajectory

FLOAT_FMT = "%.17g"


def csv_header(n: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"q{i}_{a}" for a in "xyz"]
        cols += [f"w{i}_{a}" for a in "xyz"]
    return cols + ["energy", "max_norm_err", "max_tan_err"]


def trajectory_table(traj: Trajectory) -> np.ndarray:
    samples, n, _ = traj.q.shape
    links = np.concatenate([traj.q, traj.v], axis=2).reshape(samples, 6 * n)
    return np.column_stack([traj.t, links, traj.energy, traj.norm_error, traj.tangency_error])


def _atomic_write(path, write) -> Path:
    """Call ``write(fh)`` on a temp file next to ``path``, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_table(path, header, rows) -> Path:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return _atomic_write(
        path, lambda fh: np.savetxt(fh, rows, fmt=FLOAT_FMT, delimiter=",", header=",".join(header), comments="")
    )


def write_trajectory(path, traj: Trajectory) -> Path:
    return write_table(path, csv_header(traj.q.shape[1]), trajectory_table(traj))


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, rows


def read_trajectory(path, rep: Rep) -> Trajectory:
    header, rows = read_table(path)
    n = (len(header) - 4) // 6
    if len(header) != 6 * n + 4 or header != csv_header(n):
        raise ValueError(f"{path}: unexpected trajectory header")
    links = rows[:, 1 : 1 + 6 * n].reshape(len(rows), n, 6)
    return Trajectory(
        rep,
        rows[:, 0].copy(),
        links[:, :, :3].copy(),
        links[:, :, 3:].copy(),
        rows[:, -3].copy(),
        rows[:, -2].copy(),
        rows[:, -1].copy(),
    )


def write_json(path, payload: dict) -> Path:
    return _atomic_write(path, lambda fh: (json.dump(payload, fh, indent=2, sort_keys=True), fh.write("\n")))

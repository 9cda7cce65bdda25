"""Deterministic file emission: CSV tables and binary graymap heatmaps.

Writers only read the frames they are given; they never modify them.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .currents import CombinedFrame
from .experiments import ScreenRecord
from .physics import GridSpec, ParameterError
from .trajectories import TrajectorySet

FIELD_HEADER = "t_index,x_index,t,x,P_tot,J_tot,v_tot"
TRAJ_HEADER = "path,source_slit,t_index,t,x"
SCREEN_HEADER = "orientation,position,index,coordinate,accumulated,reference"


def fmt(value: float) -> str:
    """17 significant digits, enough to re-read every double bit-exactly."""
    return format(float(value), ".17g")


def _write_lines(path: str | os.PathLike, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    return path


def write_field_csv(frames: Sequence[CombinedFrame], grid: GridSpec, path: str | os.PathLike) -> Path:
    """One row per (frame, node), ordered by time then x."""
    if not frames:
        raise ParameterError("no frames to write")
    x = grid.x

    def rows():
        yield FIELD_HEADER
        for f in frames:
            k = int(f.t_index)
            t = fmt(k * grid.dt)
            for i in range(grid.nx):
                yield ",".join((str(k), str(i), t, fmt(x[i]), fmt(f.P_tot[i]), fmt(f.J_tot[i]),
                                fmt(f.v_tot[i])))

    return _write_lines(path, rows())


def read_field_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Columns of a field CSV keyed by header name."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, j] for j, name in enumerate(header)}


def write_trajectory_csv(ts: TrajectorySet, path: str | os.PathLike) -> Path:
    """Long format; truncated tails are omitted rather than written as NaN."""
    def rows():
        yield TRAJ_HEADER
        for p in range(ts.n_paths):
            src = str(int(ts.source_slit[p]))
            for k, (t, x) in enumerate(zip(ts.t, ts.x[p])):
                if np.isnan(x):
                    break
                yield ",".join((str(p), src, str(k), fmt(t), fmt(x)))

    return _write_lines(path, rows())


def write_screen_csv(screen: ScreenRecord, path: str | os.PathLike) -> Path:
    ref = screen.reference

    def rows():
        yield SCREEN_HEADER
        for i, (c, v) in enumerate(zip(screen.coordinate, screen.accumulated)):
            r = fmt(ref[i]) if ref is not None else ""
            yield ",".join((screen.orientation, fmt(screen.position), str(i), fmt(c), fmt(v), r))

    return _write_lines(path, rows())


def heatmap_pixels(frames: Sequence[CombinedFrame], gamma: float = 0.5) -> np.ndarray:
    """uint8 image, shape (nt, nx); row 0 holds the latest frame."""
    if not frames:
        raise ParameterError("no frames to render")
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    P = np.clip(np.array([np.asarray(f.P_tot, dtype=float) for f in frames]), 0.0, None)
    peak = float(P.max())
    if not peak > 0:
        raise ParameterError("field is zero everywhere; nothing to render")
    img = np.rint(255.0 * (P / peak) ** gamma)
    return np.clip(img, 0, 255).astype(np.uint8)[::-1]


def render_heatmap(frames: Sequence[CombinedFrame], path: str | os.PathLike, gamma: float = 0.5) -> Path:
    """Binary P5 graymap, width nx, height nt, time increasing upwards."""
    img = heatmap_pixels(frames, gamma)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())
    return path


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Parse a binary P5 file written by :func:`render_heatmap`."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise ValueError(f"{path} is not a P5 graymap")
    w, h = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError("only maxval 255 is supported")
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)

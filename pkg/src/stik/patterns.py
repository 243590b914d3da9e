"""Observed point patterns and their on-disk format.

A pattern is stored as a CSV file with header ``sx,sy,t`` (one event per
row, shortest round-trip float formatting) plus a sidecar ``key = value``
metadata file carrying at least the window bounds.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import STPoint, STWindow


@dataclass(frozen=True)
class PointPattern:
    """Events bound to the window they were observed in."""

    coords: np.ndarray = field(repr=False)  # (n, 3) columns sx, sy, t
    window: STWindow

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1, 3)
        if coords.size and not np.all(
            self.window.contains(coords[:, 0], coords[:, 1], coords[:, 2])
        ):
            raise ValueError("every event must lie inside the window")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def sx(self):
        return self.coords[:, 0]

    @property
    def sy(self):
        return self.coords[:, 1]

    @property
    def t(self):
        return self.coords[:, 2]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return STPoint(*self.coords[i])


def meta_path_for(csv_path):
    csv_path = str(csv_path)
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".meta.txt"


def write_meta(path, meta):
    """Write ``key = value`` lines, UTF-8, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in meta.items():
            fh.write(f"{key} = {value}\n")


def read_meta(path):
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    return meta


def window_meta(window):
    return {
        "x_min": repr(window.x_range[0]),
        "x_max": repr(window.x_range[1]),
        "y_min": repr(window.y_range[0]),
        "y_max": repr(window.y_range[1]),
        "t_min": repr(window.t_range[0]),
        "t_max": repr(window.t_range[1]),
    }


def window_from_meta(meta):
    return STWindow(
        (float(meta["x_min"]), float(meta["x_max"])),
        (float(meta["y_min"]), float(meta["y_max"])),
        (float(meta["t_min"]), float(meta["t_max"])),
    )


def save_pattern(pattern, csv_path, extra_meta=None):
    """Write the event CSV plus its metadata sidecar."""
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sx,sy,t\n")
        for sx, sy, t in pattern.coords:
            fh.write(f"{sx!r},{sy!r},{t!r}\n")
    meta = dict(window_meta(pattern.window))
    meta["n"] = str(pattern.n)
    if extra_meta:
        meta.update({k: str(v) for k, v in extra_meta.items()})
    write_meta(meta_path_for(csv_path), meta)


def load_pattern(csv_path):
    """Read a pattern CSV and its sidecar; returns (pattern, meta)."""
    meta = read_meta(meta_path_for(csv_path))
    window = window_from_meta(meta)
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if rows.size == 0:
        rows = rows.reshape(0, 3)
    return PointPattern(rows, window), meta

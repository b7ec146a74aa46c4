"""Parser for VSWM1 field-snapshot files.

Layout (little-endian): magic b"VSWM1", u32 nx, u32 ny, f64 dx, f64 t,
four row-major f64 planes (rho, u_x, u_y, omega_z) each written from an
(nx, ny) array in C order, then u32 outline vertex count and that many
(x, y) f64 pairs.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"VSWM1"


@dataclass
class SnapshotView:
    nx: int
    ny: int
    dx: float
    t: float
    rho: np.ndarray
    u_x: np.ndarray
    u_y: np.ndarray
    omega_z: np.ndarray
    outline: np.ndarray

    @property
    def extent_L(self) -> tuple[float, float, float, float]:
        """Plot extent in units of body length: (x0, x1, y0, y1)."""
        return (0.0, self.nx * self.dx, 0.0, self.ny * self.dx)


def load_snapshot(path) -> SnapshotView:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected VSWM1")
        header = fh.read(24)
        if len(header) != 24:
            raise ValueError(f"{path}: truncated header")
        nx, ny, dx, t = struct.unpack("<IIdd", header)
        planes = []
        for name in ("rho", "u_x", "u_y", "omega_z"):
            buf = fh.read(8 * nx * ny)
            if len(buf) != 8 * nx * ny:
                raise ValueError(f"{path}: truncated {name} plane")
            planes.append(np.frombuffer(buf, dtype="<f8").reshape(nx, ny))
        count_raw = fh.read(4)
        if len(count_raw) != 4:
            raise ValueError(f"{path}: missing outline count")
        (count,) = struct.unpack("<I", count_raw)
        buf = fh.read(16 * count)
        if len(buf) != 16 * count:
            raise ValueError(f"{path}: truncated outline")
        outline = np.frombuffer(buf, dtype="<f8").reshape(count, 2)
    return SnapshotView(nx=nx, ny=ny, dx=dx, t=t, rho=planes[0],
                        u_x=planes[1], u_y=planes[2], omega_z=planes[3],
                        outline=outline)

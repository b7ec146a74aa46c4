"""Binary field-snapshot files and fluid warm-start states.

Snapshot layout (little-endian throughout):

    magic   5 bytes  b"VSWM1"
    nx      u32
    ny      u32
    dx      f64   cell size, in units of the fish body length
    t       f64   tick index
    planes  4 x (nx*ny) f64: rho, u_x, u_y, omega_z, each written from an
            (nx, ny) array in C order (the y index varies fastest)
    count   u32   fish outline vertex count (0 when no fish)
    pts     count x 2 f64 (x, y) pairs, grid units

Warm-start states keep the full populations (a snapshot alone cannot
reconstruct the non-equilibrium part) and are stored as .npz.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"VSWM1"


@dataclass
class Snapshot:
    nx: int
    ny: int
    dx: float
    t: float
    rho: np.ndarray
    u_x: np.ndarray
    u_y: np.ndarray
    omega_z: np.ndarray
    outline: np.ndarray  # (count, 2), possibly empty


def write_snapshot(path, snap: Snapshot) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".part")
    try:
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IIdd", snap.nx, snap.ny, snap.dx, snap.t))
            for plane in (snap.rho, snap.u_x, snap.u_y, snap.omega_z):
                if plane.shape != (snap.nx, snap.ny):
                    raise ValueError("plane shape does not match header")
                fh.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())
            pts = np.asarray(snap.outline, dtype="<f8").reshape(-1, 2)
            fh.write(struct.pack("<I", len(pts)))
            fh.write(pts.tobytes())
        tmp.replace(path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != MAGIC:
            raise ValueError(f"not a VSWM1 snapshot: magic {magic!r}")
        nx, ny, dx, t = struct.unpack("<IIdd", fh.read(24))
        planes = []
        for _ in range(4):
            buf = fh.read(8 * nx * ny)
            if len(buf) != 8 * nx * ny:
                raise ValueError("truncated snapshot plane")
            planes.append(np.frombuffer(buf, dtype="<f8").reshape(nx, ny).copy())
        (count,) = struct.unpack("<I", fh.read(4))
        pts = np.frombuffer(fh.read(16 * count), dtype="<f8").reshape(count, 2).copy()
    return Snapshot(nx=nx, ny=ny, dx=dx, t=t, rho=planes[0], u_x=planes[1],
                    u_y=planes[2], omega_z=planes[3], outline=pts)


def save_state(path, f: np.ndarray, tau: float, tick: int) -> None:
    """Persist a full fluid state for exact warm starts."""
    np.savez_compressed(path, f=f, tau=tau, tick=tick)


def load_state(path) -> tuple[np.ndarray, float, int]:
    data = np.load(path)
    return data["f"], float(data["tau"]), int(data["tick"])

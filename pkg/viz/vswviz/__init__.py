"""Offline figures from vortexswim run directories.

Reads only the run artifacts (VSWM1 field snapshots, CSV logs, the echoed
flat config); never imports the simulator."""

__version__ = "0.1.0"

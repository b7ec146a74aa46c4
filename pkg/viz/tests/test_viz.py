import struct

import numpy as np
import pytest

import plot_rewards
import plot_trajectory
from vswviz.runs import read_rewards, rolling_mean
from vswviz.snapshot_view import load_snapshot

from conftest import GOLDEN


def reserialize(view) -> bytes:
    """Independent writer from parsed fields, for byte-exact round trips."""
    out = b"VSWM1"
    out += struct.pack("<IIdd", view.nx, view.ny, view.dx, view.t)
    for plane in (view.rho, view.u_x, view.u_y, view.omega_z):
        out += np.ascontiguousarray(plane, dtype="<f8").tobytes()
    out += struct.pack("<I", len(view.outline))
    out += np.ascontiguousarray(view.outline, dtype="<f8").tobytes()
    return out


class TestSnapshotParser:
    def test_golden_files_round_trip(self):
        paths = sorted((GOLDEN / "fields").glob("*.vswm"))
        assert paths, "golden fixture missing"
        for path in paths:
            view = load_snapshot(path)
            assert view.rho.shape == (view.nx, view.ny)
            assert np.isfinite(view.rho).all()
            assert len(view.outline) > 0
            assert reserialize(view) == path.read_bytes()

    def test_wrong_magic_rejected(self, tmp_path):
        bad = tmp_path / "bad.vswm"
        bad.write_bytes(b"XXXXX" + b"\x00" * 50)
        with pytest.raises(ValueError, match="magic"):
            load_snapshot(bad)

    def test_truncated_plane_rejected(self, tmp_path):
        src = sorted((GOLDEN / "fields").glob("*.vswm"))[0]
        data = src.read_bytes()
        bad = tmp_path / "cut.vswm"
        bad.write_bytes(data[: len(data) // 3])
        with pytest.raises(ValueError, match="truncated"):
            load_snapshot(bad)


class TestRollingMean:
    def test_monotone_input_gives_monotone_mean(self):
        vals = np.linspace(-100, -10, 120)
        rm = rolling_mean(vals, 50)
        assert (np.diff(rm) >= -1e-12).all()

    def test_window_edges(self):
        vals = np.array([2.0, 4.0, 6.0])
        rm = rolling_mean(vals, 2)
        assert rm == pytest.approx([2.0, 3.0, 5.0])


class TestPlotRewards:
    def test_smoke_run_renders(self, run_dir):
        assert plot_rewards.main([str(run_dir)]) == 0
        out = run_dir / "figs" / "rewards.png"
        assert out.exists() and out.stat().st_size > 1000

    def test_single_row(self, run_dir):
        lines = (run_dir / "rewards.csv").read_text().splitlines()
        (run_dir / "rewards.csv").write_text("\n".join(lines[:2]) + "\n")
        assert plot_rewards.main([str(run_dir)]) == 0
        assert (run_dir / "figs" / "rewards.png").stat().st_size > 1000

    def test_empty_log_fails_cleanly(self, run_dir, capsys):
        (run_dir / "rewards.csv").write_text(
            "episode,steps,cumulative_reward,outcome\n")
        assert plot_rewards.main([str(run_dir)]) == 1
        assert "cannot plot rewards" in capsys.readouterr().err


class TestPlotTrajectory:
    def test_smoke_run_renders(self, run_dir):
        assert plot_trajectory.main([str(run_dir)]) == 0
        out = run_dir / "figs" / "trajectory.png"
        assert out.exists() and out.stat().st_size > 1000

    def test_missing_snapshot_step_warns_but_renders(self, run_dir, capsys):
        assert plot_trajectory.main([str(run_dir), "--steps",
                                     "20,999999"]) == 0
        assert "no snapshot for tick 999999" in capsys.readouterr().err
        assert (run_dir / "figs" / "trajectory.png").exists()

    def test_background_only_without_trajectories(self, run_dir):
        for p in (run_dir / "trajectories").glob("*.csv"):
            p.unlink()
        assert plot_trajectory.main([str(run_dir)]) == 0
        assert (run_dir / "figs" / "trajectory.png").stat().st_size > 1000

    def test_eleven_path_overlay(self, run_dir):
        traj_dir = run_dir / "trajectories"
        base = read_rewards(run_dir / "rewards.csv")  # noqa: F841 fixture ok
        template = sorted(traj_dir.glob("*.csv"))[0].read_text()
        for k in range(11):
            (traj_dir / f"start_{k}.csv").write_text(template)
        assert plot_trajectory.main([str(run_dir)]) == 0
        assert (run_dir / "figs" / "trajectory.png").stat().st_size > 1000

"""Secondary acceptance: figures render from a real compare run's CSVs, and a
zero-noise run's estimates overlay the truth at the data level."""

import subprocess
import sys

import numpy as np

from plotviz import PlotSpec, load_aligned, render


def report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" :: {detail}" if detail else ""))
    return ok


def run_compare(out_dir, *extra):
    cmd = [sys.executable, "-m", "gssmlab.cli", "compare", "--steps", "200",
           "--out-dir", str(out_dir), *extra]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out_dir / "ekf.csv", out_dir / "gssm.csv"


def test_renders_velocity_and_altitude_from_compare_run(tmp_path):
    ekf_csv, gssm_csv = run_compare(tmp_path, "--seed", "4")
    outputs = []
    for state, name in (("v", "fig9.png"), ("h", "fig10.png")):
        outputs += render(PlotSpec(csv_paths=[ekf_csv, gssm_csv], out_path=tmp_path / name, state=state))
    ok = all(p.exists() and p.stat().st_size > 0 for p in outputs)
    assert report("plot rendering: velocity and altitude figures from compare CSVs", ok,
                  f"{len(outputs)} images")


def test_zero_noise_overlay(tmp_path):
    ekf_csv, gssm_csv = run_compare(tmp_path, "--zero-noise", "--truth-mode", "exact")
    series = load_aligned([ekf_csv, gssm_csv])
    # data-level check before any rendering: estimates sit on top of truth
    worst = max(float(np.abs(s.columns[f"err_{st}"]).max())
                for s in series for st in ("x", "v", "h"))
    ok_data = worst < 1e-5
    render(PlotSpec(csv_paths=[ekf_csv, gssm_csv], out_path=tmp_path / "overlay.png", state="v"))
    ok_img = (tmp_path / "overlay.png").exists()
    assert report("plot overlay: zero-noise estimates coincide with truth", ok_data and ok_img,
                  f"max |error| {worst:.2e}")

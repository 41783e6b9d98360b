"""SVG figures for traces and controller comparisons."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# stable element ids and no timestamp, so identical data gives identical files;
# text stays text so labels can be searched and diffed
matplotlib.rcParams["svg.hashsalt"] = "cldbs"
matplotlib.rcParams["svg.fonttype"] = "none"
SVG_META = {"Date": None}

TRACE_PANELS = (
    ("lfp_raw", "raw LFP (uV)"),
    ("lfp_beta", "beta LFP (uV)"),
    ("beta_arv", "beta ARV (uV)"),
    ("dbs_amplitude", "amplitude (mA)"),
    ("dbs_current", "current (mA)"),
)
BAR_METRICS = (
    ("mse_pct", "MSE (% of DBS-off)"),
    ("power_pct", "power (% of open loop)"),
    ("efficiency_std", "suppression efficiency (%/uW)"),
)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return path


def plot_trace(trace, out_dir, targets=(0.104, 0.05207)) -> list[Path]:
    """Five-panel trace, ARV with target lines, and the amplitude staircase."""
    out_dir = Path(out_dir)
    t = trace.times
    files = []

    fig, axes = plt.subplots(len(TRACE_PANELS), 1, figsize=(8, 9), sharex=True)
    for ax, (attr, label) in zip(axes, TRACE_PANELS):
        ax.plot(t, getattr(trace, attr).samples, lw=0.6)
        ax.set_ylabel(label, fontsize=8)
    axes[-1].set_xlabel("time (s)")
    fig.tight_layout()
    files.append(_save(fig, out_dir / "trace_columns.svg"))

    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(t, trace.beta_arv.samples, lw=0.8, label="beta ARV")
    for y in targets:
        ax.axhline(y, ls="--", lw=0.8, color="k")
        ax.annotate(f"{y:g} uV", (t[0], y), fontsize=7, va="bottom")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("beta ARV (uV)")
    fig.tight_layout()
    files.append(_save(fig, out_dir / "arv.svg"))

    fig, ax = plt.subplots(figsize=(8, 3))
    ax.step(t, trace.dbs_amplitude.samples, where="post", lw=0.8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("DBS amplitude (mA)")
    fig.tight_layout()
    files.append(_save(fig, out_dir / "amplitude.svg"))
    return files


def plot_comparison(rows, out_dir) -> list[Path]:
    """One bar chart per metric; bars are seed means, dots the individual seeds.

    ``rows`` are dicts with a ``controller`` key and the metric columns.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("comparison table is empty")
    out_dir = Path(out_dir)
    files = []
    order = list(dict.fromkeys(r["controller"] for r in rows))
    for key, label in BAR_METRICS:
        vals = defaultdict(list)
        for r in rows:
            v = r.get(key)
            if v is not None and v != "" and np.isfinite(float(v)):
                vals[r["controller"]].append(float(v))
        names = [c for c in order if vals[c]]
        fig, ax = plt.subplots(figsize=(6, 3.5))
        x = np.arange(len(names))
        ax.bar(x, [np.mean(vals[c]) for c in names], color="0.7")
        for i, c in enumerate(names):
            ax.plot(np.full(len(vals[c]), i), vals[c], "k.", ms=4)
        ax.set_xticks(x, names)
        ax.set_ylabel(label)
        fig.tight_layout()
        files.append(_save(fig, out_dir / f"{key}.svg"))
    return files

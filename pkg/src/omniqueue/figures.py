"""Static SVG figures for experiment output, byte-reproducible."""
from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "omniqueue", "svg.fonttype": "none"}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_figures(records, summaries, out: Path) -> None:
    with plt.rc_context(_RC):
        counts = Counter(r.doublings_condition for r in records)
        xs = sorted(counts)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar(xs, [counts[x] for x in xs], color="0.4")
        ax.set_xticks(xs)
        ax.set_xlabel("extra doublings for the monotonicity condition")
        ax.set_ylabel("runs")
        _save(fig, out / "extensions.svg")

        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, s in summaries:
            ax.plot(range(1, len(s.means) + 1), s.means, marker="o", label=label)
        ax.set_xlabel("coordinate")
        ax.set_ylabel("mean workload")
        ax.legend()
        _save(fig, out / "means.svg")

        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, s in summaries:
            xs, fs = s.cdfs[0]
            ax.step(xs, fs, where="post", label=label)
        ax.set_xlabel("coordinate 1 workload")
        ax.set_ylabel("F(x)")
        ax.legend()
        _save(fig, out / "cdf.svg")

"""Figure rendering for the report path.

Each figure is written next to a CSV holding exactly the plotted data, so
results stay diffable and scriptable.  Rendering is headless (Agg).
"""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import bounds as bnd  # noqa: E402
from .dag import DagSpec  # noqa: E402
from .engine import Engine, WS, WSS  # noqa: E402


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def margin_curve(out_dir: str) -> list[str]:
    """Outbound-migration margin of a two-enabling processor vs idle ratio."""
    alphas = [0.50 + k / 1000.0 for k in range(0, 491)]
    margins = [bnd.wss_margin(a) for a in alphas]
    root = bnd.find_threshold(1e-9)
    csv_path = os.path.join(out_dir, "margin_curve.csv")
    _write_csv(csv_path, ["alpha", "margin"], zip(alphas, margins))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(alphas, margins, lw=1.5)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.axvline(root, color="crimson", ls="--", lw=1.0,
               label=f"threshold = {root:.4f}")
    ax.set_xlabel("idle ratio")
    ax.set_ylabel("expected outbound migrations - 1")
    ax.set_title("Donation + steal margin of a two-enabling processor")
    ax.legend()
    fig.tight_layout()
    png_path = os.path.join(out_dir, "margin_curve.png")
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


def deque_growth(out_dir: str, seed: int, spine: int = 400, p_count: int = 8) -> list[str]:
    """Spine owner's deque size over a depth-first run, WS vs WSS."""
    series = {}
    for scheduler in (WS, WSS):
        engine = Engine(DagSpec("comb", size=spine).build(), p_count,
                        scheduler, "single_winner", seed)
        sizes = []
        while not engine.finished and len(sizes) < spine:
            trace = engine.step_round(record=False)
            sizes.append(trace.deque_sizes[0])
        series[scheduler] = sizes

    n = max(len(s) for s in series.values())
    rows = [(t,
             series[WS][t] if t < len(series[WS]) else "",
             series[WSS][t] if t < len(series[WSS]) else "")
            for t in range(n)]
    csv_path = os.path.join(out_dir, "deque_growth.csv")
    _write_csv(csv_path, ["t", "ws_deque", "wss_deque"], rows)

    fig, ax = plt.subplots(figsize=(6, 4))
    for scheduler, sizes in series.items():
        ax.plot(range(len(sizes)), sizes, lw=1.2, label=scheduler)
    ax.set_xlabel("round")
    ax.set_ylabel("spine owner deque size")
    ax.set_title(f"Work accumulation on a comb (spine={spine}, P={p_count})")
    ax.legend()
    fig.tight_layout()
    png_path = os.path.join(out_dir, "deque_growth.png")
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


def bound_curves(out_dir: str) -> list[str]:
    """Steal bounds and donation floor as functions of the idle ratio."""
    alphas = [k / 1000.0 for k in range(0, 1000)]
    rows = []
    for a in alphas:
        lo, hi = bnd.steal_bounds(a)
        rows.append((a, lo, hi, bnd.spread_lower_bound(a)))
    csv_path = os.path.join(out_dir, "bound_curves.csv")
    _write_csv(csv_path, ["alpha", "steal_lower", "steal_upper", "spread_lower"],
               rows)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(alphas, [r[1] for r in rows], label="steal lower  1-e^-a", lw=1.2)
    ax.plot(alphas, [r[2] for r in rows], label="steal upper  a", lw=1.2)
    ax.plot(alphas, [r[3] for r in rows],
            label="donation floor  a^2(1-e^-(1-a))/(1-a)", lw=1.2)
    ax.set_xlabel("idle ratio")
    ax.set_ylabel("expected migrations per round")
    ax.set_ylim(0, 1.6)
    ax.set_title("Per-round migration bounds")
    ax.legend(fontsize=8)
    fig.tight_layout()
    png_path = os.path.join(out_dir, "bound_curves.png")
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


def render_all(out_dir: str, seed: int = 1) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    paths += margin_curve(out_dir)
    paths += deque_growth(out_dir, seed)
    paths += bound_curves(out_dir)
    return paths

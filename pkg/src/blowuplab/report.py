"""CSV, JSON and figure output for the command line front-end."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, rows, columns, config_hash):
    """CSV with a provenance comment line followed by the header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    return path


def read_csv(path):
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def write_summary(path, passed, metrics):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"pass": bool(passed), "metrics": _plain(metrics)}, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------- figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"font.size": 9, "axes.grid": True, "grid.alpha": 0.3, "savefig.dpi": 120})
    return plt


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    return path


def plot_coeffs(rows, path):
    plt = _pyplot()
    dev = np.array([max(r["rel_dev"], 1e-17) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(dev, ".", ms=3)
    ax.set_xlabel("coefficient index")
    ax.set_ylabel("relative deviation")
    ax.set_title("closed form vs invariance solver")
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_passage(report, path):
    """First-mode mean values along the run, coloured by chart, with both critical branches."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.8))
    for chart, style in (("K1", "C0"), ("K2", "C1"), ("K3", "C2")):
        pts = [(u, v) for c, u, v in report.path if c == chart]
        if pts:
            u, v = zip(*pts)
            ax.plot(v, u, ".", ms=2, color=style, label=chart)
    if report.path:
        lim = max(max(abs(u), abs(v)) for _, u, v in report.path)
        x = np.linspace(-lim, lim, 3)
        ax.plot(x, x, "k:", lw=0.8)
        ax.plot(x, -x, "k:", lw=0.8)
    ax.set_xlabel("mean of v")
    ax.set_ylabel("mean of u")
    ax.set_title(f"outcome {report.outcome}")
    ax.legend(fontsize=7)
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_sweep(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    jumps = [r for r in rows if r["outcome"] == "JUMP" and r["exit_v"]]
    for k0 in sorted({r["k0"] for r in jumps}):
        sel = sorted((r["eps"], abs(r["exit_v"])) for r in jumps if r["k0"] == k0)
        if sel:
            e, v = zip(*sel)
            ax.loglog(e, v, "o-", ms=3, label=f"k0={k0}")
    ax.set_xlabel("eps")
    ax.set_ylabel("|exit v|")
    if jumps:
        ax.legend(fontsize=7)
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_converge(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    k = [r["k0"] for r in rows]
    ax.loglog(k, [r["sup_distance"] for r in rows], "o-", ms=3, label="sup over grid")
    ax.loglog(k, [r["hausdorff"] for r in rows], "s--", ms=3, label="Hausdorff")
    ax.set_xlabel("k0")
    ax.set_ylabel("distance to reference")
    ax.legend(fontsize=7)
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_pdecheck(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for eps in sorted({r["eps"] for r in rows}, reverse=True):
        sel = [r for r in rows if r["eps"] == eps]
        ax.semilogy([r["T_snapshot"] for r in sel], [max(r["l2_distance"], 1e-17) for r in sel], "o-", ms=3,
                    label=f"eps={eps:g}")
    ax.set_xlabel("T")
    ax.set_ylabel("L2 distance to limit ODE")
    ax.legend(fontsize=7)
    out = _save(fig, path)
    plt.close(fig)
    return out

"""PNG figures of benchmark averages (utility, runtime, error against budget)."""

from __future__ import annotations

from pathlib import Path as FsPath

from matplotlib.figure import Figure

_PANELS = (
    ("utility", "utility (nats)", "utility_vs_budget.png", False),
    ("runtime_s", "wall time (s)", "runtime_vs_budget.png", True),
    ("mean_error", "mean localization error (m)", "error_vs_budget.png", False),
)


def _series(rows, field):
    out = {}
    for r in rows:
        if r.get(field, "") == "":
            continue
        out.setdefault(r["algorithm"], []).append((float(r["budget"]), float(r[field])))
    return {a: sorted(v) for a, v in out.items()}


def plot_benchmark(mean_rows, out_dir) -> list[FsPath]:
    """One line per algorithm for each metric present in ``mean_rows``."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for field, label, name, logy in _PANELS:
        series = _series(mean_rows, field)
        if not series:
            continue
        # Figure directly (no pyplot) keeps this backend-independent
        fig = Figure(figsize=(4.5, 3.2), layout="constrained")
        ax = fig.add_subplot()
        for algo, pts in sorted(series.items()):
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", label=algo)
        ax.set_xlabel("budget (m)")
        ax.set_ylabel(label)
        if logy and all(y > 0 for pts in series.values() for _, y in pts):
            ax.set_yscale("log")
        ax.grid(alpha=0.3)
        ax.legend(frameon=False)
        path = out / name
        fig.savefig(path, dpi=120)
        written.append(path)
    return written

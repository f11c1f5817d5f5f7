"""Static SVG figures rendered from a report bundle."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .errors import EmptyTable, IoError  # noqa: E402
from .pipeline import CURVE_NODES  # noqa: E402

KINDS = ("return_map", "nested_intervals", "delta_trend")

# fixed salt and no date stamp keep the SVG byte-identical across runs
_RC = {
    "svg.hashsalt": "unimodal-lab",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _return_map(fig, bundle):
    rm = bundle.return_map
    if rm is None or not rm.curve:
        raise EmptyTable("no return map in this bundle")
    ax = fig.add_subplot()
    lo, hi = float(rm.V.lo), float(rm.V.hi)
    step = CURVE_NODES + 1
    edges = set()
    for k in range(0, len(rm.curve), step):
        piece = rm.curve[k:k + step]
        ax.plot([float(p[0]) for p in piece], [float(p[1]) for p in piece], lw=1.0, color="C0")
        edges.update((float(piece[0][0]), float(piece[-1][0])))
    edges = sorted(edges)
    for e in edges:
        ax.axvline(e, color="0.6", lw=0.4, ls=":")
    ax.plot([lo, hi], [lo, hi], color="0.4", lw=0.6, ls="--")
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_aspect("equal")
    ax.set_xlabel("y")
    ax.set_ylabel("R(y)")
    ax.set_title(f"first return map to V, x = {float(rm.x):.6f}")


def _nested(fig, bundle):
    tr = bundle.transfer
    if tr is None or not tr.ranges:
        raise EmptyTable("transfer-range sequence is empty")
    ax = fig.add_subplot()
    smallest = min(float(r.U.length) for r in tr.ranges)
    for k, r in enumerate(tr.ranges):
        vlo, vhi = float(r.V.lo) - 0.5, float(r.V.hi) - 0.5
        ulo, uhi = float(r.U.lo) - 0.5, float(r.U.hi) - 0.5
        ax.barh(k, vhi - vlo, left=vlo, height=0.7, color="C0", alpha=0.35,
                label="V" if k == 0 else None)
        ax.barh(k, uhi - ulo, left=ulo, height=0.4, color="C1", label="U" if k == 0 else None)
    ax.set_xscale("symlog", linthresh=max(smallest / 2, 1e-300))
    ax.set_yticks(range(len(tr.ranges)), [f"n={r.n}" for r in tr.ranges])
    ax.invert_yaxis()
    ax.set_xlabel("position relative to c (symlog)")
    ax.set_title("transfer ranges toward c")
    ax.legend(loc="lower right")


def _delta_trend(fig, bundle):
    tr = bundle.transfer
    if tr is None or not tr.ranges:
        raise EmptyTable("transfer-range sequence is empty")
    ax = fig.add_subplot()
    ns = [r.n for r in tr.ranges]
    ax.plot(ns, [float(r.delta) for r in tr.ranges], marker="o", lw=1.0, label="delta_n")
    ax.plot(ns, [float(r.V.length) for r in tr.ranges], marker="s", lw=1.0, label="|V_n|")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_title("Koebe space and window size")
    ax.legend()


_DRAW = {"return_map": _return_map, "nested_intervals": _nested, "delta_trend": _delta_trend}


def render(bundle, kind: str) -> Figure:
    """Draw one figure without touching the filesystem."""
    if kind not in _DRAW:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {', '.join(KINDS)}")
    with rc_context(_RC):
        fig = Figure(figsize=(6.0, 4.5))
        _DRAW[kind](fig, bundle)
        fig.tight_layout()
    return fig


def plot_svg(bundle, kind: str, path) -> Path:
    path = Path(path)
    fig = render(bundle, kind)
    with rc_context(_RC):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as err:
            raise IoError(f"cannot write {path}: {err}") from err
    return path


def plot_all(bundle, outdir) -> dict:
    """Render every kind whose table is non-empty; returns ``{kind: path or reason}``."""
    out = {}
    for kind in KINDS:
        try:
            out[kind] = plot_svg(bundle, kind, Path(outdir) / f"{kind}.svg")
        except EmptyTable as err:
            out[kind] = f"EmptyTable: {err}"
    return out

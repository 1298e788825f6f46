"""Serialisation of solve reports: JSON, CSV samples, SVG and PNG drawings."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable

from .geometry import ArcProgram, OrientedPoint, controls_at, sample_program
from .model import ProblemInstance

SCHEMA_VERSION = "minimax-curve/1"
DECIMALS = 10


def _num(x: float) -> float:
    x = round(float(x), DECIMALS)
    return 0.0 if x == 0.0 else x  # no "-0.0" in the output


def _clean(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int,)):
        return obj
    if isinstance(obj, float) or hasattr(obj, "__float__"):
        return _num(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def instance_dict(inst: ProblemInstance) -> dict:
    s, g = inst.start, inst.goal
    return {"x0": s.x, "y0": s.y, "theta0": s.theta, "xf": g.x, "yf": g.y, "thetaf": g.theta, "tf": inst.tf}


def instance_from_dict(d: dict) -> ProblemInstance:
    return ProblemInstance.from_values(d["x0"], d["y0"], d["theta0"], d["xf"], d["yf"], d["thetaf"], d["tf"])


def solution_dict(sol) -> dict:
    out = {
        "a": sol.a,
        "type": sol.type_string,
        "xi": list(sol.program.xi),
        "residual_norm": sol.residual_norm,
        "stationarity": sol.stationarity,
        "start_id": sol.start_id,
    }
    if sol.certificate is not None:
        out["certificate"] = sol.certificate.to_dict()
    if sol.verdict is not None:
        out["filters"] = {"passed": sol.verdict.passed, "reasons": list(sol.verdict.reasons)}
    return out


def report_dict(report) -> dict:
    return _clean(
        {
            "schema_version": SCHEMA_VERSION,
            "instance": instance_dict(report.instance),
            "config": report.config.to_dict(),
            "best": solution_dict(report.best),
            "critical": [solution_dict(s) for s in report.critical],
            "n_starts": report.n_starts,
            "n_failed_starts": len(report.failures),
            "timing_ms": report.timing_ms,
        }
    )


def dumps(data: dict) -> str:
    return json.dumps(_clean(data), indent=2, sort_keys=False) + "\n"


def loads(text: str) -> dict:
    data = json.loads(text)
    version = data.get("schema_version") if isinstance(data, dict) else None
    if version is not None and version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema {version!r}")
    return data


def program_of(entry: dict) -> ArcProgram:
    """Arc program stored in a serialised solution entry."""
    return ArcProgram(tuple(entry["xi"]), entry["a"])


def fmt(x: float) -> str:
    return f"{x:.{DECIMALS}f}"


def samples_csv(inst: ProblemInstance, prog: ArcProgram, n: int = 200) -> str:
    """Rows t, x, y, theta, u at ``n`` evenly spaced points of the curve."""
    if n < 2:
        raise ValueError("need at least two samples")
    pts = sample_program(inst.start, prog, n)
    ts = [prog.length * k / (n - 1) for k in range(n)]
    us = controls_at(prog, ts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y", "theta", "u"])
    for t, p, u in zip(ts, pts, us):
        w.writerow([fmt(t), fmt(p.x), fmt(p.y), fmt(p.theta), fmt(u)])
    return buf.getvalue()


def sweep_csv(entries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_f", "a", "type", "status"])
    for e in entries:
        if e.report is None:
            w.writerow([fmt(e.tf), "", "", e.error])
        else:
            w.writerow([fmt(e.tf), fmt(e.report.best.a), e.report.best.type_string, "ok"])
    return buf.getvalue()


# -- drawings ---------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _curve_points(inst: ProblemInstance, prog: ArcProgram, n: int) -> list[tuple[float, float]]:
    return [(p.x, p.y) for p in sample_program(inst.start, prog, n)]


def svg_drawing(inst: ProblemInstance, solutions: Iterable, size: int = 480, n: int = 400) -> str:
    """SVG 1.1 with the end arrows, every critical curve dotted and the best solid.

    ``solutions`` is ordered best first; each curve is one ``<path>``.
    """
    sols = list(solutions)
    curves = [_curve_points(inst, s.program, n) for s in sols]
    xs = [x for c in curves for x, _ in c] + [inst.start.x, inst.goal.x]
    ys = [y for c in curves for _, y in c] + [inst.start.y, inst.goal.y]
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
    pad = 0.08 * span
    x0, y1 = min(xs) - pad, max(ys) + pad
    k = size / (span + 2 * pad)
    arrow = 0.06 * span

    def px(x, y):
        return f"{(x - x0) * k:.3f},{(y1 - y) * k:.3f}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    # draw the critical curves first so the best one ends on top
    for idx in range(len(sols) - 1, -1, -1):
        sol, pts = sols[idx], curves[idx]
        d = "M " + " L ".join(px(x, y) for x, y in pts)
        color = _PALETTE[idx % len(_PALETTE)]
        style = 'stroke-width="2.5"' if idx == 0 else 'stroke-width="1.2" stroke-dasharray="2,3"'
        lines.append(
            f'<path d="{d}" fill="none" stroke="{color}" {style}>'
            f"<title>{sol.type_string} a = {fmt(sol.a)}</title></path>"
        )
    for p in (inst.start, inst.goal):
        tip = (p.x + arrow * math.cos(p.theta), p.y + arrow * math.sin(p.theta))
        left = (tip[0] - 0.35 * arrow * math.cos(p.theta - 0.5), tip[1] - 0.35 * arrow * math.sin(p.theta - 0.5))
        right = (tip[0] - 0.35 * arrow * math.cos(p.theta + 0.5), tip[1] - 0.35 * arrow * math.sin(p.theta + 0.5))
        a, b = px(p.x, p.y).split(","), px(*tip).split(",")
        lines.append(f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}" stroke="black" stroke-width="1.5"/>')
        lines.append(f'<polygon points="{px(*tip)} {px(*left)} {px(*right)}" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def plot_png(inst: ProblemInstance, solutions: Iterable, path: str, n: int = 400) -> None:
    """Same picture as :func:`svg_drawing`, rendered with matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sols = list(solutions)
    fig, ax = plt.subplots(figsize=(5, 5))
    for idx in range(len(sols) - 1, -1, -1):
        sol = sols[idx]
        pts = _curve_points(inst, sol.program, n)
        kw = {"lw": 2.2} if idx == 0 else {"lw": 1.0, "ls": ":"}
        ax.plot([x for x, _ in pts], [y for _, y in pts], color=_PALETTE[idx % len(_PALETTE)],
                label=f"{sol.type_string}  a = {sol.a:.4f}", **kw)
    span = max(abs(inst.goal.x - inst.start.x), abs(inst.goal.y - inst.start.y), 0.1)
    for p in (inst.start, inst.goal):
        ax.annotate("", xy=(p.x + 0.15 * span * math.cos(p.theta), p.y + 0.15 * span * math.sin(p.theta)),
                    xytext=(p.x, p.y), arrowprops={"arrowstyle": "->", "lw": 1.5})
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def start_goal_text(p: OrientedPoint) -> str:
    return f"({fmt(p.x)}, {fmt(p.y)}, {fmt(p.theta)})"

"""Static SVG line charts.

Written by hand instead of through a plotting library so the output is a
pure function of the input rows: rendering the same CSV twice yields the
same bytes, which the artifact tests rely on. Only positional text and
polylines are used; no fonts are embedded and no scripts are emitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

WIDTH = 720
HEIGHT = 440
MARGIN_L = 64
MARGIN_R = 16
MARGIN_T = 40
MARGIN_B = 48


@dataclass(frozen=True)
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi] at a 1/2/5 step."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + step * 1e-9:
        out.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return out


def _num(x: float) -> str:
    return f"{x:g}"


def _coord(x: float) -> str:
    return f"{x:.2f}"


def line_chart(
    series: Sequence[Series],
    title: str,
    x_label: str,
    y_label: str,
) -> str:
    """A fixed-size line chart; returns the SVG document as a string."""
    pts = [
        (float(x), float(y))
        for s in series
        for x, y in zip(s.xs, s.ys)
        if math.isfinite(x) and math.isfinite(y)
    ]
    if not pts:
        raise ValueError("nothing to plot: every point is missing or non-finite")
    x_lo = min(p[0] for p in pts)
    x_hi = max(p[0] for p in pts)
    y_lo = min(p[1] for p in pts)
    y_hi = max(p[1] for p in pts)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    for t in _ticks(x_lo, x_hi):
        x = sx(t)
        parts.append(
            f'<line x1="{_coord(x)}" y1="{MARGIN_T}" x2="{_coord(x)}" '
            f'y2="{HEIGHT - MARGIN_B}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_coord(x)}" y="{HEIGHT - MARGIN_B + 18}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{_num(t)}</text>"
        )
    for t in _ticks(y_lo, y_hi):
        y = sy(t)
        parts.append(
            f'<line x1="{MARGIN_L}" y1="{_coord(y)}" x2="{WIDTH - MARGIN_R}" '
            f'y2="{_coord(y)}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{_coord(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_num(t)}</text>'
        )
    parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333333" stroke-width="1"/>'
    )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(
            f"{_coord(sx(float(x)))},{_coord(sy(float(y)))}"
            for x, y in zip(s.xs, s.ys)
            if math.isfinite(float(x)) and math.isfinite(float(y))
        )
        if coords:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        ly = MARGIN_T + 14 + 16 * i
        lx = WIDTH - MARGIN_R - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{s.label}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + plot_w // 2}" y="{HEIGHT - 10}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{x_label}</text>"
    )
    parts.append(
        f'<text x="16" y="{MARGIN_T + plot_h // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {MARGIN_T + plot_h // 2})">{y_label}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def probability_chart(trace_rows, user: int) -> str:
    """Per-channel selection probabilities of one user over slots.

    `trace_rows` are dicts with slot/user/channel/p keys, one per
    (slot, user, channel), as read back from a trace CSV.
    """
    return _per_channel_chart(
        trace_rows,
        user,
        field="p",
        title=f"Channel selection probabilities, user {user + 1}",
        y_label="probability",
    )


def estimate_chart(trace_rows, user: int) -> str:
    """Per-channel payoff estimates of one user over slots."""
    return _per_channel_chart(
        trace_rows,
        user,
        field="q",
        title=f"Payoff estimates, user {user + 1}",
        y_label="estimate",
    )


def _per_channel_chart(trace_rows, user, field, title, y_label) -> str:
    by_channel: dict[int, tuple[list, list]] = {}
    for row in trace_rows:
        if int(row["user"]) != user + 1:
            continue
        xs, ys = by_channel.setdefault(int(row["channel"]), ([], []))
        xs.append(float(row["slot"]))
        ys.append(float(row[field]))
    if not by_channel:
        raise ValueError(f"trace has no rows for user {user + 1}")
    series = [
        Series(label=f"channel {ch}", xs=xs, ys=ys)
        for ch, (xs, ys) in sorted(by_channel.items())
    ]
    return line_chart(series, title, "slot", y_label)


def aggregate_chart(slots, aggregates) -> str:
    """Running aggregate capacity estimate over slots."""
    return line_chart(
        [Series(label="aggregate", xs=list(slots), ys=list(aggregates))],
        "Aggregate effective capacity",
        "slot",
        "packets per slot",
    )


def trials_chart(trials, closed, empirical) -> str:
    """Per-trial aggregate capacities from a trials CSV."""
    return line_chart(
        [
            Series(label="closed form", xs=list(trials), ys=list(closed)),
            Series(label="empirical", xs=list(trials), ys=list(empirical)),
        ],
        "Aggregate effective capacity by trial",
        "trial",
        "packets per slot",
    )


def sweep_chart(variable: str, values, means, stds) -> str:
    """Mean aggregate capacity against the swept variable, with a +/- band."""
    mean_s = Series(label="mean", xs=list(values), ys=list(means))
    hi = Series(
        label="mean + std",
        xs=list(values),
        ys=[m + s for m, s in zip(means, stds)],
    )
    lo = Series(
        label="mean - std",
        xs=list(values),
        ys=[m - s for m, s in zip(means, stds)],
    )
    return line_chart(
        [mean_s, hi, lo],
        f"Aggregate effective capacity vs {variable}",
        variable,
        "packets per slot",
    )


def potential_chart(steps, potentials, max_rhs) -> str:
    """Potential value along an integrated trajectory."""
    series = [Series(label="potential", xs=list(steps), ys=list(potentials))]
    finite = [v for v in potentials if math.isfinite(v)]
    if not finite:
        # heterogeneous exponents: no potential, show the motion instead
        series = [Series(label="max |dP/dt|", xs=list(steps), ys=list(max_rhs))]
    return line_chart(series, "Flow diagnostics", "step", "value")

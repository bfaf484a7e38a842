"""Bare-bones SVG drawing: grouped bars with error bars, and line plots."""
from html import escape

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=60, right=20, top=30, bottom=70)
PALETTE = ("#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377")


def _frame(title, ymax, body):
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    x0, y0 = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - MARGIN["right"]}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN["top"]}" stroke="black"/>',
    ]
    for i in range(6):
        v = ymax * i / 5
        y = y0 - plot_h * i / 5
        parts.append(f'<line x1="{x0 - 4}" y1="{y:.1f}" x2="{x0}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 6}" y="{y + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    parts.extend(body)
    parts.append("</svg>\n")
    return "\n".join(parts)


def _nice_max(v):
    return v * 1.1 if v > 0 else 1.0


def bar_chart(groups, series, values, errors=None, title="", ylabel="MAE"):
    """``values[g][s]`` is the bar height of series ``s`` inside group ``g``."""
    ymax = _nice_max(max((values[g][s] + (errors[g][s] if errors else 0.0))
                         for g in range(len(groups)) for s in range(len(series))))
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    y0 = HEIGHT - MARGIN["bottom"]
    slot = plot_w / max(len(groups), 1)
    bar_w = slot * 0.8 / max(len(series), 1)
    body = [f'<text x="14" y="{MARGIN["top"] + plot_h / 2:.1f}" transform="rotate(-90 14 {MARGIN["top"] + plot_h / 2:.1f})" text-anchor="middle">{escape(ylabel)}</text>']
    for g, name in enumerate(groups):
        gx = MARGIN["left"] + slot * g + slot * 0.1
        for s in range(len(series)):
            h = plot_h * values[g][s] / ymax
            x = gx + bar_w * s
            body.append(f'<rect x="{x:.1f}" y="{y0 - h:.1f}" width="{bar_w:.1f}" height="{h:.1f}" fill="{PALETTE[s % len(PALETTE)]}"/>')
            if errors:
                e = plot_h * errors[g][s] / ymax
                cx = x + bar_w / 2
                body.append(f'<line x1="{cx:.1f}" y1="{y0 - h - e:.1f}" x2="{cx:.1f}" y2="{y0 - h + e:.1f}" stroke="black"/>')
        body.append(f'<text x="{gx + slot * 0.4:.1f}" y="{y0 + 14}" text-anchor="middle">{escape(name)}</text>')
    for s, name in enumerate(series):
        lx = MARGIN["left"] + 10 + 110 * s
        body.append(f'<rect x="{lx}" y="{HEIGHT - 30}" width="10" height="10" fill="{PALETTE[s % len(PALETTE)]}"/>')
        body.append(f'<text x="{lx + 14}" y="{HEIGHT - 21}">{escape(name)}</text>')
    return _frame(title, ymax, body)


def line_plot(series, title="", xlabel="epoch"):
    """``series`` maps a label to a sequence of y values (x = 1..n)."""
    series = {k: list(v) for k, v in series.items() if len(v)}
    ymax = _nice_max(max((max(v) for v in series.values()), default=1.0))
    n = max((len(v) for v in series.values()), default=1)
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    y0 = HEIGHT - MARGIN["bottom"]
    body = [f'<text x="{MARGIN["left"] + plot_w / 2:.1f}" y="{y0 + 30}" text-anchor="middle">{escape(xlabel)}</text>']
    for s, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{MARGIN['left'] + plot_w * i / max(n - 1, 1):.1f},{y0 - plot_h * y / ymax:.1f}"
                       for i, y in enumerate(ys))
        body.append(f'<polyline fill="none" stroke="{PALETTE[s % len(PALETTE)]}" points="{pts}"/>')
        lx = MARGIN["left"] + 10 + 110 * s
        body.append(f'<rect x="{lx}" y="{HEIGHT - 30}" width="10" height="10" fill="{PALETTE[s % len(PALETTE)]}"/>')
        body.append(f'<text x="{lx + 14}" y="{HEIGHT - 21}">{escape(name)}</text>')
    return _frame(title, ymax, body)

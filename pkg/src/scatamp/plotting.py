"""Standalone SVG rendering of amplification curves and pole scatters.

Hand-rolled writer: no plotting dependency, deterministic output, searchable
text (legend labels are plain <text> elements).
"""

import numpy as np

PALETTE = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b"]
DASHES = ["", "6,3", "2,2", "8,3,2,3", "1,2", "10,4"]

WIDTH = 900
HEIGHT = 540
MARGIN = dict(left=70, right=20, top=20, bottom=45)
POLE_PANEL_H = 220


def _ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            step = m * mag
            break
    first = np.ceil(lo / step) * step
    return np.arange(first, hi + step * 0.5, step)


def render_svg(curves, path, poles=None, labels=None, logy: bool = False, title: str = "") -> None:
    """Write an SVG line chart of one or more amplification curves.

    curves : list of AmplificationCurve (or (points, values) pairs)
    poles  : optional array of complex numbers, drawn in a scatter subplot
    logy   : log10 ordinate
    """
    series = []
    for c in curves:
        if hasattr(c, "grid"):
            series.append((np.asarray(c.grid.points), np.asarray(c.values), c.method_tag))
        else:
            pts, vals = c
            series.append((np.asarray(pts), np.asarray(vals), ""))
    if labels is None:
        labels = [tag or f"curve {i}" for i, (_, _, tag) in enumerate(series)]

    xs = np.concatenate([s[0] for s in series])
    ys = np.concatenate([s[1] for s in series])
    ys = ys[np.isfinite(ys)]
    if logy:
        ys = ys[ys > 0]
        ylo, yhi = np.log10(ys.min()), np.log10(ys.max())
    else:
        ylo, yhi = float(ys.min()), float(ys.max())
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    xlo, xhi = float(xs.min()), float(xs.max())

    total_h = HEIGHT + (POLE_PANEL_H if poles is not None and len(poles) else 0)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def tx(x):
        return MARGIN["left"] + (x - xlo) / (xhi - xlo) * pw

    def ty(y):
        yy = np.log10(y) if logy else y
        return MARGIN["top"] + (yhi - yy) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_h}" '
        f'viewBox="0 0 {WIDTH} {total_h}">',
        f'<rect width="{WIDTH}" height="{total_h}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.0f}" y="14" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>'
        )

    # axes and ticks
    ax_y0 = MARGIN["top"] + ph
    parts.append(
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    for x in _ticks(xlo, xhi):
        parts.append(
            f'<line x1="{tx(x):.1f}" y1="{ax_y0}" x2="{tx(x):.1f}" y2="{ax_y0 + 5}" stroke="#333"/>'
            f'<text x="{tx(x):.1f}" y="{ax_y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{x:g}</text>'
        )
    yticks = _ticks(ylo, yhi)
    for y in yticks:
        label = f"1e{y:g}" if logy else f"{y:g}"
        parts.append(
            f'<line x1="{MARGIN["left"] - 5}" y1="{MARGIN["top"] + (yhi - y) / (yhi - ylo) * ph:.1f}" '
            f'x2="{MARGIN["left"]}" y2="{MARGIN["top"] + (yhi - y) / (yhi - ylo) * ph:.1f}" stroke="#333"/>'
            f'<text x="{MARGIN["left"] - 8}" y="{MARGIN["top"] + (yhi - y) / (yhi - ylo) * ph + 4:.1f}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">{label}</text>'
        )

    # curves
    for i, (pts, vals, _) in enumerate(series):
        ok = np.isfinite(vals) & (vals > 0 if logy else np.isfinite(vals))
        coords = " ".join(f"{tx(x):.2f},{ty(v):.2f}" for x, v in zip(pts[ok], vals[ok]))
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.3"{dash_attr}/>'
        )

    # legend
    for i, lab in enumerate(labels):
        y = MARGIN["top"] + 16 + 16 * i
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(
            f'<line x1="{WIDTH - 180}" y1="{y}" x2="{WIDTH - 150}" y2="{y}" '
            f'stroke="{color}" stroke-width="1.3"{dash_attr}/>'
            f'<text x="{WIDTH - 144}" y="{y + 4}" font-family="sans-serif" '
            f'font-size="12">{lab}</text>'
        )

    # pole scatter subplot
    if poles is not None and len(poles):
        poles = np.asarray(poles)
        py0 = HEIGHT + 10
        pph = POLE_PANEL_H - 40
        ilo, ihi = float(poles.imag.min()), float(poles.imag.max())
        if ihi - ilo < 1e-12:
            ilo, ihi = ilo - 0.1, ihi + 0.1
        parts.append(
            f'<rect x="{MARGIN["left"]}" y="{py0}" width="{pw}" height="{pph}" '
            f'fill="none" stroke="#333"/>'
        )

        def tpy(im):
            return py0 + (ihi - im) / (ihi - ilo) * pph

        for p in poles:
            if xlo <= p.real <= xhi:
                parts.append(
                    f'<circle cx="{tx(p.real):.1f}" cy="{tpy(p.imag):.1f}" r="3" '
                    f'fill="none" stroke="#666"/>'
                )
        parts.append(
            f'<text x="{MARGIN["left"] + 4}" y="{py0 + 14}" font-family="sans-serif" '
            f'font-size="11">poles (re, im)</text>'
        )

    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))

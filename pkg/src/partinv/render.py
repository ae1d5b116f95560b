"""Plain-text SVG and CSV writers for numeric grids."""

import io

import numpy as np


def matrix_csv(A, fmt="%.6e"):
    """Row-major CSV, one matrix row per line, no header."""
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(A), fmt=fmt, delimiter=",")
    return buf.getvalue().encode("ascii")


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def gray_svg(levels, cell=10, title="", xlabels=None, ylabels=None, xtitle="", ytitle="",
             skipped=None, margin=None):
    """Render a 2-D array of gray levels (0 black .. 255 white) as SVG.

    Row 0 of ``levels`` is drawn at the top.  Horizontal runs of equal level
    are merged into one rectangle, which keeps large, mostly uniform images
    small.  Cells where ``skipped`` is true are drawn hatched.
    """
    levels = np.asarray(levels, dtype=np.int64)
    rows, cols = levels.shape
    left = margin if margin is not None else (60 if ylabels is not None or ytitle else 10)
    top = 30 if title else 10
    bottom = 50 if xlabels is not None or xtitle else 10
    width = left + cols * cell + 10
    height = top + rows * cell + bottom

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        '<defs><pattern id="skip" width="6" height="6" patternUnits="userSpaceOnUse">'
        '<rect width="6" height="6" fill="#d8dde8"/>'
        '<path d="M0,6 L6,0" stroke="#8a93a6" stroke-width="1"/></pattern></defs>',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="18">{_esc(title)}</text>')
    out.append(f'<g transform="translate({left},{top})" shape-rendering="crispEdges">')
    for r in range(rows):
        c = 0
        while c < cols:
            if skipped is not None and skipped[r, c]:
                out.append(f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" fill="url(#skip)"/>')
                c += 1
                continue
            v = int(levels[r, c])
            end = c + 1
            while end < cols and int(levels[r, end]) == v and not (skipped is not None and skipped[r, end]):
                end += 1
            if v != 255:
                out.append(f'<rect x="{c * cell}" y="{r * cell}" width="{(end - c) * cell}" '
                           f'height="{cell}" fill="#{v:02x}{v:02x}{v:02x}"/>')
            c = end
    out.append(f'<rect width="{cols * cell}" height="{rows * cell}" fill="none" stroke="#444"/>')
    out.append("</g>")

    if xlabels is not None:
        for c, lab in enumerate(xlabels):
            x = left + c * cell + cell / 2
            out.append(f'<text x="{x:g}" y="{top + rows * cell + 14}" text-anchor="middle">{_esc(lab)}</text>')
    if ylabels is not None:
        for r, lab in enumerate(ylabels):
            y = top + r * cell + cell / 2 + 4
            out.append(f'<text x="{left - 4}" y="{y:g}" text-anchor="end">{_esc(lab)}</text>')
    if xtitle:
        out.append(f'<text x="{left + cols * cell / 2:g}" y="{top + rows * cell + 34}" '
                   f'text-anchor="middle">{_esc(xtitle)}</text>')
    if ytitle:
        y = top + rows * cell / 2
        out.append(f'<text x="14" y="{y:g}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {y:g})">{_esc(ytitle)}</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def correlation_svg(C, cell=2, title="|Phi* Phi|"):
    """Grayscale map of a nonnegative matrix: 0 white, the largest entry black."""
    C = np.asarray(C, dtype=np.float64)
    peak = C.max() if C.size and C.max() > 0 else 1.0
    levels = 255 - np.rint(255.0 * np.clip(C / peak, 0.0, 1.0)).astype(np.int64)
    return gray_svg(levels, cell=cell, title=title)

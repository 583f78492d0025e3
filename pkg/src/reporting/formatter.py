"""
Text, CSV and SVG output of maps, studies and tables.

Reals are written with repr(float), the shortest string that round-trips,
so output never depends on the locale.
"""

import csv
import io
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.solver.manufactured import ConvergenceReport
from src.stability.maps import StabilityMap
from src.verification.equivalence import EquivalenceReport
from src.utils.logging import get_logger

logger = get_logger(__name__)

MAP_HEADER = ["p", "kind", "integrator", "d", "cfl", "stable", "max_amp", "max_re_lambda"]
CONVERGENCE_HEADER = [
    "p",
    "kind",
    "integrator",
    "d",
    "cfl",
    "Ne",
    "l2_error",
    "eoa",
    "steps",
    "residual",
]

STABLE_COLOR = "#2ca02c"
UNSTABLE_COLOR = "#d62728"


def format_number(value: Optional[float]) -> str:
    """Shortest round-trip decimal; empty for None."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def format_complex(value: complex) -> str:
    """a+bj with round-trip parts."""
    imaginary = value.imag
    sign = "-" if math.copysign(1.0, imaginary) < 0 else "+"
    return f"{format_number(value.real)}{sign}{format_number(abs(imaginary))}j"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def map_csv(stability: StabilityMap) -> str:
    """
    One row per node in grid order.

    Args:
        stability: Stability map

    Returns:
        CSV text with header
    """
    rows = (
        [
            str(verdict.p),
            verdict.kind.value,
            verdict.integrator.value,
            format_number(verdict.d),
            format_number(verdict.cfl),
            "1" if verdict.stable else "0",
            format_number(verdict.max_amplification),
            format_number(verdict.max_re_lambda),
        ]
        for verdict in stability
    )
    return _csv_text(MAP_HEADER, rows)


def convergence_csv(report: ConvergenceReport) -> str:
    """
    One row per mesh; the first mesh has an empty EOA.

    Args:
        report: Convergence report

    Returns:
        CSV text with header
    """
    config = report.config
    rows = (
        [
            str(config.p),
            config.method.value,
            config.integrator.value,
            format_number(config.d),
            format_number(config.cfl),
            str(row.cells),
            format_number(row.l2_error),
            format_number(row.eoa),
            str(row.steps),
            format_number(row.residual),
        ]
        for row in report.rows
    )
    return _csv_text(CONVERGENCE_HEADER, rows)


def map_svg(stability: StabilityMap, cell_size: int = 4, margin: int = 40) -> str:
    """
    Two-color heatmap: CFL on the horizontal axis, d on the vertical one
    (d = 1 on top).

    Args:
        stability: Stability map
        cell_size: Pixel size of one node
        margin: Pixel margin holding the axis labels

    Returns:
        SVG document
    """
    rows, columns = stability.shape
    width = columns * cell_size + 2 * margin
    height = rows * cell_size + 2 * margin
    title = f"P{stability.p} {stability.kind.value} {stability.integrator.value}"
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{title}</title>",
    ]
    mask = stability.stable_mask()
    for i in range(rows):
        y = margin + (rows - 1 - i) * cell_size
        for j in range(columns):
            x = margin + j * cell_size
            color = STABLE_COLOR if mask[i, j] else UNSTABLE_COLOR
            lines.append(
                f'<rect x="{x}" y="{y}" width="{cell_size}" height="{cell_size}" fill="{color}"/>'
            )

    bottom = margin + rows * cell_size
    right = margin + columns * cell_size
    labels = [
        (margin, bottom + 16, "start", format_number(stability.cfls[0])),
        (right, bottom + 16, "end", format_number(stability.cfls[-1])),
        ((margin + right) // 2, bottom + 32, "middle", "CFL"),
        (margin - 4, bottom, "end", format_number(stability.distances[0])),
        (margin - 4, margin + 10, "end", format_number(stability.distances[-1])),
        (12, (margin + bottom) // 2, "middle", "d"),
        ((margin + right) // 2, margin - 12, "middle", title),
    ]
    for x, y, anchor, text in labels:
        lines.append(
            f'<text x="{x}" y="{y}" font-family="sans-serif" font-size="12" '
            f'text-anchor="{anchor}">{text}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def periodic_cfl_table(rows: Sequence[Tuple[int, float]]) -> str:
    """
    Table of p, CFL^p_max and the 1/(2p+1) estimate.

    Args:
        rows: (p, CFL^p_max) pairs

    Returns:
        CSV text with header
    """
    return _csv_text(
        ["p", "cfl_max", "estimate"],
        (
            [str(p), format_number(value), format_number(1.0 / (2 * p + 1))]
            for p, value in rows
        ),
    )


def amplification_curve_csv(
    curves: Sequence[Tuple[int, Sequence[Tuple[float, float]]]]
) -> str:
    """Periodic amplification curves, one block of rows per degree."""
    return _csv_text(
        ["p", "cfl", "max_amp"],
        (
            [str(p), format_number(c), format_number(a)]
            for p, curve in curves
            for c, a in curve
        ),
    )


def eigenvalue_lines(eigenvalues: np.ndarray, max_real: Optional[float] = None) -> str:
    """One eigenvalue per line, followed by the max real part when given."""
    lines = [format_complex(complex(value)) for value in eigenvalues]
    if max_real is not None:
        lines.append(f"max_re_lambda {format_number(max_real)}")
    return "\n".join(lines) + "\n"


def equivalence_lines(report: EquivalenceReport) -> str:
    """Per-suite and overall maximum deviations."""
    lines: List[str] = [
        f"{suite.name} {suite.instances} {format_number(suite.max_deviation)}"
        for suite in report.suites
    ]
    lines.append(f"max_deviation {format_number(report.max_deviation)}")
    return "\n".join(lines) + "\n"


def write_text(path: Union[str, Path], text: str) -> Path:
    """
    Write ``text`` to ``path``, creating parent directories.

    Args:
        path: Destination
        text: File contents

    Returns:
        Destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(text)
    logger.info("Wrote %s", path)
    return path

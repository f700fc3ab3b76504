# src/plotting.py
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional

import altair as alt
import pandas as pd

from src.artifacts import read_csv
from src.errors import RatchetValueError

logger = logging.getLogger(__name__)

# scatter and histogram tables exceed altair's 5000-row default
alt.data_transformers.disable_max_rows()


class PlotConfig:
    WIDTH = 480
    HEIGHT = 320
    # Above this many rows a chart is drawn as points instead of a line.
    SCATTER_ROWS = 2_000


def _numeric_columns(frame: pd.DataFrame) -> List[str]:
    return [
        c for c in frame.columns
        if pd.api.types.is_numeric_dtype(frame[c]) and not pd.api.types.is_bool_dtype(frame[c])
    ]


def chart_from_frame(
    frame: pd.DataFrame,
    x: Optional[str] = None,
    ys: Optional[List[str]] = None,
    *,
    log_x: bool = False,
    log_y: bool = False,
    kind: Optional[str] = None,
    title: str = "",
) -> alt.Chart:
    """One series per y column against x (default: first numeric column vs the rest)."""
    numeric = _numeric_columns(frame)
    if not numeric:
        raise RatchetValueError("nothing to plot: no numeric columns")
    x = x or numeric[0]
    ys = ys or [c for c in numeric if c != x]
    missing = [c for c in [x, *ys] if c not in frame.columns]
    if missing or not ys:
        raise RatchetValueError(
            f"cannot plot columns {missing or ys}; available: {', '.join(frame.columns)}"
        )

    long = frame[[x, *ys]].melt(id_vars=[x], var_name="series", value_name="value")
    if log_x:
        long = long[long[x] > 0]
    if log_y:
        long = long[long["value"] > 0]
    kind = kind or ("point" if len(frame) > PlotConfig.SCATTER_ROWS else "line")

    base = alt.Chart(long, title=title)
    mark = base.mark_point(size=8) if kind == "point" else base.mark_line(point=len(frame) <= 50)
    return mark.encode(
        x=alt.X(x, type="quantitative", scale=alt.Scale(type="log" if log_x else "linear")),
        y=alt.Y("value", type="quantitative", scale=alt.Scale(type="log" if log_y else "linear")),
        color=alt.Color("series", type="nominal"),
    ).properties(width=PlotConfig.WIDTH, height=PlotConfig.HEIGHT)


def save_svg(chart: alt.Chart, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chart.save(str(path), format="svg")
    logger.debug("wrote %s", path)
    return path


def plot_csv(
    csv_path: Path,
    out_path: Optional[Path] = None,
    x: Optional[str] = None,
    ys: Optional[List[str]] = None,
    log_x: bool = False,
    log_y: bool = False,
) -> Path:
    """Render an artifact CSV (comment lines skipped) to SVG next to it by default."""
    csv_path = Path(csv_path)
    frame = read_csv(csv_path)
    chart = chart_from_frame(frame, x, ys, log_x=log_x, log_y=log_y, title=csv_path.stem)
    return save_svg(chart, out_path or csv_path.with_suffix(".svg"))

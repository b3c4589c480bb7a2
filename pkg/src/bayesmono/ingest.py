"""Reading response series from text files.

Accepted layouts: one number per line, or ``index,value`` with the value in
the second column. Lines starting with ``#`` and blank lines are skipped.
An index column must be equispaced; it only serves as a sanity check since the
design grid is always i/n.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .step_model import Dataset

GRID_RTOL = 1e-9


class ParseError(ValueError):
    pass


def _number(token: str, path, lineno: int) -> float:
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: cannot parse {token!r} as a number") from None
    if not np.isfinite(value):
        raise ParseError(f"{path}:{lineno}: non-finite value {token!r}")
    return value


def parse_series(text: str, path="<input>") -> tuple[np.ndarray, np.ndarray | None]:
    xs, ys = [], []
    width = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) > 2:
            raise ParseError(f"{path}:{lineno}: expected 1 or 2 columns, got {len(fields)}")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"{path}:{lineno}: inconsistent column count")
        if width == 2:
            xs.append(_number(fields[0], path, lineno))
        ys.append(_number(fields[-1], path, lineno))
    if not ys:
        raise ParseError(f"{path}: no data")
    if len(ys) < 2:
        raise ParseError(f"{path}: need at least 2 observations")
    return np.array(ys), (np.array(xs) if width == 2 else None)


def check_equispaced(x: np.ndarray, rtol: float = GRID_RTOL) -> None:
    """Raise unless ``x`` maps affinely onto i/n, i = 1..n."""
    n = x.size
    span = x[-1] - x[0]
    if span == 0:
        raise ParseError("index column is constant")
    # affine map sending x_1 -> 1/n and x_n -> 1
    u = 1.0 / n + (x - x[0]) * ((n - 1) / n) / span
    grid = np.arange(1, n + 1) / n
    if np.any(np.abs(u - grid) > rtol * grid):
        raise ParseError("index column is not an equispaced grid")


def read_series(path) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    y, x = parse_series(text, path)
    if x is not None:
        check_equispaced(x)
    return Dataset(y)

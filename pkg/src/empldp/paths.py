"""Grid-sampled paths and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class GridPath:
    """A function sampled on a strictly increasing time grid.

    ``step=True`` marks a right-continuous step path whose value on
    [t_i, t_{i+1}) is ``values[i]``; otherwise the path is read as linear
    in F-coordinates between nodes.
    """

    grid: np.ndarray
    values: np.ndarray
    label: str = ""
    step: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise DomainError("grid and values must be 1-D arrays of equal length")
        if grid.size >= 2 and np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.size

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def with_values(self, values, label=None, step=None) -> "GridPath":
        return GridPath(self.grid, values, self.label if label is None else label,
                        self.step if step is None else step)

    def __mul__(self, c: float) -> "GridPath":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    # -- CSV ---------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.grid, self.values):
            buf.write(f"{t:.17g},{v:.17g}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, label: str = "") -> "GridPath":
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        rows = list(csv.reader(lines))
        if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
            raise DomainError("path CSV must start with header 't,value'")
        data = [(float(r[0]), float(r[1])) for r in rows[1:] if r]
        if not data:
            raise DomainError("path CSV has no rows")
        t, v = zip(*data)
        return cls(np.array(t), np.array(v), label)

    @classmethod
    def read_csv(cls, path, label: str = "") -> "GridPath":
        return cls.from_csv(Path(path).read_text(), label or Path(path).stem)


def uniform_grid(T: float, points: int = 1025) -> np.ndarray:
    """``points`` equally spaced times on [0, T] (the default reporting grid)."""
    if points < 2:
        raise DomainError("a grid needs at least two points")
    return np.linspace(0.0, T, points)

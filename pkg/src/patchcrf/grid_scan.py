"""Grid partitioning and patch scan orders.

Cells are addressed as ``(row, col)`` with ``(0, 0)`` at the top-left.
A scan order turns the grid into a sequence; that sequence is the chain
the CRF runs along.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from .exceptions import HilbertGridUnsupported, ImageTooSmall, LengthMismatch

Cell = Tuple[int, int]


class ScanOrder(str, Enum):
    ZIGZAG = "zigzag"
    HILBERT = "hilbert"
    ROW_PRIME = "rowprime"
    ROW_RASTER = "rowraster"

    @classmethod
    def parse(cls, value) -> "ScanOrder":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(o.value for o in cls)
            raise ValueError(f"unknown scan order {value!r} (choose from {choices})") from None


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @classmethod
    def square(cls, side: int) -> "GridSpec":
        return cls(side, side)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PatchRegion:
    """Half-open pixel rectangle ``[top, bottom) x [left, right)`` for one cell."""

    row: int
    col: int
    top: int
    bottom: int
    left: int
    right: int

    @property
    def cell(self) -> Cell:
        return (self.row, self.col)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.bottom - self.top, self.right - self.left)

    def extract(self, image: np.ndarray) -> np.ndarray:
        return image[self.top:self.bottom, self.left:self.right]


def _zigzag(rows: int, cols: int) -> List[Cell]:
    # anti-diagonal d = r + c; odd diagonals run down-left, even ones up-right
    path = []
    for d in range(rows + cols - 1):
        r_lo, r_hi = max(0, d - cols + 1), min(d, rows - 1)
        rs = range(r_lo, r_hi + 1) if d % 2 == 1 else range(r_hi, r_lo - 1, -1)
        path.extend((r, d - r) for r in rs)
    return path


def _hilbert_d2xy(side: int, d: int) -> Tuple[int, int]:
    x = y = 0
    s = 1
    t = d
    while s < side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def _hilbert(side: int) -> List[Cell]:
    # y indexes rows, giving the base U (0,0),(1,0),(1,1),(0,1)
    cells = []
    for d in range(side * side):
        x, y = _hilbert_d2xy(side, d)
        cells.append((y, x))
    return cells


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


def scan_sequence(grid: GridSpec, order) -> List[Cell]:
    """Enumerate every cell of ``grid`` once, in the given scan order."""
    order = ScanOrder.parse(order)
    rows, cols = grid.rows, grid.cols
    if order is ScanOrder.ROW_RASTER:
        return [(r, c) for r in range(rows) for c in range(cols)]
    if order is ScanOrder.ROW_PRIME:
        return [(r, c if r % 2 == 0 else cols - 1 - c)
                for r in range(rows) for c in range(cols)]
    if order is ScanOrder.ZIGZAG:
        return _zigzag(rows, cols)
    if rows != cols or not _is_power_of_two(rows):
        raise HilbertGridUnsupported(
            f"Hilbert order needs a square power-of-two grid, got {rows}x{cols}")
    return _hilbert(rows)


def partition_image(image: np.ndarray, grid: GridSpec) -> List[PatchRegion]:
    """Tile ``image`` into ``grid`` cells using floor boundaries, row-major."""
    height, width = np.shape(image)[:2]
    if height < grid.rows or width < grid.cols:
        raise ImageTooSmall(
            f"{width}x{height} image cannot be split into a "
            f"{grid.rows}x{grid.cols} grid without empty cells")
    ys = [r * height // grid.rows for r in range(grid.rows + 1)]
    xs = [c * width // grid.cols for c in range(grid.cols + 1)]
    return [PatchRegion(r, c, ys[r], ys[r + 1], xs[c], xs[c + 1])
            for r in range(grid.rows) for c in range(grid.cols)]


def order_patches(regions: Sequence[PatchRegion], path: Sequence[Cell]) -> List[PatchRegion]:
    if len(regions) != len(path):
        raise LengthMismatch(f"{len(regions)} regions but path has {len(path)} cells")
    by_cell = {reg.cell: reg for reg in regions}
    try:
        return [by_cell[tuple(cell)] for cell in path]
    except KeyError as exc:
        raise LengthMismatch(f"path cell {exc.args[0]} has no region") from None

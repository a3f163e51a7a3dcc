"""
Partition raster: atom index at every pixel center of a 2-D box, written as
an ASCII PGM (P2, gray = atom · 85) plus a CSV of the encoder points.
Row 0 of the image is the top edge (y = ymax).
"""

import csv
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from gridworld.env import enumerate_observations
from language.model import Language
from semantics.partition import Partition
from utils.validators import validate_bounds, validate_output_path, validate_positive_int

logger = logging.getLogger(__name__)

GRAY_STEP = 85
MAX_GRAY = 255
INFLATE = 0.2
POINT_COLUMNS = ["obs", "scout_row", "scout_col", "treasure_row", "treasure_col", "x", "y", "atom"]


def default_bounds(lang: Language) -> Tuple[float, float, float, float]:
    """Bounding box of the encoder table, widened by 20% around its center."""
    table = lang.encoder.table
    lo, hi = table.min(axis=0), table.max(axis=0)
    center = (lo + hi) / 2
    half = (hi - lo) / 2 * (1 + INFLATE)
    half = np.where(half > 0, half, 1.0)
    return (float(center[0] - half[0]), float(center[0] + half[0]),
            float(center[1] - half[1]), float(center[1] + half[1]))


def raster_atoms(lang: Language, bounds: Sequence[float], resolution: int) -> np.ndarray:
    """
    Atom index at each pixel center.

    Returns:
        int array [resolution, resolution]; [r, c] is at
        x = xmin + (c + 0.5)·w, y = ymax − (r + 0.5)·h
    """
    xmin, xmax, ymin, ymax = validate_bounds(bounds)
    resolution = validate_positive_int(resolution, "resolution")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")

    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymax - (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    X, Y = np.meshgrid(xs, ys)
    points = np.stack([X.ravel(), Y.ravel()], axis=1)
    return Partition(lang).atoms(points).reshape(resolution, resolution)


def write_pgm(atoms: np.ndarray, path: Union[str, Path]) -> Path:
    p = validate_output_path(path)
    h, w = atoms.shape
    lines = ["P2", f"{w} {h}", str(MAX_GRAY)]
    lines += [" ".join(str(int(a) * GRAY_STEP) for a in row) for row in atoms]
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def points_path(out_path: Union[str, Path]) -> Path:
    p = Path(out_path)
    return p.with_name(f"{p.stem}_points.csv")


def write_points(lang: Language, path: Union[str, Path]) -> Path:
    p = validate_output_path(path)
    table = lang.encoder.table
    atoms = Partition(lang).atoms(table)
    with open(p, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(POINT_COLUMNS)
        for k, obs in enumerate(enumerate_observations(lang.grid)):
            writer.writerow([k, *obs.as_tuple(), repr(float(table[k, 0])), repr(float(table[k, 1])),
                             int(atoms[k])])
    return p


def partition_raster(lang: Language, out_path: Union[str, Path],
                     bounds: Optional[Sequence[float]] = None, resolution: int = 200) -> Path:
    """
    Write the PGM raster of lang's atoms and <stem>_points.csv beside it.

    Raises:
        ValueError: Degenerate bounds or resolution < 2
    """
    bounds = default_bounds(lang) if bounds is None else bounds
    atoms = raster_atoms(lang, bounds, resolution)
    p = write_pgm(atoms, out_path)
    write_points(lang, points_path(p))
    shares = np.bincount(atoms.ravel(), minlength=4) / atoms.size
    logger.info(f"Wrote {resolution}x{resolution} raster to {p} (atom shares "
                f"{', '.join(f'{s:.2f}' for s in shares)})")
    return p

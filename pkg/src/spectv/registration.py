"""Landmark-driven dense registration and image warping.

The displacement field v maps coordinates of the first image to sample
locations in the second, x -> x + v(x).  Each component of v is the
minimal-Dirichlet-energy interpolant of the landmark displacements,
i.e. a constrained Neumann Laplace solve per component.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import laplace_solve_with_constraints
from .image import check_image, from_3d, to_3d


@dataclass(frozen=True)
class LandmarkSet:
    """Subpixel landmark coordinates, columns (x, y), optional labels."""

    points: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise ValueError("landmarks must be a non-empty (N, 2) array of (x, y)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        labels = tuple(self.labels)
        if labels and len(labels) != pts.shape[0]:
            raise ValueError("label count does not match point count")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class RegistrationField:
    """Dense per-pixel displacement, v[..., 0] = dx, v[..., 1] = dy."""

    v: np.ndarray
    merged_duplicates: bool = False

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 2:
            raise ValueError(f"field must have shape (H, W, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "v", v)

    @property
    def shape(self):
        return self.v.shape[:2]


def solve_field(src, dst, shape):
    """Dirichlet-minimal displacement field from matched landmarks.

    Parameters
    ----------
    src, dst : LandmarkSet or (N, 2) array
        Matched points, equal counts, same order; src coordinates must
        lie inside the grid.
    shape : (H, W)

    Returns
    -------
    RegistrationField
        Constraints are placed at the nearest pixel of each src point
        with the subpixel displacement dst - src as value; landmarks
        rounding to the same pixel are merged by averaging (flagged on
        the result and warned).
    """
    src = src if isinstance(src, LandmarkSet) else LandmarkSet(src)
    dst = dst if isinstance(dst, LandmarkSet) else LandmarkSet(dst)
    if len(src) != len(dst):
        raise ValueError(f"landmark counts differ: {len(src)} vs {len(dst)}")
    h, w = shape
    disp = dst.points - src.points
    sites = {}
    for (x, y), d in zip(src.points, disp):
        xi = int(round(x))
        yi = int(round(y))
        if not (0 <= xi < w and 0 <= yi < h):
            raise ValueError(f"landmark ({x}, {y}) outside {w}x{h} grid")
        sites.setdefault((xi, yi), []).append(d)
    merged = any(len(ds) > 1 for ds in sites.values())
    if merged:
        warnings.warn("landmarks sharing a pixel were merged by averaging",
                      stacklevel=2)
    constraints_x = []
    constraints_y = []
    for pix, ds in sites.items():
        d_mean = np.mean(ds, axis=0)
        constraints_x.append((pix, d_mean[0]))
        constraints_y.append((pix, d_mean[1]))
    vx = laplace_solve_with_constraints(shape, constraints_x)
    vy = laplace_solve_with_constraints(shape, constraints_y)
    return RegistrationField(v=np.stack([vx, vy], axis=-1), merged_duplicates=merged)


def identity_field(shape):
    """Zero displacement on an (H, W) grid."""
    h, w = shape
    return RegistrationField(v=np.zeros((h, w, 2)))


def warp(img, field):
    """Sample img at x + v(x) with bilinear interpolation.

    Out-of-bounds samples clamp to the nearest edge pixel.  Warping is
    linear in intensities, so it commutes with band summation.
    """
    img = check_image(img)
    if field.shape != img.shape[:2]:
        raise ValueError(f"field grid {field.shape} does not match image {img.shape[:2]}")
    h, w = field.shape
    yy, xx = np.mgrid[0:h, 0:w]
    rows = yy + field.v[:, :, 1]
    cols = xx + field.v[:, :, 0]
    img3 = to_3d(img)
    out = np.empty_like(img3)
    for c in range(img3.shape[2]):
        out[:, :, c] = ndimage.map_coordinates(img3[:, :, c], [rows, cols],
                                               order=1, mode="nearest")
    return from_3d(out, img.ndim)


def warp_decomposition(d, field):
    """Warp every band of a decomposition; the constant part is
    unaffected (warping fixes constants)."""
    warped = np.stack([warp(band, field) for band in d.bands])
    return type(d)(bands=warped, times=d.times, mean=d.mean,
                   variant=d.variant, reports=d.reports)

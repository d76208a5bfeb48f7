"""Fuzzy region masks and spatially varying band filters.

Masks are single-channel [0,1] images; a normalized set forms a
partition of unity so region filters blend convexly.  A spatially
varying filter is the mask-weighted sum of per-region band filters,
H(x,.) = sum_r m_r(x) h_r(.), evaluated per channel.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .transform import BandFilter


@dataclass(frozen=True)
class RegionMaskSet:
    """Named fuzzy masks over one grid, values in [0, 1]."""

    names: tuple
    masks: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        m = np.asarray(self.masks, dtype=np.float64)
        if m.ndim != 3 or m.shape[0] == 0:
            raise ValueError("masks must be a non-empty (R, H, W) stack")
        if len(names) != m.shape[0]:
            raise ValueError("one name per mask required")
        if len(set(names)) != len(names):
            raise ValueError("mask names must be unique")
        if m.min() < -1e-9 or m.max() > 1.0 + 1e-9:
            raise ValueError("mask values must lie in [0, 1]")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "masks", np.clip(m, 0.0, 1.0))

    @classmethod
    def from_dict(cls, regions):
        names = tuple(regions)
        return cls(names=names, masks=np.stack([regions[n] for n in names]))

    @property
    def shape(self):
        return self.masks.shape[1:]

    def __getitem__(self, name):
        return self.masks[self.names.index(name)]

    def with_background(self, name="background"):
        """Append max(0, 1 - sum of masks) as an extra region."""
        gap = np.clip(1.0 - self.masks.sum(axis=0), 0.0, 1.0)
        return RegionMaskSet(names=self.names + (name,),
                             masks=np.concatenate([self.masks, gap[None]]))

    def normalized(self):
        """Rescale so the masks sum to one at every pixel.

        Raises ValueError where total coverage is (near) zero; call
        with_background first if the regions do not tile the grid.
        """
        total = self.masks.sum(axis=0)
        if total.min() < 1e-6:
            raise ValueError("masks leave pixels uncovered; add a background region")
        return RegionMaskSet(names=self.names, masks=self.masks / total)


def feather(mask, radius):
    """Soften a mask by Gaussian blur with sigma = radius / 2.

    Edge handling replicates border values, so a constant mask is a
    fixed point for any radius; radius 0 returns the input unchanged.
    """
    if radius < 0:
        raise ValueError("feather radius must be non-negative")
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("feather expects a single-channel mask")
    if radius == 0:
        return m.copy()
    out = ndimage.gaussian_filter(m, sigma=radius / 2.0, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def ellipse_mask(shape, center, axes):
    """Binary axis-aligned ellipse; center (x, y), axes (rx, ry)."""
    h, w = shape
    cx, cy = center
    rx, ry = axes
    if rx <= 0 or ry <= 0:
        raise ValueError("ellipse axes must be positive")
    yy, xx = np.mgrid[0:h, 0:w]
    return (((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0).astype(np.float64)


def landmark_region_mask(shape, points, pad=4.0):
    """Ellipse prior covering a landmark cluster (eyes/mouth seeds)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty (N, 2) array")
    center = pts.mean(axis=0)
    half = (pts.max(axis=0) - pts.min(axis=0)) / 2.0
    axes = np.maximum(half + pad, 1.0)
    return ellipse_mask(shape, center, axes)


@dataclass(frozen=True)
class SpatialFilter:
    """Mask-blended band filter H(x,.) = sum_r m_r(x) h_r(.).

    weights has shape (R, C, K): per region, per channel, per band;
    C = 1 applies one curve to every image channel.  masks are a
    partition of unity, so H(x,.) stays in the convex hull of the
    region filters.
    """

    masks: np.ndarray
    weights: np.ndarray
    mean_weights: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masks, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        mw = np.asarray(self.mean_weights, dtype=np.float64)
        if m.ndim != 3 or w.ndim != 3 or mw.shape != w.shape[:2]:
            raise ValueError("expected masks (R,H,W), weights (R,C,K), means (R,C)")
        if m.shape[0] != w.shape[0]:
            raise ValueError("one weight row per region required")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mw))):
            raise ValueError("filter weights must be finite")
        object.__setattr__(self, "masks", m)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mean_weights", mw)

    @property
    def n_bands(self):
        return self.weights.shape[2]

    @property
    def shape(self):
        return self.masks.shape[1:]

    def weight_map(self, channel, k):
        """H(x, k) for one channel as an (H, W) image."""
        c = 0 if self.weights.shape[1] == 1 else channel
        return np.tensordot(self.weights[:, c, k], self.masks, axes=1)

    def mean_map(self, channel):
        c = 0 if self.mean_weights.shape[1] == 1 else channel
        return np.tensordot(self.mean_weights[:, c], self.masks, axes=1)

    def channel_count(self, image_channels):
        c = self.weights.shape[1]
        if c not in (1, image_channels):
            raise ValueError(
                f"filter has {c} channel curves, image has {image_channels} channels")
        return image_channels


def assemble_spatial_filter(masks, per_region):
    """Blend per-region band filters through a mask partition.

    Parameters
    ----------
    masks : RegionMaskSet
        Normalized internally; must cover the grid.
    per_region : mapping region name -> BandFilter or sequence of
        BandFilter (one per channel); every mask region needs an entry
        and all filters must share one band count.
    """
    masks = masks.normalized()
    rows = []
    mean_rows = []
    n_channels = None
    n_bands = None
    for name in masks.names:
        if name not in per_region:
            raise ValueError(f"no filter given for region '{name}'")
        entry = per_region[name]
        filters = [entry] if isinstance(entry, BandFilter) else list(entry)
        if n_channels is None:
            n_channels = len(filters)
        elif len(filters) != n_channels:
            raise ValueError("regions disagree on channel count")
        for h in filters:
            if n_bands is None:
                n_bands = h.weights.size
            elif h.weights.size != n_bands:
                raise ValueError("regions disagree on band count")
        rows.append([h.weights for h in filters])
        mean_rows.append([h.mean_weight for h in filters])
    return SpatialFilter(masks=masks.masks, weights=np.asarray(rows),
                         mean_weights=np.asarray(mean_rows))


def uniform_spatial_filter(shape, filters):
    """Spatial filter that applies the same BandFilter(s) everywhere."""
    h, w = shape
    masks = RegionMaskSet(names=("all",), masks=np.ones((1, h, w)))
    return assemble_spatial_filter(masks, {"all": filters})

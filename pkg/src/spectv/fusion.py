"""Spectral image fusion: combine two decompositions under spatially
varying filters and a registration field.

The fused image on the first image's grid is

    u(x) = sum_k H1(x,k) psi1_k(x) + sum_k H2(x+v(x),k) psi2_k(x+v(x))
           + w1*mean1 + w2*mean2

Both the bands and the filter weights of the second image are sampled
through the field.  The constant parts are combined with the job's
mean weights; the spatial filters' own mean weights are not consulted
here (they serve single-image filtering).

Band index 0 is the coarsest scale, so "low frequencies" means small
indices throughout.
"""

from dataclasses import dataclass

import numpy as np

from .image import check_image, from_3d, lcc_to_rgb, rgb_to_lcc
from .masks import (RegionMaskSet, SpatialFilter, assemble_spatial_filter,
                    uniform_spatial_filter)
from .registration import RegistrationField, identity_field, solve_field, warp
from .transform import BandFilter, decompose_gf, decompose_iss, default_iss_schedule


class StageError(RuntimeError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class FusionJob:
    decomposition_1: object
    decomposition_2: object
    field: RegistrationField
    filter_1: SpatialFilter
    filter_2: SpatialFilter
    mean_weights: tuple = (1.0, 0.0)


def fuse(job):
    """Evaluate the fusion formula for a prepared job.

    The output lives on decomposition_1's grid.  Filtering is linear in
    each decomposition separately; with an identity filter on one side
    and zeros on the other it degenerates to that side's
    reconstruction (given matching mean weights).
    """
    d1, d2 = job.decomposition_1, job.decomposition_2
    k = d1.n_bands
    if d2.n_bands != k:
        raise ValueError(f"band counts differ: {k} vs {d2.n_bands}")
    if job.filter_1.n_bands != k or job.filter_2.n_bands != k:
        raise ValueError("filter band count does not match decompositions")
    b1 = d1.bands if d1.bands.ndim == 4 else d1.bands[..., None]
    b2 = d2.bands if d2.bands.ndim == 4 else d2.bands[..., None]
    nc = b1.shape[3]
    if b2.shape[3] != nc:
        raise ValueError(f"channel counts differ: {nc} vs {b2.shape[3]}")
    grid = b1.shape[1:3]
    if b2.shape[1:3] != grid or job.field.shape != grid:
        raise ValueError("decompositions and field must share one grid")
    if job.filter_1.shape != grid or job.filter_2.shape != grid:
        raise ValueError("filters must live on the decomposition grid")
    job.filter_1.channel_count(nc)
    job.filter_2.channel_count(nc)

    w1, w2 = (np.broadcast_to(np.asarray(w, dtype=np.float64), (nc,))
              for w in job.mean_weights)
    mean1 = np.broadcast_to(np.asarray(d1.mean), (nc,))
    mean2 = np.broadcast_to(np.asarray(d2.mean), (nc,))

    warped_masks = np.stack([warp(m, job.field) for m in job.filter_2.masks])
    out = np.empty(grid + (nc,))
    for c in range(nc):
        acc = np.full(grid, w1[c] * mean1[c] + w2[c] * mean2[c])
        for i in range(k):
            acc += job.filter_1.weight_map(c, i) * b1[i, :, :, c]
            h2 = np.tensordot(_channel_weights(job.filter_2, c)[:, i], warped_masks, axes=1)
            acc += h2 * warp(b2[i, :, :, c], job.field)
        out[:, :, c] = acc
    return from_3d(out, d1.bands.ndim - 1)


def _channel_weights(sf, c):
    return sf.weights[:, 0 if sf.weights.shape[1] == 1 else c, :]


def _decompose(img, variant, n_bands, opts):
    if variant == "iss":
        return decompose_iss(img, default_iss_schedule(n_bands), opts=opts)
    if variant == "gf":
        return decompose_gf(img, n_bands=n_bands, opts=opts)
    raise ValueError(f"unknown variant '{variant}' (expected 'iss' or 'gf')")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def preset_face_fusion(f1, f2, landmarks_1, landmarks_2, masks, filter_profile="face-fusion",
                       n_bands=15, variant="iss", mean_weights=(1.0, 0.0), opts=None):
    """Facial fusion pipeline: LCC transform, per-channel decomposition,
    Dirichlet registration, region filter assembly, fusion, RGB return.

    filter_profile is a profile name or an explicit pair of per-region
    filter maps.  With named profiles, region names containing "eye" or
    "mouth" receive the feature curves and all other regions the base
    curves.  Failures carry the pipeline stage that raised them.
    """
    f1 = check_image(f1, channels=3)
    f2 = check_image(f2, channels=3)
    if f2.shape != f1.shape:
        raise StageError("input", ValueError("images must share one grid"))
    g1 = _stage("color", rgb_to_lcc, f1)
    g2 = _stage("color", rgb_to_lcc, f2)
    d1 = _stage("decompose", _decompose, g1, variant, n_bands, opts)
    d2 = _stage("decompose", _decompose, g2, variant, n_bands, opts)
    field = _stage("registration", solve_field, landmarks_1, landmarks_2, f1.shape[:2])
    if isinstance(filter_profile, str):
        per_region_1, per_region_2 = _stage("filters", profile_region_filters,
                                            filter_profile, n_bands, masks.names)
    else:
        per_region_1, per_region_2 = filter_profile
    sf1 = _stage("filters", assemble_spatial_filter, masks, per_region_1)
    sf2 = _stage("filters", assemble_spatial_filter, masks, per_region_2)
    fused = _stage("fuse", fuse, FusionJob(d1, d2, field, sf1, sf2, mean_weights))
    return _stage("color", lcc_to_rgb, fused)


def preset_object_insertion(background, obj, object_mask, k_lo, field=None,
                            n_bands=15, variant="iss", gain=1.0, opts=None):
    """Insert an object by taking fine bands from the object image
    inside the mask while the background keeps all low frequencies,
    colors and shadows (mean weights (1, 0)).

    k_lo is 1-based: bands k >= k_lo come from the object image inside
    the mask (scaled by gain), bands k < k_lo and the constant part
    from the background everywhere.
    """
    background = check_image(background)
    obj = check_image(obj)
    if obj.shape != background.shape:
        raise StageError("input", ValueError("images must share one grid"))
    _check_band_split(k_lo, n_bands)
    mask = np.asarray(object_mask, dtype=np.float64)
    if mask.shape != background.shape[:2]:
        raise StageError("input", ValueError("mask grid does not match images"))
    d1 = _stage("decompose", _decompose, background, variant, n_bands, opts)
    d2 = _stage("decompose", _decompose, obj, variant, n_bands, opts)
    if field is None:
        field = identity_field(background.shape[:2])
    k = d1.n_bands
    lo = (np.arange(k) < k_lo - 1).astype(np.float64)
    hi = 1.0 - lo
    regions = RegionMaskSet(names=("object", "scene"),
                            masks=np.stack([mask, 1.0 - mask]))
    ones = BandFilter(np.ones(k))
    sf1 = _stage("filters", assemble_spatial_filter, regions,
                 {"object": BandFilter(lo), "scene": ones})
    sf2 = _stage("filters", assemble_spatial_filter, regions,
                 {"object": BandFilter(gain * hi), "scene": BandFilter(np.zeros(k))})
    return _stage("fuse", fuse, FusionJob(d1, d2, field, sf1, sf2, (1.0, 0.0)))


def preset_style_transfer(content, style, band_split, gain=1.0,
                          n_bands=15, variant="iss", opts=None):
    """Replace fine bands of the content by (amplified) style bands.

    band_split is 1-based: content keeps bands k < band_split plus its
    constant part; style supplies bands k >= band_split scaled by
    gain.  gain > 1 exaggerates medium/high frequencies for painterly
    effects; the images are assumed co-registered.
    """
    content = check_image(content)
    style = check_image(style)
    if style.shape != content.shape:
        raise StageError("input", ValueError("images must share one grid"))
    _check_band_split(band_split, n_bands)
    d1 = _stage("decompose", _decompose, content, variant, n_bands, opts)
    d2 = _stage("decompose", _decompose, style, variant, n_bands, opts)
    k = d1.n_bands
    lo = (np.arange(k) < band_split - 1).astype(np.float64)
    grid = content.shape[:2]
    sf1 = uniform_spatial_filter(grid, BandFilter(lo))
    sf2 = uniform_spatial_filter(grid, BandFilter(gain * (1.0 - lo)))
    return _stage("fuse", fuse,
                  FusionJob(d1, d2, identity_field(grid), sf1, sf2, (1.0, 0.0)))


def _check_band_split(k_lo, n_bands):
    if not 1 <= k_lo <= n_bands + 1:
        raise ValueError(f"band split {k_lo} outside 1..{n_bands + 1}")


def region_filters_or_zero(spec, names):
    """Image-2 filters from a parsed spec, all-zero when absent."""
    if spec.has_image(2):
        return spec.region_filters(2)
    zero = tuple(BandFilter(np.zeros(spec.n_bands)) for _ in range(spec.channels))
    return {n: zero for n in names}


def fuse_with_spec(d1, d2, field, masks, spec):
    """Fuse two decompositions under the filters of a parsed spec.

    This is the single evaluation path shared by the CLI and the
    preview service, so both produce identical pixels for identical
    inputs.
    """
    sf1 = _stage("filters", assemble_spatial_filter, masks, spec.region_filters(1))
    sf2 = _stage("filters", assemble_spatial_filter, masks,
                 region_filters_or_zero(spec, masks.names))
    return _stage("fuse", fuse,
                  FusionJob(d1, d2, field, sf1, sf2, (spec.omega1, spec.omega2)))


def _ramp(k, start, stop):
    return np.linspace(start, stop, k)


def profile_region_filters(profile, n_bands, region_names):
    """Per-region filter maps (image 1, image 2) for a named profile.

    Curves are qualitative shapes, not values from a reference
    implementation: the face profile keeps low luminance frequencies
    from image 1, a good amount of both images' high frequencies, and
    weights chrominance toward image 1; eye/mouth regions pull their
    detail from image 2 instead.
    """
    k = n_bands
    ones = BandFilter(np.ones(k))
    zeros = BandFilter(np.zeros(k))
    if profile == "identity-1":
        return ({n: ones for n in region_names}, {n: zeros for n in region_names})
    if profile == "identity-2":
        return ({n: zeros for n in region_names}, {n: ones for n in region_names})
    if profile == "face-fusion":
        base_1 = (BandFilter(_ramp(k, 1.0, 0.7)),   # L: low from 1, share highs
                  BandFilter(np.full(k, 0.8)),      # chrominance toward image 1
                  BandFilter(np.full(k, 0.8)))
        base_2 = (BandFilter(_ramp(k, 0.0, 0.7)),
                  BandFilter(np.full(k, 0.2)),
                  BandFilter(np.full(k, 0.2)))
        feat_1 = (BandFilter(_ramp(k, 0.7, 0.0)),   # features come from image 2
                  BandFilter(np.full(k, 0.6)),
                  BandFilter(np.full(k, 0.6)))
        feat_2 = (BandFilter(_ramp(k, 0.3, 1.0)),
                  BandFilter(np.full(k, 0.4)),
                  BandFilter(np.full(k, 0.4)))
        per_1 = {}
        per_2 = {}
        for name in region_names:
            is_feature = "eye" in name.lower() or "mouth" in name.lower()
            per_1[name] = feat_1 if is_feature else base_1
            per_2[name] = feat_2 if is_feature else base_2
        return per_1, per_2
    raise ValueError(f"unknown filter profile '{profile}'")

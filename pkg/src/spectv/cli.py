"""Command-line pipeline: decompose, reconstruct, filter, fuse,
register, feather.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 I/O
failure.  All commands are deterministic; re-running overwrites
outputs identically.  SPECTV_THREADS caps the image-codec thread
count and is the only environment variable consulted.
"""

import argparse
import os
import sys

import cv2
import numpy as np

from . import bandio
from .fusion import (StageError, fuse_with_spec, preset_face_fusion,
                     preset_object_insertion, preset_style_transfer,
                     region_filters_or_zero)
from .grid import NumericalError
from .image import lcc_to_rgb, load_image, offset_encode, rgb_to_lcc, save_image
from .masks import RegionMaskSet, feather
from .registration import identity_field, solve_field
from .rof import SolverOptions
from .transform import (decompose_gf, decompose_iss, default_iss_schedule,
                        reconstruct)


def cmd_decompose(args):
    img = load_image(args.input)
    img, colorspace = _to_colorspace(img, args.colorspace)
    d = _decompose(img, args)
    bandio.save_bands(d, args.out, colorspace=colorspace)
    bad = sum(1 for r in d.reports if not r.converged)
    if bad:
        print(f"warning: {bad} subproblem(s) did not reach tolerance", file=sys.stderr)
    print(f"wrote {d.n_bands}-band stack to {args.out}")


def cmd_reconstruct(args):
    d, manifest = bandio.load_bands(args.bands)
    out = reconstruct(d)
    if manifest.get("colorspace") == "lcc":
        out = lcc_to_rgb(out)
    save_image(out, args.out, bit_depth=args.bit_depth)
    print(f"wrote {args.out}")


def cmd_filter(args):
    d, manifest = bandio.load_bands(args.bands)
    spec = bandio.load_filter_spec(args.filter_spec)
    if spec.n_bands != d.n_bands:
        raise ValueError(f"spec has {spec.n_bands} bands, stack has {d.n_bands}")
    if len(spec.regions) != 1:
        raise ValueError("filtering a band stack requires a single-region spec"
                         " (regions need masks, which only fuse supports)")
    channels = d.bands.shape[3] if d.bands.ndim == 4 else 1
    if spec.channels not in (1, channels):
        raise ValueError(f"spec has {spec.channels} channel curves, stack has {channels}")
    bands4 = d.bands if d.bands.ndim == 4 else d.bands[..., None]
    mean = np.broadcast_to(np.asarray(d.mean), (channels,))
    out = np.empty(bands4.shape[1:])
    for c in range(channels):
        bf = spec.band_filter(image=1, channel=min(c, spec.channels - 1))
        out[:, :, c] = np.tensordot(bf.weights, bands4[:, :, :, c], axes=1) \
            + bf.mean_weight * mean[c]
    if d.bands.ndim == 3:
        out = out[:, :, 0]
    if manifest.get("colorspace") == "lcc":
        out = lcc_to_rgb(out)
    if args.offset:
        out = offset_encode(out)
    save_image(out, args.out, bit_depth=args.bit_depth)
    print(f"wrote {args.out}")


def cmd_fuse(args):
    _validate_fuse_inputs(args)
    f1 = load_image(args.image1)
    f2 = load_image(args.image2)
    opts = _solver_opts(args)
    if args.preset == "face":
        lm1 = bandio.load_landmarks(args.landmarks1)
        lm2 = bandio.load_landmarks(args.landmarks2)
        masks = _load_masks(args.mask, f1.shape[:2], args.feather_radius)
        profile = args.profile
        mean_weights = (1.0, 0.0)
        if args.filter_spec:
            spec = bandio.load_filter_spec(args.filter_spec)
            _check_spec(spec, args.bands, 3, masks.names)
            profile = (spec.region_filters(1), region_filters_or_zero(spec, masks.names))
            mean_weights = (spec.omega1, spec.omega2)
        out = preset_face_fusion(f1, f2, lm1, lm2, masks, filter_profile=profile,
                                 n_bands=args.bands, variant=args.variant,
                                 mean_weights=mean_weights, opts=opts)
    elif args.preset == "insert":
        mask = feather(load_image(args.mask[0].split("=", 1)[-1]), args.feather_radius)
        field = None
        if args.landmarks1 and args.landmarks2:
            lm1 = bandio.load_landmarks(args.landmarks1)
            lm2 = bandio.load_landmarks(args.landmarks2)
            field = solve_field(lm1, lm2, f1.shape[:2])
        out = preset_object_insertion(f1, f2, mask, args.band_split, field=field,
                                      n_bands=args.bands, variant=args.variant,
                                      gain=args.gain, opts=opts)
    elif args.preset == "style":
        out = preset_style_transfer(f1, f2, args.band_split, gain=args.gain,
                                    n_bands=args.bands, variant=args.variant, opts=opts)
    else:  # spec: the raw fusion formula driven by a filter-spec file
        out = _fuse_from_spec(f1, f2, args, opts)
    save_image(out, args.out, bit_depth=args.bit_depth)
    print(f"wrote {args.out}")


def cmd_register(args):
    lm1 = bandio.load_landmarks(args.landmarks1)
    lm2 = bandio.load_landmarks(args.landmarks2)
    shape = _grid_shape(args)
    field = solve_field(lm1, lm2, shape)
    bandio.save_field(field, args.out)
    print(f"wrote {args.out}")


def cmd_feather(args):
    mask = load_image(args.input)
    if mask.ndim != 2:
        raise ValueError("feather expects a grayscale mask image")
    save_image(feather(mask, args.radius), args.out, bit_depth=args.bit_depth)
    print(f"wrote {args.out}")


def _decompose(img, args):
    opts = _solver_opts(args)
    if args.variant == "iss":
        schedule = default_iss_schedule(args.bands, args.schedule_base, args.schedule_ratio)
        return decompose_iss(img, schedule, opts=opts)
    return decompose_gf(img, n_bands=args.bands, opts=opts)


def _solver_opts(args):
    return SolverOptions(tol=args.tol, max_iter=args.max_iter)


def _to_colorspace(img, colorspace):
    if colorspace == "auto":
        colorspace = "rgb" if img.ndim == 3 else "gray"
    if colorspace == "lcc":
        return rgb_to_lcc(img), "lcc"
    if colorspace == "rgb" and img.ndim != 3:
        raise ValueError("rgb colorspace needs a 3-channel input")
    if colorspace == "gray" and img.ndim != 2:
        raise ValueError("gray colorspace needs a single-channel input")
    return img, colorspace


def _load_masks(mask_args, shape, radius):
    regions = {}
    for entry in mask_args:
        if "=" not in entry:
            raise ValueError(f"mask argument must be name=path, got {entry!r}")
        name, _, path = entry.partition("=")
        m = load_image(path)
        if m.ndim != 2:
            raise ValueError(f"mask '{name}' must be grayscale")
        if m.shape != tuple(shape):
            raise ValueError(f"mask '{name}' grid {m.shape} does not match image {shape}")
        regions[name] = feather(m, radius) if radius > 0 else m
    masks = RegionMaskSet.from_dict(regions)
    if "background" not in masks.names:
        masks = masks.with_background()
    return masks


def _check_spec(spec, n_bands, channels, names):
    if spec.n_bands != n_bands:
        raise ValueError(f"spec has {spec.n_bands} bands, pipeline uses {n_bands}")
    if spec.channels not in (1, channels):
        raise ValueError(f"spec has {spec.channels} channel curves, expected {channels}")
    missing = [n for n in names if n not in spec.regions]
    if missing:
        raise ValueError(f"spec lacks filters for regions: {', '.join(missing)}")


def _fuse_from_spec(f1, f2, args, opts):
    spec = bandio.load_filter_spec(args.filter_spec)
    img1, colorspace = _to_colorspace(f1, args.colorspace)
    img2, _ = _to_colorspace(f2, args.colorspace)
    channels = img1.shape[2] if img1.ndim == 3 else 1
    if args.mask:
        masks = _load_masks(args.mask, img1.shape[:2], args.feather_radius)
    else:
        masks = RegionMaskSet(names=spec.regions[:1],
                              masks=np.ones((1,) + img1.shape[:2]))
    _check_spec(spec, args.bands, channels, masks.names)
    d1 = _decompose(img1, args)
    d2 = _decompose(img2, args)
    if args.landmarks1 and args.landmarks2:
        lm1 = bandio.load_landmarks(args.landmarks1)
        lm2 = bandio.load_landmarks(args.landmarks2)
        field = solve_field(lm1, lm2, img1.shape[:2])
    else:
        field = identity_field(img1.shape[:2])
    out = fuse_with_spec(d1, d2, field, masks, spec)
    if colorspace == "lcc":
        out = lcc_to_rgb(out)
    return out


def _validate_fuse_inputs(args):
    # fail before any work so partial outputs are never written
    def need_file(path, what):
        if not path:
            raise ValueError(f"{args.preset} preset requires {what}")
        if not os.path.isfile(path):
            raise ValueError(f"{what} file not found: {path}")

    need_file(args.image1, "--image1")
    need_file(args.image2, "--image2")
    if args.preset == "face":
        need_file(args.landmarks1, "--landmarks1")
        need_file(args.landmarks2, "--landmarks2")
        if not args.mask:
            raise ValueError("face preset requires at least one --mask name=path")
        if not args.profile and not args.filter_spec:
            raise ValueError("face preset requires --profile or --filter-spec")
    elif args.preset == "insert":
        if len(args.mask) != 1:
            raise ValueError("insert preset requires exactly one --mask")
        if args.band_split is None:
            raise ValueError("insert preset requires --band-split")
    elif args.preset == "style":
        if args.band_split is None:
            raise ValueError("style preset requires --band-split")
    elif args.preset == "spec":
        need_file(args.filter_spec, "--filter-spec")
    for entry in args.mask or []:
        path = entry.partition("=")[2] if "=" in entry else entry
        if not os.path.isfile(path):
            raise ValueError(f"mask file not found: {path}")
    for lm in (args.landmarks1, args.landmarks2):
        if lm and not os.path.isfile(lm):
            raise ValueError(f"landmark file not found: {lm}")


def _grid_shape(args):
    if args.like:
        return load_image(args.like).shape[:2]
    if args.size:
        w, _, h = args.size.partition("x")
        return (int(h), int(w))
    raise ValueError("register requires --size WxH or --like image")


def _add_solver_flags(p):
    p.add_argument("--variant", choices=("iss", "gf"), default="iss")
    p.add_argument("--bands", type=int, default=15, help="band count K")
    p.add_argument("--schedule-base", type=float, default=30.0,
                   help="first inverse fidelity 1/tau")
    p.add_argument("--schedule-ratio", type=float, default=0.6)
    p.add_argument("--tol", type=float, default=1e-6, help="solver gap tolerance")
    p.add_argument("--max-iter", type=int, default=2000)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spectv",
        description="Spectral TV decomposition, band filtering, and image fusion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="image -> band stack directory")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--colorspace", choices=("auto", "gray", "rgb", "lcc"), default="auto")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="band stack -> image")
    p.add_argument("bands")
    p.add_argument("out")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("filter", help="apply a filter spec to a band stack")
    p.add_argument("bands")
    p.add_argument("filter_spec")
    p.add_argument("out")
    p.add_argument("--offset", action="store_true",
                   help="offset-encode the signed result for viewing")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("fuse", help="fuse two images with a preset")
    p.add_argument("--preset", choices=("face", "insert", "style", "spec"),
                   required=True)
    p.add_argument("--image1", required=True, help="output frame image")
    p.add_argument("--image2", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--landmarks1")
    p.add_argument("--landmarks2")
    p.add_argument("--mask", action="append", default=[],
                   help="region mask as name=path (repeatable)")
    p.add_argument("--filter-spec")
    p.add_argument("--profile", default="face-fusion",
                   help="named profile for the face preset")
    p.add_argument("--band-split", type=int, default=None,
                   help="1-based first band taken from image 2")
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--feather-radius", type=float, default=0.0)
    p.add_argument("--colorspace", choices=("auto", "gray", "rgb", "lcc"),
                   default="auto")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("register", help="landmarks -> displacement field (.npy)")
    p.add_argument("landmarks1")
    p.add_argument("landmarks2")
    p.add_argument("out")
    p.add_argument("--size", help="grid as WxH")
    p.add_argument("--like", help="take the grid from this image")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("feather", help="soften a binary mask")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(func=cmd_feather)
    return parser


def _configure_threads():
    threads = os.environ.get("SPECTV_THREADS")
    if threads:
        try:
            cv2.setNumThreads(int(threads))
        except ValueError:
            raise ValueError(f"SPECTV_THREADS must be an integer, got {threads!r}")


def _exit_code_for(exc):
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, OSError):
        return 4
    return 2


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _configure_threads()
        args.func(args)
    except (ValueError, NumericalError, OSError, StageError) as exc:
        prefix = f"error in stage {exc.stage}" if isinstance(exc, StageError) else "error"
        print(f"{prefix}: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())

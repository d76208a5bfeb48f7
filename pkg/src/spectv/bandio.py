"""File formats: band-stack directories, filter specs, landmarks.

Formats are line-based text (key=value) for diffability.  Band pixels
live in a lossless .npy sidecar; the per-band PNGs are offset-encoded
for human inspection only.  All writers are deterministic, so saving
the same data twice produces identical bytes.
"""

import os
import re
from dataclasses import dataclass

import numpy as np

from .image import offset_encode, save_image
from .registration import LandmarkSet, RegistrationField
from .transform import BandFilter, SpectralDecomposition

BANDS_FORMAT = "spectv-bands"
FILTER_FORMAT = "spectv-filter"
FORMAT_VERSION = 1


def _fmt_floats(values):
    return ",".join(repr(float(v)) for v in np.atleast_1d(values))


def _parse_floats(text):
    return np.array([float(tok) for tok in text.split(",")])


def _parse_keyvals(lines):
    out = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed line: {line!r}")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def _check_header(fields, expected_format, what):
    if fields.get("format") != expected_format:
        raise ValueError(f"not a {what} file")
    if fields.get("version") != str(FORMAT_VERSION):
        raise ValueError(f"unsupported {what} version {fields.get('version')!r}")


def save_bands(d, out_dir, colorspace=None):
    """Write a band-stack directory: manifest, offset PNGs, npy sidecar."""
    if colorspace is None:
        colorspace = "rgb" if d.bands.ndim == 4 and d.bands.shape[3] == 3 else "gray"
    os.makedirs(out_dir, exist_ok=True)
    h, w = d.bands.shape[1:3]
    channels = d.bands.shape[3] if d.bands.ndim == 4 else 1
    n_ok = sum(1 for r in d.reports if r.converged)
    lines = [
        f"format={BANDS_FORMAT}",
        f"version={FORMAT_VERSION}",
        f"variant={d.variant}",
        f"bands={d.n_bands}",
        f"height={h}",
        f"width={w}",
        f"channels={channels}",
        f"colorspace={colorspace}",
        f"mean={_fmt_floats(d.mean)}",
        f"times={_fmt_floats(d.times)}",
        f"converged={n_ok}/{len(d.reports)}",
    ]
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    np.save(os.path.join(out_dir, "bands.npy"), d.bands)
    for k in range(d.n_bands):
        save_image(offset_encode(d.bands[k]),
                   os.path.join(out_dir, f"band_{k + 1:02d}.png"), bit_depth=16)


def load_bands(path):
    """Read a band-stack directory; returns (decomposition, manifest)."""
    manifest_path = os.path.join(path, "manifest.txt")
    try:
        with open(manifest_path) as fh:
            fields = _parse_keyvals(fh)
    except OSError as exc:
        raise OSError(f"cannot read band stack manifest: {exc}") from exc
    _check_header(fields, BANDS_FORMAT, "band stack")
    bands = np.load(os.path.join(path, "bands.npy"))
    mean = _parse_floats(fields["mean"])
    times = _parse_floats(fields["times"])
    if int(fields["bands"]) != bands.shape[0] or times.size != bands.shape[0]:
        raise ValueError("manifest band count does not match stored bands")
    if bands.ndim == 3:
        mean = mean[0]
    d = SpectralDecomposition(bands=bands, times=times, mean=np.asarray(mean),
                              variant=fields["variant"])
    return d, fields


@dataclass(frozen=True)
class FilterSpec:
    """Parsed filter-spec document.

    tables maps (image, region) to a (channels, K) weight array and
    means to the matching per-channel mean weights; image is 1 or 2.
    Single-image specs simply omit image-2 sections.
    """

    n_bands: int
    channels: int
    regions: tuple
    omega1: np.ndarray
    omega2: np.ndarray
    tables: dict
    means: dict

    def band_filter(self, image=1, region=None, channel=0):
        region = region if region is not None else self.regions[0]
        w = self.tables[(image, region)]
        m = self.means[(image, region)]
        return BandFilter(weights=w[channel], mean_weight=m[channel])

    def region_filters(self, image):
        """Per-region filter tuples suitable for assemble_spatial_filter."""
        out = {}
        for region in self.regions:
            w = self.tables[(image, region)]
            m = self.means[(image, region)]
            out[region] = tuple(BandFilter(weights=w[c], mean_weight=m[c])
                                for c in range(self.channels))
        return out

    def has_image(self, image):
        return any(img == image for img, _ in self.tables)

    def to_text(self):
        lines = [
            f"format={FILTER_FORMAT}",
            f"version={FORMAT_VERSION}",
            f"bands={self.n_bands}",
            f"channels={self.channels}",
            f"regions={','.join(self.regions)}",
            f"omega1={_fmt_floats(self.omega1)}",
            f"omega2={_fmt_floats(self.omega2)}",
        ]
        for image in (1, 2):
            for region in self.regions:
                if (image, region) not in self.tables:
                    continue
                for c in range(self.channels):
                    lines.append(f"[filter image={image} region={region} channel={c}]")
                    lines.append(f"weights={_fmt_floats(self.tables[(image, region)][c])}")
                    lines.append(f"mean={repr(float(self.means[(image, region)][c]))}")
        return "\n".join(lines) + "\n"


def make_filter_spec(n_bands, channels, regions, tables, means=None,
                     omega1=None, omega2=None):
    """Validate and assemble a FilterSpec from plain arrays."""
    regions = tuple(regions)
    if len(set(regions)) != len(regions) or not regions:
        raise ValueError("regions must be non-empty and unique")
    for region in regions:
        # the line format cannot carry these: ',' splits the regions
        # list, whitespace splits section headers, ']' ends them
        if not region or re.search(r"[\s,\]]", region):
            raise ValueError(f"region name {region!r} must not be empty or "
                             "contain whitespace, ',' or ']'")
    omega1 = np.ones(channels) if omega1 is None else np.broadcast_to(
        np.asarray(omega1, dtype=np.float64), (channels,)).copy()
    omega2 = np.zeros(channels) if omega2 is None else np.broadcast_to(
        np.asarray(omega2, dtype=np.float64), (channels,)).copy()
    norm_tables = {}
    norm_means = {}
    for key, w in tables.items():
        image, region = key
        if image not in (1, 2) or region not in regions:
            raise ValueError(f"bad filter table key {key}")
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (channels, n_bands):
            raise ValueError(f"table {key} must have shape ({channels}, {n_bands})")
        if not np.all(np.isfinite(w)):
            raise ValueError(f"table {key} has non-finite weights")
        norm_tables[key] = w
        m = np.ones(channels) if means is None or key not in means else (
            np.broadcast_to(np.asarray(means[key], dtype=np.float64), (channels,)).copy())
        norm_means[key] = m
    for region in regions:
        if (1, region) not in norm_tables:
            raise ValueError(f"region '{region}' has no image-1 filter")
    return FilterSpec(n_bands=n_bands, channels=channels, regions=regions,
                      omega1=omega1, omega2=omega2,
                      tables=norm_tables, means=norm_means)


def parse_filter_spec(text):
    """Inverse of FilterSpec.to_text (lossless on the value space)."""
    header_lines = []
    sections = []
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ValueError(f"malformed section header: {line!r}")
            current = {"_header": line[1:-1]}
            sections.append(current)
        elif current is None:
            header_lines.append(line)
        else:
            key, _, val = line.partition("=")
            current[key.strip()] = val.strip()
    fields = _parse_keyvals(header_lines)
    _check_header(fields, FILTER_FORMAT, "filter spec")
    n_bands = int(fields["bands"])
    channels = int(fields["channels"])
    regions = tuple(r for r in fields["regions"].split(",") if r)
    omega1 = _parse_floats(fields.get("omega1", "1"))
    omega2 = _parse_floats(fields.get("omega2", "0"))
    if omega1.size == 1:
        omega1 = np.repeat(omega1, channels)
    if omega2.size == 1:
        omega2 = np.repeat(omega2, channels)

    tables = {}
    means = {}
    for sec in sections:
        parts = dict(tok.split("=", 1) for tok in sec["_header"].split()[1:])
        if not sec["_header"].startswith("filter"):
            raise ValueError(f"unknown section {sec['_header']!r}")
        image = int(parts["image"])
        region = parts["region"]
        channel = int(parts["channel"])
        key = (image, region)
        if key not in tables:
            tables[key] = np.zeros((channels, n_bands))
            means[key] = np.ones(channels)
        w = _parse_floats(sec["weights"])
        if w.size != n_bands:
            raise ValueError(f"section {sec['_header']!r} has {w.size} weights, "
                             f"expected {n_bands}")
        tables[key][channel] = w
        means[key][channel] = float(sec.get("mean", "1"))
    return make_filter_spec(n_bands, channels, regions, tables, means,
                            omega1, omega2)


def load_filter_spec(path):
    try:
        with open(path) as fh:
            return parse_filter_spec(fh.read())
    except OSError as exc:
        raise OSError(f"cannot read filter spec: {exc}") from exc


def save_filter_spec(spec, path):
    with open(path, "w") as fh:
        fh.write(spec.to_text())


def identity_filter_spec(n_bands, channels=1):
    """All-pass spec for image 1 with unit mean weight."""
    tables = {(1, "all"): np.ones((channels, n_bands))}
    return make_filter_spec(n_bands, channels, ("all",), tables)


def save_landmarks(lm, path):
    """One 'x y [label]' line per landmark."""
    lines = []
    labels = lm.labels if lm.labels else [None] * len(lm)
    for (x, y), label in zip(lm.points, labels):
        line = f"{repr(float(x))} {repr(float(y))}"
        if label is not None:
            line += f" {label}"
        lines.append(line)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_landmarks(path):
    points = []
    labels = []
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read landmarks: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) < 2:
            raise ValueError(f"landmark line {lineno} needs 'x y [label]'")
        points.append((float(toks[0]), float(toks[1])))
        labels.append(toks[2] if len(toks) > 2 else "")
    if not points:
        raise ValueError("landmark file is empty")
    labels = tuple(labels) if any(labels) else ()
    return LandmarkSet(points=np.asarray(points), labels=labels)


def save_field(field, path):
    """Displacement field as a float .npy sidecar (H, W, 2)."""
    np.save(path, field.v)


def load_field(path):
    return RegistrationField(v=np.load(path))

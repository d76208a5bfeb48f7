"""Image container conventions, color transforms, and raster I/O.

Images are float64 numpy arrays, shape (H, W) for single-channel or
(H, W, C) with C in {1, 3}.  Intensities are nominally in [0, 1] for
file I/O but unrestricted internally: spectral bands are signed.
Arrays are treated as immutable values once returned.
"""

import os

import cv2
import numpy as np

# Color space tags used in manifests and fusion checks.
GRAY = "gray"
RGB = "rgb"
LCC = "lcc"

# Luminance/opponent-chrominance basis:
#   L  = (R + 2G + B) / 4
#   C1 = (-R + 2G - B) / 4   (green/magenta)
#   C2 = (R - B) / 2         (red/blue)
_RGB_TO_LCC = np.array([
    [0.25, 0.5, 0.25],
    [-0.25, 0.5, -0.25],
    [0.5, 0.0, -0.5],
])
# Exact inverse: R = L - C1 + C2, G = L + C1, B = L - C1 - C2.
_LCC_TO_RGB = np.array([
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, -1.0, -1.0],
])


def check_image(img, channels=None):
    """Validate an image array and return it as float64.

    Raises ValueError on wrong dimensionality/channel count or
    non-finite values.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        nch = 1
    elif arr.ndim == 3 and arr.shape[2] in (1, 3):
        nch = arr.shape[2]
    else:
        raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {arr.shape}")
    if channels is not None and nch != channels:
        raise ValueError(f"expected {channels}-channel image, got {nch} channels")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def channel_count(img):
    return 1 if img.ndim == 2 else img.shape[2]


def to_3d(img):
    """View an image as (H, W, C); single-channel gains a trailing axis."""
    return img[:, :, None] if img.ndim == 2 else img


def from_3d(arr, ndim):
    """Undo to_3d given the original dimensionality."""
    return arr[:, :, 0] if ndim == 2 else arr


def rgb_to_lcc(img):
    """Convert an RGB image to the luminance/chrominance basis.

    The transform is an exact linear map, invertible by lcc_to_rgb.
    Gray pixels (R=G=B) map to (L, 0, 0).
    """
    arr = check_image(img, channels=3)
    return arr @ _RGB_TO_LCC.T


def lcc_to_rgb(img):
    """Exact linear inverse of rgb_to_lcc."""
    arr = check_image(img, channels=3)
    return arr @ _LCC_TO_RGB.T


def offset_encode(band):
    """Map a signed band to displayable intensities, 0 -> 0.5.

    Values outside [-0.5, 0.5] clip; use the float sidecar for exact
    storage.
    """
    return np.clip(np.asarray(band, dtype=np.float64) + 0.5, 0.0, 1.0)


def offset_decode(img):
    """Invert offset_encode on its non-clipped range."""
    return np.asarray(img, dtype=np.float64) - 0.5


_EXTS = {".png", ".ppm", ".pgm", ".pnm"}


def load_image(path):
    """Load an 8/16-bit PNG or PPM/PGM as a float64 image in [0, 1].

    Color images come back as (H, W, 3) RGB, grayscale as (H, W).
    Raises OSError for unreadable files and ValueError for unsupported
    formats.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext not in _EXTS:
        raise ValueError(f"unsupported image format: {ext or path}")
    if not os.path.exists(path):
        raise OSError(f"no such file: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"could not read image: {path}")
    if raw.ndim == 3 and raw.shape[2] == 4:
        raw = raw[:, :, :3]  # drop alpha; not carried by the core type
    if raw.ndim == 3:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ValueError(f"unsupported pixel type {raw.dtype} in {path}")
    return raw.astype(np.float64) / scale


def save_image(img, path, bit_depth=8):
    """Write an image as PNG or PPM/PGM, clamping to [0, 1] first.

    Encoding goes through the same in-memory codec as the preview
    service, so files and service responses are byte-comparable.
    """
    arr = check_image(img)
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext not in _EXTS:
        raise ValueError(f"unsupported image format: {ext or path}")
    data = encode_pixels(arr, bit_depth)
    ok, buf = cv2.imencode(ext, data)
    if not ok:
        raise ValueError(f"could not encode image as {ext}")
    try:
        with open(path, "wb") as fh:
            fh.write(buf.tobytes())
    except OSError as exc:
        raise OSError(f"could not write image: {exc}") from exc


def encode_pixels(arr, bit_depth=8):
    """Quantize a [0,1]-clamped image to a cv2-ready integer array (BGR)."""
    if bit_depth == 8:
        dtype, top = np.uint8, 255.0
    elif bit_depth == 16:
        dtype, top = np.uint16, 65535.0
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    clipped = np.clip(arr, 0.0, 1.0)
    data = np.rint(clipped * top).astype(dtype)
    if data.ndim == 3 and data.shape[2] == 3:
        data = np.ascontiguousarray(data[:, :, ::-1])  # RGB -> BGR for cv2
    elif data.ndim == 3:
        data = data[:, :, 0]
    return data


def encode_png_bytes(img, bit_depth=8):
    """Deterministic in-memory PNG encoding (used by the preview service)."""
    data = encode_pixels(check_image(img), bit_depth)
    ok, buf = cv2.imencode(".png", data)
    if not ok:
        raise ValueError("PNG encoding failed")
    return buf.tobytes()


def decode_image_bytes(buf):
    """Decode raster bytes (PNG/PPM/PGM) into a float64 image in [0, 1]."""
    raw = cv2.imdecode(np.frombuffer(buf, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError("could not decode image payload")
    if raw.ndim == 3 and raw.shape[2] == 4:
        raw = raw[:, :, :3]
    if raw.ndim == 3:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ValueError(f"unsupported pixel type {raw.dtype}")
    return raw.astype(np.float64) / scale

import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def disk_indicator(shape, center, radius):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    return ((xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius ** 2).astype(np.float64)


def aa_disk(n, r, ss=16, gamma=0.7):
    """Anti-aliased disk on an n-by-n grid, centered mid-pixel-grid.

    Pixel values are the supersampled area coverage raised to ``gamma``;
    softening the rim this way keeps the shape close to a calibrable
    eigenfunction of the discrete one-sided TV stencil, which a hard
    indicator is not.
    """
    c = (n - 1) / 2.0
    yy, xx = np.mgrid[0:n * ss, 0:n * ss]
    xs = (xx + 0.5) / ss - 0.5
    ys = (yy + 0.5) / ss - 0.5
    inside = ((xs - c) ** 2 + (ys - c) ** 2) <= r * r
    cov = inside.reshape(n, ss, n, ss).mean(axis=(1, 3))
    return np.clip(cov, 0.0, 1.0) ** gamma


@pytest.fixture
def disk64():
    return disk_indicator((64, 64), (32, 32), 8)


def natural_image(name, size=256):
    """A named test photograph as float64 in [0, 1], resized square."""
    import cv2
    from skimage import data
    from skimage.color import rgb2gray

    img = getattr(data, name)()
    if img.ndim == 3:
        img = rgb2gray(img)  # returns float in [0, 1]
    else:
        img = img / 255.0
    return cv2.resize(img.astype(np.float64), (size, size),
                      interpolation=cv2.INTER_AREA)


def smooth_random(shape, sigma, seed):
    """Smoothed seeded noise stretched to [0, 1]; a generic soft image."""
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    img = gaussian_filter(rng.random(shape), sigma)
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo)


def smooth_random_rgb(shape, sigma, seed):
    return np.stack([smooth_random(shape, sigma, seed + i) for i in range(3)],
                    axis=2)

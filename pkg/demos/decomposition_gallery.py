"""Decompose a photograph with both transform variants and save the
band stack as a contact sheet: coarse structures first, textures last,
plus the reconstruction for comparison."""
import os

import numpy as np
from skimage import data

from spectv.image import offset_encode, save_image
from spectv.rof import SolverOptions
from spectv.transform import (band_masses, decompose_gf, decompose_iss,
                              default_iss_schedule, reconstruct)

OUT = os.path.join(os.path.dirname(__file__), "output", "gallery")


def resize(img, size):
    import cv2
    return cv2.resize(img.astype(np.float64), (size, size),
                      interpolation=cv2.INTER_AREA)


def main():
    os.makedirs(OUT, exist_ok=True)
    f = resize(data.camera() / 255.0, 256)
    save_image(f, os.path.join(OUT, "input.png"))
    opts = SolverOptions(tol=1e-6, max_iter=2000)

    for label, d in (
            ("iss", decompose_iss(f, default_iss_schedule(15), opts=opts)),
            ("gf", decompose_gf(f, n_bands=15, opts=opts))):
        r = reconstruct(d)
        err = np.linalg.norm(r - f) / np.linalg.norm(f)
        print(f"{label}: {d.n_bands} bands, reconstruction rel err {err:.2e}")
        save_image(np.clip(r, 0, 1), os.path.join(OUT, f"recon_{label}.png"))
        for k in range(d.n_bands):
            save_image(offset_encode(d.bands[k]),
                       os.path.join(OUT, f"{label}_band_{k + 1:02d}.png"))
        masses = band_masses(d)
        top = np.argsort(masses)[::-1][:3] + 1
        print(f"{label}: heaviest bands {top.tolist()} "
              f"(mass {np.sort(masses)[::-1][:3].round(3).tolist()})")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

"""A soft-rimmed disk is (numerically) a TV eigenfunction: under the
gradient flow it loses contrast linearly and dies at t = 1/lambda, and
its spectrum concentrates in a single pair of adjacent bands."""
import os

import numpy as np

from spectv.grid import tv_value
from spectv.image import save_image
from spectv.rof import SolverOptions
from spectv.transform import band_masses, decompose_gf, gf_flow

OUT = os.path.join(os.path.dirname(__file__), "output", "disk")


def soft_disk(n=128, r=3.5, ss=16, gamma=0.7):
    c = (n - 1) / 2.0
    yy, xx = np.mgrid[0:n * ss, 0:n * ss]
    xs = (xx + 0.5) / ss - 0.5
    ys = (yy + 0.5) / ss - 0.5
    inside = ((xs - c) ** 2 + (ys - c) ** 2) <= r * r
    cov = inside.reshape(n, ss, n, ss).mean(axis=(1, 3))
    return np.clip(cov, 0.0, 1.0) ** gamma


def main():
    os.makedirs(OUT, exist_ok=True)
    chi = soft_disk()
    lam = tv_value(chi) / float(np.sum(chi * chi))
    print(f"measured eigenvalue lambda = {lam:.4f} (expected death at "
          f"t = 1/lambda = {1.0 / lam:.3f})")
    save_image(chi, os.path.join(OUT, "disk.png"))

    fracs = np.array([0.25, 0.5, 0.75])
    ts = fracs / lam
    states = gf_flow(chi, ts, opts=SolverOptions(tol=1e-8, max_iter=30000))
    nrm = np.linalg.norm(chi)
    for frac, t, u in zip(fracs, ts, states):
        dev = np.linalg.norm(u - max(1.0 - t * lam, 0.0) * chi) / nrm
        print(f"t = {t:.3f} ({frac:.0%} of lifetime): contrast "
              f"{np.ptp(u):.3f}, deviation from (1 - t*lambda)*chi "
              f"= {dev:.4f}")
        save_image(np.clip(u, 0, 1), os.path.join(OUT, f"flow_{frac:.2f}.png"))

    d = decompose_gf(chi, n_bands=15, opts=SolverOptions(tol=1e-7,
                                                         max_iter=8000))
    m = band_masses(d)
    k = int(np.argmax(m[:-1] + m[1:]))
    share = (m[k] + m[k + 1]) / m.sum()
    print(f"spectrum: bands {k + 1} and {k + 2} carry {share:.1%} of the "
          f"band mass (times {d.times[k]:.2f}, {d.times[k + 1]:.2f} "
          f"bracket 1/lambda = {1.0 / lam:.2f})")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

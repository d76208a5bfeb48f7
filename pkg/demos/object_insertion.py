"""Paint text onto a brick wall: the wall keeps its coarse shading and
colors (low bands and mean), the lettering contributes only fine bands
inside a feathered mask, so it picks up the wall's lighting."""
import os

import numpy as np
from skimage import data

from spectv.fusion import preset_object_insertion
from spectv.image import save_image
from spectv.masks import feather
from spectv.rof import SolverOptions

OUT = os.path.join(os.path.dirname(__file__), "output", "insert")
SIZE = 160


def resize(img, size):
    import cv2
    return cv2.resize(img.astype(np.float64), (size, size),
                      interpolation=cv2.INTER_AREA)


def main():
    os.makedirs(OUT, exist_ok=True)
    wall = resize(data.brick() / 255.0, SIZE)
    text = resize(data.text()[:, :172] / 255.0, SIZE)

    # the lettering is dark on a light page; mask the strokes with margin
    mask = feather((text < 0.45).astype(np.float64), radius=5.0)
    mask = np.clip(mask * 1.8, 0.0, 1.0)

    save_image(wall, os.path.join(OUT, "wall.png"))
    save_image(text, os.path.join(OUT, "text.png"))
    save_image(mask, os.path.join(OUT, "mask.png"))

    print("inserting lettering (bands 4..10 from the text image)...")
    out = preset_object_insertion(wall, text, mask, k_lo=4, n_bands=10,
                                  gain=1.4,
                                  opts=SolverOptions(tol=1e-5, max_iter=1200))
    save_image(np.clip(out, 0, 1), os.path.join(OUT, "painted_wall.png"))
    print(f"output range [{out.min():.3f}, {out.max():.3f}]; the wall's "
          "shading survives inside the strokes")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

"""Regenerate the committed test corpus under data/ from scikit-image's
bundled pictures.

Color sources are converted to luminance with the BT.601 weights
(0.299 R + 0.587 G + 0.114 B); 512x512 sources are reduced to 256x256 by
2x2 block averaging. Output PGMs are 8-bit.

The classic House and Barbara 256x256 test images are not redistributable
here; drop them in as data/house256.pgm and data/barbara256.pgm to enable
the acceptance checks that reference them.
"""

import pathlib
import sys

import numpy as np
from skimage import data as skdata

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from gsr import pgm  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "data"


def luminance(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def shrink2(img):
    h, w = img.shape
    return img[: h - h % 2, : w - w % 2].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def main():
    OUT.mkdir(exist_ok=True)
    pgm.save_pgm(shrink2(luminance(skdata.camera())), OUT / "camera256.pgm")
    pgm.save_pgm(luminance(skdata.gravel())[:256, :256], OUT / "gravel256.pgm")
    pgm.save_pgm(shrink2(luminance(skdata.moon())), OUT / "moon256.pgm")
    for f in sorted(OUT.glob("*.pgm")):
        img = pgm.load_pgm(f)
        print(f"{f.name}: {img.shape[0]}x{img.shape[1]}")


if __name__ == "__main__":
    main()

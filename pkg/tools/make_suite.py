"""Regenerate the bundled 128x128 evaluation suite.

Five synthetic piecewise-smooth scenes plus five crops of scikit-image's
sample photographs, written as 8-bit PGM into ``src/poisdeconv/data/suite``.
Run from the repository root: ``python tools/make_suite.py``.
"""

from pathlib import Path

import numpy as np
from skimage import color, data, transform

from poisdeconv.core.io import write_image

OUT = Path(__file__).resolve().parents[1] / "src" / "poisdeconv" / "data" / "suite"
N = 128


def _grid():
    r = (np.arange(N) + 0.5) / N
    return np.meshgrid(r, r, indexing="ij")


def synth_shapes(rng):
    yy, xx = _grid()
    img = 0.25 + 0.3 * xx
    for _ in range(6):
        cy, cx = rng.uniform(0.15, 0.85, 2)
        rad = rng.uniform(0.06, 0.2)
        img[(yy - cy) ** 2 + (xx - cx) ** 2 < rad ** 2] = rng.uniform(0.05, 0.95)
    for _ in range(3):
        y0, x0 = rng.uniform(0.05, 0.6, 2)
        h, w = rng.uniform(0.1, 0.35, 2)
        img[(yy > y0) & (yy < y0 + h) & (xx > x0) & (xx < x0 + w)] = rng.uniform(0.05, 0.95)
    return img


def synth_smooth(rng):
    yy, xx = _grid()
    img = 0.5 + 0.2 * np.sin(2 * np.pi * (1.5 * xx + rng.uniform())) * np.cos(2 * np.pi * yy)
    img += 0.25 * (yy > 0.4 + 0.2 * np.sin(3 * np.pi * xx))
    return img


def synth_stripes(rng):
    yy, xx = _grid()
    ang = rng.uniform(0, np.pi)
    u = np.cos(ang) * xx + np.sin(ang) * yy
    img = 0.3 + 0.4 * (np.floor(u * 10) % 2)
    img[(yy - 0.5) ** 2 + (xx - 0.5) ** 2 < 0.1] = 0.8 - 0.5 * xx[(yy - 0.5) ** 2 + (xx - 0.5) ** 2 < 0.1]
    return img


def natural(name, top, left, size):
    img = getattr(data, name)()
    if img.ndim == 3:
        img = color.rgb2gray(img)
    else:
        img = img / 255.0
    crop = img[top:top + size, left:left + size]
    return transform.resize(crop, (N, N), anti_aliasing=True)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240607)
    images = {
        "s0_shapes": synth_shapes(rng),
        "s1_shapes": synth_shapes(rng),
        "s2_smooth": synth_smooth(rng),
        "s3_stripes": synth_stripes(rng),
        "s4_shapes": synth_shapes(rng),
        "n0_camera": natural("camera", 40, 150, 256),
        "n1_coins": natural("coins", 20, 60, 256),
        "n2_moon": natural("moon", 128, 128, 256),
        "n3_astronaut": natural("astronaut", 0, 128, 256),
        "n4_coffee": natural("coffee", 80, 200, 256),
    }
    for name, img in images.items():
        write_image(OUT / f"{name}.pgm", np.clip(img, 0.0, 1.0))


if __name__ == "__main__":
    main()

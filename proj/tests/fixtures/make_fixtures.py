"""Regenerates the misalignment fixture.

reference.png  128x128 crop of a 1/f noise image
shifted.png    the same source cropped 2 px further right
landmarks_*.json  5x5 lattices over the central 80% of each crop, with
                  shifted landmarks moved by the content offset
"""
import json
import pathlib

import numpy as np
from PIL import Image

SIZE = 256
CROP = 128
ORIGIN = (64, 64)
SHIFT = 2


def pink_noise(rng, size):
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    f = np.sqrt(fx * fx + fy * fy)
    f[0, 0] = 1.0
    amp = 1.0 / f
    amp[0, 0] = 0.0
    phase = rng.uniform(0, 2 * np.pi, (size, size))
    field = np.real(np.fft.ifft2(amp * np.exp(1j * phase)))
    return (field - field.mean()) / field.std()


def lattice(w, h, n=5):
    pts = []
    for j in range(n):
        for i in range(n):
            pts.append([(0.1 + 0.8 * i / (n - 1)) * (w - 1), (0.1 + 0.8 * j / (n - 1)) * (h - 1)])
    return pts


def main():
    out = pathlib.Path(__file__).resolve().parent
    rng = np.random.default_rng(20240611)
    base = np.stack([pink_noise(rng, SIZE) for _ in range(3)], axis=-1)
    mix = np.array([[0.8, 0.3, 0.1], [0.2, 0.7, 0.3], [0.1, 0.2, 0.9]])
    img = base @ mix.T
    img = 0.5 + 0.12 * img
    img = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)

    x0, y0 = ORIGIN
    ref = img[y0:y0 + CROP, x0:x0 + CROP]
    moved = img[y0:y0 + CROP, x0 + SHIFT:x0 + SHIFT + CROP]
    Image.fromarray(ref, "RGB").save(out / "reference.png", optimize=False)
    Image.fromarray(moved, "RGB").save(out / "shifted.png", optimize=False)

    ref_lm = lattice(CROP, CROP)
    # Content at reference x appears at x - SHIFT in the shifted crop.
    moved_lm = [[x - SHIFT, y] for x, y in ref_lm]
    (out / "landmarks_reference.json").write_text(json.dumps(ref_lm) + "\n")
    (out / "landmarks_shifted.json").write_text(json.dumps(moved_lm) + "\n")


if __name__ == "__main__":
    main()

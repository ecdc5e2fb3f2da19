"""Regenerates the committed image fixtures under crates/core/tests/fixtures.

natural/   three 128x128 crops of scikit-image sample photographs
           (astronaut: public domain; chelsea, coffee: CC0)
ablation/  ten 64x64 synthetic piecewise-smooth images with Voronoi ground
           truth (<stem>.gt0.png) and a coarser second truth (<stem>.gt1.png)
quadrants  64x64 four-colour image and its ground truth
"""
import os

import numpy as np
from PIL import Image
from skimage import data
from skimage.transform import rescale

ROOT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures")


def save_rgb(arr, path):
    Image.fromarray(np.clip(np.round(arr * 255), 0, 255).astype(np.uint8), "RGB").save(path)


def save_labels(labels, path):
    Image.fromarray(labels.astype(np.uint16)).save(path)


def natural():
    out = os.path.join(ROOT, "natural")
    os.makedirs(out, exist_ok=True)
    crops = {
        "astronaut": (data.astronaut(), 0.5, (20, 60)),
        "chelsea": (data.chelsea(), 0.5, (20, 40)),
        "coffee": (data.coffee(), 0.5, (40, 90)),
    }
    for name, (img, scale, (y, x)) in crops.items():
        small = rescale(img / 255.0, scale, channel_axis=2, anti_aliasing=True)
        save_rgb(small[y : y + 128, x : x + 128], os.path.join(out, f"{name}.png"))


def synthetic(rng, size=64):
    n_sites = rng.integers(5, 9)
    sites = rng.uniform(0, size, size=(n_sites, 2))
    yy, xx = np.mgrid[0:size, 0:size]
    d = (yy[..., None] - sites[:, 0]) ** 2 + (xx[..., None] - sites[:, 1]) ** 2
    gt = d.argmin(axis=2)
    base = rng.uniform(0.1, 0.9, size=(n_sites, 3))
    slope = rng.normal(0, 0.003, size=(n_sites, 2, 3))
    img = base[gt] + slope[gt, 0] * (yy - size / 2)[..., None] + slope[gt, 1] * (xx - size / 2)[..., None]
    img += rng.normal(0, 0.03, size=img.shape)
    # coarser truth: merge the region pair with the most similar base colour
    dist = ((base[:, None] - base[None]) ** 2).sum(-1) + np.eye(n_sites) * 1e9
    a, b = np.unravel_index(dist.argmin(), dist.shape)
    coarse = np.where(gt == b, a, gt)
    _, coarse = np.unique(coarse, return_inverse=True)
    return np.clip(img, 0, 1), gt, coarse.reshape(gt.shape)


def ablation():
    out = os.path.join(ROOT, "ablation")
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(20240601)
    for i in range(10):
        img, gt, coarse = synthetic(rng)
        stem = f"scene{i:02d}"
        save_rgb(img, os.path.join(out, f"{stem}.png"))
        save_labels(gt, os.path.join(out, f"{stem}.gt0.png"))
        save_labels(coarse, os.path.join(out, f"{stem}.gt1.png"))


def quadrants(size=64):
    colors = np.array([[0.9, 0.1, 0.1], [0.1, 0.8, 0.2], [0.1, 0.2, 0.9], [0.9, 0.9, 0.2]])
    yy, xx = np.mgrid[0:size, 0:size]
    labels = (xx >= size // 2).astype(int) + 2 * (yy >= size // 2)
    save_rgb(colors[labels], os.path.join(ROOT, "quadrants.png"))
    save_labels(labels, os.path.join(ROOT, "quadrants.gt0.png"))


if __name__ == "__main__":
    natural()
    ablation()
    quadrants()

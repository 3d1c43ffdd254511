"""Synthetic forgery generation, folder datasets, augmentation, and the
robustness perturbation ladder.

Images are float32 CHW arrays in [0, 1]; labels are 0 = real, 1 = fake.
"""

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.fft import dctn, idctn
from scipy.ndimage import gaussian_filter
from scipy.special import expit

from .errors import DatasetError

TAMPER_KINDS = ("splice", "local_blur", "local_noise", "color_transplant")

PERTURBATION_KINDS = ("compression", "gaussian_blur", "contrast_jitter",
                      "saturate_jitter", "pixelation")

# severity 1..5 parameter ladders (severity 0 is the identity)
COMPRESSION_QUALITY = (90, 70, 50, 30, 10)
BLUR_SIGMA = (0.5, 1.0, 1.5, 2.0, 3.0)
CONTRAST_FACTOR = (0.75, 0.56, 0.42, 0.32, 0.24)
SATURATE_FACTOR = (0.75, 0.56, 0.42, 0.32, 0.24)
PIXELATION_BLOCK = (2, 4, 6, 8, 16)

# standard luminance quantisation table, used for all three channels
_QUANT_BASE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)


@dataclass(frozen=True)
class SyntheticConfig:
    image_size: int = 64
    tamper_kinds: tuple = TAMPER_KINDS
    tamper_area_range: tuple = (0.05, 0.25)
    seed: int = 0

    def validate(self):
        lo, hi = self.tamper_area_range
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError(f"bad tamper area range {self.tamper_area_range}")
        unknown = set(self.tamper_kinds) - set(TAMPER_KINDS)
        if unknown:
            raise ValueError(f"unknown tamper kinds {sorted(unknown)}")
        if not self.tamper_kinds:
            raise ValueError("need at least one tamper kind")


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    severity: int

    def validate(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not 0 <= self.severity <= 5:
            raise ValueError(f"severity {self.severity} outside 0..5")


def _upsample_bilinear(field, size):
    h, w = size
    fh, fw = field.shape
    ys = np.clip((np.arange(h) + 0.5) * fh / h - 0.5, 0, fh - 1)
    xs = np.clip((np.arange(w) + 0.5) * fw / w - 0.5, 0, fw - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, fh - 1)
    x1 = np.minimum(x0 + 1, fw - 1)
    ly = (ys - y0)[:, None]
    lx = (xs - x0)[None, :]
    return (field[np.ix_(y0, x0)] * (1 - ly) * (1 - lx)
            + field[np.ix_(y0, x1)] * (1 - ly) * lx
            + field[np.ix_(y1, x0)] * ly * (1 - lx)
            + field[np.ix_(y1, x1)] * ly * lx)


def _smooth_noise(rng, size, cells, amplitude):
    coarse = rng.normal(0.0, 1.0, (cells, cells))
    return _upsample_bilinear(coarse, (size, size)) * amplitude


def _ellipse_alpha(size, cy, cx, ry, rx, edge=0.08):
    yy, xx = np.mgrid[0:size, 0:size]
    d = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
    return expit((1.0 - d) / edge)


def _render_scene(rng, size):
    """Procedural face-like image: gradient background, smooth texture, a
    shaded elliptical face with eyes and a mouth."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / max(size - 1, 1)
    angle = rng.uniform(0, 2 * math.pi)
    ramp = (math.cos(angle) * xx + math.sin(angle) * yy + 1.0) / 2.0
    back_a = rng.uniform(0.15, 0.75, 3)
    back_b = rng.uniform(0.15, 0.75, 3)
    img = back_a[:, None, None] * (1 - ramp) + back_b[:, None, None] * ramp
    for c in range(3):
        img[c] += _smooth_noise(rng, size, cells=rng.integers(4, 9), amplitude=0.05)

    cy = size * rng.uniform(0.42, 0.58)
    cx = size * rng.uniform(0.42, 0.58)
    ry = size * rng.uniform(0.26, 0.38)
    rx = ry * rng.uniform(0.72, 0.92)
    face = _ellipse_alpha(size, cy, cx, ry, rx)
    skin = np.array([rng.uniform(0.65, 0.9), rng.uniform(0.45, 0.7),
                     rng.uniform(0.3, 0.55)])
    shade = 1.0 - 0.25 * ((yy - cy / size) ** 2 + (xx - cx / size) ** 2)
    for c in range(3):
        img[c] = img[c] * (1 - face) + skin[c] * shade * face

    eye_dy = ry * rng.uniform(0.25, 0.4)
    eye_dx = rx * rng.uniform(0.35, 0.55)
    eye_r = max(size * 0.03, 1.5)
    dark = rng.uniform(0.05, 0.25, 3)
    for sx in (-1, 1):
        eye = _ellipse_alpha(size, cy - eye_dy, cx + sx * eye_dx,
                             eye_r, eye_r * 1.4, edge=0.15)
        for c in range(3):
            img[c] = img[c] * (1 - eye) + dark[c] * eye
    mouth = _ellipse_alpha(size, cy + ry * rng.uniform(0.4, 0.55), cx,
                           eye_r * 0.9, rx * rng.uniform(0.3, 0.5), edge=0.15)
    lip = np.array([rng.uniform(0.4, 0.6), rng.uniform(0.1, 0.25),
                    rng.uniform(0.1, 0.25)])
    for c in range(3):
        img[c] = img[c] * (1 - mouth) + lip[c] * mouth
    return np.clip(img, 0.0, 1.0)


def _tamper_mask(rng, size, area_range):
    lo_frac, hi_frac = area_range
    lo = max(4, math.ceil(lo_frac * size * size))
    hi = math.floor(hi_frac * size * size)
    target = rng.uniform(lo_frac, hi_frac) * size * size
    aspect = math.exp(rng.uniform(math.log(0.6), math.log(1.6)))
    w_min = max(2, math.ceil(lo / (size - 2)))
    w_max = min(size - 2, hi // 2)
    wpx = int(np.clip(round(math.sqrt(target * aspect)), w_min, w_max))
    h_lo = max(2, math.ceil(lo / wpx))
    h_hi = min(size - 2, hi // wpx)
    hpx = int(np.clip(round(target / wpx), h_lo, h_hi))
    y0 = int(rng.integers(1, size - hpx))
    x0 = int(rng.integers(1, size - wpx))
    mask = np.zeros((size, size), dtype=bool)
    mask[y0:y0 + hpx, x0:x0 + wpx] = True
    return mask


def _apply_tamper(rng, real, mask, kind):
    fake = real.copy()
    if kind == "splice":
        donor = _render_scene(np.random.default_rng(rng.integers(0, 2 ** 63)),
                              real.shape[-1])
        fake[:, mask] = donor[:, mask]
    elif kind == "local_blur":
        sigma = rng.uniform(1.5, 2.5)
        blurred = gaussian_filter(real, sigma=(0, sigma, sigma))
        fake[:, mask] = blurred[:, mask]
    elif kind == "local_noise":
        sigma = rng.uniform(0.08, 0.16)
        noisy = real + rng.normal(0.0, sigma, real.shape)
        fake[:, mask] = noisy[:, mask]
    elif kind == "color_transplant":
        perm = rng.permutation(3)
        if np.array_equal(perm, np.arange(3)):
            perm = np.roll(perm, 1)
        strength = rng.uniform(0.6, 1.0)
        mixed = (1 - strength) * real + strength * real[perm]
        fake[:, mask] = mixed[:, mask]
    else:
        raise ValueError(f"unknown tamper kind {kind!r}")
    return np.clip(fake, 0.0, 1.0)


def _synthesize(seed, config: SyntheticConfig):
    config.validate()
    rng = np.random.default_rng(seed)
    real = _render_scene(rng, config.image_size)
    mask = _tamper_mask(rng, config.image_size, config.tamper_area_range)
    kind = config.tamper_kinds[int(rng.integers(0, len(config.tamper_kinds)))]
    fake = _apply_tamper(rng, real, mask, kind)
    return real.astype(np.float32), fake.astype(np.float32), mask, kind


def generate_synthetic_pair(seed, config: SyntheticConfig):
    """Deterministic (real, fake, tamper_mask) triple for one seed."""
    real, fake, mask, _ = _synthesize(seed, config)
    return real, fake, mask


class SyntheticForgeryDataset:
    """In-memory dataset of generated pairs, alternating real/fake.

    ``n_images`` must be even; pair i uses seed ``start_seed + i``.
    """

    def __init__(self, config: SyntheticConfig, n_images, start_seed=None):
        if n_images % 2:
            raise ValueError("n_images must be even (one real + one fake per pair)")
        if start_seed is None:
            start_seed = config.seed
        self.config = config
        images = np.empty((n_images, 3, config.image_size, config.image_size),
                          dtype=np.float32)
        labels = np.empty(n_images, dtype=np.int64)
        kinds = []
        for i in range(n_images // 2):
            real, fake, _, kind = _synthesize(start_seed + i, config)
            images[2 * i], images[2 * i + 1] = real, fake
            labels[2 * i], labels[2 * i + 1] = 0, 1
            kinds += ["", kind]
        self.images = images
        self.labels = labels
        self.tamper_kinds = kinds

    def __len__(self):
        return len(self.images)

    def __getitem__(self, idx):
        return self.images[idx], int(self.labels[idx])


class FolderDataset:
    """Images under root/{split}/{real,fake}/; decoded to [0, 1] RGB and
    resized to ``image_size``. Non-image files are skipped with a warning."""

    IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

    def __init__(self, root, split, image_size=64):
        split_dir = Path(root) / split
        if not split_dir.is_dir():
            raise DatasetError(f"missing split directory: {split_dir}")
        entries = []
        for label, cls in ((0, "real"), (1, "fake")):
            cls_dir = split_dir / cls
            if not cls_dir.is_dir():
                raise DatasetError(f"missing class directory: {cls_dir}")
            files = sorted(p for p in cls_dir.iterdir() if p.is_file())
            kept = [p for p in files if p.suffix.lower() in self.IMAGE_SUFFIXES]
            for skipped in set(files) - set(kept):
                warnings.warn(f"skipping non-image file {skipped}")
            if not kept:
                raise DatasetError(f"no images in class directory: {cls_dir}")
            entries += [(p, label) for p in kept]
        self.paths = [p for p, _ in entries]
        images = np.empty((len(entries), 3, image_size, image_size), dtype=np.float32)
        labels = np.empty(len(entries), dtype=np.int64)
        for i, (path, label) in enumerate(entries):
            with Image.open(path) as im:
                im = im.convert("RGB").resize((image_size, image_size),
                                              Image.Resampling.BILINEAR)
                images[i] = np.asarray(im, dtype=np.float32).transpose(2, 0, 1) / 255.0
            labels[i] = label
        self.images = images
        self.labels = labels

    def __len__(self):
        return len(self.images)

    def __getitem__(self, idx):
        return self.images[idx], int(self.labels[idx])


def write_png(image, path):
    array = (np.clip(image, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    Image.fromarray(array.transpose(1, 2, 0)).save(path)


def materialize_dataset(root, config: SyntheticConfig, split_sizes,
                        start_seed=None):
    """Write PNG files in the folder layout plus a manifest CSV.

    ``split_sizes`` maps split name -> image count (even). Returns the
    manifest path. Seeds advance across splits so no pair repeats.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest_path = root / "manifest.csv"
    seed = config.seed if start_seed is None else start_seed
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "tamper_kind", "seed"])
        for split, n_images in split_sizes.items():
            if n_images % 2:
                raise ValueError(f"split {split!r} size must be even")
            for cls in ("real", "fake"):
                (root / split / cls).mkdir(parents=True, exist_ok=True)
            for i in range(n_images // 2):
                real, fake, _, kind = _synthesize(seed, config)
                for cls, image, label, tk in (("real", real, 0, ""),
                                              ("fake", fake, 1, kind)):
                    path = root / split / cls / f"{cls}_{seed:08d}.png"
                    write_png(image, path)
                    writer.writerow([path.relative_to(root), label, tk, seed])
                seed += 1
    return manifest_path


def augment(image, rng):
    """Horizontal flip with probability 0.5; the only training augmentation."""
    if rng.random() < 0.5:
        return image[:, :, ::-1].copy()
    return image.copy()


def _compress_dct(image, quality):
    """Codec-free stand-in for JPEG: quantise 8x8 DCT blocks of each channel
    with the standard table scaled to ``quality``."""
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    table = np.clip(np.floor((_QUANT_BASE * scale + 50.0) / 100.0), 1, 255)
    c, h, w = image.shape
    ph, pw = (-h) % 8, (-w) % 8
    padded = np.pad(image.astype(np.float64) * 255.0,
                    ((0, 0), (0, ph), (0, pw)), mode="edge")
    hb, wb = padded.shape[1] // 8, padded.shape[2] // 8
    blocks = padded.reshape(c, hb, 8, wb, 8).transpose(0, 1, 3, 2, 4)
    coeffs = dctn(blocks, axes=(-2, -1), norm="ortho")
    coeffs = np.round(coeffs / table) * table
    blocks = idctn(coeffs, axes=(-2, -1), norm="ortho")
    padded = blocks.transpose(0, 1, 3, 2, 4).reshape(c, hb * 8, wb * 8)
    return np.clip(padded[:, :h, :w] / 255.0, 0.0, 1.0)


def _pixelate(image, block):
    c, h, w = image.shape
    out = np.empty_like(image)
    for y in range(0, h, block):
        for x in range(0, w, block):
            cell = image[:, y:y + block, x:x + block]
            out[:, y:y + block, x:x + block] = cell.mean(axis=(1, 2), keepdims=True)
    return out


def perturb(image, spec: PerturbationSpec):
    """Severity-parameterised distortion; severity 0 returns the input
    bit-identically (as a copy)."""
    spec.validate()
    if spec.severity == 0:
        return image.copy()
    level = spec.severity - 1
    image = np.asarray(image, dtype=np.float32)
    if spec.kind == "compression":
        out = _compress_dct(image, COMPRESSION_QUALITY[level])
    elif spec.kind == "gaussian_blur":
        sigma = BLUR_SIGMA[level]
        out = gaussian_filter(image.astype(np.float64), sigma=(0, sigma, sigma))
    elif spec.kind == "contrast_jitter":
        mean = image.mean()
        out = mean + CONTRAST_FACTOR[level] * (image.astype(np.float64) - mean)
    elif spec.kind == "saturate_jitter":
        gray = image.mean(axis=0, keepdims=True)
        out = gray + SATURATE_FACTOR[level] * (image.astype(np.float64) - gray)
    elif spec.kind == "pixelation":
        out = _pixelate(image.astype(np.float64), PIXELATION_BLOCK[level])
    else:
        raise ValueError(f"unknown perturbation kind {spec.kind!r}")
    return np.clip(out, 0.0, 1.0).astype(np.float32)

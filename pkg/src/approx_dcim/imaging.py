"""8-bit grayscale images, fixed-point alpha blending through a multiplier, PSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PSNR_INF = math.inf


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray             # (height, width) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("image must be two-dimensional")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("pixel values must lie in 0..255")
        object.__setattr__(self, "pixels", px.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _tokens(data: bytes):
    """Header tokens of a PNM file, skipping comments; yields (token, end offset)."""
    i, n = 0, len(data)
    while i < n:
        c = data[i:i + 1]
        if c == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path) -> GrayImage:
    data = Path(path).read_bytes()
    tok = _tokens(data)
    try:
        magic, _ = next(tok)
        w, _ = next(tok)
        h, _ = next(tok)
        maxval, end = next(tok)
    except StopIteration:
        raise ValueError(f"{path}: truncated PGM header") from None
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported")
    if magic == b"P5":
        raw = np.frombuffer(data[end + 1:end + 1 + w * h], dtype=np.uint8)
        if raw.size != w * h:
            raise ValueError(f"{path}: expected {w * h} bytes of pixel data")
        return GrayImage(raw.reshape(h, w))
    if magic == b"P2":
        vals = [int(t) for t, _ in tok]
        if len(vals) != w * h:
            raise ValueError(f"{path}: expected {w * h} pixel values, found {len(vals)}")
        return GrayImage(np.array(vals).reshape(h, w))
    raise ValueError(f"{path}: unsupported magic {magic!r}")


def write_pgm(path, img: GrayImage, binary: bool = True) -> None:
    header = f"P{5 if binary else 2}\n{img.width} {img.height}\n255\n".encode()
    if binary:
        Path(path).write_bytes(header + img.pixels.tobytes())
        return
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in img.pixels)
    Path(path).write_bytes(header + rows.encode() + b"\n")


def gradient_image(width: int = 64, height: int = 64) -> GrayImage:
    """Diagonal ramp covering 0..255."""
    yy, xx = np.mgrid[0:height, 0:width]
    ramp = (xx + yy) * 255.0 / max(width + height - 2, 1)
    return GrayImage(np.round(ramp).astype(np.uint8))


def checker_noise_image(width: int = 64, height: int = 64, cell: int = 8, seed: int = 7) -> GrayImage:
    """8x8 checkerboard of levels 48/208 plus seeded Gaussian noise (sd 20)."""
    yy, xx = np.mgrid[0:height, 0:width]
    base = np.where(((xx // cell) + (yy // cell)) % 2 == 0, 48.0, 208.0)
    noise = np.random.default_rng(seed).normal(0.0, 20.0, base.shape)
    return GrayImage(np.clip(np.round(base + noise), 0, 255).astype(np.uint8))


def product_table(mul) -> np.ndarray:
    """256x256 table of ``mul(x, y)`` for a vectorized 8-bit multiplier."""
    grid = np.arange(256, dtype=np.int64)
    x = np.repeat(grid, 256)
    y = np.tile(grid, 256)
    return np.asarray(mul(x, y), dtype=np.int64).reshape(256, 256)


EXACT_TABLE = np.outer(np.arange(256, dtype=np.int64), np.arange(256, dtype=np.int64))


def blend(a: GrayImage, b: GrayImage, alpha: float, table: np.ndarray = EXACT_TABLE) -> GrayImage:
    """``(mul(a, al) + mul(b, 255 - al) + 128) >> 8`` with ``al = round(255 * alpha)``.

    ``table[x, y]`` gives the multiplier's product; the result is clipped to 0..255.
    """
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"image sizes differ: {a.pixels.shape} vs {b.pixels.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    al = int(round(255 * alpha))
    pa = a.pixels.astype(np.int64)
    pb = b.pixels.astype(np.int64)
    acc = table[pa, al] + table[pb, 255 - al] + 128
    return GrayImage(np.clip(acc >> 8, 0, 255))


def psnr(ref: GrayImage, test: GrayImage) -> float:
    """10 log10(255^2 / MSE) in dB; ``inf`` when the images are identical."""
    if ref.pixels.shape != test.pixels.shape:
        raise ValueError("image sizes differ")
    mse = float(np.mean((ref.pixels.astype(float) - test.pixels.astype(float)) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(255.0 ** 2 / mse)


SWEEP_ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 10))


def sweep_psnr(a: GrayImage, b: GrayImage, table: np.ndarray, alphas=SWEEP_ALPHAS) -> float:
    """PSNR of the MSE pooled over a sweep of blend weights.

    A single weight exercises only two multiplier rows (al and 255 - al);
    pooling over 0.1..0.9 tests the multiplier across many operand patterns.
    """
    if not alphas:
        raise ValueError("need at least one alpha")
    errs = [np.mean((blend(a, b, al).pixels.astype(float) - blend(a, b, al, table).pixels) ** 2)
            for al in alphas]
    mse = float(np.mean(errs))
    return PSNR_INF if mse == 0.0 else 10.0 * math.log10(255.0 ** 2 / mse)

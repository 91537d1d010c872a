"""Deterministic rasterization and image-level equality measures.

Rendering rules are deliberately rigid so that pixel counts are meaningful:
integer pixel coverage (no anti-aliasing), source-over compositing with
straight alpha, rounding half-up, opaque white background. Identical scenes
produce bit-identical buffers on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import Mark, SceneGraph


class RasterError(ValueError):
    pass


@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    pixels: bytes  # row-major RGBA, 8 bits per channel, straight alpha

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height * 4:
            raise RasterError(
                f"pixel buffer has {len(self.pixels)} bytes, "
                f"expected {self.width * self.height * 4}"
            )

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 4
        )


def _span(a: float, b: float, limit: int) -> tuple[int, int]:
    """Integer pixel span [i0, i1) covered by [a, b): a pixel is covered iff
    its center lies inside the interval."""
    i0 = int(math.floor(a + 0.5))
    i1 = int(math.floor(b + 0.5))
    return max(0, i0), min(limit, i1)


def _blend_region(canvas: np.ndarray, ys, xs, color, alpha: float) -> None:
    if alpha <= 0:
        return
    src = np.array(color[:3], dtype=np.float64)
    region = canvas[ys, xs, :3].astype(np.float64)
    out = np.floor(src * alpha + region * (1.0 - alpha) + 0.5)
    canvas[ys, xs, :3] = out.astype(np.uint8)
    canvas[ys, xs, 3] = 255


def _line_pixels(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    # Bresenham; yields each pixel once.
    pixels = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        pixels.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return pixels


def draw_mark(canvas: np.ndarray, mark: Mark, opacity_scale: float = 1.0) -> None:
    height, width = canvas.shape[:2]
    alpha = mark.opacity * opacity_scale * (mark.color[3] / 255.0)
    if mark.kind == "bar":
        x0, y0, x1, y1 = mark.geometry
        cx0, cx1 = _span(x0, x1, width)
        cy0, cy1 = _span(y0, y1, height)
        if cx0 < cx1 and cy0 < cy1:
            _blend_region(
                canvas, slice(cy0, cy1), slice(cx0, cx1), mark.color, alpha
            )
    elif mark.kind == "point":
        cx, cy, r = mark.geometry
        x_lo = max(0, int(math.floor(cx - r)))
        x_hi = min(width, int(math.ceil(cx + r)) + 1)
        y_lo = max(0, int(math.floor(cy - r)))
        y_hi = min(height, int(math.ceil(cy + r)) + 1)
        if x_lo >= x_hi or y_lo >= y_hi:
            return
        xs = np.arange(x_lo, x_hi, dtype=np.float64) + 0.5
        ys = np.arange(y_lo, y_hi, dtype=np.float64) + 0.5
        mask = ((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2) <= r * r
        yy, xx = np.nonzero(mask)
        if len(yy):
            _blend_region(canvas, yy + y_lo, xx + x_lo, mark.color, alpha)
    elif mark.kind == "line-segment":
        x0, y0, x1, y1 = (int(math.floor(v + 0.5)) for v in mark.geometry)
        pts = [
            (x, y)
            for x, y in _line_pixels(x0, y0, x1, y1)
            if 0 <= x < width and 0 <= y < height
        ]
        if pts:
            xs = np.array([p[0] for p in pts])
            ys = np.array([p[1] for p in pts])
            _blend_region(canvas, ys, xs, mark.color, alpha)
    else:
        raise RasterError(f"unknown mark kind '{mark.kind}'")


def new_canvas(width: int, height: int) -> np.ndarray:
    if width <= 0 or height <= 0:
        raise RasterError("zero-area canvas")
    return np.full((height, width, 4), 255, dtype=np.uint8)


def rasterize(scene: SceneGraph, opacity_scale: float = 1.0) -> RasterImage:
    """Draw marks in draw-order with source-over alpha compositing on white."""
    canvas = new_canvas(scene.width, scene.height)
    for mark in sorted(scene.marks, key=lambda m: m.draw_order):
        draw_mark(canvas, mark, opacity_scale)
    return RasterImage(scene.width, scene.height, canvas.tobytes())


def _check_dims(a: RasterImage, b: RasterImage) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise RasterError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def pixel_diff(a: RasterImage, b: RasterImage, channel_tolerance: int = 0) -> int:
    """Number of pixel positions where any channel differs by more than the
    tolerance (default 0, exact)."""
    _check_dims(a, b)
    da = a.as_array().astype(np.int16)
    db = b.as_array().astype(np.int16)
    differs = np.any(np.abs(da - db) > channel_tolerance, axis=2)
    return int(np.count_nonzero(differs))


def chi2_histogram_distance(a: RasterImage, b: RasterImage) -> float:
    """Chi-squared distance between per-channel 256-bin histograms, summed
    over channels; position-blind and zero iff the histograms agree."""
    _check_dims(a, b)
    da, db = a.as_array(), b.as_array()
    total = 0.0
    for ch in range(4):
        ha = np.bincount(da[:, :, ch].ravel(), minlength=256).astype(np.float64)
        hb = np.bincount(db[:, :, ch].ravel(), minlength=256).astype(np.float64)
        denom = ha + hb
        mask = denom > 0
        total += float(np.sum((ha[mask] - hb[mask]) ** 2 / denom[mask]))
    return total


def blend_toward_background(img: RasterImage, f: float) -> RasterImage:
    """Analytic prediction of an overlap-free scene at opacity scaled by f:
    every pixel moves toward white, f*pixel + (1-f)*white, rounded half-up."""
    if not 0 < f <= 1:
        raise RasterError(f"blend fraction {f} outside (0, 1]")
    arr = img.as_array().astype(np.float64)
    out = np.floor(arr * f + 255.0 * (1.0 - f) + 0.5).astype(np.uint8)
    out[:, :, 3] = 255
    return RasterImage(img.width, img.height, out.tobytes())


def write_ppm(img: RasterImage) -> bytes:
    """Binary PPM (P6), RGB only; the bit-exact golden-file contract."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    rgb = img.as_array()[:, :, :3]
    return header + rgb.tobytes()


def write_png(img: RasterImage, path: str) -> None:
    """PNG convenience output; not bit-contractual."""
    from PIL import Image

    Image.frombytes("RGBA", (img.width, img.height), img.pixels).save(path)

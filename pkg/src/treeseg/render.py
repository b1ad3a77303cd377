"""PNG rendering for labels, context maps, saliency, and report composites.

Raw analysis arrays are never modified here; normalization to [0, 255]
happens only at render time. Context maps are grayscale (dark = little
context needed, light = much), with misses in blue and ignores in gray.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .mrc import IGNORE, MISS, MRCMap

# fixed, order-stable label palette (RGB)
_PALETTE = np.array(
    [
        (40, 40, 46),
        (80, 120, 220),
        (220, 120, 60),
        (90, 190, 90),
        (200, 80, 160),
        (230, 210, 70),
        (90, 200, 210),
        (150, 90, 200),
        (160, 160, 160),
        (120, 70, 50),
    ],
    dtype=np.uint8,
)

MISS_COLOR = (40, 70, 230)
IGNORE_COLOR = (128, 128, 128)


def label_color(class_id: int) -> tuple[int, int, int]:
    return tuple(int(v) for v in _PALETTE[class_id % len(_PALETTE)])


def render_image(image: np.ndarray) -> Image.Image:
    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="RGB")


def render_label_map(label: np.ndarray, ignore: np.ndarray | None = None) -> Image.Image:
    rgb = _PALETTE[np.asarray(label) % len(_PALETTE)]
    if ignore is not None:
        rgb = rgb.copy()
        rgb[np.asarray(ignore, dtype=bool)] = IGNORE_COLOR
    return Image.fromarray(rgb, mode="RGB")


def render_mrc_map(m: MRCMap, ignore: np.ndarray | None = None) -> Image.Image:
    values = m.values
    top = max(m.schedule)
    gray = np.zeros(values.shape, dtype=np.uint8)
    hit = values > 0
    gray[hit] = np.round(values[hit] / top * 255.0).astype(np.uint8)
    rgb = np.stack([gray, gray, gray], axis=-1)
    rgb[values == MISS] = MISS_COLOR
    rgb[values == IGNORE] = IGNORE_COLOR
    if ignore is not None:
        rgb[np.asarray(ignore, dtype=bool)] = IGNORE_COLOR
    return Image.fromarray(rgb, mode="RGB")


def render_saliency_map(values: np.ndarray) -> Image.Image:
    """Grayscale heatmap, normalized by the map max (lighter = higher)."""
    arr = np.asarray(values, dtype=np.float64)
    top = arr.max()
    scaled = arr / top if top > 0 else np.zeros_like(arr)
    return Image.fromarray(np.round(scaled * 255.0).astype(np.uint8), mode="L").convert("RGB")


def compose_panels(
    panels: list[tuple[Image.Image, str]],
    scale: int = 4,
    caption_height: int = 14,
    pad: int = 4,
) -> Image.Image:
    """Lay out (image, caption) pairs in one row with nearest upscaling."""
    scaled = [
        (img.resize((img.width * scale, img.height * scale), Image.NEAREST), cap)
        for img, cap in panels
    ]
    width = sum(img.width for img, _ in scaled) + pad * (len(scaled) + 1)
    height = max(img.height for img, _ in scaled) + caption_height + 2 * pad
    canvas = Image.new("RGB", (width, height), (250, 250, 250))
    draw = ImageDraw.Draw(canvas)
    x = pad
    for img, cap in scaled:
        canvas.paste(img, (x, pad))
        draw.text((x, pad + img.height + 2), cap[:40], fill=(20, 20, 20))
        x += img.width + pad
    return canvas


def stack_rows(rows: list[Image.Image], pad: int = 4) -> Image.Image:
    width = max(r.width for r in rows)
    height = sum(r.height for r in rows) + pad * (len(rows) - 1)
    canvas = Image.new("RGB", (width, height), (250, 250, 250))
    y = 0
    for r in rows:
        canvas.paste(r, (0, y))
        y += r.height + pad
    return canvas


def save_png(img: Image.Image, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    img.save(path)

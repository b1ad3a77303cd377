"""Synthetic segmentation scenes built from named object parts.

Every class is a composition of parts (body, window, wheel, ...) drawn
inside an object bounding box. Part masks are emitted alongside class
labels, so part-level analyses have ground truth to rank against.
Generation is a pure function of (spec, sample index).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import CorruptManifest, EmptyDataset, InvalidSpec, MissingFile

NO_PART = -1

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class PartSpec:
    """One drawable region of a class.

    ``mask`` picks the region shape (rect | ellipse), ``fill`` the color
    pattern inside it (flat | checker | stripes | twotone). ``rel_box``
    is (y0, x0, y1, x1) in fractions of the object bounding box. Pattern
    fills alternate ``color`` and ``color2`` with the given pixel
    ``period``; ``orient`` selects stripe direction ('h' rows or 'v'
    columns). ``jitter`` adds per-pixel uniform color noise.
    """

    name: str
    mask: str = "rect"
    fill: str = "flat"
    rel_box: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    color: tuple[float, float, float] = (0.5, 0.5, 0.5)
    color2: tuple[float, float, float] | None = None
    period: int = 1
    orient: str = "h"
    jitter: float = 0.0


@dataclass(frozen=True)
class ClassSpec:
    """A class and the parts it is composed of.

    The first part defines the object footprint; later parts are drawn
    over it in order. ``size`` is the object bounding box (h, w) in
    pixels, optionally jittered by up to ``size_jitter`` pixels per axis.
    Part names may repeat within a class (e.g. two "wheel" regions share
    one part id) and may be shared across classes (distinct ids).
    """

    class_id: int
    name: str
    parts: tuple[PartSpec, ...]
    size: tuple[int, int] = (0, 0)
    size_jitter: int = 0


@dataclass(frozen=True)
class SceneSpec:
    """Full recipe for a synthetic scene distribution."""

    image_size: tuple[int, int]
    classes: tuple[ClassSpec, ...]
    background_class_id: int
    objects_per_image: tuple[int, int]
    noise_std: float
    seed: int
    ignore_border: int = 0


@dataclass
class SegmentationSample:
    """One labeled image: RGB image, class labels, part ids, ignore mask."""

    image: np.ndarray  # H x W x 3 float32 in [0, 1], 8-bit quantized
    label: np.ndarray  # H x W int32 class ids
    parts: np.ndarray  # H x W int32 part ids, NO_PART where unannotated
    ignore: np.ndarray  # H x W bool

    def validate(self, num_classes: int | None = None) -> None:
        shapes = {self.label.shape, self.parts.shape, self.ignore.shape}
        if len(shapes) != 1 or self.image.shape[:2] != self.label.shape:
            raise InvalidSpec("sample grids have mismatched shapes")
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise InvalidSpec("image must be H x W x 3")
        if num_classes is not None:
            if self.label.min() < 0 or self.label.max() >= num_classes:
                raise InvalidSpec("label values out of class range")


def validate_spec(spec: SceneSpec) -> None:
    """Check SceneSpec invariants; raise InvalidSpec on violation."""
    h, w = spec.image_size
    if h < 32 or w < 32:
        raise InvalidSpec(f"image_size must be at least 32x32, got {h}x{w}")
    ids = [c.class_id for c in spec.classes]
    if ids != list(range(len(spec.classes))):
        raise InvalidSpec("class ids must be contiguous 0..C-1 in order")
    if not (0 <= spec.background_class_id < len(spec.classes)):
        raise InvalidSpec("background_class_id out of range")
    lo, hi = spec.objects_per_image
    if lo < 0 or hi < lo:
        raise InvalidSpec(f"objects_per_image range invalid: {lo}..{hi}")
    if not (0.0 <= spec.noise_std <= 1.0):
        raise InvalidSpec("noise_std must lie in [0, 1]")
    if spec.seed < 0:
        raise InvalidSpec("seed must be nonnegative")
    if spec.ignore_border < 0:
        raise InvalidSpec("ignore_border must be nonnegative")
    name_owners: dict[str, set[int]] = {}
    for cls in spec.classes:
        if not cls.parts:
            raise InvalidSpec(f"class {cls.name!r} has no parts")
        if cls.class_id != spec.background_class_id:
            if cls.size[0] < 1 or cls.size[1] < 1:
                raise InvalidSpec(f"class {cls.name!r} has empty size")
            if cls.size[0] > h or cls.size[1] > w:
                raise InvalidSpec(f"class {cls.name!r} larger than canvas")
        for part in cls.parts:
            y0, x0, y1, x1 = part.rel_box
            if not (0 <= y0 < y1 <= 1 and 0 <= x0 < x1 <= 1):
                raise InvalidSpec(f"part {part.name!r} rel_box invalid")
            if part.mask not in ("rect", "ellipse"):
                raise InvalidSpec(f"part {part.name!r} unknown mask shape")
            if part.fill not in ("flat", "checker", "stripes", "twotone"):
                raise InvalidSpec(f"part {part.name!r} unknown fill")
            if part.fill != "flat" and part.color2 is None:
                raise InvalidSpec(f"part {part.name!r} pattern needs color2")
            if part.period < 1:
                raise InvalidSpec(f"part {part.name!r} period must be >= 1")
            for color in (part.color,) + ((part.color2,) if part.color2 else ()):
                if any(not (0.0 <= v <= 1.0) for v in color):
                    raise InvalidSpec(f"part {part.name!r} color outside [0,1]")
            name_owners.setdefault(part.name, set()).add(cls.class_id)
    foreground = [c for c in spec.classes if c.class_id != spec.background_class_id]
    if foreground and not any(
        len(owners) == 1 and spec.background_class_id not in owners
        for owners in name_owners.values()
    ):
        raise InvalidSpec("no part name is unique to a single foreground class")


def part_table(spec: SceneSpec) -> list[dict]:
    """Assign globally unique part ids per (class, part-name) pair.

    Ids are dense, in class order then first-appearance order, so a
    given spec always yields the same table.
    """
    table: list[dict] = []
    seen: set[tuple[int, str]] = set()
    for cls in spec.classes:
        for part in cls.parts:
            key = (cls.class_id, part.name)
            if key in seen:
                continue
            seen.add(key)
            table.append(
                {
                    "part_id": len(table),
                    "class_id": cls.class_id,
                    "class_name": cls.name,
                    "name": part.name,
                }
            )
    return table


def part_id_map(spec: SceneSpec) -> dict[tuple[int, str], int]:
    return {(row["class_id"], row["name"]): row["part_id"] for row in part_table(spec)}


def _region_mask(mask_shape: str, h: int, w: int) -> np.ndarray:
    if mask_shape == "rect":
        return np.ones((h, w), dtype=bool)
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ry, rx = max(h / 2.0, 0.5), max(w / 2.0, 0.5)
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _fill_colors(part: PartSpec, h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    base = np.empty((h, w, 3), dtype=np.float64)
    c1 = np.asarray(part.color, dtype=np.float64)
    if part.fill == "flat":
        base[:] = c1
    else:
        c2 = np.asarray(part.color2, dtype=np.float64)
        yy, xx = np.mgrid[0:h, 0:w]
        if part.fill == "checker":
            pick = ((yy // part.period) + (xx // part.period)) % 2
        elif part.fill == "stripes":
            axis = yy if part.orient == "h" else xx
            pick = (axis // part.period) % 2
        else:  # twotone: iid per-pixel coin flips
            pick = rng.integers(0, 2, size=(h, w))
        base = np.where(pick[..., None] == 0, c1, c2)
    if part.jitter > 0:
        base = base + rng.uniform(-part.jitter, part.jitter, size=(h, w, 3))
    return base


def _draw_object(
    canvas: np.ndarray,
    label: np.ndarray,
    parts_grid: np.ndarray,
    cls: ClassSpec,
    ids: dict[tuple[int, str], int],
    y0: int,
    x0: int,
    oh: int,
    ow: int,
    rng: np.random.Generator,
) -> None:
    for part in cls.parts:
        ry0, rx0, ry1, rx1 = part.rel_box
        py0 = y0 + int(round(ry0 * oh))
        px0 = x0 + int(round(rx0 * ow))
        py1 = y0 + max(int(round(ry1 * oh)), int(round(ry0 * oh)) + 1)
        px1 = x0 + max(int(round(rx1 * ow)), int(round(rx0 * ow)) + 1)
        ph, pw = py1 - py0, px1 - px0
        region = _region_mask(part.mask, ph, pw)
        colors = _fill_colors(part, ph, pw, rng)
        view = canvas[py0:py1, px0:px1]
        view[region] = colors[region]
        label[py0:py1, px0:px1][region] = cls.class_id
        parts_grid[py0:py1, px0:px1][region] = ids[(cls.class_id, part.name)]


def _boundary_ignore(label: np.ndarray, border: int) -> np.ndarray:
    ignore = np.zeros(label.shape, dtype=bool)
    if border <= 0:
        return ignore
    dv = label[1:, :] != label[:-1, :]
    ignore[1:, :] |= dv
    ignore[:-1, :] |= dv
    dh = label[:, 1:] != label[:, :-1]
    ignore[:, 1:] |= dh
    ignore[:, :-1] |= dh
    if border > 1:
        ignore = ndimage.binary_dilation(ignore, iterations=border - 1)
    return ignore


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Per-sample generator; stable across platforms and runs."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def generate_sample(spec: SceneSpec, index: int) -> SegmentationSample:
    """Render sample ``index`` of the scene distribution."""
    h, w = spec.image_size
    rng = sample_rng(spec.seed, index)
    ids = part_id_map(spec)
    bg = spec.classes[spec.background_class_id]

    canvas = np.empty((h, w, 3), dtype=np.float64)
    label = np.full((h, w), spec.background_class_id, dtype=np.int32)
    parts_grid = np.full((h, w), NO_PART, dtype=np.int32)
    base = _fill_colors(bg.parts[0], h, w, rng)
    canvas[:] = base
    parts_grid[:] = ids[(bg.class_id, bg.parts[0].name)]

    foreground = [c for c in spec.classes if c.class_id != spec.background_class_id]
    count = int(rng.integers(spec.objects_per_image[0], spec.objects_per_image[1] + 1))
    boxes: list[tuple[int, int, int, int]] = []
    for _ in range(count):
        if not foreground:
            break
        cls = foreground[int(rng.integers(0, len(foreground)))]
        oh = cls.size[0] + int(rng.integers(-cls.size_jitter, cls.size_jitter + 1))
        ow = cls.size[1] + int(rng.integers(-cls.size_jitter, cls.size_jitter + 1))
        oh, ow = max(oh, 3), max(ow, 3)
        if oh > h or ow > w:
            continue
        placed = False
        for _attempt in range(40):
            y0 = int(rng.integers(0, h - oh + 1))
            x0 = int(rng.integers(0, w - ow + 1))
            clear = all(
                y0 >= by1 + 1 or by0 >= y0 + oh + 1 or x0 >= bx1 + 1 or bx0 >= x0 + ow + 1
                for by0, bx0, by1, bx1 in boxes
            )
            if clear:
                placed = True
                break
        if not placed:
            continue
        boxes.append((y0, x0, y0 + oh, x0 + ow))
        _draw_object(canvas, label, parts_grid, cls, ids, y0, x0, oh, ow, rng)

    if spec.noise_std > 0:
        canvas = canvas + rng.normal(0.0, spec.noise_std, size=canvas.shape)
    canvas = np.clip(canvas, 0.0, 1.0)
    # quantize to the 8-bit grid so PNG persistence is lossless
    image = (np.round(canvas * 255.0) / 255.0).astype(np.float32)
    ignore = _boundary_ignore(label, spec.ignore_border)
    return SegmentationSample(image=image, label=label, parts=parts_grid, ignore=ignore)


def generate_dataset(spec: SceneSpec, count: int) -> list[SegmentationSample]:
    """Render ``count`` independent samples. Deterministic in (spec, count)."""
    validate_spec(spec)
    if count < 1:
        raise InvalidSpec("count must be >= 1")
    return [generate_sample(spec, i) for i in range(count)]


# --- persistence --------------------------------------------------------


def _spec_to_dict(spec: SceneSpec) -> dict:
    return dataclasses.asdict(spec)


def _part_from_dict(d: dict) -> PartSpec:
    d = dict(d)
    d["rel_box"] = tuple(d["rel_box"])
    d["color"] = tuple(d["color"])
    if d.get("color2") is not None:
        d["color2"] = tuple(d["color2"])
    return PartSpec(**d)


def _class_from_dict(d: dict) -> ClassSpec:
    d = dict(d)
    d["parts"] = tuple(_part_from_dict(p) for p in d["parts"])
    d["size"] = tuple(d["size"])
    return ClassSpec(**d)


def spec_from_dict(d: dict) -> SceneSpec:
    d = dict(d)
    d["image_size"] = tuple(d["image_size"])
    d["classes"] = tuple(_class_from_dict(c) for c in d["classes"])
    d["objects_per_image"] = tuple(d["objects_per_image"])
    return SceneSpec(**d)


def _write_png16(path: Path, grid: np.ndarray) -> None:
    Image.fromarray(grid.astype(np.uint16), mode="I;16").save(path)


def _read_png16(path: Path) -> np.ndarray:
    if not path.exists():
        raise MissingFile(str(path))
    return np.asarray(Image.open(path), dtype=np.uint16)


def save_dataset(samples: list[SegmentationSample], directory: str | Path, spec: SceneSpec) -> Path:
    """Persist samples losslessly; returns the manifest path.

    Images must already sit on the 8-bit grid (the generator guarantees
    this); otherwise the round trip could not be exact and we refuse.
    """
    directory = Path(directory)
    for sub in ("images", "labels", "parts", "ignore"):
        (directory / sub).mkdir(parents=True, exist_ok=True)
    entries = []
    for i, s in enumerate(samples):
        scaled = s.image.astype(np.float64) * 255.0
        rounded = np.round(scaled)
        if not np.array_equal(
            s.image, (rounded / 255.0).astype(np.float32)
        ):
            raise InvalidSpec(f"sample {i} image is not 8-bit quantized")
        if s.parts.min() < NO_PART or s.parts.max() >= 65535:
            raise InvalidSpec(f"sample {i} part ids outside uint16 range")
        Image.fromarray(rounded.astype(np.uint8), mode="RGB").save(
            directory / "images" / f"{i}.png"
        )
        _write_png16(directory / "labels" / f"{i}.png", s.label)
        _write_png16(directory / "parts" / f"{i}.png", s.parts + 1)  # 0 = no part
        _write_png16(directory / "ignore" / f"{i}.png", s.ignore.astype(np.uint16))
        entries.append(
            {
                "index": i,
                "image": f"images/{i}.png",
                "label": f"labels/{i}.png",
                "parts": f"parts/{i}.png",
                "ignore": f"ignore/{i}.png",
            }
        )
    manifest = {
        "version": MANIFEST_VERSION,
        "spec": _spec_to_dict(spec),
        "classes": [c.name for c in spec.classes],
        "parts": part_table(spec),
        "samples": entries,
    }
    manifest_path = directory / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


@dataclass
class Dataset:
    """A loaded dataset plus its manifest metadata."""

    samples: list[SegmentationSample]
    spec: SceneSpec
    class_names: list[str]
    parts: list[dict]
    manifest: dict = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i: int) -> SegmentationSample:
        return self.samples[i]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def load_dataset(directory: str | Path) -> Dataset:
    """Load a saved dataset; bit-exact inverse of save_dataset."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise CorruptManifest(f"no {MANIFEST_NAME} in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptManifest(f"unparseable manifest: {exc}") from exc
    for key in ("version", "spec", "classes", "parts", "samples"):
        if key not in manifest:
            raise CorruptManifest(f"manifest missing key {key!r}")
    if manifest["version"] != MANIFEST_VERSION:
        raise CorruptManifest(f"unsupported manifest version {manifest['version']}")
    try:
        spec = spec_from_dict(manifest["spec"])
    except (TypeError, KeyError) as exc:
        raise CorruptManifest(f"bad spec block: {exc}") from exc
    samples = []
    for entry in manifest["samples"]:
        img_path = directory / entry["image"]
        if not img_path.exists():
            raise MissingFile(str(img_path))
        rgb = np.asarray(Image.open(img_path), dtype=np.uint8)
        image = (rgb.astype(np.float64) / 255.0).astype(np.float32)
        label = _read_png16(directory / entry["label"]).astype(np.int32)
        parts = _read_png16(directory / entry["parts"]).astype(np.int32) - 1
        ignore = _read_png16(directory / entry["ignore"]).astype(bool)
        samples.append(
            SegmentationSample(image=image, label=label, parts=parts, ignore=ignore)
        )
    return Dataset(
        samples=samples,
        spec=spec,
        class_names=list(manifest["classes"]),
        parts=list(manifest["parts"]),
        manifest=manifest,
    )


# --- statistics ---------------------------------------------------------


def class_frequency(
    samples: list[SegmentationSample], num_classes: int | None = None
) -> np.ndarray:
    """Per-class fraction of non-ignore pixels across all samples."""
    if not samples:
        raise EmptyDataset("class_frequency needs at least one sample")
    if num_classes is None:
        num_classes = int(max(s.label.max() for s in samples)) + 1
    counts = np.zeros(num_classes, dtype=np.int64)
    for s in samples:
        valid = s.label[~s.ignore]
        counts += np.bincount(valid.ravel(), minlength=num_classes)
    total = counts.sum()
    if total == 0:
        raise EmptyDataset("all pixels are ignore-masked")
    return counts / total


# --- stock scenes -------------------------------------------------------

_YELLOW = (0.95, 0.83, 0.12)
_BLACK = (0.05, 0.05, 0.05)


def default_scene(
    seed: int = 0,
    image_size: tuple[int, int] = (64, 64),
    objects_per_image: tuple[int, int] = (2, 4),
    noise_std: float = 0.02,
) -> SceneSpec:
    """Six classes with shared and class-unique parts.

    The two vehicle classes share body/window/wheel appearance and are
    told apart only by the arrangement (checker vs stripes) of a small
    marker part drawn from one palette; the two person classes share
    torso/head and differ by a colored accessory. One class is a
    high-frequency two-tone texture that is locally unmistakable.
    """
    body_color = (0.34, 0.40, 0.58)
    window = PartSpec(
        "window", fill="flat", rel_box=(0.12, 0.08, 0.42, 0.48),
        color=(0.72, 0.88, 0.92), jitter=0.02,
    )
    wheel_l = PartSpec(
        "wheel", mask="ellipse", rel_box=(0.68, 0.06, 1.0, 0.34),
        color=(0.06, 0.06, 0.06), jitter=0.01,
    )
    wheel_r = PartSpec(
        "wheel", mask="ellipse", rel_box=(0.68, 0.62, 1.0, 0.90),
        color=(0.06, 0.06, 0.06), jitter=0.01,
    )
    torso = PartSpec(
        "torso", mask="ellipse", rel_box=(0.30, 0.05, 1.0, 0.95),
        color=(0.78, 0.58, 0.42), jitter=0.02,
    )
    head = PartSpec(
        "head", mask="ellipse", rel_box=(0.0, 0.25, 0.32, 0.75),
        color=(0.93, 0.78, 0.62), jitter=0.02,
    )
    classes = (
        ClassSpec(
            0, "background",
            parts=(PartSpec("base", color=(0.16, 0.17, 0.19), jitter=0.03),),
        ),
        ClassSpec(
            1, "car", size=(14, 20), size_jitter=2,
            parts=(
                PartSpec("body", color=body_color, jitter=0.02),
                window, wheel_l, wheel_r,
                PartSpec(
                    "headlight", fill="checker", period=1,
                    rel_box=(0.28, 0.68, 0.62, 0.96),
                    color=_YELLOW, color2=_BLACK,
                ),
            ),
        ),
        ClassSpec(
            2, "truck", size=(14, 20), size_jitter=2,
            parts=(
                PartSpec("body", color=body_color, jitter=0.02),
                window, wheel_l, wheel_r,
                PartSpec(
                    "ladder", fill="stripes", period=1, orient="h",
                    rel_box=(0.28, 0.68, 0.62, 0.96),
                    color=_YELLOW, color2=_BLACK,
                ),
            ),
        ),
        ClassSpec(
            3, "walker", size=(16, 10), size_jitter=1,
            parts=(
                torso, head,
                PartSpec("cap", rel_box=(0.0, 0.28, 0.14, 0.72), color=(0.88, 0.10, 0.12)),
            ),
        ),
        ClassSpec(
            4, "runner", size=(16, 10), size_jitter=1,
            parts=(
                torso, head,
                PartSpec("band", rel_box=(0.52, 0.05, 0.70, 0.95), color=(0.10, 0.78, 0.24)),
            ),
        ),
        ClassSpec(
            5, "speckle", size=(12, 12), size_jitter=1,
            parts=(
                PartSpec(
                    "grain", fill="twotone",
                    color=(0.58, 0.20, 0.62), color2=(0.94, 0.90, 0.28),
                ),
            ),
        ),
    )
    return SceneSpec(
        image_size=image_size,
        classes=classes,
        background_class_id=0,
        objects_per_image=objects_per_image,
        noise_std=noise_std,
        seed=seed,
        ignore_border=1,
    )


def texture_probe_scene(seed: int = 0, image_size: tuple[int, int] = (48, 48)) -> SceneSpec:
    """Two foreground textures with opposite context demands.

    "grid" objects are a locally unique two-tone speckle: a tiny window
    suffices to recognize them. "plain" objects have an interior colored
    exactly like the background, with only a thin bright shell marking
    them, so interior pixels can only be resolved once a window reaches
    the shell.
    """
    bg = (0.30, 0.30, 0.32)
    classes = (
        ClassSpec(0, "background", parts=(PartSpec("base", color=bg, jitter=0.02),)),
        ClassSpec(
            1, "plain", size=(20, 20),
            parts=(
                PartSpec("shell", color=(0.96, 0.55, 0.10), jitter=0.01),
                PartSpec("core", rel_box=(0.1, 0.1, 0.9, 0.9), color=bg, jitter=0.02),
            ),
        ),
        ClassSpec(
            2, "grid", size=(14, 14),
            parts=(
                PartSpec(
                    "grain", fill="twotone",
                    color=(0.16, 0.66, 0.76), color2=(0.86, 0.90, 0.22),
                ),
            ),
        ),
    )
    return SceneSpec(
        image_size=image_size,
        classes=classes,
        background_class_id=0,
        objects_per_image=(2, 3),
        noise_std=0.02,
        seed=seed,
        ignore_border=0,
    )


def unique_part_scene(seed: int = 0, image_size: tuple[int, int] = (48, 48)) -> SceneSpec:
    """Two classes that differ only by one structured part.

    Both bodies are iid coin flips over the same two gray tones; the
    "marked" class additionally carries an "emblem": the same two tones
    arranged as a period-1 checkerboard. Shuffling the emblem's pixels
    makes it statistically identical to body texture, which is exactly
    what a part-removal probe should detect. A small flat "dot" part is
    shared by both classes as a control.
    """
    tone_a = (0.36, 0.36, 0.38)
    tone_b = (0.62, 0.62, 0.64)
    dot = PartSpec("dot", rel_box=(0.0, 0.0, 0.20, 0.20), color=(0.85, 0.85, 0.88))
    body = PartSpec("body", fill="twotone", color=tone_a, color2=tone_b)
    classes = (
        ClassSpec(0, "background", parts=(PartSpec("base", color=(0.15, 0.15, 0.16), jitter=0.02),)),
        ClassSpec(
            1, "marked", size=(16, 16),
            parts=(
                body,
                PartSpec(
                    "emblem", fill="checker", period=1,
                    rel_box=(0.25, 0.25, 0.75, 0.75),
                    color=tone_a, color2=tone_b,
                ),
                dot,
            ),
        ),
        ClassSpec(2, "blank", size=(16, 16), parts=(body, dot)),
    )
    return SceneSpec(
        image_size=image_size,
        classes=classes,
        background_class_id=0,
        objects_per_image=(2, 3),
        noise_std=0.01,
        seed=seed,
        ignore_border=0,
    )


SCENE_FACTORIES = {
    "default6": default_scene,
    "texture_probe": texture_probe_scene,
    "unique_part": unique_part_scene,
}

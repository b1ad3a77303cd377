"""Per-pixel context probes: how much surrounding image a prediction needs.

For each pixel we run the model on centered square crops from a fixed
schedule {beta, 2*beta, ..., n*beta}, smallest first, and record the
first size whose center prediction is right (supervised form) or agrees
with the full-image prediction (label-free form). Pixels that never
succeed get a MISS sentinel; ignore-masked pixels an IGNORE sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import CenterOutOfBounds, EmptyInput, IgnorePixel, InvalidSpec
from .hierarchy import InducedHierarchy

MISS = 0
IGNORE = -1


@dataclass(frozen=True)
class MRCConfig:
    beta: int = 25
    n: int = 10
    center_patch: int = 1
    padding_policy: str = "clamp"  # clamp-to-image | reflect

    def __post_init__(self) -> None:
        if self.beta < 1 or self.n < 1:
            raise InvalidSpec("beta and n must be >= 1")
        if self.center_patch % 2 != 1 or self.center_patch > self.beta:
            raise InvalidSpec("center_patch must be odd and <= beta")
        if self.padding_policy not in ("clamp", "reflect"):
            raise InvalidSpec(f"unknown padding policy {self.padding_policy!r}")

    @property
    def schedule(self) -> list[int]:
        return [self.beta * i for i in range(1, self.n + 1)]


@dataclass(frozen=True)
class CropSpec:
    center: tuple[int, int]  # (x, y)
    size: int


@dataclass
class MRCMap:
    values: np.ndarray  # H x W int32: schedule value, MISS, or IGNORE
    schedule: list[int]


def _axis_indices(center: int, size: int, limit: int, padding: str) -> np.ndarray:
    lo = (size - 1) // 2
    idx = np.arange(center - lo, center - lo + size)
    if padding == "clamp":
        return np.clip(idx, 0, limit - 1)
    if limit == 1:
        return np.zeros(size, dtype=int)
    period = 2 * limit - 2
    j = np.mod(idx, period)
    return np.where(j >= limit, period - j, j)


def extract_crop(image: np.ndarray, spec: CropSpec, padding: str = "clamp") -> np.ndarray:
    """Square crop of ``spec.size`` centered at (x, y), padded per policy."""
    if spec.size < 1:
        raise InvalidSpec("crop size must be >= 1")
    x, y = spec.center
    h, w = image.shape[:2]
    if not (0 <= x < w and 0 <= y < h):
        raise CenterOutOfBounds(f"center ({x}, {y}) outside {w}x{h} image")
    rows = _axis_indices(y, spec.size, h, padding)
    cols = _axis_indices(x, spec.size, w, padding)
    return image[np.ix_(rows, cols)]


def _patch_offsets(patch: int) -> list[tuple[int, int]]:
    lo = (patch - 1) // 2
    return [(dy, dx) for dy in range(-lo, patch - lo) for dx in range(-lo, patch - lo)]


def _centers_agree(
    predictor,
    image: np.ndarray,
    centers: np.ndarray,
    size: int,
    cfg: MRCConfig,
    target: np.ndarray,
    skip: np.ndarray | None,
) -> np.ndarray:
    """For each (x, y) center: does the crop's center patch match ``target``?

    ``target`` is a full-resolution label map (ground truth or the
    full-image prediction); patch pixels falling outside the image, or
    flagged in ``skip``, are not required to match. Crops are gathered
    and scored in memory-bounded batches.
    """
    h, w = image.shape[:2]
    lo = (size - 1) // 2
    ok = np.ones(len(centers), dtype=bool)
    chunk = max(1, int(4_000_000 / (size * size)))
    for start in range(0, len(centers), chunk):
        block = centers[start : start + chunk]
        xs, ys = block[:, 0], block[:, 1]
        rows = np.stack([_axis_indices(y, size, h, cfg.padding_policy) for y in ys])
        cols = np.stack([_axis_indices(x, size, w, cfg.padding_policy) for x in xs])
        crops = image[rows[:, :, None], cols[:, None, :], :]
        preds = predictor.predict_batch(crops)
        good = np.ones(len(block), dtype=bool)
        for dy, dx in _patch_offsets(cfg.center_patch):
            py, px = ys + dy, xs + dx
            inside = (py >= 0) & (py < h) & (px >= 0) & (px < w)
            pyc, pxc = np.clip(py, 0, h - 1), np.clip(px, 0, w - 1)
            needed = inside.copy()
            if skip is not None:
                needed &= ~skip[pyc, pxc]
            cy, cx = lo + dy, lo + dx
            if not (0 <= cy < size and 0 <= cx < size):
                continue  # patch exceeds the crop itself (only if patch > size)
            match = preds[:, cy, cx] == target[pyc, pxc]
            good &= ~needed | match
        ok[start : start + len(block)] = good
    return ok


def mrc_pixel(
    predictor,
    image: np.ndarray,
    label: np.ndarray,
    x: int,
    y: int,
    cfg: MRCConfig,
    ignore: np.ndarray | None = None,
) -> int:
    """Smallest schedule size whose crop classifies (x, y) correctly.

    Scans the schedule smallest-first and stops at the first success;
    returns MISS when every size fails.
    """
    h, w = label.shape
    if not (0 <= x < w and 0 <= y < h):
        raise CenterOutOfBounds(f"pixel ({x}, {y}) outside {w}x{h} image")
    if ignore is not None and ignore[y, x]:
        raise IgnorePixel(f"pixel ({x}, {y}) is ignore-masked")
    centers = np.array([[x, y]])
    for m in cfg.schedule:
        if _centers_agree(predictor, image, centers, m, cfg, label, ignore)[0]:
            return m
    return MISS


def mrc_map(
    predictor,
    image: np.ndarray,
    label: np.ndarray,
    cfg: MRCConfig,
    ignore: np.ndarray | None = None,
) -> MRCMap:
    """Supervised context map over every non-ignore pixel."""
    h, w = label.shape
    values = np.full((h, w), MISS, dtype=np.int32)
    if ignore is None:
        ignore = np.zeros((h, w), dtype=bool)
    values[ignore] = IGNORE
    ys, xs = np.nonzero(~ignore)
    pending = np.stack([xs, ys], axis=1)
    for m in cfg.schedule:
        if len(pending) == 0:
            break
        hit = _centers_agree(predictor, image, pending, m, cfg, label, ignore)
        done = pending[hit]
        values[done[:, 1], done[:, 0]] = m
        pending = pending[~hit]
    return MRCMap(values=values, schedule=cfg.schedule)


def umrc_map(
    predictor,
    image: np.ndarray,
    cfg: MRCConfig,
    monotone: bool = False,
) -> MRCMap:
    """Label-free context map against the full-image prediction.

    Default reading: the smallest schedule size whose crop prediction
    already equals the full-image prediction. With ``monotone`` the scan
    runs top-down instead and returns the smallest size from which all
    larger sizes agree (the stable suffix), MISS if even the largest
    crop disagrees.
    """
    full_pred = predictor.predict(image)
    h, w = full_pred.shape
    values = np.full((h, w), MISS, dtype=np.int32)
    ys, xs = np.nonzero(np.ones((h, w), dtype=bool))
    all_centers = np.stack([xs, ys], axis=1)
    if not monotone:
        pending = all_centers
        for m in cfg.schedule:
            if len(pending) == 0:
                break
            hit = _centers_agree(predictor, image, pending, m, cfg, full_pred, None)
            done = pending[hit]
            values[done[:, 1], done[:, 0]] = m
            pending = pending[~hit]
        return MRCMap(values=values, schedule=cfg.schedule)
    stable_from = np.full((h, w), cfg.schedule[0], dtype=np.int32)
    alive = np.ones((h, w), dtype=bool)  # no disagreement seen above this size yet
    for m in reversed(cfg.schedule):
        centers = all_centers[alive[ys, xs]]
        if len(centers) == 0:
            break
        hit = _centers_agree(predictor, image, centers, m, cfg, full_pred, None)
        broke = centers[~hit]
        if m == cfg.schedule[-1]:
            values[broke[:, 1], broke[:, 0]] = MISS
            alive[broke[:, 1], broke[:, 0]] = False
            continue
        idx = cfg.schedule.index(m)
        stable_from[broke[:, 1], broke[:, 0]] = cfg.schedule[idx + 1]
        alive[broke[:, 1], broke[:, 0]] = False
    values[alive] = stable_from[alive]
    return MRCMap(values=values, schedule=cfg.schedule)


# --- aggregate statistics ----------------------------------------------------


@dataclass
class ClassContextStats:
    class_id: int
    name: str
    pixel_count: int
    avg_mrc: float  # NaN when no classified pixels
    miss_rate: float
    frequency: float
    avg_object_height: float
    leaf_depth: int | None = None


def _object_heights(label: np.ndarray, class_id: int) -> list[int]:
    mask = label == class_id
    if not mask.any():
        return []
    comp, n = ndimage.label(mask)
    return [sl[0].stop - sl[0].start for sl in ndimage.find_objects(comp)[:n] if sl]


def mrc_class_stats(
    maps: list[MRCMap],
    labels: list[np.ndarray],
    ignores: list[np.ndarray] | None = None,
    num_classes: int | None = None,
    class_names: list[str] | None = None,
    hierarchy: InducedHierarchy | None = None,
) -> list[ClassContextStats]:
    """Per-class context averages over many maps.

    Averages run over non-MISS, non-IGNORE pixels; connected-component
    bounding boxes supply the object-height column.
    """
    if not maps:
        raise EmptyInput("no maps given")
    if len(maps) != len(labels):
        raise EmptyInput("maps and labels must align")
    if ignores is None:
        ignores = [np.zeros(l.shape, dtype=bool) for l in labels]
    if num_classes is None:
        num_classes = int(max(l.max() for l in labels)) + 1
    sums = np.zeros(num_classes)
    hits = np.zeros(num_classes, dtype=np.int64)
    misses = np.zeros(num_classes, dtype=np.int64)
    counts = np.zeros(num_classes, dtype=np.int64)
    heights: list[list[int]] = [[] for _ in range(num_classes)]
    for m, label, ignore in zip(maps, labels, ignores):
        valid = ~ignore
        for c in range(num_classes):
            sel = valid & (label == c)
            vals = m.values[sel]
            counts[c] += sel.sum()
            misses[c] += int((vals == MISS).sum())
            got = vals[vals > 0]
            sums[c] += got.sum()
            hits[c] += got.size
            heights[c].extend(_object_heights(label, c))
    total = counts.sum()
    if total == 0:
        raise EmptyInput("all pixels ignore-masked")
    stats = []
    for c in range(num_classes):
        name = class_names[c] if class_names else str(c)
        stats.append(
            ClassContextStats(
                class_id=c,
                name=name,
                pixel_count=int(counts[c]),
                avg_mrc=float(sums[c] / hits[c]) if hits[c] else float("nan"),
                miss_rate=float(misses[c] / counts[c]) if counts[c] else float("nan"),
                frequency=float(counts[c] / total),
                avg_object_height=(
                    float(np.mean(heights[c])) if heights[c] else float("nan")
                ),
                leaf_depth=hierarchy.leaf_depth(c) if hierarchy else None,
            )
        )
    return stats


def write_mrc_stats_csv(stats: list[ClassContextStats], path: str | Path) -> None:
    import csv

    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["class", "avg_mrc", "miss_rate", "frequency", "avg_object_height", "leaf_depth"]
        )
        for s in stats:
            writer.writerow(
                [
                    s.name,
                    "" if np.isnan(s.avg_mrc) else repr(s.avg_mrc),
                    "" if np.isnan(s.miss_rate) else repr(s.miss_rate),
                    repr(s.frequency),
                    "" if np.isnan(s.avg_object_height) else repr(s.avg_object_height),
                    "" if s.leaf_depth is None else s.leaf_depth,
                ]
            )


def default_class_report(
    stats: list[ClassContextStats], hierarchy: InducedHierarchy
) -> dict:
    """Identify the low-context "default" class and its correlates.

    The class with the smallest average context requirement is the
    default candidate; the report records whether it sits at or above
    the median leaf depth and whether it is *not* the most frequent
    class. Exact ties for the minimum are flagged and leave no winner.
    """
    scored = [s for s in stats if s.pixel_count > 0 and not np.isnan(s.avg_mrc)]
    per_class = []
    by_mrc = sorted(scored, key=lambda s: (s.avg_mrc, s.class_id))
    by_freq = sorted(scored, key=lambda s: (-s.frequency, s.class_id))
    mrc_rank = {s.class_id: i + 1 for i, s in enumerate(by_mrc)}
    freq_rank = {s.class_id: i + 1 for i, s in enumerate(by_freq)}
    for s in sorted(scored, key=lambda s: s.class_id):
        per_class.append(
            {
                "class_id": s.class_id,
                "class": s.name,
                "avg_mrc": s.avg_mrc,
                "avg_mrc_rank": mrc_rank[s.class_id],
                "frequency": s.frequency,
                "frequency_rank": freq_rank[s.class_id],
                "leaf_depth": hierarchy.leaf_depth(s.class_id),
            }
        )
    if not scored:
        return {"per_class": [], "tie": False, "default_candidate": None}
    best = by_mrc[0]
    tie = sum(1 for s in scored if s.avg_mrc == best.avg_mrc) > 1
    if tie:
        return {"per_class": per_class, "tie": True, "default_candidate": None}
    depths = sorted(hierarchy.leaf_depth(s.class_id) for s in scored)
    median_depth = depths[(len(depths) - 1) // 2]
    most_frequent = by_freq[0]
    return {
        "per_class": per_class,
        "tie": False,
        "default_candidate": best.name,
        "default_class_id": best.class_id,
        "depth_at_most_median": hierarchy.leaf_depth(best.class_id) <= median_depth,
        "not_most_frequent": best.class_id != most_frequent.class_id,
        "most_frequent_class": most_frequent.name,
    }

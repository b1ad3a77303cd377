"""Semantic input removal: rank object parts by decision-accuracy damage.

A part is "removed" by shuffling its pixels in place, which preserves
local color statistics while destroying spatial arrangement (a zero
mask is available for comparison). For a chosen tree node we measure
how often its child choice still matches the ground truth on the pixels
it routes, before and after removal; parts are ranked by accuracy
damage per part pixel so small discriminative parts are not drowned out
by large generic ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .datagen import NO_PART
from .errors import EmptyMask, InsufficientParts, LeafHasNoChildren, PartAbsent
from .hierarchy import InducedHierarchy
from .model import SegModel
from .rules import routed_pixels


@dataclass(frozen=True)
class RemovalMode:
    mode: str = "shuffle"  # shuffle | zero
    seed: int = 0
    scope: str = "instance"  # shuffle within each connected part instance | class


@dataclass
class PartDamage:
    part_id: int
    baseline_metric: float
    removed_metric: float
    damage: float
    part_pixel_count: int
    damage_per_pixel: float
    part_name: str | None = None


def remove_part(
    image: np.ndarray,
    part_mask: np.ndarray,
    mode: RemovalMode,
    spawn_key: tuple[int, ...] = (),
) -> np.ndarray:
    """Return a copy of ``image`` with the masked region removed.

    Shuffle mode applies a seeded permutation to the masked pixels
    (whole RGB triples move together), so the value multiset inside the
    mask is exactly preserved; zero mode blanks them. ``spawn_key``
    extends the seed so every (image, part) pair gets its own stream.
    """
    mask = np.asarray(part_mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("part mask has no pixels")
    out = np.array(image, copy=True)
    if mode.mode == "zero":
        out[mask] = 0.0
        return out
    if mode.mode != "shuffle":
        raise ValueError(f"unknown removal mode {mode.mode!r}")
    rng = np.random.default_rng(np.random.SeedSequence([mode.seed, *spawn_key]))
    if mode.scope == "class":
        groups = [np.nonzero(mask)]
    else:
        comp, n = ndimage.label(mask)
        groups = [np.nonzero(comp == i) for i in range(1, n + 1)]
    for ys, xs in groups:
        perm = rng.permutation(len(ys))
        out[ys, xs] = image[ys[perm], xs[perm]]
    return out


def _child_membership(h: InducedHierarchy, node_id: int) -> np.ndarray:
    """Bool table [child j, class c]: is c under child j's subtree."""
    node = h.node(node_id)
    table = np.zeros((len(node.children), h.num_classes), dtype=bool)
    for j, child in enumerate(node.children):
        for c in h.node(child).class_set:
            table[j, c] = True
    return table


def _decision_correct(
    h: InducedHierarchy,
    node_id: int,
    feats: np.ndarray,
    pixels: list[tuple[int, int]],
    label: np.ndarray,
    membership: np.ndarray,
) -> int:
    node = h.node(node_id)
    reps = np.stack([h.node(c).representative for c in node.children])
    xs = np.array([p[0] for p in pixels])
    ys = np.array([p[1] for p in pixels])
    chosen = np.argmax(feats[ys, xs].astype(np.float64) @ reps.T, axis=1)
    return int(membership[chosen, label[ys, xs]].sum())


@dataclass
class _NodeEvalCache:
    """Per-sample routing and baseline decisions, shared across parts.

    Routing is fixed from the unperturbed image so a part's damage
    reflects the node's decision change on one stable pixel population,
    not upstream routing drift.
    """

    routed: list[list[tuple[int, int]]]
    baseline_correct: int
    baseline_total: int


def _prepare_node_eval(
    model: SegModel, h: InducedHierarchy, node_id: int, samples
) -> _NodeEvalCache:
    node = h.node(node_id)
    if node.is_leaf:
        raise LeafHasNoChildren(f"node {node_id} is a leaf")
    membership = _child_membership(h, node_id)
    routed = []
    correct = 0
    total = 0
    for sample in samples:
        feats = model.features(sample.image)
        pix = [
            (x, y)
            for x, y in routed_pixels(h, feats, node_id)
            if not sample.ignore[y, x]
        ]
        routed.append(pix)
        if pix:
            correct += _decision_correct(h, node_id, feats, pix, sample.label, membership)
            total += len(pix)
    return _NodeEvalCache(routed=routed, baseline_correct=correct, baseline_total=total)


def accuracy_damage(
    model: SegModel,
    h: InducedHierarchy,
    node_id: int,
    samples,
    part_id: int,
    mode: RemovalMode,
    _cache: _NodeEvalCache | None = None,
) -> PartDamage:
    """Node decision accuracy before vs after removing one part everywhere.

    The metric is the fraction of routed (non-ignore) pixels whose
    chosen child subtree contains the true class, micro-averaged over
    the dataset. Samples without the part contribute their unperturbed
    decisions to both sides.
    """
    samples = list(samples)
    cache = _cache or _prepare_node_eval(model, h, node_id, samples)
    membership = _child_membership(h, node_id)
    part_pixels = 0
    removed_correct = 0
    for i, sample in enumerate(samples):
        pix = cache.routed[i]
        mask = sample.parts == part_id
        n_mask = int(mask.sum())
        part_pixels += n_mask
        if not pix:
            continue
        if n_mask == 0:
            feats = model.features(sample.image)
        else:
            perturbed = remove_part(sample.image, mask, mode, spawn_key=(i, part_id))
            feats = model.features(perturbed)
        removed_correct += _decision_correct(
            h, node_id, feats, pix, sample.label, membership
        )
    if part_pixels == 0:
        raise PartAbsent(f"part {part_id} appears in no sample")
    baseline = cache.baseline_correct / max(cache.baseline_total, 1)
    removed = removed_correct / max(cache.baseline_total, 1)
    damage = baseline - removed
    return PartDamage(
        part_id=part_id,
        baseline_metric=baseline,
        removed_metric=removed,
        damage=damage,
        part_pixel_count=part_pixels,
        damage_per_pixel=damage / part_pixels,
    )


def present_part_ids(samples) -> list[int]:
    ids: set[int] = set()
    for sample in samples:
        ids.update(int(v) for v in np.unique(sample.parts) if v != NO_PART)
    return sorted(ids)


def fine_rule(
    model: SegModel,
    h: InducedHierarchy,
    node_id: int,
    samples,
    mode: RemovalMode,
    part_ids: list[int] | None = None,
    part_names: dict[int, str] | None = None,
) -> list[PartDamage]:
    """Rank all present parts by damage per pixel (descending, ties by id)."""
    samples = list(samples)
    if part_ids is None:
        part_ids = present_part_ids(samples)
    if len(part_ids) < 2:
        raise InsufficientParts(f"need >= 2 parts, found {len(part_ids)}")
    cache = _prepare_node_eval(model, h, node_id, samples)
    damages = [
        accuracy_damage(model, h, node_id, samples, pid, mode, _cache=cache)
        for pid in part_ids
    ]
    if part_names:
        for d in damages:
            d.part_name = part_names.get(d.part_id)
    return sorted(damages, key=lambda d: (-d.damage_per_pixel, d.part_id))


def rank_by_raw_damage(damages: list[PartDamage]) -> list[PartDamage]:
    return sorted(damages, key=lambda d: (-d.damage, d.part_id))


def write_sir_csv(
    rankings: dict[str, list[PartDamage]], node_id: int, path: str | Path
) -> None:
    """CSV with one row per (mode, part), carrying both ranking keys."""
    import csv

    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "node", "part", "part_name", "mode", "baseline", "removed",
                "damage", "pixels", "damage_per_pixel", "rank_raw", "rank_per_pixel",
            ]
        )
        for mode_name, damages in sorted(rankings.items()):
            per_pixel = sorted(damages, key=lambda d: (-d.damage_per_pixel, d.part_id))
            raw = rank_by_raw_damage(damages)
            rank_pp = {d.part_id: i + 1 for i, d in enumerate(per_pixel)}
            rank_raw = {d.part_id: i + 1 for i, d in enumerate(raw)}
            for d in per_pixel:
                writer.writerow(
                    [
                        node_id,
                        d.part_id,
                        d.part_name or "",
                        mode_name,
                        repr(d.baseline_metric),
                        repr(d.removed_metric),
                        repr(d.damage),
                        d.part_pixel_count,
                        repr(d.damage_per_pixel),
                        rank_raw[d.part_id],
                        rank_pp[d.part_id],
                    ]
                )

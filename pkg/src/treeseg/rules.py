"""Coarse visual decision rules: which child class set a tree node looks for.

For an inner node, each child's group saliency (over the pixels that
node actually routes) is overlapped with the ground-truth label map.
Overlap mass is normalized by per-class pixel counts so large classes
cannot win by size alone; the child whose own class set accumulates the
most normalized mass is the set the rule "looks for".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import LeafHasNoChildren, NoRoutedPixels, ResolutionMismatch, TreesegError
from .hierarchy import InducedHierarchy
from .model import SegModel
from .saliency import node_grad_pam


@dataclass
class OverlapTable:
    """Raw and size-normalized saliency mass per (child, class)."""

    child_class_sets: list[list[int]]
    raw: np.ndarray  # J x C
    counts: np.ndarray  # C label pixel counts (non-ignore)
    normalized: np.ndarray  # J x C, zero where a class has no pixels


@dataclass
class NodeRule:
    node_id: int
    selected_child: int | None
    selected_class_set: list[int]
    child_scores: list[float]
    normalized_table: np.ndarray | None
    raw_table: np.ndarray | None
    tie: bool = False
    support: int = 0
    error: str | None = None
    child_class_sets: list[list[int]] = field(default_factory=list)


def _align_saliency(sal: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if sal.shape == shape:
        return sal
    fy, ry = divmod(shape[0], sal.shape[0])
    fx, rx = divmod(shape[1], sal.shape[1])
    if ry or rx or fy < 1 or fx < 1:
        raise ResolutionMismatch(
            f"cannot align saliency {sal.shape} to labels {shape}"
        )
    return np.repeat(np.repeat(sal, fy, axis=0), fx, axis=1)


def overlap_scores(
    saliency_per_child: list[np.ndarray],
    label: np.ndarray,
    class_sets: list,
    ignore: np.ndarray | None = None,
    threshold: float | None = None,
) -> OverlapTable:
    """Overlap between each child's saliency map and the label regions.

    Raw mass for (child, class) is the saliency summed over that class's
    pixels; normalized divides by the class pixel count. ``threshold``
    switches to a binary reading where saliency above ``threshold *
    max`` counts 1 per pixel.
    """
    label = np.asarray(label)
    if ignore is None:
        ignore = np.zeros(label.shape, dtype=bool)
    num_classes = int(label.max()) + 1
    for cs in class_sets:
        num_classes = max(num_classes, max(cs) + 1)
    raw = np.zeros((len(saliency_per_child), num_classes))
    counts = np.zeros(num_classes, dtype=np.int64)
    valid = ~ignore
    for c in range(num_classes):
        counts[c] = int(((label == c) & valid).sum())
    for j, sal in enumerate(saliency_per_child):
        sal = _align_saliency(np.asarray(sal, dtype=np.float64), label.shape)
        if threshold is not None:
            top = sal.max()
            sal = (sal > threshold * top).astype(np.float64) if top > 0 else np.zeros_like(sal)
        for c in range(num_classes):
            raw[j, c] = float(sal[(label == c) & valid].sum())
    normalized = np.where(counts > 0, raw / np.maximum(counts, 1), 0.0)
    return OverlapTable(
        child_class_sets=[sorted(cs) for cs in class_sets],
        raw=raw,
        counts=counts,
        normalized=normalized,
    )


def routed_pixels(
    h: InducedHierarchy, feats: np.ndarray, node_id: int
) -> list[tuple[int, int]]:
    """Pixels whose hard decision path passes through ``node_id``."""
    hh, ww, _ = feats.shape
    flat = feats.reshape(-1, feats.shape[-1]).astype(np.float64)
    idx = np.arange(flat.shape[0])
    path = h.path_to_node(node_id)
    for step, nxt in zip(path, path[1:]):
        node = h.node(step)
        reps = np.stack([h.node(c).representative for c in node.children])
        chosen = np.argmax(flat[idx] @ reps.T, axis=1)
        want = node.children.index(nxt)
        idx = idx[chosen == want]
    return [(int(i % ww), int(i // ww)) for i in idx]


def coarse_rule(
    model: SegModel,
    h: InducedHierarchy,
    node_id: int,
    samples,
    layer: str | None = None,
    threshold: float | None = None,
    chunk: int = 64,
) -> NodeRule:
    """Select the class set a node's rule looks for, over a set of images.

    Per image: saliency for each child over the node's routed pixels,
    overlap against labels, normalize by class size; per-image
    normalized tables are averaged and the child with the largest mass
    on its own classes wins. Exact ties flag the rule and keep child 0.
    """
    node = h.node(node_id)
    if node.is_leaf:
        raise LeafHasNoChildren(f"node {node_id} is a leaf")
    class_sets = [sorted(h.node(c).class_set) for c in node.children]
    acc_norm = None
    acc_raw = None
    support = 0
    for sample in samples:
        feats = model.features(sample.image)
        pix = routed_pixels(h, feats, node_id)
        if not pix:
            continue
        sals = [
            node_grad_pam(
                model, h, node_id, j, sample.image, pix, layer=layer, chunk=chunk
            )
            for j in range(len(node.children))
        ]
        table = overlap_scores(
            sals, sample.label, class_sets, ignore=sample.ignore, threshold=threshold
        )
        if acc_norm is None:
            acc_norm = np.zeros_like(table.normalized)
            acc_raw = np.zeros_like(table.raw)
        acc_norm += table.normalized
        acc_raw += table.raw
        support += 1
    if support == 0:
        raise NoRoutedPixels(f"no image routes any pixel through node {node_id}")
    acc_norm /= support
    acc_raw /= support
    child_scores = [
        float(sum(acc_norm[j, c] for c in class_sets[j]))
        for j in range(len(node.children))
    ]
    best = int(np.argmax(child_scores))
    tie = sum(1 for s in child_scores if s == child_scores[best]) > 1
    return NodeRule(
        node_id=node_id,
        selected_child=best,
        selected_class_set=class_sets[best],
        child_scores=child_scores,
        normalized_table=acc_norm,
        raw_table=acc_raw,
        tie=tie,
        support=support,
        child_class_sets=class_sets,
    )


def annotate_hierarchy(
    model: SegModel,
    h: InducedHierarchy,
    samples,
    layer: str | None = None,
    threshold: float | None = None,
) -> dict[int, NodeRule]:
    """Coarse rule for every inner node; per-node failures are recorded,
    not raised."""
    rules: dict[int, NodeRule] = {}
    for node in h.inner_nodes():
        try:
            rules[node.id] = coarse_rule(
                model, h, node.id, samples, layer=layer, threshold=threshold
            )
        except TreesegError as exc:
            rules[node.id] = NodeRule(
                node_id=node.id,
                selected_child=None,
                selected_class_set=[],
                child_scores=[],
                normalized_table=None,
                raw_table=None,
                error=f"{type(exc).__name__}: {exc}",
            )
    return rules


def save_node_rules(
    rules: dict[int, NodeRule], path: str | Path, class_names: list[str] | None = None
) -> None:
    def names(ids: list[int]) -> list:
        return [class_names[i] if class_names else i for i in ids]

    doc = {}
    for node_id, rule in sorted(rules.items()):
        entry = {
            "selected_child": rule.selected_child,
            "selected_classes": names(rule.selected_class_set),
            "child_class_sets": [names(cs) for cs in rule.child_class_sets],
            "child_scores": rule.child_scores,
            "tie": rule.tie,
            "support": rule.support,
        }
        if rule.normalized_table is not None:
            entry["normalized_overlap"] = [list(map(float, row)) for row in rule.normalized_table]
            entry["raw_overlap"] = [list(map(float, row)) for row in rule.raw_table]
        if rule.error:
            entry["error"] = rule.error
        doc[str(node_id)] = entry
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

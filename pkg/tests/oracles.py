"""Independent reference implementations used to check the library.

Everything here is written the slow, obvious way (per-pixel loops,
exhaustive enumeration, finite differences) and deliberately avoids the
vectorized code paths under test.
"""

from __future__ import annotations

import math

import numpy as np


# --- cropping -----------------------------------------------------------


def _clamp_index(i: int, n: int) -> int:
    return min(max(i, 0), n - 1)


def _reflect_index(i: int, n: int) -> int:
    if n == 1:
        return 0
    period = 2 * n - 2
    j = i % period
    return period - j if j >= n else j


def naive_crop(image: np.ndarray, x: int, y: int, size: int, padding: str) -> np.ndarray:
    """Gather an m x m crop one pixel at a time."""
    fix = _clamp_index if padding == "clamp" else _reflect_index
    h, w = image.shape[:2]
    lo = (size - 1) // 2
    out = np.empty((size, size) + image.shape[2:], dtype=image.dtype)
    for r in range(size):
        for c in range(size):
            out[r, c] = image[fix(y - lo + r, h), fix(x - lo + c, w)]
    return out


# --- minimum required context --------------------------------------------


def _patch_ok(
    pred_crop: np.ndarray,
    target: np.ndarray,
    x: int,
    y: int,
    size: int,
    patch: int,
    skip: np.ndarray | None,
) -> bool:
    h, w = target.shape
    lo = (size - 1) // 2
    plo = (patch - 1) // 2
    for dy in range(-plo, patch - plo):
        for dx in range(-plo, patch - plo):
            py, px = y + dy, x + dx
            if not (0 <= py < h and 0 <= px < w):
                continue
            if skip is not None and skip[py, px]:
                continue
            cy, cx = lo + dy, lo + dx
            if not (0 <= cy < size and 0 <= cx < size):
                continue
            if pred_crop[cy, cx] != target[py, px]:
                return False
    return True


def exhaustive_mrc_pixel(
    predictor,
    image: np.ndarray,
    target: np.ndarray,
    x: int,
    y: int,
    cfg,
    skip: np.ndarray | None,
) -> int:
    """Evaluate every schedule size independently, then take the smallest hit."""
    hits = []
    for m in cfg.schedule:
        crop = naive_crop(image, x, y, m, cfg.padding_policy)
        pred = predictor.predict(crop)
        if _patch_ok(pred, target, x, y, m, cfg.center_patch, skip):
            hits.append(m)
    return min(hits) if hits else 0


def exhaustive_mrc_map(predictor, image, label, cfg, ignore=None):
    h, w = label.shape
    out = np.zeros((h, w), dtype=np.int32)
    for y in range(h):
        for x in range(w):
            if ignore is not None and ignore[y, x]:
                out[y, x] = -1
                continue
            out[y, x] = exhaustive_mrc_pixel(predictor, image, label, x, y, cfg, ignore)
    return out


def exhaustive_umrc_map(predictor, image, cfg):
    full = predictor.predict(image)
    h, w = full.shape
    out = np.zeros((h, w), dtype=np.int32)
    for y in range(h):
        for x in range(w):
            out[y, x] = exhaustive_mrc_pixel(predictor, image, full, x, y, cfg, None)
    return out


# --- gradients -----------------------------------------------------------


def finite_difference(scalar_fn, activation: np.ndarray, coords, step: float = 1e-3):
    """Central differences of scalar_fn w.r.t. chosen activation entries."""
    grads = []
    for idx in coords:
        bumped = activation.copy()
        bumped[idx] += step
        hi = scalar_fn(bumped)
        bumped = activation.copy()
        bumped[idx] -= step
        lo = scalar_fn(bumped)
        grads.append((hi - lo) / (2.0 * step))
    return np.array(grads)


# --- hierarchy ------------------------------------------------------------


def enumerate_binary_trees(leaves: tuple[int, ...]) -> list[frozenset[frozenset[int]]]:
    """All labeled binary tree shapes over ``leaves``.

    A tree is identified by the set of its internal-node leaf sets
    (every inner node contributes the classes below it), which pins the
    topology uniquely.
    """

    def split(items: tuple[int, ...]):
        if len(items) == 1:
            yield frozenset()
            return
        first, rest = items[0], items[1:]
        n = len(rest)
        for mask in range(2**n):
            left = [first] + [rest[i] for i in range(n) if mask >> i & 1]
            right = [rest[i] for i in range(n) if not mask >> i & 1]
            if not right:
                continue
            for lt in split(tuple(left)):
                for rt in split(tuple(right)):
                    yield lt | rt | {frozenset(items)}

    seen = set()
    out = []
    for sig in split(tuple(leaves)):
        if sig not in seen:
            seen.add(sig)
            out.append(sig)
    return out


def greedy_average_linkage_merges(weights: np.ndarray) -> list[frozenset[int]]:
    """Re-derive the merge sequence with from-scratch distance recomputation.

    Cluster distances are recomputed every step as the mean pairwise
    cosine distance between raw member leaves (no running updates), and
    ties break on the smallest (min id, max id) pair of cluster birth
    ids, matching the declared rule.
    """
    w = np.asarray(weights, dtype=np.float64)
    unit = w / np.linalg.norm(w, axis=1)[:, None]
    n = len(w)
    leaf_dist = 1.0 - unit @ unit.T
    clusters: dict[int, frozenset[int]] = {i: frozenset([i]) for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        for a in sorted(clusters):
            for b in sorted(clusters):
                if a >= b:
                    continue
                total = 0.0
                for i in clusters[a]:
                    for j in clusters[b]:
                        total += leaf_dist[i, j]
                d = total / (len(clusters[a]) * len(clusters[b]))
                key = (d, a, b)
                if best is None or key < best:
                    best = key
        _, a, b = best
        merged = clusters[a] | clusters[b]
        merges.append(merged)
        del clusters[a], clusters[b]
        clusters[next_id] = merged
        next_id += 1
    return merges


def oracle_tree_signature(weights: np.ndarray) -> frozenset[frozenset[int]]:
    """Pick, from the full tree enumeration, the unique tree whose inner
    clusters are exactly the greedy merge sequence's clusters."""
    n = len(weights)
    trees = enumerate_binary_trees(tuple(range(n)))
    merge_sig = frozenset(greedy_average_linkage_merges(weights))
    matches = [t for t in trees if t == merge_sig]
    assert len(matches) == 1, f"expected exactly one matching tree, got {len(matches)}"
    return matches[0]


def _children_of(cluster: frozenset[int], signature) -> tuple[frozenset[int], frozenset[int]]:
    """Split an inner cluster into its two child clusters."""
    candidates = {c for c in signature if c < cluster}
    candidates.update(frozenset([m]) for m in cluster)
    for a in sorted(candidates, key=len, reverse=True):
        b = cluster - a
        if b and b in candidates:
            return a, b
    raise AssertionError("cluster does not split into two children")


def total_linkage_cost(
    weights: np.ndarray, signature: frozenset[frozenset[int]]
) -> float:
    """Sum over inner nodes of the average-linkage distance between the
    two child clusters (used for globally scoring small enumerations)."""
    w = np.asarray(weights, dtype=np.float64)
    unit = w / np.linalg.norm(w, axis=1)[:, None]
    dist = 1.0 - unit @ unit.T
    cost = 0.0
    for cluster in signature:
        a, b = _children_of(cluster, signature)
        total = sum(dist[i, j] for i in a for j in b)
        cost += total / (len(a) * len(b))
    return cost


# --- tree inference --------------------------------------------------------


def soft_probs_by_path_enumeration(h, x: np.ndarray) -> np.ndarray:
    """Leaf probabilities via explicit path products, scalar math only."""
    x = np.asarray(x, dtype=np.float64)

    def softmax(vals):
        top = max(vals)
        exps = [math.exp(v - top) for v in vals]
        s = sum(exps)
        return [e / s for e in exps]

    probs = np.zeros(h.num_classes)

    def walk(node_id, p):
        node = h.node(node_id)
        if node.is_leaf:
            probs[node.leaf_class] = p
            return
        scores = [
            sum(float(xi) * float(ri) for xi, ri in zip(x, h.node(c).representative))
            for c in node.children
        ]
        for child, cp in zip(node.children, softmax(scores)):
            walk(child, p * cp)

    walk(h.root_id, 1.0)
    return probs


def hard_leaf_by_loop(h, x: np.ndarray) -> int:
    """Greedy descent with explicit scalar dot products."""
    node = h.node(h.root_id)
    while not node.is_leaf:
        best_j, best_s = 0, None
        for j, c in enumerate(node.children):
            s = sum(float(a) * float(b) for a, b in zip(x, h.node(c).representative))
            if best_s is None or s > best_s:
                best_j, best_s = j, s
        node = h.node(node.children[best_j])
    return node.leaf_class


# --- overlap tables ---------------------------------------------------------


def overlap_double_loop(saliency_maps, label, class_sets, ignore=None):
    """Raw and normalized overlap via per-pixel double loops."""
    num_classes = int(label.max()) + 1
    for cs in class_sets:
        num_classes = max(num_classes, max(cs) + 1)
    raw = np.zeros((len(saliency_maps), num_classes))
    counts = np.zeros(num_classes)
    h, w = label.shape
    for y in range(h):
        for x in range(w):
            if ignore is not None and ignore[y, x]:
                continue
            counts[label[y, x]] += 1
            for j, sal in enumerate(saliency_maps):
                raw[j, label[y, x]] += sal[y, x]
    normalized = np.zeros_like(raw)
    for j in range(len(saliency_maps)):
        for c in range(num_classes):
            if counts[c] > 0:
                normalized[j, c] = raw[j, c] / counts[c]
    return raw, counts, normalized

"""Decision-tree inference over per-pixel features, plus tree-aware training.

A pixel's feature vector descends the induced hierarchy by inner
products with child representatives: hard mode takes the argmax child
at each node; soft mode multiplies per-node softmax probabilities along
root-to-leaf paths into a distribution over classes. The surrogate
training loss adds the soft distribution's cross-entropy to the usual
per-pixel cross-entropy.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .errors import (
    AllPixelsIgnored,
    DivergedLoss,
    EmptyDataset,
    HierarchyDimensionMismatch,
    LeafHasNoChildren,
)
from .hierarchy import InducedHierarchy, induce, representatives_from_weights
from .model import SegModel, TrainResult, _IGNORE_INDEX


@dataclass
class PathStep:
    node_id: int
    scores: np.ndarray  # per-child inner products
    probs: np.ndarray  # softmax of scores
    chosen: int


@dataclass
class DecisionPath:
    steps: list[PathStep]
    leaf_class: int


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def node_scores(h: InducedHierarchy, node_id: int, x: np.ndarray) -> np.ndarray:
    """Inner products of ``x`` with each child representative, child order."""
    node = h.node(node_id)
    if node.is_leaf:
        raise LeafHasNoChildren(f"node {node_id} is a leaf")
    x = np.asarray(x, dtype=np.float64)
    return np.array(
        [float(x @ h.node(c).representative) for c in node.children], dtype=np.float64
    )


def hard_path(h: InducedHierarchy, x: np.ndarray) -> DecisionPath:
    """Greedy argmax descent from the root; ties go to the lower child index."""
    steps = []
    node = h.root
    while not node.is_leaf:
        scores = node_scores(h, node.id, x)
        chosen = int(np.argmax(scores))
        steps.append(
            PathStep(node_id=node.id, scores=scores, probs=_softmax(scores), chosen=chosen)
        )
        node = h.node(node.children[chosen])
    return DecisionPath(steps=steps, leaf_class=int(node.leaf_class))


def soft_distribution(h: InducedHierarchy, x: np.ndarray) -> np.ndarray:
    """Class distribution: products of per-node child probabilities."""
    probs = np.zeros(h.num_classes, dtype=np.float64)
    stack = [(h.root_id, 1.0)]
    while stack:
        node_id, p = stack.pop()
        node = h.node(node_id)
        if node.is_leaf:
            probs[node.leaf_class] = p
            continue
        child_p = _softmax(node_scores(h, node_id, x))
        for j, child in enumerate(node.children):
            stack.append((child, p * child_p[j]))
    return probs


# --- vectorized inference ----------------------------------------------------


def _check_dim(h: InducedHierarchy, d: int) -> None:
    if h.d != d:
        raise HierarchyDimensionMismatch(
            f"hierarchy dimension {h.d} != feature dimension {d}"
        )


def predict_features(h: InducedHierarchy, feats: np.ndarray, mode: str = "hard") -> np.ndarray:
    """Tree-classify a (..., d) feature array; returns integer labels."""
    flat = np.asarray(feats, dtype=np.float64).reshape(-1, feats.shape[-1])
    _check_dim(h, flat.shape[1])
    if mode == "hard":
        out = np.empty(len(flat), dtype=np.int32)
        stack = [(h.root_id, np.arange(len(flat)))]
        while stack:
            node_id, idx = stack.pop()
            if idx.size == 0:
                continue
            node = h.node(node_id)
            if node.is_leaf:
                out[idx] = node.leaf_class
                continue
            reps = np.stack([h.node(c).representative for c in node.children])
            chosen = np.argmax(flat[idx] @ reps.T, axis=1)
            for j, child in enumerate(node.children):
                stack.append((child, idx[chosen == j]))
        return out.reshape(feats.shape[:-1])
    if mode == "soft":
        dist = soft_distribution_features(h, feats)
        return np.argmax(dist, axis=-1).astype(np.int32)
    raise ValueError(f"unknown mode {mode!r}")


def soft_distribution_features(h: InducedHierarchy, feats: np.ndarray) -> np.ndarray:
    """Soft leaf distributions for a (..., d) feature array -> (..., C)."""
    flat = np.asarray(feats, dtype=np.float64).reshape(-1, feats.shape[-1])
    _check_dim(h, flat.shape[1])
    logp = np.zeros((len(flat), h.num_classes), dtype=np.float64)
    for node in h.inner_nodes():
        reps = np.stack([h.node(c).representative for c in node.children])
        s = flat @ reps.T
        z = s - s.max(axis=1, keepdims=True)
        logsm = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        for j, child in enumerate(node.children):
            cols = sorted(h.node(child).class_set)
            logp[:, cols] += logsm[:, j : j + 1]
    probs = np.exp(logp)
    return probs.reshape(feats.shape[:-1] + (h.num_classes,))


def predict_image(
    model: SegModel,
    h: InducedHierarchy,
    image: np.ndarray,
    mode: str = "hard",
    return_paths: bool = False,
):
    """Tree-classify every pixel of an image.

    With ``return_paths`` the full per-pixel decision trace is returned
    alongside the label map (intended for small diagnostic images).
    """
    _check_dim(h, model.feature_dim)
    feats = model.features(image)
    labels = predict_features(h, feats, mode=mode)
    if not return_paths:
        return labels
    paths = [
        [hard_path(h, feats[y, x]) for x in range(feats.shape[1])]
        for y in range(feats.shape[0])
    ]
    return labels, paths


def save_decision_paths(paths, path: str | Path) -> None:
    """JSON-lines dump of per-pixel decision traces."""
    with open(path, "w") as fh:
        for y, row in enumerate(paths):
            for x, trace in enumerate(row):
                rec = {
                    "x": x,
                    "y": y,
                    "steps": [
                        {
                            "node": s.node_id,
                            "probs": [float(p) for p in s.probs],
                            "chosen": s.chosen,
                        }
                        for s in trace.steps
                    ],
                    "leaf": trace.leaf_class,
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


@dataclass
class TreePredictor:
    """Model + hierarchy bundled behind the generic predictor interface."""

    model: SegModel
    hierarchy: InducedHierarchy
    mode: str = "soft"

    @property
    def num_classes(self) -> int:
        return self.hierarchy.num_classes

    def predict(self, image: np.ndarray) -> np.ndarray:
        return predict_image(self.model, self.hierarchy, image, mode=self.mode)

    def predict_batch(self, images: np.ndarray, chunk: int = 64) -> np.ndarray:
        _check_dim(self.hierarchy, self.model.feature_dim)
        feats = self.model.features_batch(images, chunk=chunk)
        return predict_features(self.hierarchy, feats, mode=self.mode)


# --- surrogate loss and fine-tuning -----------------------------------------


def masked_targets(label: np.ndarray, ignore: np.ndarray | None) -> torch.Tensor:
    target = np.asarray(label).astype(np.int64).copy()
    if ignore is not None:
        target[np.asarray(ignore).astype(bool)] = _IGNORE_INDEX
    return torch.from_numpy(target)


def soft_leaf_log_probs(
    features: torch.Tensor, weights: torch.Tensor, h: InducedHierarchy
) -> torch.Tensor:
    """Log leaf distribution per pixel, with node representatives taken
    live from ``weights`` (leaf row / subtree mean). Differentiable in
    both features and weights. features: (B, d, H, W) -> (B, C, H, W).
    """
    logp = features.new_zeros(
        (features.shape[0], h.num_classes) + features.shape[2:]
    )
    for node in h.inner_nodes():
        reps = torch.stack(
            [
                weights[sorted(h.node(c).class_set)].mean(dim=0)
                for c in node.children
            ]
        )
        s = torch.einsum("bdhw,jd->bjhw", features, reps)
        logsm = F.log_softmax(s, dim=1)
        for j, child in enumerate(node.children):
            cols = sorted(h.node(child).class_set)
            logp[:, cols] = logp[:, cols] + logsm[:, j : j + 1]
    return logp


def tree_supervision_loss(
    features: torch.Tensor,
    weights: torch.Tensor,
    h: InducedHierarchy,
    target: torch.Tensor,
    omega: float = 1.0,
) -> torch.Tensor:
    """Per-pixel cross-entropy plus ``omega`` times the soft-path loss.

    ``features`` is (B, d, H, W) straight from the backbone; ``weights``
    the live (C, d) classifier matrix; ``target`` int64 labels with
    ignore pixels set to -100. Averages run over non-ignore pixels only.
    """
    if features.dim() == 3:
        features = features.unsqueeze(0)
        target = target.unsqueeze(0)
    if not (target != _IGNORE_INDEX).any():
        raise AllPixelsIgnored("every pixel is ignore-masked")
    scores = torch.einsum("bdhw,cd->bchw", features, weights)
    ce = F.cross_entropy(scores, target, ignore_index=_IGNORE_INDEX)
    if omega == 0.0:
        return ce
    logp = soft_leaf_log_probs(features, weights, h)
    soft = F.nll_loss(logp, target, ignore_index=_IGNORE_INDEX)
    return ce + omega * soft


@dataclass(frozen=True)
class FinetuneConfig:
    epochs: int = 4
    lr: float = 5e-4
    batch_size: int = 16
    tree_loss_weight: float = 1.0
    refresh_hierarchy: bool = False
    seed: int = 0


@dataclass
class FinetuneResult:
    hierarchy: InducedHierarchy
    train: TrainResult = field(default_factory=TrainResult)


def refresh_representatives(h: InducedHierarchy, weights: np.ndarray) -> InducedHierarchy:
    """Same structure, representatives recomputed from ``weights``."""
    reps = representatives_from_weights(h, weights)
    nodes = {
        nid: dataclasses.replace(node, representative=reps[nid])
        for nid, node in h.nodes.items()
    }
    return InducedHierarchy(
        nodes=nodes,
        root_id=h.root_id,
        d=h.d,
        num_classes=h.num_classes,
        class_names=h.class_names,
    )


def finetune(
    model: SegModel,
    h: InducedHierarchy,
    dataset,
    config: FinetuneConfig,
) -> FinetuneResult:
    """Optimize the surrogate loss in place, starting from a trained model.

    By default the tree structure stays fixed at its initial induction
    while node representatives follow the live weights every step; with
    ``refresh_hierarchy`` the structure is re-induced after each epoch.
    The returned hierarchy carries the final representatives.
    """
    samples = list(dataset)
    if not samples:
        raise EmptyDataset("finetune needs a nonempty dataset")
    _check_dim(h, model.feature_dim)
    model.module.train()
    opt = torch.optim.Adam(model.module.parameters(), lr=config.lr)
    images = np.stack([s.image for s in samples])
    targets = torch.stack([masked_targets(s.label, s.ignore) for s in samples])
    result = FinetuneResult(hierarchy=h)
    for epoch in range(config.epochs):
        order = np.random.default_rng(
            np.random.SeedSequence([config.seed, 104729, epoch])
        ).permutation(len(samples))
        losses = []
        for i in range(0, len(order), config.batch_size):
            idx = order[i : i + config.batch_size]
            x = model.batch_tensor(images[idx])
            opt.zero_grad()
            _, feats, _ = model.module.run(x)
            loss = tree_supervision_loss(
                feats, model.weights_tensor(), h, targets[idx],
                omega=config.tree_loss_weight,
            )
            if not torch.isfinite(loss):
                raise DivergedLoss(f"loss became non-finite at epoch {epoch}")
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        result.train.epoch_losses.append(float(np.mean(losses)))
        if config.refresh_hierarchy:
            refreshed = induce(model.final_layer_weights())
            refreshed.class_names = h.class_names
            h = refreshed
    model.module.eval()
    result.hierarchy = refresh_representatives(h, model.final_layer_weights())
    return result

"""Gradient-weighted saliency for dense prediction.

The classic class activation map spatially averages gradients before
weighting activations, which collapses all spatial detail; the per-pixel
variant here keeps the full gradient of one pixel's class (or tree-node)
score as a matrix weight instead. Maps for pixel groups are sums of the
per-pixel maps, each rectified before summation.

All maps are computed against a named activation layer; gradients flow
only through the network tail above that layer, so the input-side
forward pass runs once per image regardless of how many pixels are
queried.
"""

from __future__ import annotations

import numpy as np
import torch

from .errors import (
    EmptySet,
    LeafHasNoChildren,
    NoPixelsOfClass,
    OutOfBounds,
    UnknownClass,
)
from .hierarchy import InducedHierarchy
from .model import SegModel

RECTIFIERS = ("relu", "abs")


def _rectify(pre: np.ndarray, rectifier: str) -> np.ndarray:
    if rectifier == "relu":
        return np.maximum(pre, 0.0)
    if rectifier == "abs":
        return np.abs(pre)
    raise ValueError(f"unknown rectifier {rectifier!r}")


def _check_class(model: SegModel, class_id: int) -> None:
    if not (0 <= class_id < model.num_classes):
        raise UnknownClass(f"class {class_id} outside 0..{model.num_classes - 1}")


def _check_pixels(image: np.ndarray, pixels) -> list[tuple[int, int]]:
    h, w = image.shape[:2]
    out = []
    for x, y in pixels:
        if not (0 <= x < w and 0 <= y < h):
            raise OutOfBounds(f"pixel ({x}, {y}) outside {w}x{h} image")
        out.append((int(x), int(y)))
    if not out:
        raise EmptySet("no pixels of interest")
    # fixed summation order keeps group maps bit-stable
    return sorted(out, key=lambda p: (p[1], p[0]))


def grad_cam(
    model: SegModel,
    image: np.ndarray,
    class_id: int,
    layer: str | None = None,
    rectifier: str = "relu",
) -> np.ndarray:
    """Whole-image class saliency with spatially pooled gradient weights.

    The scalar being differentiated is the spatial mean of the class's
    score map (a segmentation net has no single class logit to take).
    """
    _check_class(model, class_id)
    layer = layer or model.default_saliency_layer
    x = model.image_tensor(image)
    scores, _, caps = model.torch_run(x, capture=(layer,))
    act = caps[layer]
    scalar = scores[0, class_id].mean()
    (grad,) = torch.autograd.grad(scalar, act)
    alpha = grad[0].mean(dim=(1, 2))
    pre = (alpha[:, None, None] * act[0].detach()).sum(0).numpy()
    return _rectify(pre, rectifier)


def _pixel_maps(
    model: SegModel,
    image: np.ndarray,
    pixels: list[tuple[int, int]],
    scalar_fn,
    layer: str,
    rectifier: str,
    chunk: int = 64,
) -> np.ndarray:
    """Per-pixel saliency maps, one backward pass per chunk of pixels.

    The image runs through the network once; the captured activation is
    replicated per queried pixel and only the tail above it is
    re-executed, so per-pixel gradients come out batched.
    """
    x = model.image_tensor(image)
    with torch.no_grad():
        _, _, caps = model.torch_run(x, capture=(layer,))
    base = caps[layer]
    maps = []
    for start in range(0, len(pixels), chunk):
        block = pixels[start : start + chunk]
        act = base.repeat(len(block), 1, 1, 1).requires_grad_(True)
        scores, feats = model.module.tail_pair(layer, act)
        idx = torch.arange(len(block))
        ys = torch.tensor([p[1] for p in block])
        xs = torch.tensor([p[0] for p in block])
        scalar = scalar_fn(scores, feats, idx, ys, xs)
        (grad,) = torch.autograd.grad(scalar, act)
        pre = (grad * act.detach()).sum(dim=1).numpy()
        maps.append(_rectify(pre, rectifier))
    return np.concatenate(maps, axis=0)


def _class_scalar(class_id: int):
    def fn(scores, feats, idx, ys, xs):
        return scores[idx, class_id, ys, xs].sum()

    return fn


def _vector_scalar(vector: np.ndarray, dtype: torch.dtype):
    def fn(scores, feats, idx, ys, xs):
        v = torch.from_numpy(np.asarray(vector)).to(dtype)
        return (feats[idx, :, ys, xs] * v).sum()

    return fn


def grad_pam(
    model: SegModel,
    image: np.ndarray,
    class_id: int,
    pixel: tuple[int, int],
    layer: str | None = None,
    rectifier: str = "relu",
) -> np.ndarray:
    """Saliency for one pixel's class score: ReLU(sum_k G_k * A^k)."""
    _check_class(model, class_id)
    layer = layer or model.default_saliency_layer
    pixels = _check_pixels(image, [pixel])
    return _pixel_maps(model, image, pixels, _class_scalar(class_id), layer, rectifier)[0]


def grad_pam_group(
    model: SegModel,
    image: np.ndarray,
    class_id: int,
    pixels,
    layer: str | None = None,
    rectifier: str = "relu",
    chunk: int = 64,
) -> np.ndarray:
    """Sum of per-pixel maps over a pixel set (each rectified first)."""
    _check_class(model, class_id)
    layer = layer or model.default_saliency_layer
    pix = _check_pixels(image, pixels)
    maps = _pixel_maps(
        model, image, pix, _class_scalar(class_id), layer, rectifier, chunk
    )
    return maps.sum(axis=0)


def node_grad_pam(
    model: SegModel,
    h: InducedHierarchy,
    node_id: int,
    child_index: int,
    image: np.ndarray,
    pixels,
    layer: str | None = None,
    rectifier: str = "relu",
    chunk: int = 64,
) -> np.ndarray:
    """Group saliency where the per-pixel scalar is a node's child score.

    The scalar at pixel (x, y) is the inner product of that pixel's
    features with the chosen child's representative.
    """
    node = h.node(node_id)
    if node.is_leaf:
        raise LeafHasNoChildren(f"node {node_id} is a leaf")
    rep = h.node(node.children[child_index]).representative
    layer = layer or model.default_saliency_layer
    pix = _check_pixels(image, pixels)
    maps = _pixel_maps(
        model, image, pix, _vector_scalar(rep, model.dtype), layer, rectifier, chunk
    )
    return maps.sum(axis=0)


def class_average_saliency(
    model: SegModel,
    image: np.ndarray,
    label_map: np.ndarray,
    class_id: int,
    layer: str | None = None,
    rectifier: str = "relu",
    vector: np.ndarray | None = None,
    chunk: int = 64,
) -> np.ndarray:
    """Mean per-pixel saliency over all pixels labeled ``class_id``.

    ``label_map`` is typically the model's prediction; pass ground truth
    to average over true-class pixels instead. With ``vector`` the
    per-pixel scalar is an inner product against that vector (a node
    child representative) rather than the class score.
    """
    _check_class(model, class_id)
    layer = layer or model.default_saliency_layer
    ys, xs = np.nonzero(np.asarray(label_map) == class_id)
    if len(ys) == 0:
        raise NoPixelsOfClass(f"no pixels labeled {class_id}")
    pix = _check_pixels(image, list(zip(xs.tolist(), ys.tolist())))
    scalar_fn = (
        _class_scalar(class_id)
        if vector is None
        else _vector_scalar(vector, model.dtype)
    )
    maps = _pixel_maps(model, image, pix, scalar_fn, layer, rectifier, chunk)
    return maps.sum(axis=0) / len(pix)

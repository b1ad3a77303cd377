"""Fully-convolutional segmentation backbone with analysis hooks.

The network is a stack of dilated 3x3 convolutions that preserves
spatial resolution end to end, followed by a bias-free 1x1 classifier.
That final layer is the pivot of everything downstream: its weight rows
are class vectors, and per-pixel scores are exactly the inner products
of per-pixel features with those rows.

Beyond plain inference the model exposes: named activation layers,
gradient queries of arbitrary scalars against an activation stack, and
a tail-forward (resume the net from a given activation) used by
finite-difference checks.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from . import tensorio
from .datagen import SegmentationSample
from .errors import (
    AllPixelsIgnored,
    DivergedLoss,
    EmptyDataset,
    InputTooSmall,
    NonScalarSelector,
    UnknownLayer,
)

CHECKPOINT_FORMAT_VERSION = 1
_IGNORE_INDEX = -100


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int
    feature_dim: int = 16
    hidden_channels: tuple[int, ...] = (32, 32, 32, 32)
    dilations: tuple[int, ...] = (1, 2, 4, 8, 8)
    bias: bool = True
    min_input: int = 8

    def __post_init__(self) -> None:
        if len(self.dilations) != len(self.hidden_channels) + 1:
            raise ValueError("need one dilation per hidden conv plus the neck")


class _Backbone(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        chans = (3, *cfg.hidden_channels, cfg.feature_dim)
        self.convs = nn.ModuleList(
            nn.Conv2d(
                chans[i], chans[i + 1], 3,
                padding=cfg.dilations[i], dilation=cfg.dilations[i],
                bias=cfg.bias,
            )
            for i in range(len(chans) - 1)
        )
        self.head = nn.Conv2d(cfg.feature_dim, cfg.num_classes, 1, bias=False)

    def layer_names(self) -> list[str]:
        names = [f"act{i + 1}" for i in range(len(self.convs) - 1)]
        return names + ["features"]

    def _name(self, i: int) -> str:
        return "features" if i == len(self.convs) - 1 else f"act{i + 1}"

    def run(self, x: torch.Tensor, capture: tuple[str, ...] = ()):
        """Forward pass returning (scores, features, captured activations)."""
        caps: dict[str, torch.Tensor] = {}
        h = x
        for i, conv in enumerate(self.convs):
            h = torch.relu(conv(h))
            name = self._name(i)
            if name in capture:
                caps[name] = h
        return self.head(h), h, caps

    def tail_pair(self, layer: str, activation: torch.Tensor):
        """Resume the net from a layer's activation; returns (scores, features)."""
        names = self.layer_names()
        start = names.index(layer) + 1
        h = activation
        for conv in self.convs[start:]:
            h = torch.relu(conv(h))
        return self.head(h), h

    def tail(self, layer: str, activation: torch.Tensor) -> torch.Tensor:
        return self.tail_pair(layer, activation)[0]


class SegModel:
    """Numpy-facing wrapper around the torch backbone.

    Images are H x W x 3 float arrays in [0, 1]; all outputs come back
    as numpy arrays in channel-last layout. The wrapper owns a dtype
    switch (float32 for training, float64 for finite-difference work).
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            self.module = _Backbone(config)
        self.module.eval()
        self._dtype = torch.float32

    # --- plumbing -------------------------------------------------------

    @property
    def num_classes(self) -> int:
        return self.config.num_classes

    @property
    def feature_dim(self) -> int:
        return self.config.feature_dim

    @property
    def layer_names(self) -> list[str]:
        return self.module.layer_names()

    @property
    def default_saliency_layer(self) -> str:
        """Input to the last 3x3 convolution (see package notes)."""
        return f"act{len(self.config.hidden_channels)}"

    @property
    def dtype(self) -> torch.dtype:
        return self._dtype

    def set_dtype(self, dtype: str) -> "SegModel":
        self._dtype = {"float32": torch.float32, "float64": torch.float64}[dtype]
        self.module.to(self._dtype)
        return self

    def _check_size(self, h: int, w: int) -> None:
        if h < self.config.min_input or w < self.config.min_input:
            raise InputTooSmall(
                f"input {h}x{w} below minimum {self.config.min_input}"
            )

    def _check_layer(self, layer: str) -> None:
        if layer not in self.layer_names:
            raise UnknownLayer(f"no layer named {layer!r}; have {self.layer_names}")

    def image_tensor(self, image: np.ndarray) -> torch.Tensor:
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[2] != 3:
            raise InputTooSmall("image must be H x W x 3")
        self._check_size(image.shape[0], image.shape[1])
        t = torch.from_numpy(np.ascontiguousarray(image)).to(self._dtype)
        return t.permute(2, 0, 1).unsqueeze(0)

    def batch_tensor(self, images: np.ndarray) -> torch.Tensor:
        """B x H x W x 3 numpy -> B x 3 x H x W tensor in the model dtype."""
        images = np.asarray(images)
        self._check_size(images.shape[1], images.shape[2])
        return torch.from_numpy(np.ascontiguousarray(images)).to(self._dtype).permute(0, 3, 1, 2)

    def torch_run(self, x: torch.Tensor, capture: tuple[str, ...] = ()):
        """Torch-level forward; used by gradient-based analyses."""
        for name in capture:
            self._check_layer(name)
        return self.module.run(x, capture)

    # --- inference ------------------------------------------------------

    def forward(self, image: np.ndarray) -> np.ndarray:
        """Per-pixel class scores, H x W x C."""
        with torch.no_grad():
            scores, _, _ = self.module.run(self.image_tensor(image))
        return scores[0].permute(1, 2, 0).numpy()

    def forward_batch(self, images: np.ndarray, chunk: int = 64) -> np.ndarray:
        out = []
        with torch.no_grad():
            for i in range(0, len(images), chunk):
                scores, _, _ = self.module.run(self.batch_tensor(images[i : i + chunk]))
                out.append(scores.permute(0, 2, 3, 1).numpy())
        return np.concatenate(out, axis=0)

    def features(self, image: np.ndarray) -> np.ndarray:
        """Per-pixel inputs to the final classifier, H x W x d."""
        with torch.no_grad():
            _, feats, _ = self.module.run(self.image_tensor(image))
        return feats[0].permute(1, 2, 0).numpy()

    def features_batch(self, images: np.ndarray, chunk: int = 64) -> np.ndarray:
        out = []
        with torch.no_grad():
            for i in range(0, len(images), chunk):
                _, feats, _ = self.module.run(self.batch_tensor(images[i : i + chunk]))
                out.append(feats.permute(0, 2, 3, 1).numpy())
        return np.concatenate(out, axis=0)

    def activations(self, image: np.ndarray, layer: str) -> np.ndarray:
        """Named activation stack, H x W x K."""
        self._check_layer(layer)
        with torch.no_grad():
            _, _, caps = self.module.run(self.image_tensor(image), capture=(layer,))
        return caps[layer][0].permute(1, 2, 0).numpy()

    def predict(self, image: np.ndarray) -> np.ndarray:
        """Argmax labels; ties resolve to the lowest class index."""
        return np.argmax(self.forward(image), axis=-1).astype(np.int32)

    def predict_batch(self, images: np.ndarray, chunk: int = 64) -> np.ndarray:
        return np.argmax(self.forward_batch(images, chunk=chunk), axis=-1).astype(np.int32)

    # --- weights and gradients ------------------------------------------

    def final_layer_weights(self) -> np.ndarray:
        """Live classifier weight rows, C x d (copied per call)."""
        return self.module.head.weight.detach().numpy()[:, :, 0, 0].copy()

    def weights_tensor(self) -> torch.Tensor:
        """The classifier weight as a differentiable C x d tensor."""
        return self.module.head.weight[:, :, 0, 0]

    def grad_query(self, image: np.ndarray, selector, layer: str | None = None) -> np.ndarray:
        """Gradient of a scalar output against a named activation stack.

        ``selector(scores, features)`` receives torch tensors of shape
        (C, H, W) and (d, H, W) and must return a 0-dim tensor; the
        result is d(scalar)/d(activation) with shape H x W x K.
        """
        layer = layer or self.default_saliency_layer
        self._check_layer(layer)
        x = self.image_tensor(image)
        scores, feats, caps = self.module.run(x, capture=(layer,))
        scalar = selector(scores[0], feats[0])
        if not torch.is_tensor(scalar) or scalar.dim() != 0:
            raise NonScalarSelector("selector must return a 0-dim tensor")
        act = caps[layer]
        (grad,) = torch.autograd.grad(scalar, act, allow_unused=False)
        return grad[0].permute(1, 2, 0).numpy()

    def tail_forward(self, layer: str, activation: np.ndarray) -> np.ndarray:
        """Scores from a hand-supplied activation (H x W x K) at ``layer``."""
        self._check_layer(layer)
        t = torch.from_numpy(np.ascontiguousarray(activation)).to(self._dtype)
        t = t.permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            scores = self.module.tail(layer, t)
        return scores[0].permute(1, 2, 0).numpy()

    # --- persistence ------------------------------------------------------

    def save(self, path: str | Path, extra_meta: dict | None = None) -> None:
        tensors = {
            f"param/{name}": p.detach().to(torch.float32).numpy()
            for name, p in self.module.state_dict().items()
        }
        meta = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "model_config": dataclasses.asdict(self.config),
            "seed": self.seed,
        }
        if extra_meta:
            meta.update(extra_meta)
        tensorio.save_tensors(path, tensors, meta)

    @classmethod
    def load(cls, path: str | Path) -> "SegModel":
        tensors, meta = tensorio.load_tensors(path)
        cfg_dict = dict(meta["model_config"])
        cfg_dict["hidden_channels"] = tuple(cfg_dict["hidden_channels"])
        cfg_dict["dilations"] = tuple(cfg_dict["dilations"])
        cfg = ModelConfig(**cfg_dict)
        model = cls(cfg, seed=int(meta.get("seed", 0)))
        state = {
            name[len("param/"):]: torch.from_numpy(arr)
            for name, arr in tensors.items()
            if name.startswith("param/")
        }
        model.module.load_state_dict(state)
        model.module.to(model._dtype)
        return model


# --- metrics --------------------------------------------------------------


@dataclass
class Metrics:
    pixel_accuracy: float
    mean_iou: float
    per_class_iou: np.ndarray

    def as_dict(self) -> dict:
        return {
            "pixel_accuracy": self.pixel_accuracy,
            "mean_iou": self.mean_iou,
            "per_class_iou": [
                None if np.isnan(v) else float(v) for v in self.per_class_iou
            ],
        }


def metrics_from_predictions(
    preds: list[np.ndarray],
    labels: list[np.ndarray],
    ignores: list[np.ndarray],
    num_classes: int,
) -> Metrics:
    """Pixel accuracy and IoU over many label maps, skipping ignore pixels.

    Classes absent from both prediction and label (zero union) get NaN
    IoU and are excluded from the mean.
    """
    correct = 0
    total = 0
    inter = np.zeros(num_classes, dtype=np.int64)
    union = np.zeros(num_classes, dtype=np.int64)
    for pred, label, ignore in zip(preds, labels, ignores):
        valid = ~ignore
        p, l = pred[valid], label[valid]
        correct += int((p == l).sum())
        total += int(valid.sum())
        for c in range(num_classes):
            pc, lc = p == c, l == c
            inter[c] += int((pc & lc).sum())
            union[c] += int((pc | lc).sum())
    if total == 0:
        raise AllPixelsIgnored("no valid pixels to score")
    iou = np.where(union > 0, inter / np.maximum(union, 1), np.nan)
    mean_iou = float(np.nanmean(iou)) if np.any(union > 0) else float("nan")
    return Metrics(
        pixel_accuracy=correct / total,
        mean_iou=mean_iou,
        per_class_iou=iou,
    )


def evaluate(predictor, dataset, num_classes: int | None = None, chunk: int = 32) -> Metrics:
    """Score any predictor exposing ``predict_batch`` on a dataset."""
    samples = list(dataset)
    if not samples:
        raise EmptyDataset("evaluate needs at least one sample")
    if num_classes is None:
        num_classes = predictor.num_classes
    preds = []
    for i in range(0, len(samples), chunk):
        block = np.stack([s.image for s in samples[i : i + chunk]])
        preds.extend(predictor.predict_batch(block))
    return metrics_from_predictions(
        preds,
        [s.label for s in samples],
        [s.ignore for s in samples],
        num_classes,
    )


# --- training ---------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig
    epochs: int = 10
    lr: float = 1e-3
    batch_size: int = 16
    weight_decay: float = 0.0
    seed: int = 0


@dataclass
class TrainResult:
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else float("nan")


def _target_tensor(samples: list[SegmentationSample]) -> torch.Tensor:
    target = np.stack([s.label for s in samples]).astype(np.int64)
    ignore = np.stack([s.ignore for s in samples])
    target[ignore] = _IGNORE_INDEX
    return torch.from_numpy(target)


def train(dataset, config: TrainConfig) -> tuple[SegModel, TrainResult]:
    """Cross-entropy training from scratch; deterministic given the seed."""
    samples = list(dataset)
    if not samples:
        raise EmptyDataset("train needs a nonempty dataset")
    model = SegModel(config.model, seed=config.seed)
    model.module.train()
    opt = torch.optim.Adam(
        model.module.parameters(), lr=config.lr, weight_decay=config.weight_decay
    )
    images = np.stack([s.image for s in samples])
    targets = _target_tensor(samples)
    result = TrainResult()
    for epoch in range(config.epochs):
        order = np.random.default_rng(
            np.random.SeedSequence([config.seed, 7919, epoch])
        ).permutation(len(samples))
        losses = []
        for i in range(0, len(order), config.batch_size):
            idx = order[i : i + config.batch_size]
            x = model.batch_tensor(images[idx])
            y = targets[idx]
            opt.zero_grad()
            scores, _, _ = model.module.run(x)
            loss = F.cross_entropy(scores, y, ignore_index=_IGNORE_INDEX)
            if not torch.isfinite(loss):
                raise DivergedLoss(f"loss became non-finite at epoch {epoch}")
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        result.epoch_losses.append(float(np.mean(losses)))
    model.module.eval()
    return model, result

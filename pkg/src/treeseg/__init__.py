"""treeseg: a desk-scale lab for decision-tree segmentation diagnostics.

A small fully-convolutional segmenter whose final 1x1 classifier doubles
as a fully-connected layer; a binary class hierarchy induced from its
weight rows; tree-routed inference and fine-tuning; and three probes
that ground each tree decision in the input image: per-pixel minimum
required context, pixel-level gradient saliency, and semantic part
removal.
"""

from .datagen import (
    ClassSpec,
    Dataset,
    PartSpec,
    SceneSpec,
    SegmentationSample,
    class_frequency,
    default_scene,
    generate_dataset,
    load_dataset,
    save_dataset,
    texture_probe_scene,
    unique_part_scene,
)
from .hierarchy import InducedHierarchy, induce, load_hierarchy, save_hierarchy
from .model import Metrics, ModelConfig, SegModel, TrainConfig, evaluate, train
from .mrc import MRCConfig, extract_crop, mrc_map, mrc_pixel, umrc_map
from .saliency import class_average_saliency, grad_cam, grad_pam, grad_pam_group, node_grad_pam
from .rules import annotate_hierarchy, coarse_rule, overlap_scores
from .sir import RemovalMode, accuracy_damage, fine_rule, remove_part
from .tree import (
    FinetuneConfig,
    TreePredictor,
    finetune,
    hard_path,
    node_scores,
    predict_image,
    soft_distribution,
    tree_supervision_loss,
)

__version__ = "0.1.0"

__all__ = [
    "ClassSpec",
    "Dataset",
    "FinetuneConfig",
    "InducedHierarchy",
    "Metrics",
    "ModelConfig",
    "MRCConfig",
    "PartSpec",
    "RemovalMode",
    "SceneSpec",
    "SegmentationSample",
    "SegModel",
    "TrainConfig",
    "TreePredictor",
    "accuracy_damage",
    "annotate_hierarchy",
    "class_average_saliency",
    "class_frequency",
    "coarse_rule",
    "default_scene",
    "evaluate",
    "extract_crop",
    "fine_rule",
    "finetune",
    "generate_dataset",
    "grad_cam",
    "grad_pam",
    "grad_pam_group",
    "hard_path",
    "induce",
    "load_dataset",
    "load_hierarchy",
    "mrc_map",
    "mrc_pixel",
    "node_grad_pam",
    "node_scores",
    "overlap_scores",
    "predict_image",
    "remove_part",
    "save_dataset",
    "save_hierarchy",
    "soft_distribution",
    "texture_probe_scene",
    "train",
    "tree_supervision_loss",
    "umrc_map",
    "unique_part_scene",
]

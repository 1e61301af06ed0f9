"""Gradient-free CNN saliency toolkit.

Saliency maps weight convolutional activation channels by their mutual
information with the gray-scaled input (mi-cam), by masked-forward class
scores (score-cam) or by the principal activation direction (eigen-cam).
All arrays are numpy, images on the 0..255 intensity scale.
"""

from micam._core import (
    Model,
    __version__,
    auc,
    average_drop,
    average_increase,
    counterfactual_run,
    deletion_curve,
    ebpg,
    entropy,
    explain,
    grayscale,
    insertion_curve,
    mutual_information,
    perturb,
    pointing_game,
    quantize,
    render_overlay,
    spearman,
    threshold_mask,
    upsample,
    weight_divergence,
)

__all__ = [
    "Model",
    "__version__",
    "auc",
    "average_drop",
    "average_increase",
    "counterfactual_run",
    "deletion_curve",
    "ebpg",
    "entropy",
    "explain",
    "grayscale",
    "insertion_curve",
    "mutual_information",
    "perturb",
    "pointing_game",
    "quantize",
    "render_overlay",
    "spearman",
    "threshold_mask",
    "upsample",
    "weight_divergence",
]

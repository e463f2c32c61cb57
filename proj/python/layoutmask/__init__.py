"""Bounding-box guided masked attention for training-free video layout control."""

import json

from ._layoutmask import (
    BBox,
    Canvas,
    FormatError,
    IMC_DEFAULT_FRAMES,
    IMC_DEFAULT_SEED,
    LatentGrid,
    Trajectory,
    ValidationError,
    cross_mask,
    decode_pkbl,
    decode_pkbm,
    encode_pkbm,
    interpolate_trajectory,
    iou,
    label_tokens,
    masked_attention,
    masked_mass,
    rasterize,
    read_trajectory,
    sha256_hex,
    spatial_mask,
    temporal_mask,
    tokenize_prompt,
)
from . import _layoutmask

__all__ = [
    "BBox",
    "Canvas",
    "FormatError",
    "IMC_DEFAULT_FRAMES",
    "IMC_DEFAULT_SEED",
    "LatentGrid",
    "Trajectory",
    "ValidationError",
    "cross_mask",
    "decode_pkbl",
    "decode_pkbm",
    "encode_pkbm",
    "evaluate",
    "generate_imc",
    "interpolate_trajectory",
    "iou",
    "label_tokens",
    "masked_attention",
    "masked_mass",
    "rasterize",
    "read_trajectory",
    "run",
    "sha256_hex",
    "spatial_mask",
    "temporal_mask",
    "tokenize_prompt",
]


def run(trajectory, grid, prompt, fg_phrase, *, num_steps=40, frozen_steps=2, seed=0,
        mode="video", cross=True, spatial=True, temporal=True):
    """Run the toy masked-diffusion pipeline.

    Returns (latent, report) where latent has shape (frames, latents, channels)
    and report is the per-step record as a dict.
    """
    latent, report = _layoutmask._run(trajectory, grid, prompt, fg_phrase, num_steps,
                                    frozen_steps, seed, mode, cross, spatial, temporal)
    return latent, json.loads(report)


def evaluate(ground_truth, detections, *, norm="diagonal"):
    """Score one detector: mIoU, AP50, Coverage and CD over a set of videos.

    ground_truth is a list of Trajectory; detections is a parallel list of
    per-frame lists holding a BBox or None.
    """
    report = json.loads(_layoutmask._evaluate(ground_truth, detections, norm))
    return report["methods"][0]


def generate_imc(canvas=None, seed=IMC_DEFAULT_SEED, jitter_px=1):
    """The 102 prompt/trajectory pairs of the IMC benchmark as dicts."""
    if canvas is None:
        canvas = Canvas(256, 256, IMC_DEFAULT_FRAMES)
    return _layoutmask._generate_imc(canvas, seed, jitter_px)

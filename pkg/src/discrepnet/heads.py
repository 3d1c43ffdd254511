"""Double reconstruction heads emitting two images at input resolution."""

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .decoder import AttentionFeatureSelect
from .graph_head import SimilarityAggregation


@dataclass
class ReconstructionPair:
    """The two reconstructed images, clamped to [0, 1]; ``None`` marks a
    head disabled by an ablation."""

    rec1: torch.Tensor = None
    rec2: torch.Tensor = None


def _to_image(features, rgb_conv, size):
    x = rgb_conv(features)
    if x.shape[-2:] != tuple(size):
        x = F.interpolate(x, size=tuple(size), mode="bilinear", align_corners=False)
    return x.clamp(0.0, 1.0)


class ReconstructionHeads(nn.Module):
    """Gated-fusion head and graph-reasoning head, both reading the final
    decoder map plus the first encoder tap, each followed by a 1x1 conv to
    RGB, bilinear resize to the input size, and a hard clamp to [0, 1]."""

    def __init__(self, feat_channels, skip_channels, use_rec1=True, use_rec2=True,
                 pool_nodes=(2, 2)):
        super().__init__()
        assert use_rec1 or use_rec2
        self.use_rec1 = use_rec1
        self.use_rec2 = use_rec2
        if use_rec1:
            self.fusion_head = AttentionFeatureSelect(feat_channels, skip_channels,
                                                      skip_channels)
            self.rgb1 = nn.Conv2d(skip_channels, 3, 1)
            nn.init.constant_(self.rgb1.bias, 0.5)
        if use_rec2:
            self.graph_head = SimilarityAggregation(feat_channels, skip_channels,
                                                    pool_nodes=pool_nodes)
            self.rgb2 = nn.Conv2d(self.graph_head.reduced_channels, 3, 1)
            nn.init.constant_(self.rgb2.bias, 0.5)

    def forward(self, decoded, skip, image_size) -> ReconstructionPair:
        rec1 = rec2 = None
        if self.use_rec1:
            rec1 = _to_image(self.fusion_head(decoded, skip), self.rgb1, image_size)
        if self.use_rec2:
            rec2 = _to_image(self.graph_head(decoded, skip), self.rgb2, image_size)
        return ReconstructionPair(rec1, rec2)

"""Detector head: difference masks, encoder fusion, mask-guided feature
aggregation, and the binary classifier."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigurationError


def difference_masks(images, recon):
    """Per-pixel absolute differences between the input and each
    reconstruction; ``None`` for a disabled head."""
    masks = []
    for rec in (recon.rec1, recon.rec2):
        if rec is None:
            masks.append(None)
            continue
        if rec.shape != images.shape:
            raise ConfigurationError(
                f"reconstruction shape {tuple(rec.shape)} does not match "
                f"input shape {tuple(images.shape)}")
        masks.append((images - rec).abs())
    return tuple(masks)


class EncodingFusion(nn.Module):
    """Align the last discrepancy map to the deepest tap with a strided 1x1
    conv, then sum."""

    def __init__(self, disc_channels, feat_channels, spatial_ratio=1):
        super().__init__()
        self.project = nn.Conv2d(disc_channels, feat_channels, 1, stride=spatial_ratio)

    def forward(self, disc, feat):
        projected = self.project(disc)
        if projected.shape != feat.shape:
            raise ConfigurationError(
                f"projected discrepancy {tuple(projected.shape)} does not "
                f"match deepest tap {tuple(feat.shape)}")
        return projected + feat


class MaskGuidedAggregation(nn.Module):
    """Modulate fused encoder features by a difference mask, then by a
    channel attention derived from the pooled channel descriptor.

    gate path: mask -> bilinear down -> 3x3 conv -> sigmoid; fused =
    3x3 conv(features * gate + features). channel path: GAP -> 1D conv over
    the channel descriptor (kernel 3) -> sigmoid -> scale -> 1x1 conv.
    """

    def __init__(self, channels, out_channels=None, descriptor_kernel=3):
        super().__init__()
        out_channels = out_channels or channels
        self.mask_conv = nn.Conv2d(3, channels, 3, padding=1)
        self.fuse = nn.Conv2d(channels, channels, 3, padding=1)
        self.descriptor = nn.Conv1d(1, 1, descriptor_kernel,
                                    padding=descriptor_kernel // 2)
        self.project = nn.Conv2d(channels, out_channels, 1)

    def forward(self, mask, features):
        if mask.shape[-2:] != features.shape[-2:]:
            mask = F.interpolate(mask, size=features.shape[-2:], mode="bilinear",
                                 align_corners=False)
        gate = torch.sigmoid(self.mask_conv(mask))
        fused = self.fuse(features * gate + features)
        desc = F.adaptive_avg_pool2d(fused, 1).flatten(2).transpose(1, 2)  # (b,1,c)
        weight = torch.sigmoid(self.descriptor(desc))
        weight = weight.transpose(1, 2).unsqueeze(-1)                      # (b,c,1,1)
        return self.project(weight * fused)


class ClassifierHead(nn.Module):
    """Sum the aggregated maps, pool globally, and map to two logits."""

    def __init__(self, channels):
        super().__init__()
        self.fc = nn.Linear(channels, 2)

    def forward(self, branches):
        total = branches[0]
        for extra in branches[1:]:
            total = total + extra
        return self.fc(total.mean(dim=(2, 3)))

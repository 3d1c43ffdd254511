"""Decoder built from gated feature-selection stages over the encoder skips."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .encoder import SeparableConv2d
from .errors import ConfigurationError


class AttentionFeatureSelect(nn.Module):
    """Fuse an upsampled decoder map with an encoder skip.

    The previous map is bilinearly resized to the skip's spatial size and
    concatenated. A sigmoid gate (separable conv) suppresses unimportant
    regions; the gated map is projected and added to a plain-conv shortcut.
    The three separable convs are untied.
    """

    def __init__(self, prev_channels, skip_channels, out_channels):
        super().__init__()
        cat = prev_channels + skip_channels
        self.cat_channels = cat
        self.out_channels = out_channels
        self.gate = SeparableConv2d(cat, cat)
        self.refine = SeparableConv2d(cat, cat)
        self.project = SeparableConv2d(cat, out_channels)
        self.shortcut = nn.Conv2d(cat, out_channels, 3, padding=1)

    def forward(self, prev, skip):
        if prev.shape[-2:] != skip.shape[-2:]:
            prev = F.interpolate(prev, size=skip.shape[-2:], mode="bilinear",
                                 align_corners=False)
        fused = torch.cat([prev, skip], dim=1)
        if fused.shape[1] != self.cat_channels:
            raise ConfigurationError(
                f"expected {self.cat_channels} concatenated channels, "
                f"got {fused.shape[1]}")
        att = torch.sigmoid(self.gate(fused))
        return self.project(self.refine(fused) * att) + self.shortcut(fused)


class Decoder(nn.Module):
    """Three progressive stages pairing (tap5, tap4), (., tap3), (., tap2);
    the final output sits at the second tap's scale. Output channels of each
    stage mirror its skip connection."""

    def __init__(self, stage_channels):
        super().__init__()
        c2, c3, c4, c5 = stage_channels[1:5]
        self.stage1 = AttentionFeatureSelect(c5, c4, c4)
        self.stage2 = AttentionFeatureSelect(c4, c3, c3)
        self.stage3 = AttentionFeatureSelect(c3, c2, c2)

    def forward(self, levels):
        a1 = self.stage1(levels[4], levels[3])
        a2 = self.stage2(a1, levels[2])
        a3 = self.stage3(a2, levels[1])
        return a1, a2, a3

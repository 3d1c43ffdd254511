"""End-to-end forgery detector: encoder, discrepancy cascade, decoder, double
reconstruction heads, and the mask-guided detector, with ablation switches."""

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import DiscrepancyCascade
from .decoder import Decoder
from .detector import (ClassifierHead, EncodingFusion, MaskGuidedAggregation,
                       difference_masks)
from .encoder import BackboneConfig, Encoder, FeaturePyramid
from .errors import ConfigurationError
from .heads import ReconstructionHeads, ReconstructionPair

ABLATION_NAMES = ("baseline", "rec1", "rec2", "double", "no-dea", "no-rfa", "full")


@dataclass(frozen=True)
class AblationSpec:
    """Which optional components are active."""

    heads: str = "both"          # both | rec1 | rec2 | none
    use_dea: bool = True
    use_rfa: bool = True

    @classmethod
    def from_name(cls, name):
        table = {
            "baseline": cls(heads="none", use_dea=False, use_rfa=False),
            "rec1": cls(heads="rec1", use_dea=False, use_rfa=False),
            "rec2": cls(heads="rec2", use_dea=False, use_rfa=False),
            "double": cls(heads="both", use_dea=False, use_rfa=False),
            "no-dea": cls(heads="both", use_dea=False, use_rfa=True),
            "no-rfa": cls(heads="both", use_dea=True, use_rfa=False),
            "full": cls(),
        }
        if name not in table:
            raise ConfigurationError(
                f"unknown ablation {name!r}, expected one of {sorted(table)}")
        return table[name]


@dataclass
class ModelOutputs:
    logits: torch.Tensor
    recon: ReconstructionPair
    pyramid: FeaturePyramid
    fused: torch.Tensor
    masks: tuple
    embedding: torch.Tensor


class ForgeryDetector(nn.Module):
    def __init__(self, backbone: BackboneConfig, ablation: AblationSpec = AblationSpec(),
                 pool_size=(1, 1), pool_nodes=None, tied_memory=True):
        super().__init__()
        backbone.validate()
        if pool_nodes is None:
            pool_nodes = (6, 6) if backbone.preset == "xception_like" else (2, 2)
        self.backbone_config = backbone
        self.ablation = ablation
        chans = backbone.stage_channels
        sizes = backbone.stage_sizes()

        self.encoder = Encoder(backbone)
        if ablation.use_dea:
            self.cascade = DiscrepancyCascade(chans, pool_size=pool_size,
                                              tied_memory=tied_memory)
            ratio = sizes[3][0] // sizes[4][0]
            if ratio < 1 or sizes[3][0] % sizes[4][0]:
                raise ConfigurationError(
                    f"tap-4 size {sizes[3]} must be an integer multiple of "
                    f"tap-5 size {sizes[4]}")
            self.fusion = EncodingFusion(chans[3], chans[4], spatial_ratio=ratio)

        if ablation.heads != "none":
            self.decoder = Decoder(chans)
            self.heads = ReconstructionHeads(
                chans[1], chans[0],
                use_rec1=ablation.heads in ("both", "rec1"),
                use_rec2=ablation.heads in ("both", "rec2"),
                pool_nodes=pool_nodes)
            if ablation.use_rfa:
                self.aggregators = nn.ModuleList(
                    MaskGuidedAggregation(chans[4])
                    for _ in range(2 if ablation.heads == "both" else 1))
            else:
                self.mask_adapters = nn.ModuleList(
                    nn.Conv2d(3, chans[4], 3, padding=1)
                    for _ in range(2 if ablation.heads == "both" else 1))
        self.classifier = ClassifierHead(chans[4])

    def forward(self, images) -> ModelOutputs:
        pyramid = self.encoder(images)
        levels = pyramid.levels
        embedding = levels[4].mean(dim=(2, 3))

        fused = levels[4]
        if self.ablation.use_dea:
            disc = self.cascade(levels[:4])
            pyramid = FeaturePyramid(levels, disc)
            fused = self.fusion(disc[3], levels[4])

        recon = ReconstructionPair()
        masks = (None, None)
        if self.ablation.heads == "none":
            logits = self.classifier([fused])
            return ModelOutputs(logits, recon, pyramid, fused, masks, embedding)

        decoded = self.decoder(levels)
        recon = self.heads(decoded[-1], levels[0], images.shape[-2:])
        masks = difference_masks(images, recon)
        branches = []
        active = [m for m in masks if m is not None]
        if self.ablation.use_rfa:
            for mask, agg in zip(active, self.aggregators):
                branches.append(agg(mask, fused))
        else:
            for mask, adapter in zip(active, self.mask_adapters):
                small = F.interpolate(mask, size=fused.shape[-2:], mode="bilinear",
                                      align_corners=False)
                branches.append(fused + adapter(small))
        logits = self.classifier(branches)
        return ModelOutputs(logits, recon, pyramid, fused, masks, embedding)


def forward_full(model: ForgeryDetector, images) -> ModelOutputs:
    """Run the composed forward pass and return all intermediates."""
    return model(images)

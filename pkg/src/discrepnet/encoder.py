"""Multi-level convolutional encoder producing five feature taps."""

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigurationError

TINY_CHANNELS = (16, 32, 64, 128, 256)
XCEPTION_LIKE_CHANNELS = (64, 128, 256, 728, 728)
DEFAULT_STRIDES = (2, 2, 2, 2, 1)


@dataclass(frozen=True)
class BackboneConfig:
    """Channel/stride layout of the five encoder stages.

    Stage spatial sizes follow ceil(size / stride) per stage (stride-s conv,
    kernel 3, padding 1), so inputs need not be exact multiples of the
    cumulative stride.
    """

    preset: str = "tiny"
    stage_channels: tuple = TINY_CHANNELS
    input_size: tuple = (64, 64)
    stage_strides: tuple = DEFAULT_STRIDES

    @classmethod
    def tiny(cls, input_size=(64, 64)):
        return cls("tiny", TINY_CHANNELS, tuple(input_size), DEFAULT_STRIDES)

    @classmethod
    def xception_like(cls, input_size=(299, 299)):
        return cls("xception_like", XCEPTION_LIKE_CHANNELS, tuple(input_size),
                   DEFAULT_STRIDES)

    def validate(self):
        if self.preset not in ("tiny", "xception_like"):
            raise ConfigurationError(f"unknown preset {self.preset!r}")
        if len(self.stage_channels) != 5:
            raise ConfigurationError(
                f"need 5 stage channels, got {len(self.stage_channels)}")
        if len(self.stage_strides) != 5:
            raise ConfigurationError(
                f"need 5 stage strides, got {len(self.stage_strides)}")
        if any(c < 1 for c in self.stage_channels):
            raise ConfigurationError("stage channels must be positive")
        if any(s < 1 for s in self.stage_strides):
            raise ConfigurationError("stage strides must be >= 1")
        if len(self.input_size) != 2 or any(d < 1 for d in self.input_size):
            raise ConfigurationError(f"bad input size {self.input_size}")

    def stage_sizes(self):
        """Spatial size after each of the five stages."""
        h, w = self.input_size
        sizes = []
        for s in self.stage_strides:
            h, w = -(-h // s), -(-w // s)
            sizes.append((h, w))
        return sizes


@dataclass
class FeaturePyramid:
    """The five encoder taps, shallow to deep, plus their optional
    discrepancy refinements aligned to taps 1..4."""

    levels: tuple
    disc: tuple = None

    def __post_init__(self):
        if len(self.levels) != 5:
            raise ConfigurationError(f"expected 5 levels, got {len(self.levels)}")
        if self.disc is not None:
            if len(self.disc) != 4:
                raise ConfigurationError(f"expected 4 discrepancy maps, got {len(self.disc)}")
            for d, f in zip(self.disc, self.levels):
                if d.shape[-2:] != f.shape[-2:]:
                    raise ConfigurationError(
                        f"discrepancy map {tuple(d.shape)} not aligned to "
                        f"level {tuple(f.shape)}")


class SeparableConv2d(nn.Module):
    def __init__(self, in_channels, out_channels, kernel_size=3, padding=1):
        super().__init__()
        self.depthwise = nn.Conv2d(in_channels, in_channels, kernel_size,
                                   padding=padding, groups=in_channels)
        self.pointwise = nn.Conv2d(in_channels, out_channels, 1)

    def forward(self, x):
        return self.pointwise(self.depthwise(x))


class ConvStage(nn.Module):
    """Two 3x3 conv + batch-norm + ReLU blocks; the first conv carries the
    stage stride. Fresh batch-norm (zero mean, unit variance, zero shift)
    keeps the zero-input/zero-bias propagation exact."""

    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1)
        self.norm1 = nn.BatchNorm2d(out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.norm2 = nn.BatchNorm2d(out_channels)

    def forward(self, x):
        x = F.relu(self.norm1(self.conv1(x)))
        return F.relu(self.norm2(self.conv2(x)))


class SeparableResidualStage(nn.Module):
    """Separable-conv residual block in the entry/middle-flow style:
    two separable convs plus a strided max-pool, with a 1x1 strided skip."""

    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.sep1 = SeparableConv2d(in_channels, out_channels)
        self.norm1 = nn.BatchNorm2d(out_channels)
        self.sep2 = SeparableConv2d(out_channels, out_channels)
        self.norm2 = nn.BatchNorm2d(out_channels)
        self.pool = nn.MaxPool2d(3, stride=stride, padding=1) if stride > 1 else None
        if stride > 1 or in_channels != out_channels:
            self.skip = nn.Conv2d(in_channels, out_channels, 1, stride=stride)
        else:
            self.skip = None

    def forward(self, x):
        out = self.norm2(self.sep2(F.relu(self.norm1(self.sep1(x)))))
        if self.pool is not None:
            out = self.pool(out)
        skip = x if self.skip is None else self.skip(x)
        return F.relu(out + skip)


class Encoder(nn.Module):
    """Five-stage encoder with a tap after every stage.

    tiny: plain conv stages. xception_like: a conv stem followed by four
    separable residual stages (entry-flow blocks at taps 2-4, a stride-1
    middle-flow style block at tap 5); taps sit after each block's ReLU.
    """

    def __init__(self, config: BackboneConfig):
        super().__init__()
        config.validate()
        self.config = config
        chans = config.stage_channels
        strides = config.stage_strides
        stages = []
        in_ch = 3
        for i, (out_ch, s) in enumerate(zip(chans, strides)):
            if config.preset == "tiny" or i == 0:
                stages.append(ConvStage(in_ch, out_ch, s))
            else:
                stages.append(SeparableResidualStage(in_ch, out_ch, s))
            in_ch = out_ch
        self.stages = nn.ModuleList(stages)

    def forward(self, images) -> FeaturePyramid:
        expected = tuple(self.config.input_size)
        actual = tuple(images.shape[-2:])
        if actual != expected:
            raise ConfigurationError(
                f"input spatial size {actual} does not match configured {expected}")
        taps = []
        x = images
        for stage in self.stages:
            x = stage(x)
            taps.append(x)
        return FeaturePyramid(tuple(taps))


def load_backbone_weights(encoder: Encoder, path):
    """Copy name-matched arrays from an .npz file into the encoder.

    Returns the list of parameter names actually loaded. A missing file is
    not an error (returns an empty list); shape mismatches are skipped.
    """
    try:
        archive = np.load(path)
    except FileNotFoundError:
        return []
    loaded = []
    state = encoder.state_dict()
    for name in archive.files:
        if name in state and tuple(state[name].shape) == archive[name].shape:
            state[name] = torch.as_tensor(archive[name], dtype=state[name].dtype)
            loaded.append(name)
    encoder.load_state_dict(state)
    return loaded

"""Discrepancy attention: deviation-from-pooled features refined by a
shared-memory token attention, applied as a cascade over the encoder taps."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigurationError, EmptyInputError


class DiscrepancyAttention(nn.Module):
    """Single attention block.

    Pipeline: 3x3 conv -> subtract the adaptively pooled map (broadcast back)
    -> flatten to tokens -> 1D conv into an expanded memory (4x channels) ->
    softmax across memory slots, L1 normalisation across tokens -> the same
    1D conv weights applied transposed -> 1x1 conv -> residual add of the
    3x3 conv output.

    ``tied_memory=False`` gives the second 1D conv its own weights
    (initialised to the transpose of the first) instead of a tied view.
    """

    def __init__(self, in_channels, channels, pool_size=(1, 1), expansion=4,
                 tied_memory=True):
        super().__init__()
        self.in_channels = in_channels
        self.channels = channels
        self.pool_size = tuple(pool_size)
        self.tied_memory = tied_memory
        self.conv_in = nn.Conv2d(in_channels, channels, 3, padding=1)
        self.memory = nn.Conv1d(channels, channels * expansion, 1, bias=False)
        if not tied_memory:
            self.memory_out = nn.Conv1d(channels * expansion, channels, 1, bias=False)
            with torch.no_grad():
                self.memory_out.weight.copy_(self.memory.weight.permute(1, 0, 2))
        self.conv_out = nn.Conv2d(channels, channels, 1)

    def _broadcast(self, pooled, size):
        # inverse of the adaptive pool's bin partition (exact when divisible)
        h, w = size
        ph, pw = pooled.shape[-2:]
        if (ph, pw) == (h, w):
            return pooled
        rows = torch.arange(h, device=pooled.device) * ph // h
        cols = torch.arange(w, device=pooled.device) * pw // w
        return pooled[:, :, rows][:, :, :, cols]

    def forward(self, x):
        b, c, h, w = x.shape
        if h * w == 0:
            raise EmptyInputError("attention block received an empty feature map")
        if c != self.in_channels:
            raise ConfigurationError(
                f"expected {self.in_channels} input channels, got {c}")
        base = self.conv_in(x)
        pooled = F.adaptive_avg_pool2d(base, self.pool_size)
        diff = base - self._broadcast(pooled, (h, w))
        tokens = diff.flatten(2)                        # (b, c, n)
        attn = self.memory(tokens)                      # (b, 4c, n)
        attn = attn.softmax(dim=1)
        attn = attn / attn.sum(dim=2, keepdim=True)
        if self.tied_memory:
            restored = F.conv1d(attn, self.memory.weight.permute(1, 0, 2))
        else:
            restored = self.memory_out(attn)
        restored = restored.reshape(b, self.channels, h, w)
        return self.conv_out(restored) + base


class DiscrepancyCascade(nn.Module):
    """Four chained blocks: each level's refinement is resized and
    concatenated onto the next encoder tap before its block."""

    def __init__(self, stage_channels, pool_size=(1, 1), tied_memory=True):
        super().__init__()
        c = list(stage_channels[:4])
        blocks = [DiscrepancyAttention(c[0], c[0], pool_size, tied_memory=tied_memory)]
        for i in range(1, 4):
            blocks.append(DiscrepancyAttention(c[i - 1] + c[i], c[i], pool_size,
                                               tied_memory=tied_memory))
        self.blocks = nn.ModuleList(blocks)

    def forward(self, levels):
        d = self.blocks[0](levels[0])
        outputs = [d]
        for i in range(1, 4):
            prev = F.interpolate(d, size=levels[i].shape[-2:], mode="bilinear",
                                 align_corners=False)
            d = self.blocks[i](torch.cat([prev, levels[i]], dim=1))
            outputs.append(d)
        return tuple(outputs)

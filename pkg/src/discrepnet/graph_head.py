"""Graph-reasoning reconstruction head: pixels are softly assigned to a small
set of pooled nodes, reasoned over with one graph layer, and projected back."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import EmptyInputError


class GraphReasoningLayer(nn.Module):
    """One global-reasoning step: (I - A) Z W with a learnable node mixing
    matrix A (node-axis 1D conv, no bias) and channel map W."""

    def __init__(self, nodes, channels):
        super().__init__()
        self.node_mix = nn.Conv1d(nodes, nodes, 1, bias=False)
        self.channel_mix = nn.Conv1d(channels, channels, 1)

    def forward(self, z):
        # z: (b, nodes, channels)
        mixed = z - self.node_mix(z)
        mixed = self.channel_mix(mixed.transpose(1, 2)).transpose(1, 2)
        return torch.relu(mixed)


class SimilarityAggregation(nn.Module):
    def __init__(self, in_channels, guide_channels, reduced_channels=16,
                 pool_nodes=(2, 2)):
        super().__init__()
        self.reduced_channels = reduced_channels
        self.pool_nodes = tuple(pool_nodes)
        nodes = self.pool_nodes[0] * self.pool_nodes[1]
        if nodes == 0:
            raise EmptyInputError("pool_nodes must cover at least one node")
        self.reduce = nn.Conv2d(in_channels, reduced_channels, 1)
        self.theta = nn.Conv2d(reduced_channels, reduced_channels, 1)
        self.phi = nn.Conv2d(reduced_channels, reduced_channels, 1)
        self.guide_proj = nn.Conv2d(guide_channels, reduced_channels, 1)
        self.gcn = GraphReasoningLayer(nodes, reduced_channels)
        self.extend = nn.Conv2d(reduced_channels, reduced_channels, 1)

    def _correlation(self, base, guide):
        """Row-stochastic node-to-pixel correlation plus the flattened
        pixel features it was built from."""
        b, c, h, w = base.shape
        if h * w == 0:
            raise EmptyInputError("similarity aggregation over an empty map")
        f_theta = self.theta(base)
        f_phi = self.phi(base)
        g = guide
        if g.shape[-2:] != (h, w):
            g = F.interpolate(g, size=(h, w), mode="bilinear", align_corners=False)
        weight = self.guide_proj(g).softmax(dim=1)
        pooled = F.adaptive_avg_pool2d(f_phi * weight, self.pool_nodes)
        node_feats = pooled.flatten(2).transpose(1, 2)      # (b, m, c)
        pixel_phi = f_phi.flatten(2).transpose(1, 2)        # (b, n, c)
        cor = torch.softmax(node_feats @ pixel_phi.transpose(1, 2), dim=2)
        return cor, f_theta

    def forward(self, x, guide):
        base = self.reduce(x)
        b, c, h, w = base.shape
        cor, f_theta = self._correlation(base, guide)
        z = cor @ f_theta.flatten(2).transpose(1, 2)        # (b, m, c)
        z = self.gcn(z)
        back = cor.transpose(1, 2) @ z                      # (b, n, c)
        back = back.transpose(1, 2).reshape(b, c, h, w)
        return base + self.extend(back)

    def correlation_map(self, x, guide):
        cor, _ = self._correlation(self.reduce(x), guide)
        return cor

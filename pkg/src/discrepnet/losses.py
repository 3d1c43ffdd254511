"""Supervision terms: classification, two reconstruction losses restricted to
real samples, and a pairwise embedding-distance loss, plus their weighted sum."""

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .errors import DegenerateVectorError


@dataclass(frozen=True)
class LossWeights:
    """Trade-off weights for the reconstruction and embedding terms."""

    lambda1: float = 0.1
    lambda2: float = 0.1
    lambda3: float = 0.1


@dataclass
class LossBreakdown:
    cls: torch.Tensor
    rec1: torch.Tensor
    rec2: torch.Tensor
    metric: torch.Tensor
    total: torch.Tensor

    def floats(self):
        return {name: float(getattr(self, name).detach())
                for name in ("cls", "rec1", "rec2", "metric", "total")}


def cosine_distance(a, b):
    """(1 - cos(a, b)) / 2, in [0, 1]. Raises on zero-norm input."""
    na, nb = torch.linalg.vector_norm(a), torch.linalg.vector_norm(b)
    if float(na) == 0.0 or float(nb) == 0.0:
        raise DegenerateVectorError("cosine distance of a zero-norm vector")
    return (1.0 - (a * b).sum() / (na * nb)) / 2.0


def metric_loss(features, labels):
    """Mean pairwise distance over (real, real) pairs minus the mean over
    (real, fake) pairs.

    Pairs are unordered and distinct for the real-real term (i < j) and the
    full cross product for real-fake. A pair class with zero count
    contributes 0. Norms are clamped at 1e-12 so an all-zero embedding
    behaves as distance 0.5 instead of aborting a training step.
    """
    labels = labels.to(torch.bool) if labels.dtype != torch.bool else labels
    real = features[~labels]
    fake = features[labels]
    normed = features / torch.linalg.vector_norm(
        features, dim=1, keepdim=True).clamp_min(1e-12)
    nr = normed[~labels]
    nf = normed[labels]
    zero = features.new_zeros(())
    if nr.shape[0] >= 2:
        cos_rr = nr @ nr.T
        dist_rr = (1.0 - cos_rr) / 2.0
        idx = torch.triu_indices(nr.shape[0], nr.shape[0], offset=1)
        term_rr = dist_rr[idx[0], idx[1]].mean()
    else:
        term_rr = zero
    if nr.shape[0] >= 1 and nf.shape[0] >= 1:
        dist_rf = (1.0 - nr @ nf.T) / 2.0
        term_rf = dist_rf.mean()
    else:
        term_rf = zero
    return term_rr - term_rf


def reconstruction_loss(images, reconstruction, labels, norm="l2"):
    """Pixel error between real-labelled images and their reconstruction;
    0 when the batch holds no real samples. ``norm`` is "l2" (squared) or
    "l1" (absolute)."""
    labels = labels.to(torch.bool) if labels.dtype != torch.bool else labels
    real = ~labels
    if int(real.sum()) == 0:
        return images.new_zeros(())
    diff = images[real] - reconstruction[real]
    if norm == "l2":
        return diff.square().mean()
    if norm == "l1":
        return diff.abs().mean()
    raise ValueError(f"unknown reconstruction norm {norm!r}")


def total_loss(logits, labels, images, recon, features, weights: LossWeights,
               recon_norm="l2") -> LossBreakdown:
    """Weighted sum of the four terms. Disabled reconstruction heads
    (``recon`` None or a missing member) contribute zero."""
    zero = logits.new_zeros(())
    cls = F.cross_entropy(logits, labels.long())
    rec1 = rec2 = zero
    if recon is not None:
        if recon.rec1 is not None:
            rec1 = reconstruction_loss(images, recon.rec1, labels, recon_norm)
        if recon.rec2 is not None:
            rec2 = reconstruction_loss(images, recon.rec2, labels, recon_norm)
    metric = metric_loss(features, labels)
    total = (cls + weights.lambda1 * rec1 + weights.lambda2 * rec2
             + weights.lambda3 * metric)
    return LossBreakdown(cls, rec1, rec2, metric, total)

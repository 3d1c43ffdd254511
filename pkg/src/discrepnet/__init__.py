"""Discrepancy-guided double-head reconstruction learning for image forgery
detection, at desk scale."""

from .attention import DiscrepancyAttention, DiscrepancyCascade
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, load_config, save_config, to_toml
from .data import (FolderDataset, PerturbationSpec, SyntheticConfig,
                   SyntheticForgeryDataset, augment, generate_synthetic_pair,
                   materialize_dataset, perturb)
from .decoder import AttentionFeatureSelect, Decoder
from .detector import (ClassifierHead, EncodingFusion, MaskGuidedAggregation,
                       difference_masks)
from .encoder import BackboneConfig, Encoder, FeaturePyramid, load_backbone_weights
from .graph_head import GraphReasoningLayer, SimilarityAggregation
from .heads import ReconstructionHeads, ReconstructionPair
from .losses import (LossBreakdown, LossWeights, cosine_distance, metric_loss,
                     reconstruction_loss, total_loss)
from .metrics import MetricsReport, auc, eer, metrics_report
from .model import AblationSpec, ForgeryDetector, ModelOutputs, forward_full
from .train import (TrainResult, evaluate, permutation_null_auc, predict_scores,
                    robustness_sweep, train)

__version__ = "0.1.0"

"""Minimal dense neural-network core for graph encoders.

Float64 everywhere; gradients are hand-derived per layer (the architecture
set is small and fixed) and verified against central finite differences.
"""
from .core import Parameter, glorot, relu, leaky_relu, sigmoid, softmax
from .structure import GraphTensors
from .layers import GCNLayer, SAGELayer, GATLayer, gcn_layer, sage_layer, gat_layer
from .heads import (
    BilinearLinkHead,
    SoftmaxGraphHead,
    classify_graph,
    link_score,
    mean_readout,
)
from .losses import bce_loss, bce_from_scores, ce_loss, ce_from_logits
from .optim import Adam
from .model import Model, ModelConfig, load_checkpoint, save_checkpoint
from .gradcheck import (
    clf_loss_closure,
    finite_diff_check,
    input_grad_check,
    link_loss_closure,
    max_rel_error,
)

__all__ = [
    "Parameter", "glorot", "relu", "leaky_relu", "sigmoid", "softmax",
    "GraphTensors", "GCNLayer", "SAGELayer", "GATLayer",
    "gcn_layer", "sage_layer", "gat_layer",
    "BilinearLinkHead", "SoftmaxGraphHead", "classify_graph", "link_score",
    "mean_readout", "bce_loss", "bce_from_scores", "ce_loss", "ce_from_logits",
    "Adam", "Model", "ModelConfig", "load_checkpoint", "save_checkpoint",
    "clf_loss_closure", "finite_diff_check", "input_grad_check",
    "link_loss_closure", "max_rel_error",
]

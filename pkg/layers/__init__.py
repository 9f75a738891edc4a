"""
Trainable layers: graph convolution, gated temporal convolution, ST-Conv block and the full model.
"""

from .base import Layer
from .graph_conv import GraphConvLayer
from .temporal_conv import TemporalConvLayer
from .block import StConvBlock, LayerNormParams
from .model import StgcnModel, OutputHead

__all__ = ["Layer", "GraphConvLayer", "TemporalConvLayer", "StConvBlock", "LayerNormParams", "StgcnModel", "OutputHead"]

"""Patch-sequence CRF image representation and classification."""

__version__ = "0.1.0"

from .descriptor import FeatureScaler, build_gabor_bank, describe_patch, describe_patches
from .gmm import DiagonalGaussianMixture, EmTrace
from .grid_scan import GridSpec, ScanOrder, order_patches, partition_image, scan_sequence
from .pipeline import EvalReport, PatchCRFClassifier
from .persistence import load_model, save_model
from .svm import BinaryRbfSVM, OneVsAllRbfSVM, rbf_kernel
from .transition import build_transition_matrix, mc_kl_divergence

__all__ = [
    "BinaryRbfSVM",
    "DiagonalGaussianMixture",
    "EmTrace",
    "EvalReport",
    "FeatureScaler",
    "GridSpec",
    "OneVsAllRbfSVM",
    "PatchCRFClassifier",
    "ScanOrder",
    "build_gabor_bank",
    "build_transition_matrix",
    "describe_patch",
    "describe_patches",
    "load_model",
    "mc_kl_divergence",
    "order_patches",
    "partition_image",
    "rbf_kernel",
    "save_model",
    "scan_sequence",
]

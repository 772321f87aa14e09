"""Multiplicity-free certification for compact U(n) bundle models.

Modules: weights (highest weights, GT patterns), charlr (exact branching
oracle), linalg (CS decomposition, commutants), geometry (slices, HBK, M),
bundlemodel (section spaces, kernels, J), certify (reports), cli.
"""
from .charlr import Decomposition, branch_interlace, branch_levi, is_mf, kostka, lr_expand
from .weights import GLWeight, dual_weight, gt_patterns, weyl_dim

__version__ = "0.1.0"

__all__ = [
    "Decomposition",
    "GLWeight",
    "branch_interlace",
    "branch_levi",
    "dual_weight",
    "gt_patterns",
    "is_mf",
    "kostka",
    "lr_expand",
    "weyl_dim",
]

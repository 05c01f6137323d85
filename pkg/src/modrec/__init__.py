"""Modulation-recognition workbench.

Synthesizes labeled I/Q frames, impairs them with AWGN and two-path ISI,
trains a small convolutional classifier from scratch and attacks it with
fast-gradient-sign perturbations.
"""
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]

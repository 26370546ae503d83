"""Smooth affine shear tight frames in the frequency domain."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

"""Fedosov-style Berezin-Toeplitz quantization on model Kahler manifolds.

Subpackages by layer: :mod:`jets` (truncated Taylor jets), :mod:`weyl`
(formal Weyl algebra), :mod:`geometry` (model Kähler data), :mod:`fedosov`
(connection and flat sections), :mod:`bargmann_fock` (Kostant–Souriau
operators), :mod:`bergman` (Hilbert-space numerics on CP^1) and :mod:`cli`.
"""

__version__ = "0.1.0"

from .kernels import BACKEND

__all__ = ["BACKEND", "__version__"]

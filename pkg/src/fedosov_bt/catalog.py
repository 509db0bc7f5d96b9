"""Test functions on CP^1 written in the affine chart.

The sphere coordinates are ``x1 = (z + zbar) Q``, ``x2 = -sqrt(-1)(z - zbar) Q`` and
``x3 = 2Q - 1`` with ``Q = 1/(1 + |z|^2)``.  Every entry is a polynomial in
``(x1, x2, x3)`` and is evaluated either on jets or on plain complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import GeometryModel
from .jets import ChartJet


class CatalogError(KeyError):
    """Unknown catalog function."""


@dataclass(frozen=True)
class CatalogFunction:
    name: str
    formula: str
    expr: Callable

    def jet(self, geom: GeometryModel) -> ChartJet:
        """Jet of the function at the geometry's base points (CP^1 chart)."""
        z = geom.coordinate(0)
        zb = geom.coordinate(0, conj=True)
        q = (z * zb + 1).truncate(geom.order).reciprocal()
        return self.expr(*sphere_coordinates(z, zb, q))

    def values(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        zb = np.conj(z)
        q = 1.0 / (1.0 + (z * zb).real)
        return np.asarray(self.expr(*sphere_coordinates(z, zb, q)), dtype=complex)


def sphere_coordinates(z, zb, q):
    x1 = (z + zb) * q
    x2 = (z - zb) * q * (-1j)
    x3 = q * 2 - 1
    return x1, x2, x3


def _generic(x1, x2, x3):
    return x1 + x2 * x3 * 0.5 + x1 * x2 * 0.25 - x3 * x3 * 0.3


CATALOG: dict[str, CatalogFunction] = {
    "x1": CatalogFunction("x1", "x1", lambda x1, x2, x3: x1),
    "x2": CatalogFunction("x2", "x2", lambda x1, x2, x3: x2),
    "x3": CatalogFunction("x3", "x3", lambda x1, x2, x3: x3),
    "x1x2": CatalogFunction("x1x2", "x1*x2", lambda x1, x2, x3: x1 * x2),
    "x3sq": CatalogFunction("x3sq", "x3^2", lambda x1, x2, x3: x3 * x3),
    "generic": CatalogFunction("generic", "x1 + x2*x3/2 + x1*x2/4 - 3*x3^2/10", _generic),
}

GENERIC = "generic"


def get_function(name: str) -> CatalogFunction:
    try:
        return CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown function {name!r}; catalog has {sorted(CATALOG)}") from None

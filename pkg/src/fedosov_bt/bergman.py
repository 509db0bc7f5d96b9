"""Hilbert spaces of holomorphic sections on CP^1 and the numerical studies built on them.

``H_k`` is spanned by ``z^a e_L^k`` (``a = 0..k``) with
``<s1, s2> = int s1 conj(s2) (1 + |z|^2)^(-k) omega``.  With ``t = |z|^2/(1 + |z|^2)``
the measure ``omega`` becomes ``dt dtheta`` (total volume ``2 pi``) and
``||z^a||^2 = 2 pi a! (k - a)! / (k + 1)!``.  Fields are stored premultiplied by
``(1 - t)^(k/2)`` so that inner products are plain weighted sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh

from .bargmann_fock import (
    kostant_souriau_prequantum,
    ks_operator,
    p_alpha,
    quantum_moment_map_section,
    sampled,
    tilde_ks_operator,
)
from .catalog import get_function
from .fedosov import (
    FedosovData,
    FlatSection,
    assemble_I_BT,
    flat_section_of_function,
    flat_section_of_section,
    required_m_cut,
    star_product,
)
from .geometry import (
    GeometryModel,
    TensorField,
    geometry_at,
    hamiltonian_field,
    higher_cov_derivative,
    holomorphic_section,
    laplacian,
)


class BergmanError(ValueError):
    """Quadrature or study failure (unconverged grid, non-PSD Gram, ...)."""


# ---------------------------------------------------------------------------
# quadrature and bases


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor grid: Gauss–Legendre in ``t`` and the trapezoid rule in ``theta``."""

    n_t: int
    n_theta: int
    t: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.z.size

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights * values))

    def refined(self, factor: int = 2) -> "QuadratureGrid":
        return quadrature_grid(factor * self.n_t, factor * self.n_theta)


def quadrature_grid(n_t: int, n_theta: int) -> QuadratureGrid:
    """Nodes and weights for ``int_{CP^1} F omega = int_0^1 int_0^{2 pi} F dtheta dt``."""
    if n_t < 1 or n_theta < 1:
        raise BergmanError("grid sizes must be positive")
    x, w = leggauss(n_t)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * w
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    wth = np.full(n_theta, 2.0 * np.pi / n_theta)
    T, TH = np.meshgrid(t, theta, indexing="ij")
    r = np.sqrt(T / (1.0 - T))
    z = (r * np.exp(1j * TH)).ravel()
    weights = np.outer(wt, wth).ravel()
    return QuadratureGrid(n_t, n_theta, T.ravel(), z, weights)


def grid_for(k_max: int, order: int = 2, refine: int = 1) -> QuadratureGrid:
    """Grid resolving ``H_k`` inner products of order-``order`` operator images for ``k <= k_max``."""
    n_t = k_max + 4 * order + 16
    n_theta = 2 * (k_max + 2 * order + 4)
    return quadrature_grid(refine * n_t, refine * n_theta)


def monomial_norm2(k: int, a: int) -> float:
    """``||z^a e_L^k||^2 = 2 pi a! (k - a)! / (k + 1)!``."""
    return 2.0 * math.pi * math.exp(math.lgamma(a + 1) + math.lgamma(k - a + 1) - math.lgamma(k + 2))


@dataclass(frozen=True)
class HilbertBasis:
    """Orthonormal basis ``e_a = z^a e_L^k / ||z^a||`` of ``H^0(CP^1, O(k))``."""

    k: int
    norms: np.ndarray

    @property
    def dim(self) -> int:
        return self.k + 1


def build_basis(k: int) -> HilbertBasis:
    if k < 1:
        raise BergmanError("level k must be at least 1")
    return HilbertBasis(k, np.sqrt(np.array([monomial_norm2(k, a) for a in range(k + 1)])))


def _scaled_powers(grid: QuadratureGrid, k: int, max_power: int) -> np.ndarray:
    """``z^p (1 - t)^(k/2)`` for ``p <= max_power`` computed without overflow."""
    u = grid.z * np.sqrt(1.0 - grid.t)  # |u| = sqrt(t) <= 1
    out = np.empty((max_power + 1, grid.size), dtype=complex)
    for p in range(max_power + 1):
        out[p] = u**p * (1.0 - grid.t) ** ((k - p) / 2.0)
    return out


def basis_fields(basis: HilbertBasis, grid: QuadratureGrid) -> np.ndarray:
    """Weighted samples of the orthonormal basis, shape ``(k+1, P)``."""
    pw = _scaled_powers(grid, basis.k, basis.k)
    return pw / basis.norms[:, None]


def gram(a: np.ndarray, b: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """``G[i, j] = <a_i, b_j>`` for weighted field stacks."""
    return (a * grid.weights) @ b.conj().T


def op_norm(images: np.ndarray, grid: QuadratureGrid) -> float:
    """Operator norm ``H_k -> L^2`` from images of an orthonormal basis (largest Gram eigenvalue)."""
    g = gram(images, images, grid).T
    g = 0.5 * (g + g.conj().T)
    vals = eigh(g, eigvals_only=True)
    if vals[0] < -1e-9 * max(abs(vals[-1]), 1e-300):
        raise BergmanError(f"Gram matrix is not positive semidefinite (min eigenvalue {vals[0]:.3e})")
    return float(np.sqrt(max(vals[-1], 0.0)))


def toeplitz_matrix(f_values: np.ndarray, basis: HilbertBasis, grid: QuadratureGrid) -> np.ndarray:
    """``T[b, a] = <f e_a, e_b>`` (so ``T_{f,k} e_a = sum_b T[b, a] e_b``)."""
    e = basis_fields(basis, grid)
    return gram(e * f_values, e, grid).T


def toeplitz_images(T: np.ndarray, basis: HilbertBasis, grid: QuadratureGrid) -> np.ndarray:
    e = basis_fields(basis, grid)
    return T.T @ e


def lift_local_operator(local: Sequence[np.ndarray], basis: HilbertBasis, grid: QuadratureGrid) -> np.ndarray:
    """Images of the orthonormal basis under a local operator ``A``.

    ``local[j]`` holds ``A((z - z0)^j e_L^k)(z0)`` sampled at the grid points; since
    ``z^a = sum_j C(a, j) z0^(a-j) (z - z0)^j`` and ``A`` has order below
    ``len(local)``, ``A(z^a)(z0) = sum_j C(a, j) z0^(a-j) local[j]``.
    """
    k = basis.k
    order = len(local) - 1
    pw = _scaled_powers(grid, k, k)
    out = np.zeros((k + 1, grid.size), dtype=complex)
    for a in range(k + 1):
        for j in range(min(a, order) + 1):
            out[a] += math.comb(a, j) * pw[a - j] * local[j]
    return out / basis.norms[:, None]


# ---------------------------------------------------------------------------
# pipeline wrappers on the grid


@dataclass
class GridPipeline:
    """Geometry jets, Fedosov data and flat sections of catalog functions on one grid."""

    grid: QuadratureGrid
    w_max: int
    order: int
    geom: GeometryModel
    F: FedosovData
    _flat: dict = field(default_factory=dict, repr=False)
    _jets: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, grid: QuadratureGrid, w_max: int, order: int | None = None) -> "GridPipeline":
        order = 2 * w_max + 6 if order is None else order
        geom = geometry_at("cp1", grid.z[None, :], order)
        F = assemble_I_BT(geom, required_m_cut(w_max, w_max), w_max=w_max)
        return cls(grid, w_max, order, geom, F)

    def jet(self, name: str):
        if name not in self._jets:
            self._jets[name] = get_function(name).jet(self.geom)
        return self._jets[name]

    def flat(self, name: str) -> FlatSection:
        if name not in self._flat:
            self._flat[name] = flat_section_of_function(self.jet(name), self.F, self.w_max, d_cap=self.w_max)
        return self._flat[name]

    def sections(self, k: int, order: int, d_cap: int) -> list:
        """Flat sections of ``(z - z0)^j e_L^k`` for ``j <= order``."""
        out = []
        for j in range(order + 1):
            s = holomorphic_section(k, 1, (j,), self.geom)
            out.append((s, flat_section_of_section(s, self.geom, d_cap).element))
        return out

    def ks_local(self, name: str, k: int, m: int, partial: bool = False) -> list:
        """``P_{f,k,m}`` (or ``P_{f,k,<=m}``) applied to ``(z - z0)^j``, ``j <= m``."""
        if not partial:
            return self._ks_component(name, k, m)
        parts = [self._ks_component(name, k, l) for l in range(m + 1)]
        return [sum(p[j] if j < len(p) else 0 for p in parts) for j in range(m + 1)]

    def _ks_component(self, name: str, k: int, m: int) -> list:
        key = ("ks", name, k, m)
        if key not in self._jets:
            O = self.flat(name)
            self._jets[key] = [sampled(ks_operator(O, k, m, os_, self.geom)) for _, os_ in self.sections(k, m, m)]
        return self._jets[key]


def _ks_images(pipe: GridPipeline, name: str, k: int, m: int, partial: bool = False) -> np.ndarray:
    basis = build_basis(k)
    return lift_local_operator(pipe.ks_local(name, k, m, partial), basis, pipe.grid)


# ---------------------------------------------------------------------------
# studies


@dataclass
class StudyRow:
    """One measured quantity with its oracle and tolerance."""

    study: str
    f: str
    k: int
    m: int | None
    metric: str
    value: float
    oracle: float | None
    tolerance: float
    passed: bool
    geometry: str = "cp1"

    def as_dict(self) -> dict:
        return {
            "study": self.study,
            "geometry": self.geometry,
            "f": self.f,
            "k": self.k,
            "m": "" if self.m is None else self.m,
            "metric": self.metric,
            "value": self.value,
            "oracle": "" if self.oracle is None else self.oracle,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def quadrature_check(k: int, grid: QuadratureGrid) -> float:
    """Largest deviation of the sampled basis Gram matrix from the identity (plus volume check)."""
    basis = build_basis(k)
    e = basis_fields(basis, grid)
    g = gram(e, e, grid)
    vol = grid.integrate(np.ones(grid.size))
    return float(max(np.abs(g - np.eye(k + 1)).max(), abs(vol - 2 * np.pi)))


def tuynman_residual(pipe: GridPipeline, name: str, k: int) -> float:
    """``max |<(sqrt(-1)/k) nabla_{X_f} e_a + (1/k)(Delta f) e_a, e_b>|`` relative to the sizes of both terms."""
    geom = pipe.geom
    f = pipe.jet(name)
    lap = laplacian(geom, f)
    lhs_local, rhs_local = [], []
    for j in range(2):
        s = holomorphic_section(k, 1, (j,), geom)
        h = sampled(kostant_souriau_prequantum(geom, f, s)) - sampled(f * s.g)
        lhs_local.append(h)
        rhs_local.append(-sampled(lap * s.g) / k)
    basis = build_basis(k)
    e = basis_fields(basis, pipe.grid)
    L = lift_local_operator(lhs_local, basis, pipe.grid)
    R = lift_local_operator(rhs_local, basis, pipe.grid)
    diff = np.abs(gram(L, e, pipe.grid) - gram(R, e, pipe.grid))
    scale = np.abs(gram(L, e, pipe.grid)).max() + np.abs(gram(R, e, pipe.grid)).max()
    return float(diff.max() / max(scale, 1e-300))


def orthogonality_residual(pipe: GridPipeline, name: str, k: int, m: int) -> float:
    """``max_{a,b} |<P_{f,k,m} e_a, e_b>| / (||P_{f,k,m} e_a|| + eps)``."""
    basis = build_basis(k)
    e = basis_fields(basis, pipe.grid)
    imgs = _ks_images(pipe, name, k, m)
    inner = np.abs(gram(imgs, e, pipe.grid))
    norms = np.sqrt(np.abs(np.diag(gram(imgs, imgs, pipe.grid))))
    eps = 1e-12 * max(norms.max(), 1e-300)
    return float((inner / (norms[:, None] + eps)).max())


def main_asymptotic_norms(pipe: GridPipeline, name: str, k: int, m: int) -> tuple[float, float]:
    """``||T_{f,k} - P_{f,k,<=m}||`` and the commutator form ``||(1 - Pi_k) P_{f,k,<=m}||`` on ``H_k``."""
    basis = build_basis(k)
    grid = pipe.grid
    e = basis_fields(basis, grid)
    f_vals = get_function(name).values(grid.z)
    T = toeplitz_matrix(f_vals, basis, grid)
    P = _ks_images(pipe, name, k, m, partial=True)
    diff = toeplitz_images(T, basis, grid) - P
    proj = gram(P, e, grid)  # <P e_a, e_b>
    comm = P - proj @ e
    return op_norm(diff, grid), op_norm(comm, grid)


def ks_norm(pipe: GridPipeline, name: str, k: int, m: int) -> float:
    return op_norm(_ks_images(pipe, name, k, m), pipe.grid)


def quantizable_exactness(pipe: GridPipeline, k: int, f0: str = "x3") -> tuple[float, float]:
    """``||T_{f,k} - P_{alpha,k}||`` for the quantum moment map of ``f0`` and the dbar residual of ``P_{alpha,k}``.

    ``f = f0 - (1/k) Delta f0`` is the level-k value of ``f0 - hbar (Delta f0)/sqrt(-1)``.
    """
    geom = pipe.geom
    grid = pipe.grid
    basis = build_basis(k)
    f0_jet = pipe.jet(f0)
    alpha = quantum_moment_map_section(f0_jet, pipe.F, pipe.w_max, d_cap=pipe.w_max)
    local, dbar_local = [], []
    for j in range(3):
        s = holomorphic_section(k, 1, (j,), geom)
        val = p_alpha(alpha, k, s, geom, d_cap=max(pipe.w_max, 2))
        local.append(sampled(val))
        dbar_local.append(sampled(val.dbar(0)))
    imgs = lift_local_operator(local, basis, grid)
    dbar_imgs = lift_local_operator(dbar_local, basis, grid)
    f_vals = sampled(f0_jet - laplacian(geom, f0_jet) * (1.0 / k))
    T = toeplitz_matrix(f_vals, basis, grid)
    err = op_norm(toeplitz_images(T, basis, grid) - imgs, grid)
    dbar_res = float(np.abs(dbar_imgs).max() / max(np.abs(imgs).max(), 1e-300))
    return err, dbar_res


def composition_norm(pipe: GridPipeline, f: str, g: str, k: int, N: int) -> float:
    """``||T_f T_g - sum_{i<N} (sqrt(-1)/k)^i T_{C_i(f,g)}||``."""
    grid = pipe.grid
    basis = build_basis(k)
    cs = pipe._flat.setdefault(("star", f, g, N), star_product(pipe.jet(f), pipe.jet(g), pipe.F, max(N - 1, 1)))
    Tf = toeplitz_matrix(get_function(f).values(grid.z), basis, grid)
    Tg = toeplitz_matrix(get_function(g).values(grid.z), basis, grid)
    acc = Tf @ Tg
    for i in range(N):
        acc = acc - (1j / k) ** i * toeplitz_matrix(sampled(cs[i]), basis, grid)
    return float(np.linalg.norm(acc, 2))


def reference_tensors(pipe: GridPipeline) -> dict[int, TensorField]:
    """Fixed smooth tensors on CP^1: the (1,0) Hamiltonian field and the raised antiholomorphic Hessian of the generic function."""
    from .bargmann_fock import G_tensor

    f = pipe.jet("generic")
    return {1: hamiltonian_field(pipe.geom, f), 2: G_tensor(pipe.geom, f)}


def cov_derivative_norm(pipe: GridPipeline, tensor: TensorField, k: int) -> float:
    """``||nabla_G||`` as a map ``H_k -> L^2``."""
    local = []
    for j in range(tensor.degree + 1):
        s = holomorphic_section(k, 1, (j,), pipe.geom)
        local.append(sampled(higher_cov_derivative(pipe.geom, tensor, s).g))
    imgs = lift_local_operator(local, build_basis(k), pipe.grid)
    return op_norm(imgs, pipe.grid)


def tilde_residual(pipe: GridPipeline, name: str, k: int, m: int, normalized: bool = False) -> float:
    """Pointwise relative ``|P - Ptilde|`` over the local images ``(z - z0)^j``."""
    O = pipe.flat(name)
    worst = 0.0
    for s, os_ in pipe.sections(k, m, m):
        a = sampled(ks_operator(O, k, m, os_, pipe.geom))
        b = sampled(tilde_ks_operator(O, k, m, s, pipe.geom, normalized=normalized))
        worst = max(worst, float(np.abs(a - b).max() / max(np.abs(a).max(), 1e-300)))
    return worst


# ---------------------------------------------------------------------------
# fits


def fit_slope(ks: Sequence[float], values: Sequence[float], window: tuple[float, float] | None = (8, 40)) -> float:
    """Least-squares slope of ``log value`` against ``log k`` over the window."""
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(values, dtype=float)
    mask = np.ones_like(ks, dtype=bool)
    if window is not None:
        mask = (ks >= window[0]) & (ks <= window[1])
    mask &= vals > 0
    if mask.sum() < 2:
        raise BergmanError("need at least two positive values inside the fit window")
    return float(np.polyfit(np.log(ks[mask]), np.log(vals[mask]), 1)[0])

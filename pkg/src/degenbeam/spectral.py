"""Hinged bi-harmonic eigenbasis on intervals and rectangles.

Under u = Δu = 0 on the boundary the eigenfunctions of Δ² are the Dirichlet
sine modes of -Δ, so every fractional power of the operator is diagonal in
the coefficient vector. Coefficient arrays may carry leading batch axes; the
mode axis is always the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class DomainSpec:
    """Interval ``(0, L)`` or rectangle ``(0, Lx) x (0, Ly)``."""

    dim: int
    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        object.__setattr__(self, "lengths", lengths)
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(lengths) != self.dim:
            raise ValueError(f"expected {self.dim} lengths, got {len(lengths)}")
        if not all(np.isfinite(x) and x > 0 for x in lengths):
            raise ValueError(f"lengths must be positive, got {lengths}")

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """The ``count`` smallest eigenpairs, sorted by eigenvalue.

    ``indices[n]`` is the sine wavenumber tuple of mode ``n`` and ``lam[n]``
    its eigenvalue.
    """

    domain: DomainSpec
    indices: np.ndarray
    lam: np.ndarray
    sqrt_lam: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.lam)

    @property
    def lambda1(self) -> float:
        return float(self.lam[0])

    def max_index(self) -> tuple[int, ...]:
        """Largest wavenumber per dimension among the retained modes."""
        return tuple(int(k) for k in self.indices.max(axis=0))

    def check(self, c) -> np.ndarray:
        c = np.asarray(c)
        if c.shape[-1:] != (self.count,):
            raise ValueError(
                f"coefficient vector of length {c.shape[-1:]} does not match "
                f"spectrum with {self.count} modes"
            )
        return c

    def eigenfunction(self, n: int, *coords) -> np.ndarray:
        """Evaluate the L²-normalised eigenfunction of mode ``n`` (0-based)."""
        out = 1.0
        for k, L, x in zip(self.indices[n], self.domain.lengths, coords):
            out = out * np.sqrt(2.0 / L) * np.sin(k * np.pi * np.asarray(x) / L)
        return out


def build_spectrum(domain: DomainSpec, n_modes: int) -> Spectrum:
    n_modes = int(n_modes)
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if domain.dim == 1:
        (L,) = domain.lengths
        k = np.arange(1, n_modes + 1)
        indices = k[:, None]
        sqrt_lam = (k * np.pi / L) ** 2
    else:
        Lx, Ly = domain.lengths
        j, k = np.meshgrid(np.arange(1, n_modes + 1), np.arange(1, n_modes + 1), indexing="ij")
        j, k = j.ravel(), k.ravel()
        key = (j / Lx) ** 2 + (k / Ly) ** 2
        # ties broken lexicographically by (j, k)
        order = np.lexsort((k, j, key))[:n_modes]
        indices = np.stack([j[order], k[order]], axis=1)
        sqrt_lam = (indices[:, 0] * np.pi / Lx) ** 2 + (indices[:, 1] * np.pi / Ly) ** 2
    lam = sqrt_lam**2
    for arr in (indices, lam, sqrt_lam):
        arr.setflags(write=False)
    return Spectrum(domain=domain, indices=indices, lam=lam, sqrt_lam=sqrt_lam)


def fractional_norm(c, spec: Spectrum, sigma: float) -> np.ndarray:
    """``||u||_sigma = ||A^(sigma/4) u||`` for ``u = sum c_i e_i``."""
    c = spec.check(c)
    return np.sqrt(np.sum(spec.lam ** (sigma / 2.0) * c * c, axis=-1))


def h_norm_sq(a, b, spec: Spectrum) -> np.ndarray:
    """Squared phase-space norm ``||u||_2^2 + ||u_t||^2``."""
    a, b = spec.check(a), spec.check(b)
    return np.sum(spec.lam * a * a, axis=-1) + np.sum(b * b, axis=-1)


def hs_norm_sq(a, b, spec: Spectrum, s: float) -> np.ndarray:
    """Squared ``||u||_{2+s}^2 + ||u_t||_s^2``; ``s = 0`` recovers :func:`h_norm_sq`."""
    a, b = spec.check(a), spec.check(b)
    return np.sum(spec.lam ** (1.0 + s / 2.0) * a * a, axis=-1) + np.sum(
        spec.lam ** (s / 2.0) * b * b, axis=-1
    )


def tail_project(c, m: int) -> np.ndarray:
    """Q_m: drop the first ``m`` modes."""
    c = np.array(c, dtype=float, copy=True)
    n = c.shape[-1]
    if not 0 <= m <= n:
        raise ValueError(f"m must lie in [0, {n}], got {m}")
    c[..., :m] = 0.0
    return c


def head_project(c, m: int) -> np.ndarray:
    """P_m = I - Q_m."""
    c = np.asarray(c, dtype=float)
    return c - tail_project(c, m)


# --------------------------------------------------------------------------
# collocation grids


def _symmetric_rule(L: float, n_points: int):
    x = L * np.arange(1, n_points + 1) / (n_points + 1)
    w = np.full(n_points, L / (n_points + 1))
    return x, w


def _full_period_rule(L: float, n_points: int):
    # Uniform nodes on the odd-extended period [0, 2L); the weights are the
    # truncated Fourier series of the indicator of [0, L], which makes the
    # rule exact for every trigonometric polynomial of degree <= (P-1)/2.
    x = 2.0 * L * np.arange(n_points) / n_points
    theta = np.pi * x / L
    m = np.arange(1, (n_points - 1) // 2 + 1, 2)
    series = np.sin(np.outer(theta, m)) @ (4.0 / (np.pi * m)) if m.size else 0.0
    w = (L / n_points) * (1.0 + series)
    return x, w


@dataclass(frozen=True, eq=False)
class CollocationGrid:
    """Tensor quadrature grid with the mode basis sampled on it.

    ``symmetric`` grids use interior nodes of ``[0, L]`` and integrate exactly
    any product of an *even* number of sine series whose total wavenumber per
    dimension is at most ``exact_degree``. Full-period grids integrate every
    product up to that wavenumber regardless of parity.
    """

    nodes: tuple[np.ndarray, ...]
    weights: np.ndarray
    basis: np.ndarray
    symmetric: bool
    exact_degree: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> np.ndarray:
        return np.asarray(values) @ self.weights


def make_grid(spec: Spectrum, factors: int = 2, symmetric: bool = True) -> CollocationGrid:
    """Grid exact for integrands built from ``factors`` modal sine factors.

    With ``K`` the largest wavenumber of a dimension, a symmetric grid uses
    ``ceil((factors*K + 1)/2)`` interior points and a full-period grid uses
    ``2*factors*K + 1`` points.
    """
    factors = max(int(factors), 2)
    if symmetric and factors % 2:
        raise ValueError("symmetric grids need an even number of sine factors")
    nodes, weights, bases, exact = [], [], [], []
    for d, (L, K) in enumerate(zip(spec.domain.lengths, spec.max_index())):
        top = factors * K
        if symmetric:
            n_points = -(-(top + 1) // 2)
            x, w = _symmetric_rule(L, n_points)
            exact.append(2 * n_points + 1)
        else:
            n_points = 2 * top + 1
            x, w = _full_period_rule(L, n_points)
            exact.append((n_points - 1) // 2)
        nodes.append(x)
        weights.append(w)
        bases.append(np.sqrt(2.0 / L) * np.sin(np.outer(x, spec.indices[:, d]) * np.pi / L))
    if spec.domain.dim == 1:
        W, B = weights[0], bases[0]
    else:
        W = np.outer(weights[0], weights[1]).ravel()
        B = (bases[0][:, None, :] * bases[1][None, :, :]).reshape(-1, spec.count)
    W.setflags(write=False)
    B.setflags(write=False)
    return CollocationGrid(
        nodes=tuple(nodes), weights=W, basis=B, symmetric=symmetric, exact_degree=tuple(exact)
    )


def _check_grid(spec: Spectrum, grid: CollocationGrid, factors: int = 2):
    if grid.basis.shape[1] != spec.count:
        raise ValueError("grid was built for a different spectrum")
    need = tuple(factors * k for k in spec.max_index())
    if any(n > e for n, e in zip(need, grid.exact_degree)):
        raise ValueError(
            f"grid exact to wavenumber {grid.exact_degree}, need {need} for these modes"
        )


def synthesize(c, spec: Spectrum, grid: CollocationGrid) -> np.ndarray:
    """Physical values ``u(x_i)`` on the grid nodes."""
    c = spec.check(c)
    _check_grid(spec, grid)
    return c @ grid.basis.T


def analyze(values, spec: Spectrum, grid: CollocationGrid) -> np.ndarray:
    """L² coefficients ``(v, e_j)`` by quadrature on the grid."""
    _check_grid(spec, grid)
    values = np.asarray(values)
    if values.shape[-1] != grid.size:
        raise ValueError(f"expected {grid.size} grid values, got {values.shape[-1]}")
    return (values * grid.weights) @ grid.basis


def grid_shape(grid: CollocationGrid) -> tuple[int, ...]:
    return tuple(len(x) for x in grid.nodes)


def as_coeffs(values: Sequence[float], spec: Spectrum) -> np.ndarray:
    """Zero-pad or validate a user-supplied coefficient list."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) > spec.count:
        raise ValueError(f"at most {spec.count} coefficients allowed, got {values.shape}")
    out = np.zeros(spec.count)
    out[: len(values)] = values
    return out

"""The truncated modal ODE system.

For modes ``j = 1..N`` with ``mu_j = sqrt(lambda_j)``::

    a_j' = b_j
    b_j' = -(kappa mu_j + lambda_j) a_j - D mu_j b_j - (f(u), e_j)

where ``D = gamma (sum lambda a^2 + sum b^2)^q`` is one scalar shared by
every mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .model import ModelParams, Nonlinearity, damping_coefficient, energy, energy_grid
from .spectral import CollocationGrid, Spectrum, as_coeffs, h_norm_sq


@dataclass(frozen=True, eq=False)
class ModalState:
    a: np.ndarray
    b: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError(f"a and b must be 1-d of equal length, got {a.shape}, {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("state has non-finite entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def zeros(cls, n: int, t: float = 0.0) -> "ModalState":
        return cls(np.zeros(n), np.zeros(n), t)

    def padded(self, n: int) -> "ModalState":
        """Zero-extend to ``n`` modes (used to compare across truncations)."""
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.a)] = self.a
        b[: len(self.b)] = self.b
        return ModalState(a, b, self.t)


@dataclass(frozen=True, eq=False)
class RhsWorkspace:
    """Collocation grid sized so that ``(f(u), e_j)`` is exact."""

    grid: CollocationGrid
    degree: int

    @property
    def points(self) -> int:
        return self.grid.size


def make_workspace(spec: Spectrum, f: Nonlinearity) -> RhsWorkspace:
    return RhsWorkspace(grid=energy_grid(spec, f), degree=f.degree)


def _check_workspace(spec: Spectrum, f: Nonlinearity, ws: RhsWorkspace):
    need = tuple((f.degree + 1) * k for k in spec.max_index())
    if ws.grid.basis.shape[1] != spec.count or any(
        n > e for n, e in zip(need, ws.grid.exact_degree)
    ):
        raise ValueError(f"workspace is not dealias-adequate for degree {f.degree}")
    if ws.grid.symmetric and not f.is_odd:
        raise ValueError("symmetric grid cannot integrate even-degree terms exactly")


def nonlinear_projection(a, spec: Spectrum, f: Nonlinearity, ws: RhsWorkspace) -> np.ndarray:
    """The vector ``((f(u), e_j))_j`` for ``u = sum a_j e_j``."""
    a = spec.check(a)
    if f.is_zero:
        return np.zeros_like(a)
    _check_workspace(spec, f, ws)
    g = ws.grid
    u = a @ g.basis.T
    return (P.polyval(u, f.coeffs) * g.weights) @ g.basis


def rhs(state: ModalState, spec: Spectrum, params: ModelParams, f: Nonlinearity,
        ws: RhsWorkspace):
    """Time derivative ``(da, db)`` of the modal state."""
    a, b = spec.check(state.a), spec.check(state.b)
    D = damping_coefficient(a, b, spec, params)
    proj = nonlinear_projection(a, spec, f, ws)
    db = -(params.kappa * spec.sqrt_lam + spec.lam) * a - D * spec.sqrt_lam * b - proj
    return b.copy(), db


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    """Spectrum, parameters, nonlinearity and workspace bundled for reuse.

    Methods take ``a``, ``b`` arrays with optional leading batch axes.
    """

    spec: Spectrum
    params: ModelParams
    f: Nonlinearity
    ws: RhsWorkspace = field(default=None)
    omega_sq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.ws is None:
            object.__setattr__(self, "ws", make_workspace(self.spec, self.f))
        else:
            _check_workspace(self.spec, self.f, self.ws)
        object.__setattr__(
            self, "omega_sq", self.params.kappa * self.spec.sqrt_lam + self.spec.lam
        )

    @property
    def n(self) -> int:
        return self.spec.count

    def damping(self, a, b):
        return damping_coefficient(a, b, self.spec, self.params)

    def projection(self, a):
        return nonlinear_projection(a, self.spec, self.f, self.ws)

    def parts(self, a, b):
        """``(D, (f(u), e_j))`` -- the two state-dependent pieces of the rhs."""
        return self.damping(a, b), self.projection(a)

    def rhs(self, a, b):
        D, proj = self.parts(a, b)
        mu = self.spec.sqrt_lam
        return b, -self.omega_sq * a - D[..., None] * mu * b - proj

    def dissipation_rate(self, a, b):
        """``D ||u_t||_1^2`` -- the rate at which energy leaves the system."""
        D = self.damping(a, b)
        return D * np.sum(self.spec.sqrt_lam * b * b, axis=-1)

    def energy(self, a, b):
        return energy(a, b, self.spec, self.params, self.f, self.ws.grid)

    def h_norm_sq(self, a, b):
        return h_norm_sq(a, b, self.spec)


# --------------------------------------------------------------------------
# initial data


PROFILES = ("zero", "explicit", "mode", "decay", "rough", "random")


@dataclass(frozen=True)
class InitialData:
    """Description of ``(u0, u1)`` independent of the truncation level.

    kinds
        ``zero``      the zero state
        ``explicit``  coefficient lists ``a``, ``b`` (zero-padded)
        ``mode``      ``a_k = amp_u``, ``b_k = amp_v`` for the single ordinal ``mode``
        ``decay``     ``a_k = amp_u k^-r``, ``b_k = amp_v k^-r``
        ``rough``     ``a_k = amp_u lambda_k^(-1/2) k^-r``, ``b_k = amp_v k^-r``;
                      with ``r`` just above 1/2 this lies in H but not in H_s
        ``random``    the ``rough`` envelope times seeded standard normals

    ``k`` is the 1-based position in the eigenvalue ordering. For ``random``
    the draws for the first ``N`` modes do not depend on ``N``. If ``h_norm``
    is set the result is rescaled to that phase-space norm (this rescaling
    does depend on ``N``).
    """

    kind: str = "zero"
    a: tuple[float, ...] = ()
    b: tuple[float, ...] = ()
    mode: int = 1
    r: float = 2.0
    amp_u: float = 1.0
    amp_v: float = 0.0
    seed: int = 0
    h_norm: Optional[float] = None

    def __post_init__(self):
        if self.kind not in PROFILES:
            raise ValueError(f"unknown initial profile {self.kind!r}; choose from {PROFILES}")


_RANDOM_BLOCK = 4096


def _normals(seed: int, stream: int, n: int) -> np.ndarray:
    # draws come in fixed blocks so that prefixes agree across n
    rng = np.random.default_rng([int(seed), stream])
    n_blocks = -(-n // _RANDOM_BLOCK)
    return np.concatenate([rng.standard_normal(_RANDOM_BLOCK) for _ in range(n_blocks)])[:n]


def project_initial(data: InitialData, spec: Spectrum) -> ModalState:
    n = spec.count
    k = np.arange(1, n + 1, dtype=float)
    a = np.zeros(n)
    b = np.zeros(n)
    if data.kind == "explicit":
        a = as_coeffs(data.a, spec)
        b = as_coeffs(data.b, spec)
    elif data.kind == "mode":
        if not 1 <= data.mode:
            raise ValueError(f"mode ordinal must be >= 1, got {data.mode}")
        if data.mode <= n:
            a[data.mode - 1] = data.amp_u
            b[data.mode - 1] = data.amp_v
    elif data.kind == "decay":
        a = data.amp_u * k ** (-data.r)
        b = data.amp_v * k ** (-data.r)
    elif data.kind in ("rough", "random"):
        a = data.amp_u * k ** (-data.r) / spec.sqrt_lam
        b = data.amp_v * k ** (-data.r)
        if data.kind == "random":
            a = a * _normals(data.seed, 0, n)
            b = b * _normals(data.seed, 1, n)
    if data.h_norm is not None:
        norm = float(np.sqrt(h_norm_sq(a, b, spec)))
        if norm == 0.0:
            if data.h_norm != 0.0:
                raise ValueError("cannot rescale the zero state to a positive norm")
        else:
            a, b = a * (data.h_norm / norm), b * (data.h_norm / norm)
    return ModalState(a, b, 0.0)


def random_state(spec: Spectrum, rng: np.random.Generator, h_norm: float, r: float = 1.5) -> ModalState:
    """Random state with ``rough``-type envelope scaled to the given norm."""
    k = np.arange(1, spec.count + 1, dtype=float)
    a = rng.standard_normal(spec.count) * k ** (-r) / spec.sqrt_lam
    b = rng.standard_normal(spec.count) * k ** (-r)
    scale = h_norm / np.sqrt(h_norm_sq(a, b, spec))
    return ModalState(a * scale, b * scale)

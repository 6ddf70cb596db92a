"""Model parameters, polynomial source terms, energy and Lyapunov functionals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .spectral import CollocationGrid, Spectrum, h_norm_sq, make_grid, synthesize


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the stretching term, the damping and its exponent.

    ``gamma = 0`` is accepted so that conservative reference runs can be set
    up; :func:`check_assumptions` does not cover that case.
    """

    kappa: float = 0.0
    gamma: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "gamma", "q"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.q >= 1:
            raise ValueError(f"q must be >= 1, got {self.q}")

    @property
    def s(self) -> float:
        return 1.0 / self.q


@dataclass(frozen=True)
class Nonlinearity:
    """Real polynomial ``f(u) = sum_k coeffs[k] u^k`` with ``f(0) = 0``."""

    coeffs: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if c[0] != 0.0:
            raise ValueError(f"f(0) must vanish, got constant term {c[0]}")
        object.__setattr__(self, "coeffs", tuple(float(x) for x in c))

    @classmethod
    def cubic(cls, a: float = 1.0) -> "Nonlinearity":
        return cls((0.0, 0.0, 0.0, a))

    @property
    def degree(self) -> int:
        return 0 if self.is_zero else len(self.coeffs) - 1

    @property
    def p(self) -> int:
        """Growth exponent ``deg f - 1`` (0 for linear or vanishing f)."""
        return max(self.degree - 1, 0)

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    @property
    def is_odd(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[::2])

    @property
    def antiderivative(self) -> np.ndarray:
        return P.polyint(self.coeffs)

    @property
    def derivative(self) -> np.ndarray:
        return P.polyder(self.coeffs)

    def __call__(self, u):
        return P.polyval(u, self.coeffs)

    def F(self, u):
        return P.polyval(u, self.antiderivative)

    def fprime(self, u):
        return P.polyval(u, self.derivative)

    def __add__(self, other: "Nonlinearity") -> "Nonlinearity":
        return Nonlinearity(tuple(P.polyadd(self.coeffs, other.coeffs)))


# --------------------------------------------------------------------------
# assumption checks


def _poly_inf(coeffs) -> float:
    """Infimum of a real polynomial over the real line (may be -inf)."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size == 0:
        return 0.0
    deg = c.size - 1
    if deg == 0:
        return float(c[0])
    if deg % 2 == 1 or c[-1] < 0:
        return -np.inf
    crit = P.polyroots(P.polyder(c))
    crit = crit[np.abs(crit.imag) <= 1e-9 * (1 + np.abs(crit.real))].real
    return float(np.min(P.polyval(crit, c)))


def _poly_sup(coeffs) -> float:
    return -_poly_inf(-np.asarray(coeffs, dtype=float))


@dataclass
class AssumptionReport:
    growth_ok: bool
    growth_C: float
    p: int
    dissipativity_ok: bool
    liminf_fprime: float
    lambda1: float
    mu: Optional[float] = None
    C_F: Optional[float] = None
    C_fu: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.growth_ok and self.dissipativity_ok


def check_assumptions(f: Nonlinearity, lambda1: float, volume: float = 1.0) -> AssumptionReport:
    """Decide the growth and dissipativity hypotheses for a polynomial ``f``.

    Growth holds for any polynomial, with witness ``C = sum |coeffs of f'|``
    since ``|u|^k <= 1 + |u|^p`` for ``0 <= k <= p``. Dissipativity asks that
    ``liminf f'(u) > -lambda1`` as ``|u| -> inf``, which for a polynomial is
    read off the leading coefficient of ``f'``.

    When dissipativity holds, ``mu`` and the constants ``C_F``, ``C_fu`` are
    computed witnesses for

        int F(u) >= -mu/2 ||u||^2 - C_F
        (f(u), u) >= int F(u) - mu/2 ||u||^2 - C_fu

    obtained from pointwise polynomial minima times ``volume``.
    """
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    dfc = np.trim_zeros(np.asarray(f.derivative, dtype=float), "b")
    notes: list[str] = []
    growth_C = float(np.sum(np.abs(dfc))) if dfc.size else 0.0
    p = max(f.p, 1)

    if dfc.size <= 1:
        liminf = float(dfc[0]) if dfc.size else 0.0
    elif (dfc.size - 1) % 2 == 1:
        liminf = -np.inf
        notes.append("f' has odd degree and is unbounded below")
    else:
        liminf = np.inf if dfc[-1] > 0 else -np.inf
    diss_ok = liminf > -lambda1

    rep = AssumptionReport(
        growth_ok=True,
        growth_C=growth_C,
        p=p,
        dissipativity_ok=diss_ok,
        liminf_fprime=liminf,
        lambda1=float(lambda1),
        notes=notes,
    )
    if not diss_ok:
        rep.notes.append(f"liminf f' = {liminf} is not > -lambda1 = {-lambda1}")
        return rep

    if np.isfinite(liminf):
        # linear f(u) = c u: F = c u^2/2 and (f(u),u) - int F = c/2 ||u||^2
        mu = max(0.0, -liminf)
    else:
        mu = 0.0
    quad = np.zeros(3)
    quad[2] = mu / 2.0
    F = f.antiderivative
    g_F = P.polyadd(F, quad)
    g_fu = P.polyadd(P.polysub(P.polymulx(f.coeffs), F), quad)
    rep.mu = mu
    rep.C_F = max(0.0, -_poly_inf(g_F)) * volume
    rep.C_fu = max(0.0, -_poly_inf(g_fu)) * volume
    if not (np.isfinite(rep.C_F) and np.isfinite(rep.C_fu)):
        rep.notes.append("non-constructive: pointwise bound unavailable")
    return rep


def decay_theta(f: Nonlinearity) -> float:
    """Smallest ``theta >= 0`` with ``-theta/2 u^2 <= F(u) <= f(u)u + theta/2 u^2``.

    Returns ``inf`` if no such ``theta`` exists. When the result is below
    ``lambda1`` the attractor reduces to the zero state.
    """
    F = f.antiderivative
    # F and F - f u both vanish to second order at 0, so dividing by u^2 is exact
    lower = -2.0 * np.asarray(F, dtype=float)[2:]
    upper = 2.0 * np.asarray(P.polysub(F, P.polymulx(f.coeffs)), dtype=float)[2:]
    theta = 0.0
    for c in (lower, upper):
        if c.size:
            theta = max(theta, _poly_sup(c))
    return float(theta)


# --------------------------------------------------------------------------
# functionals


def energy_grid(spec: Spectrum, f: Nonlinearity) -> CollocationGrid:
    """Grid on which ``int F(u)`` and ``(f(u), e_j)`` are quadrature-exact."""
    return make_grid(spec, factors=f.degree + 1, symmetric=f.is_odd)


def potential(a, spec: Spectrum, f: Nonlinearity, grid: Optional[CollocationGrid] = None):
    """``int F(u) dx``; works for complex ``a`` as well (complex-step checks)."""
    a = spec.check(a)
    if f.is_zero:
        return np.zeros(a.shape[:-1], dtype=a.dtype)
    grid = grid if grid is not None else energy_grid(spec, f)
    return grid.integrate(P.polyval(synthesize(a, spec, grid), f.antiderivative))


def energy(a, b, spec: Spectrum, params: ModelParams, f: Nonlinearity,
           grid: Optional[CollocationGrid] = None):
    a, b = spec.check(a), spec.check(b)
    quad = 0.5 * np.sum(b * b, axis=-1)
    quad = quad + 0.5 * params.kappa * np.sum(spec.sqrt_lam * a * a, axis=-1)
    quad = quad + 0.5 * np.sum(spec.lam * a * a, axis=-1)
    return quad + potential(a, spec, f, grid)


def damping_coefficient(a, b, spec: Spectrum, params: ModelParams):
    return params.gamma * h_norm_sq(a, b, spec) ** params.q


def lyapunov(a, b, spec: Spectrum, params: ModelParams, f: Nonlinearity, alpha: float,
             grid: Optional[CollocationGrid] = None):
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return energy(a, b, spec, params, f, grid) + alpha * np.sum(a * b, axis=-1)


def alpha_admissible(spec: Spectrum, params: Optional[ModelParams] = None) -> float:
    """Largest ``alpha`` for which ``|alpha (u_t, u)| <= (||u_t||^2 + ||u||_2^2)/4``.

    By Cauchy-Schwarz and ``lambda1 ||u||^2 <= ||u||_2^2`` the pairing is at
    most ``(||u_t||^2 + ||u||_2^2) / (2 sqrt(lambda1))``.
    """
    return 0.5 * float(np.sqrt(spec.lambda1))


def nonmonotone_cubic(lambda1: float) -> Nonlinearity:
    """``u - (3 lambda1 + 9) u^2 + u^3``: non-monotone but still dissipative."""
    return Nonlinearity((0.0, 1.0, -(3.0 * lambda1 + 9.0), 1.0))


def parse_coefficients(values: Sequence[float]) -> Nonlinearity:
    return Nonlinearity(tuple(float(v) for v in values))

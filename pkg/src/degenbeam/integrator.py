"""Adaptive time stepping of the modal system with a dissipation accumulator.

The state integrated is ``(a, b, z)`` with ``z' = D ||u_t||_1^2``, so that
``E(t) + z(t) - E(0)`` measures the integration error of the energy balance
directly.

Two steppers share the Dormand-Prince 5(4) tableau:

``dopri5``
    the classical explicit pair applied to the full right-hand side.
``lawson``
    the same pair applied in integrating-factor form. Over each step the
    per-mode linear block ``[[0, 1], [-(kappa mu + lambda), -D_n mu]]`` with
    the damping frozen at the step start is propagated exactly; only the
    remainder ``-(D - D_n) mu b - (f(u), e_j)`` and the accumulator go
    through the Runge-Kutta stages. Order and error estimate are unchanged,
    but the step is no longer limited by ``sqrt(lambda_N)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .galerkin import GalerkinSystem, ModalState

log = logging.getLogger(__name__)

METHODS = ("lawson", "dopri5")


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-9
    atol: float = 1e-12
    dt_init: Optional[float] = None
    dt_max: float = math.inf
    max_steps: int = 2_000_000
    stride: int = 1
    sample_times: Optional[tuple[float, ...]] = None
    method: str = "lawson"

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.dt_init is not None and not self.dt_init > 0:
            raise ValueError("dt_init must be positive")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.sample_times is not None:
            ts = tuple(float(t) for t in self.sample_times)
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("sample_times must be strictly increasing")
            object.__setattr__(self, "sample_times", ts)


@dataclass(frozen=True)
class AugmentedState:
    modal: ModalState
    z: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``t[i]``, ``a[i]``, ``b[i]``, ``z[i]`` of one integration."""

    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    z: np.ndarray
    config: SolverConfig = field(default_factory=SolverConfig)
    steps: int = 0
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> AugmentedState:
        return AugmentedState(ModalState(self.a[i], self.b[i], self.t[i]), float(self.z[i]))

    @property
    def final(self) -> ModalState:
        return ModalState(self.a[-1], self.b[-1], self.t[-1])

    @property
    def initial(self) -> ModalState:
        return ModalState(self.a[0], self.b[0], self.t[0])

    def thinned(self, stride: int) -> "Trajectory":
        """Every ``stride``-th sample, endpoints kept."""
        idx = np.unique(np.r_[np.arange(0, len(self), stride), len(self) - 1])
        return replace(self, t=self.t[idx], a=self.a[idx], b=self.b[idx], z=self.z[idx])


class IntegrationError(RuntimeError):
    """Raised on step-size underflow, step budget exhaustion or blow-up.

    ``trajectory`` holds the samples produced before the failure.
    """

    def __init__(self, reason: str, t_reached: float, trajectory: Optional[Trajectory] = None):
        super().__init__(f"{reason} at t = {t_reached:.6g}")
        self.reason = reason
        self.t_reached = t_reached
        self.trajectory = trajectory


# --------------------------------------------------------------------------
# Dormand-Prince 5(4)

_F = Fraction
_C = [_F(0), _F(1, 5), _F(3, 10), _F(4, 5), _F(8, 9), _F(1), _F(1)]
_A = [
    [],
    [_F(1, 5)],
    [_F(3, 40), _F(9, 40)],
    [_F(44, 45), _F(-56, 15), _F(32, 9)],
    [_F(19372, 6561), _F(-25360, 2187), _F(64448, 6561), _F(-212, 729)],
    [_F(9017, 3168), _F(-355, 33), _F(46732, 5247), _F(49, 176), _F(-5103, 18656)],
    [_F(35, 384), _F(0), _F(500, 1113), _F(125, 192), _F(-2187, 6784), _F(11, 84)],
]
_B = _A[6] + [_F(0)]
_BHAT = [_F(5179, 57600), _F(0), _F(7571, 16695), _F(393, 640), _F(-92097, 339200),
         _F(187, 2100), _F(1, 40)]
_ERR = [float(b - bh) for b, bh in zip(_B, _BHAT)]
_Af = [[float(x) for x in row] for row in _A]
_Cf = [float(c) for c in _C]


def propagator(omega_sq, c, tau):
    """Entries of ``exp(tau [[0, 1], [-omega_sq, -c]])``, elementwise.

    Handles under-, critically and over-damped blocks without overflow for
    ``tau >= 0``.
    """
    omega_sq, c = np.broadcast_arrays(np.asarray(omega_sq, float), np.asarray(c, float))
    half = 0.5 * c
    disc = half * half - omega_sq
    nu = np.sqrt(np.abs(disc))
    x = nu * tau
    with np.errstate(all="ignore"):
        g = np.exp(-half * tau)
        # underdamped
        gC_u = g * np.cos(x)
        gS_u = g * np.where(nu > 0, np.sin(x) / nu, tau)
        # weakly overdamped, sinh(x)/x by series-safe form
        sinhc = np.where(x > 0, np.sinh(x) / np.where(x > 0, x, 1.0), 1.0)
        gC_s = g * np.cosh(x)
        gS_s = g * tau * sinhc
        # strongly overdamped: factor out the two real exponentials
        root = half + nu
        ep = np.exp(-omega_sq * tau / root)
        em = np.exp(-root * tau)
        gC_l = 0.5 * (ep + em)
        gS_l = (ep - em) / (2.0 * np.where(nu > 0, nu, 1.0))
    under = disc < 0
    large = ~under & (x >= 0.5)
    gC = np.where(under, gC_u, np.where(large, gC_l, gC_s))
    gS = np.where(under, gS_u, np.where(large, gS_l, gS_s))
    return gC + half * gS, gS, -omega_sq * gS, gC - half * gS


class _Stepper:
    """One embedded step of the chosen method on a batch ``(B, N)``."""

    def __init__(self, system: GalerkinSystem, method: str):
        self.sys = system
        self.method = method
        self.mu = system.spec.sqrt_lam
        self.omega_sq = system.omega_sq

    def parts(self, a, b):
        D, proj = self.sys.parts(a, b)
        return D, proj

    def _dz(self, D, b):
        return D * np.sum(self.mu * b * b, axis=-1)

    def full_rhs(self, a, b, D, proj):
        db = -self.omega_sq * a - D[:, None] * self.mu * b - proj
        return b, db, self._dz(D, b)

    def step(self, a, b, z, h, parts0):
        if self.method == "dopri5":
            return self._step_explicit(a, b, z, h, parts0)
        return self._step_lawson(a, b, z, h, parts0)

    def _step_explicit(self, a, b, z, h, parts0):
        ks = [self.full_rhs(a, b, *parts0)]
        parts = parts0
        for i in range(1, 7):
            Ya, Yb, Yz = a.copy(), b.copy(), z.copy()
            for aij, k in zip(_Af[i], ks):
                if aij:
                    Ya += h * aij * k[0]
                    Yb += h * aij * k[1]
                    Yz += h * aij * k[2]
            parts = self.parts(Ya, Yb)
            ks.append(self.full_rhs(Ya, Yb, *parts))
        err = [sum(h * e * k[j] for e, k in zip(_ERR, ks) if e) for j in range(3)]
        return (Ya, Yb, Yz), err, parts

    def _step_lawson(self, a, b, z, h, parts0):
        mu = self.mu
        D_n = parts0[0]
        c = D_n[:, None] * mu
        cache = {}

        def E(frac):
            if frac not in cache:
                cache[frac] = propagator(self.omega_sq, c, float(frac) * h)
            return cache[frac]

        D1, proj1 = parts0
        nbs = [-proj1]
        dzs = [self._dz(D1, b)]
        parts = parts0
        for i in range(1, 7):
            e11, e12, e21, e22 = E(_C[i])
            Ya = e11 * a + e12 * b
            Yb = e21 * a + e22 * b
            Yz = z.copy()
            for j, aij in enumerate(_A[i]):
                if aij:
                    _, f12, _, f22 = E(_C[i] - _C[j])
                    w = h * float(aij)
                    Ya += w * f12 * nbs[j]
                    Yb += w * f22 * nbs[j]
                    Yz += w * dzs[j]
            parts = self.parts(Ya, Yb)
            Di, proj = parts
            nbs.append(-(Di - D_n)[:, None] * mu * Yb - proj)
            dzs.append(self._dz(Di, Yb))
        err_a = 0.0
        err_b = 0.0
        err_z = 0.0
        for i, e in enumerate(_ERR):
            if e:
                _, f12, _, f22 = E(1 - _C[i])
                err_a = err_a + h * e * f12 * nbs[i]
                err_b = err_b + h * e * f22 * nbs[i]
                err_z = err_z + h * e * dzs[i]
        return (Ya, Yb, Yz), [err_a, err_b, err_z], parts

    def _h_norm(self, a, b):
        return np.sqrt(np.sum((self.mu * a) ** 2, axis=-1) + np.sum(b * b, axis=-1))

    def error_norm(self, y0, y1, err, rtol, atol):
        """Scaled error, maximised over batch members.

        The state error is measured in the phase-space norm relative to the
        phase-space norm of the state; a componentwise scale would let
        ``atol`` govern the tiny high-mode coefficients and break tolerance
        proportionality. The accumulator ``z`` is controlled separately on
        the energy scale.
        """
        n0 = self._h_norm(y0[0], y0[1])
        n1 = self._h_norm(y1[0], y1[1])
        e_state = self._h_norm(err[0], err[1]) / (atol + rtol * np.maximum(n0, n1))
        z_scale = np.maximum.reduce([np.abs(y0[2]), np.abs(y1[2]), n0 * n0])
        e_z = np.abs(err[2]) / (atol + rtol * z_scale)
        return float(np.max(np.maximum(e_state, e_z)))


def _initial_step(stepper, y, parts, cfg: SolverConfig, span: float) -> float:
    if cfg.dt_init is not None:
        return min(cfg.dt_init, cfg.dt_max, span)
    a, b, z = y
    scale = cfg.atol + cfg.rtol * stepper._h_norm(a, b)
    d0 = float(np.max(stepper._h_norm(a, b) / scale))
    if stepper.method == "dopri5":
        da, db, dz = stepper.full_rhs(a, b, *parts)
    else:
        da, db = np.zeros_like(a), -parts[1]
    d1 = float(np.max(stepper._h_norm(da, db) / scale))
    if stepper.method == "dopri5":
        # explicit stability: resolve the fastest linear frequency
        d1 = max(d1, float(np.sqrt(stepper.omega_sq[-1])))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h, cfg.dt_max, span)


def _integrate_batch(system: GalerkinSystem, a0, b0, t0: float, t_end: float, cfg: SolverConfig):
    a = np.array(a0, dtype=float, ndmin=2)
    b = np.array(b0, dtype=float, ndmin=2)
    z = np.zeros(a.shape[0])
    if not t_end > t0:
        raise ValueError(f"t_end must exceed the initial time {t0}, got {t_end}")
    stepper = _Stepper(system, cfg.method)

    targets = [t_end]
    if cfg.sample_times is not None:
        targets = sorted({float(t) for t in cfg.sample_times if t0 < t < t_end} | {t_end})
    ti = 0

    ts, As, Bs, Zs = [t0], [a.copy()], [b.copy()], [z.copy()]
    parts = stepper.parts(a, b)
    t = t0
    h = _initial_step(stepper, (a, b, z), parts, cfg, t_end - t0)
    n_acc = n_rej = 0
    facmax = 5.0
    nonfinite = False

    def partial(reason):
        return IntegrationError(
            reason,
            t,
            (np.array(ts), np.array(As), np.array(Bs), np.array(Zs), n_acc, n_rej),
        )

    while t < t_end:
        if n_acc + n_rej >= cfg.max_steps:
            raise partial(f"max_steps={cfg.max_steps} exceeded")
        h = min(h, cfg.dt_max)
        target = targets[ti]
        h_free = h
        hit = False
        if t + h >= target - 1e-12 * max(1.0, abs(target)):
            h = target - t
            hit = True
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise partial("non-finite state (blow-up)" if nonfinite else "step size underflow")

        y_new, err, new_parts = stepper.step(a, b, z, h, parts)
        finite = all(np.all(np.isfinite(v)) for v in y_new)
        en = stepper.error_norm((a, b, z), y_new, err, cfg.rtol, cfg.atol) if finite else np.inf
        if not np.isfinite(en):
            nonfinite = True
            n_rej += 1
            h = 0.2 * h
            facmax = 1.0
            continue
        nonfinite = False
        if en <= 1.0:
            n_acc += 1
            t = target if hit else t + h
            a, b, z = y_new
            parts = new_parts
            record = False
            if hit:
                ti += 1
                record = True
            elif cfg.sample_times is None and n_acc % cfg.stride == 0:
                record = True
            if record:
                ts.append(t)
                As.append(a.copy())
                Bs.append(b.copy())
                Zs.append(z.copy())
            fac = 5.0 if en == 0 else min(facmax, max(0.2, 0.9 * en ** -0.2))
            h = h * fac
            if hit:
                h = max(h, min(h_free, 5.0 * h_free))
            facmax = 5.0
        else:
            n_rej += 1
            h = h * max(0.2, 0.9 * en ** -0.2)
            facmax = 1.0
    log.debug("integrated to %g: %d accepted, %d rejected", t, n_acc, n_rej)
    return np.array(ts), np.array(As), np.array(Bs), np.array(Zs), n_acc, n_rej


def _split(raw, cfg, member: int) -> Trajectory:
    t, A, B, Z, n_acc, n_rej = raw
    return Trajectory(
        t=t, a=A[:, member], b=B[:, member], z=Z[:, member], config=cfg, steps=n_acc, rejected=n_rej
    )


def _run(system, a0, b0, t0, t_end, cfg):
    try:
        return _integrate_batch(system, a0, b0, t0, t_end, cfg)
    except IntegrationError as exc:
        raw = exc.trajectory
        members = raw[1].shape[1]
        exc.trajectory = [_split(raw, cfg, m) for m in range(members)]
        if members == 1:
            exc.trajectory = exc.trajectory[0]
        raise


def integrate(initial: ModalState, t_end: float, config: SolverConfig,
              system: GalerkinSystem) -> Trajectory:
    """Integrate from ``initial`` (at ``initial.t``) to ``t_end``.

    Samples always include both endpoints. Without ``sample_times`` every
    ``stride``-th accepted step is kept; otherwise steps are shortened to land
    on each requested time.
    """
    system.spec.check(initial.a)
    raw = _run(system, initial.a, initial.b, initial.t, float(t_end), config)
    return _split(raw, config, 0)


def integrate_pair(u0: ModalState, v0: ModalState, t_end: float, config: SolverConfig,
                   system: GalerkinSystem) -> tuple[Trajectory, Trajectory]:
    """Integrate two initial states on one shared step sequence.

    Both are advanced as one batch, so each step is accepted only when it is
    accurate enough for both; sample times coincide exactly.
    """
    if u0.t != v0.t:
        raise ValueError("initial states must share their initial time")
    system.spec.check(u0.a)
    system.spec.check(v0.a)
    raw = _run(system, np.stack([u0.a, v0.a]), np.stack([u0.b, v0.b]), u0.t, float(t_end), config)
    return _split(raw, config, 0), _split(raw, config, 1)


def integrate_many(states: Sequence[ModalState], t_end: float, config: SolverConfig,
                   system: GalerkinSystem) -> list[Trajectory]:
    """Independent integrations (each with its own step sequence)."""
    return [integrate(s, t_end, config, system) for s in states]


def energy_residual(traj: Trajectory, system: GalerkinSystem):
    """``E(t) + z(t) - E(0)`` per sample and its maximum magnitude."""
    E = system.energy(traj.a, traj.b)
    res = E + traj.z - E[0]
    return res, float(np.max(np.abs(res)))


def audit_tolerance(traj: Trajectory, system: GalerkinSystem) -> float:
    E0 = float(system.energy(traj.a[0], traj.b[0]))
    return 1e3 * traj.config.rtol * max(1.0, E0)


def reverse_velocity(state: ModalState) -> ModalState:
    """``(u, u_t) -> (u, -u_t)``; runs time backwards when there is no damping."""
    return ModalState(state.a, -state.b, state.t)

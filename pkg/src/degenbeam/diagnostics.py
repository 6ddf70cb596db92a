"""Empirical checks of the qualitative estimates along computed trajectories.

None of the constants involved is constructive, so every report checks the
*form* of an estimate: finiteness, positivity, stability under refinement of
the truncation or of a perturbation size. All suprema and minima are taken
over trajectory samples.

Each report offers ``summary()`` (scalar verdicts for JSON) and ``table()``
(header and rows for CSV).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .galerkin import GalerkinSystem, InitialData, ModalState, project_initial, random_state
from .integrator import (
    SolverConfig,
    Trajectory,
    audit_tolerance,
    energy_residual,
    integrate,
    integrate_pair,
)
from .model import ModelParams, Nonlinearity, check_assumptions, decay_theta
from .spectral import DomainSpec, Spectrum, build_spectrum, h_norm_sq, hs_norm_sq


@dataclass(frozen=True)
class ModelContext:
    """Everything except the truncation level and the initial datum."""

    domain: DomainSpec
    params: ModelParams
    f: Nonlinearity
    solver: SolverConfig = field(default_factory=SolverConfig)

    @functools.lru_cache(maxsize=8)
    def system(self, n_modes: int) -> GalerkinSystem:
        return GalerkinSystem(build_spectrum(self.domain, n_modes), self.params, self.f)

    def run(self, data: InitialData, n_modes: int, t_end: float) -> Trajectory:
        sys_ = self.system(n_modes)
        return integrate(project_initial(data, sys_.spec), t_end, self.solver, sys_)


def _norm_series(traj: Trajectory, spec: Spectrum) -> np.ndarray:
    return np.sqrt(h_norm_sq(traj.a, traj.b, spec))


def _ratio(x: float, y: float) -> float:
    return x / y if y > 0 else (math.inf if x > 0 else 1.0)


# --------------------------------------------------------------------------
# smoothing


@dataclass
class SmoothingReport:
    s: float
    t_min: float
    t: np.ndarray
    series: np.ndarray
    sup: float
    t_sup: float
    refinement: dict[int, float] = field(default_factory=dict)

    @property
    def refinement_ratio(self) -> Optional[float]:
        """Largest over smallest supremum across truncation levels."""
        if len(self.refinement) < 2:
            return None
        vals = list(self.refinement.values())
        return _ratio(max(vals), min(vals))

    def summary(self) -> dict:
        out = {"s": self.s, "t_min": self.t_min, "sup": self.sup, "t_sup": self.t_sup,
               "finite": bool(np.isfinite(self.sup))}
        if self.refinement:
            out["refinement"] = {str(n): v for n, v in sorted(self.refinement.items())}
            out["refinement_ratio"] = self.refinement_ratio
        return out

    def table(self):
        return ["t", "weighted_hs_norm_sq"], list(zip(self.t, self.series))


def smoothing_report(traj: Trajectory, spec: Spectrum, params: ModelParams,
                     t_min: float) -> SmoothingReport:
    """``t^(1+s) ||(u, u_t)||_{H_s}^2`` on the samples with ``t > 0``.

    The supremum is taken over samples in ``[t_min, T]``.
    """
    if not t_min > 0:
        raise ValueError("t_min must be positive")
    s = params.s
    pos = traj.t > 0
    t = traj.t[pos]
    series = t ** (1.0 + s) * hs_norm_sq(traj.a[pos], traj.b[pos], spec, s)
    window = t >= t_min
    if not np.any(window):
        raise ValueError(f"no samples in [{t_min}, {traj.t[-1]}]")
    i = int(np.argmax(np.where(window, series, -np.inf)))
    return SmoothingReport(s=s, t_min=float(t_min), t=t, series=series,
                           sup=float(series[i]), t_sup=float(t[i]))


def smoothing_refinement(ctx: ModelContext, data: InitialData, n_list: Sequence[int],
                         t_end: float, t_min: float) -> SmoothingReport:
    """Smoothing suprema for each truncation; the finest run's series is kept."""
    if not n_list:
        raise ValueError("n_list must not be empty")
    sups: dict[int, float] = {}
    rep = None
    for n in sorted(set(int(n) for n in n_list)):
        traj = ctx.run(data, n, t_end)
        rep = smoothing_report(traj, ctx.system(n).spec, ctx.params, t_min)
        sups[n] = rep.sup
    rep.refinement = sups
    return rep


# --------------------------------------------------------------------------
# lower bound


@dataclass
class LowerBoundReport:
    min: float
    t_min: float
    initial: float
    final: float
    zero_data: bool
    t: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    norms: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def summary(self) -> dict:
        return {"min": self.min, "t_min": self.t_min, "initial": self.initial,
                "final": self.final, "zero_data": self.zero_data,
                "positive": self.min > 0}

    def table(self):
        return ["t", "h_norm"], list(zip(self.t, self.norms))


def lower_bound_report(traj: Trajectory, spec: Spectrum) -> LowerBoundReport:
    """Smallest sampled phase-space norm. Zero data is returned flagged."""
    norms = _norm_series(traj, spec)
    i = int(np.argmin(norms))
    return LowerBoundReport(min=float(norms[i]), t_min=float(traj.t[i]), initial=float(norms[0]),
                            final=float(norms[-1]), zero_data=bool(norms[0] == 0.0),
                            t=traj.t, norms=norms)


# --------------------------------------------------------------------------
# continuous dependence


@dataclass
class DependenceReport:
    sup_diff: float
    initial_diff: float
    ladder: dict[float, float] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return _ratio(self.sup_diff, self.initial_diff)

    @property
    def ladder_spread(self) -> Optional[float]:
        """Largest over smallest ratio on the epsilon ladder."""
        if len(self.ladder) < 2:
            return None
        vals = list(self.ladder.values())
        return _ratio(max(vals), min(vals))

    def summary(self) -> dict:
        out = {"sup_diff": self.sup_diff, "initial_diff": self.initial_diff, "ratio": self.ratio,
               "finite": bool(np.isfinite(self.ratio))}
        if self.ladder:
            out["ladder"] = {repr(e): r for e, r in sorted(self.ladder.items())}
            out["ladder_spread"] = self.ladder_spread
        return out

    def table(self):
        if self.ladder:
            return ["epsilon", "ratio"], sorted(self.ladder.items())
        return ["initial_diff", "sup_diff", "ratio"], [(self.initial_diff, self.sup_diff, self.ratio)]


def _sup_difference(u0: ModalState, v0: ModalState, t_end: float, system: GalerkinSystem,
                    config: SolverConfig):
    d0 = float(np.sqrt(h_norm_sq(u0.a - v0.a, u0.b - v0.b, system.spec)))
    if d0 == 0.0:
        raise ValueError("initial data coincide; the dependence ratio is undefined")
    tu, tv = integrate_pair(u0, v0, t_end, config, system)
    diff = np.sqrt(h_norm_sq(tu.a - tv.a, tu.b - tv.b, system.spec))
    return float(np.max(diff)), d0


def dependence_report(u0: ModalState, v0: ModalState, t_end: float, system: GalerkinSystem,
                      config: SolverConfig, epsilons: Optional[Sequence[float]] = None
                      ) -> DependenceReport:
    """``sup_t ||xi_u - xi_v||_H`` relative to the initial distance.

    With ``epsilons`` the perturbation direction ``v0 - u0`` is rescaled to
    each phase-space size ``eps`` and the ratio tabulated.
    """
    sup, d0 = _sup_difference(u0, v0, t_end, system, config)
    rep = DependenceReport(sup_diff=sup, initial_diff=d0)
    if epsilons:
        da = (v0.a - u0.a) / d0
        db = (v0.b - u0.b) / d0
        for eps in epsilons:
            if not eps > 0:
                raise ValueError("epsilons must be positive")
            ve = ModalState(u0.a + eps * da, u0.b + eps * db, u0.t)
            s_e, d_e = _sup_difference(u0, ve, t_end, system, config)
            rep.ladder[float(eps)] = s_e / d_e
    return rep


# --------------------------------------------------------------------------
# absorbing ball


@dataclass
class AbsorbReport:
    initial_norms: np.ndarray
    radii: np.ndarray
    entry_times: np.ndarray      # (members, radii), inf when never entered
    exited: np.ndarray           # (members, radii), left the ball after entering
    sup_after_entry: np.ndarray  # (members, radii), nan when never entered
    dissipative: bool
    t_end: float

    @property
    def R0(self) -> float:
        """Smallest radius entered and kept by every member; inf if none."""
        ok = np.all(np.isfinite(self.entry_times) & ~self.exited, axis=0)
        return float(self.radii[ok].min()) if np.any(ok) else math.inf

    def entry_trend(self, radius: float) -> Optional[float]:
        """Spearman-type rank correlation of entry time with initial norm."""
        j = int(np.searchsorted(self.radii, radius))
        times = self.entry_times[:, j]
        if not np.all(np.isfinite(times)) or np.ptp(times) == 0:
            return None
        rx = np.argsort(np.argsort(self.initial_norms))
        ry = np.argsort(np.argsort(times))
        return float(np.corrcoef(rx, ry)[0, 1])

    def summary(self) -> dict:
        r0 = self.R0
        return {"R0": r0, "finite": bool(np.isfinite(r0)), "dissipative": self.dissipative,
                "members": int(len(self.initial_norms)), "t_end": self.t_end,
                "entry_trend": self.entry_trend(r0) if np.isfinite(r0) else None,
                "censored": int(np.sum(~np.isfinite(self.entry_times)))}

    def table(self):
        rows = []
        for i, n0 in enumerate(self.initial_norms):
            for j, R in enumerate(self.radii):
                rows.append((i, n0, R, self.entry_times[i, j], int(self.exited[i, j]),
                             self.sup_after_entry[i, j]))
        return ["member", "initial_norm", "R", "entry_time", "exited", "sup_after_entry"], rows


def ensemble_states(spec: Spectrum, size: int, norm_range: tuple[float, float], seed: int,
                    r: float = 1.5) -> list[ModalState]:
    """``size`` random states with phase-space norms spread over ``norm_range``."""
    lo, hi = norm_range
    if not 0 <= lo <= hi:
        raise ValueError(f"bad norm range {norm_range}")
    rng = np.random.default_rng(seed)
    norms = rng.uniform(lo, hi, size)
    return [random_state(spec, rng, float(n), r) for n in norms]


def absorb_scan(trajs: Sequence[Trajectory], spec: Spectrum, radii: Sequence[float],
                dissipative: bool = True) -> AbsorbReport:
    radii = np.unique(np.asarray(radii, dtype=float))
    if radii.size == 0 or not np.all(radii > 0):
        raise ValueError("radii must be positive and non-empty")
    m, k = len(trajs), len(radii)
    entry = np.full((m, k), math.inf)
    exited = np.zeros((m, k), dtype=bool)
    sup_after = np.full((m, k), math.nan)
    init = np.empty(m)
    for i, tr in enumerate(trajs):
        norms = _norm_series(tr, spec)
        init[i] = norms[0]
        for j, R in enumerate(radii):
            inside = norms <= R
            if np.any(inside):
                first = int(np.argmax(inside))
                entry[i, j] = tr.t[first]
                sup_after[i, j] = float(norms[first:].max())
                exited[i, j] = not bool(np.all(inside[first:]))
    return AbsorbReport(initial_norms=init, radii=radii, entry_times=entry, exited=exited,
                        sup_after_entry=sup_after, dissipative=dissipative,
                        t_end=float(max(tr.t[-1] for tr in trajs)) if trajs else 0.0)


def absorb_experiment(ctx: ModelContext, n_modes: int, size: int,
                      norm_range: tuple[float, float], radii: Sequence[float], t_end: float,
                      seed: int = 0, states: Optional[Sequence[ModalState]] = None
                      ) -> AbsorbReport:
    """Run an ensemble and record entry into each ball ``||.||_H <= R``.

    A non-dissipative ``f`` is flagged in the report rather than refused.
    """
    sys_ = ctx.system(n_modes)
    ok = check_assumptions(ctx.f, sys_.spec.lambda1, ctx.domain.volume).dissipativity_ok
    if states is None:
        states = ensemble_states(sys_.spec, size, norm_range, seed)
    trajs = [integrate(s, t_end, ctx.solver, sys_) for s in states]
    return absorb_scan(trajs, sys_.spec, radii, dissipative=ok)


# --------------------------------------------------------------------------
# spectral tails


@dataclass
class TailReport:
    s: float
    t: np.ndarray
    m_list: np.ndarray
    tails: np.ndarray        # (len(m_list), samples)
    epsilon: float
    t0: Optional[float]
    certificate: Optional[tuple[int, float]]
    frontier: dict[int, float]

    def summary(self) -> dict:
        return {
            "s": self.s,
            "epsilon": self.epsilon,
            "certified": self.certificate is not None,
            "m0": self.certificate[0] if self.certificate else None,
            "t0": self.certificate[1] if self.certificate else None,
            "frontier": {str(m): v for m, v in sorted(self.frontier.items())},
        }

    def table(self):
        rows = []
        for i, m in enumerate(self.m_list):
            for j, t in enumerate(self.t):
                rows.append((int(m), t, self.tails[i, j]))
        return ["m", "t", "tail_hs_norm"], rows


def tail_norms(a, b, spec: Spectrum, s: float) -> np.ndarray:
    """``||Q_m (u, u_t)||_{H_s}`` for every ``m = 0..N`` (last axis).

    Built as a reverse cumulative sum of nonnegative per-mode terms, so the
    result is nonincreasing in ``m`` exactly, not just up to round-off.
    """
    a, b = spec.check(a), spec.check(b)
    w = spec.lam ** (1.0 + s / 2.0) * a * a + spec.lam ** (s / 2.0) * b * b
    rev = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    zero = np.zeros(w.shape[:-1] + (1,))
    return np.sqrt(np.concatenate([rev, zero], axis=-1))


def tail_report(traj: Trajectory, spec: Spectrum, s: float, m_list: Sequence[int],
                epsilon: float, t0: Optional[float] = None) -> TailReport:
    """Tail norms on the ``(m, t)`` grid and a certificate ``(m0, t0)``.

    The certificate is the smallest ``m`` in ``m_list`` whose tail stays at
    or below ``epsilon`` at every sample in ``[t0, T]``. If ``t0`` is not
    given, the earliest sample time that works for that ``m`` is reported.
    ``frontier[m]`` is the largest tail over the window (over all samples
    when ``t0`` is not given).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    m_arr = np.asarray(sorted(set(int(m) for m in m_list)), dtype=int)
    if m_arr.size == 0 or m_arr[0] < 0 or m_arr[-1] > spec.count:
        raise ValueError(f"m_list must lie in [0, {spec.count}]")
    all_tails = tail_norms(traj.a, traj.b, spec, s)        # (samples, N+1)
    tails = all_tails[:, m_arr].T                           # (len(m), samples)
    window = traj.t >= t0 if t0 is not None else np.ones(len(traj.t), dtype=bool)
    if not np.any(window):
        raise ValueError(f"no samples at or after t0 = {t0}")
    frontier = {int(m): float(tails[i, window].max()) for i, m in enumerate(m_arr)}
    cert = None
    for i, m in enumerate(m_arr):
        bad = tails[i] > epsilon
        if t0 is not None:
            if not np.any(bad[window]):
                cert = (int(m), float(t0))
                break
        else:
            # earliest sample after the last violation
            if not bad[-1]:
                last_bad = np.flatnonzero(bad)
                k = int(last_bad[-1]) + 1 if last_bad.size else 0
                cert = (int(m), float(traj.t[k]))
                break
    return TailReport(s=s, t=traj.t, m_list=m_arr, tails=tails, epsilon=float(epsilon), t0=t0,
                      certificate=cert, frontier=frontier)


# --------------------------------------------------------------------------
# energy decay


@dataclass
class DecayReport:
    t: np.ndarray
    E: np.ndarray
    monotone: bool
    tolerance: float
    ratio: float
    theta: float
    lambda1: float
    single_point: Optional[bool]

    def summary(self) -> dict:
        return {"monotone": self.monotone, "tolerance": self.tolerance, "ratio": self.ratio,
                "E0": float(self.E[0]), "E_final": float(self.E[-1]), "theta": self.theta,
                "lambda1": self.lambda1, "single_point_attractor": self.single_point}

    def table(self):
        return ["t", "E"], list(zip(self.t, self.E))


def decay_report(traj: Trajectory, system: GalerkinSystem,
                 tolerance: Optional[float] = None) -> DecayReport:
    """Energy series, its monotonicity and the final-to-initial ratio.

    Monotonicity allows increases up to ``tolerance`` (default: the audit
    tolerance of the run). ``single_point`` is set when ``f`` passes the
    assumption check: it is True when the sign conditions on ``F`` and
    ``f(u) u`` force the zero state to be the whole attractor.
    """
    E = system.energy(traj.a, traj.b)
    tol = audit_tolerance(traj, system) if tolerance is None else float(tolerance)
    monotone = bool(np.all(np.diff(E) <= tol))
    lam1 = system.spec.lambda1
    theta = decay_theta(system.f)
    single = None
    if check_assumptions(system.f, lam1, system.spec.domain.volume).ok:
        single = bool(theta < lam1)
    return DecayReport(t=traj.t, E=E, monotone=monotone, tolerance=tol,
                       ratio=_ratio(float(E[-1]), float(E[0])), theta=theta, lambda1=lam1,
                       single_point=single)


# --------------------------------------------------------------------------
# truncation refinement


def galerkin_refinement(ctx: ModelContext, data: InitialData, n_list: Sequence[int],
                        t_end: float) -> dict[int, float]:
    """``e_N = ||xi^N(t_end) - xi^{2N}(t_end)||_H`` for each ``N`` in ``n_list``."""
    finals: dict[int, ModalState] = {}
    for n in sorted({int(n) for n in n_list} | {2 * int(n) for n in n_list}):
        finals[n] = ctx.run(data, n, t_end).final
    out = {}
    for n in sorted(int(n) for n in n_list):
        coarse = finals[n].padded(2 * n)
        fine = finals[2 * n]
        spec = ctx.system(2 * n).spec
        out[n] = float(np.sqrt(h_norm_sq(coarse.a - fine.a, coarse.b - fine.b, spec)))
    return out


def audit(traj: Trajectory, system: GalerkinSystem) -> dict:
    res, worst = energy_residual(traj, system)
    tol = audit_tolerance(traj, system)
    return {"max_residual": worst, "tolerance": tol, "passed": worst <= tol}

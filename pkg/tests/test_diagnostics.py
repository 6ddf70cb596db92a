import math

import numpy as np
import pytest

from degenbeam import diagnostics as dg
from degenbeam.galerkin import InitialData, ModalState, project_initial
from degenbeam.integrator import SolverConfig, integrate
from degenbeam.model import ModelParams, Nonlinearity
from degenbeam.spectral import DomainSpec, tail_project, hs_norm_sq

from conftest import make_system

LINE = DomainSpec(1, (math.pi,))


def ctx_for(kappa=1.0, gamma=1.0, q=1.0, coeffs=(0, 0, 0, 1), **solver):
    return dg.ModelContext(LINE, ModelParams(kappa, gamma, q), Nonlinearity(coeffs),
                           SolverConfig(**solver))


BENCH = InitialData("random", r=1.5, seed=3, amp_v=1.0, h_norm=1.0)


class TestContext:
    def test_system_is_cached(self):
        ctx = ctx_for()
        assert ctx.system(8) is ctx.system(8)

    def test_run(self):
        tr = ctx_for().run(BENCH, 8, 0.5)
        assert tr.t[-1] == 0.5 and tr.a.shape[1] == 8


class TestSmoothing:
    def test_zero_data(self):
        s = make_system(8)
        tr = integrate(ModalState.zeros(8), 1.0, SolverConfig(), s)
        rep = dg.smoothing_report(tr, s.spec, s.params, 0.1)
        assert np.all(rep.series == 0) and rep.sup == 0

    def test_single_mode_finite(self):
        s = make_system(8, q=2.0)
        x0 = ModalState(0.1 * np.eye(8)[1], np.zeros(8))
        rep = dg.smoothing_report(integrate(x0, 2.0, SolverConfig(), s), s.spec, s.params, 0.1)
        assert rep.s == 0.5 and np.isfinite(rep.sup) and rep.sup > 0

    def test_series_definition(self):
        s = make_system(8, q=2.0)
        tr = integrate(project_initial(BENCH, s.spec), 1.0, SolverConfig(), s)
        rep = dg.smoothing_report(tr, s.spec, s.params, 0.2)
        i = len(tr) // 2
        expected = tr.t[i] ** 1.5 * hs_norm_sq(tr.a[i], tr.b[i], s.spec, 0.5)
        assert rep.series[i - 1] == pytest.approx(expected, rel=1e-14)  # t = 0 dropped
        assert rep.t_sup >= 0.2

    def test_thinning_invariance(self):
        s = make_system(8)
        tr = integrate(project_initial(BENCH, s.spec), 2.0, SolverConfig(), s)
        full = dg.smoothing_report(tr, s.spec, s.params, 0.1)
        thin = dg.smoothing_report(tr.thinned(4), s.spec, s.params, 0.1)
        idx = np.searchsorted(full.t, thin.t)
        np.testing.assert_array_equal(full.series[idx], thin.series)
        assert thin.sup <= full.sup

    def test_rejects_bad_window(self):
        s = make_system(4)
        tr = integrate(ModalState.zeros(4), 1.0, SolverConfig(), s)
        with pytest.raises(ValueError):
            dg.smoothing_report(tr, s.spec, s.params, 0.0)
        with pytest.raises(ValueError):
            dg.smoothing_report(tr, s.spec, s.params, 2.0)

    def test_refinement(self):
        rep = dg.smoothing_refinement(ctx_for(), InitialData("rough", r=0.51), [8, 16], 1.0, 0.1)
        assert set(rep.refinement) == {8, 16}
        assert rep.refinement_ratio >= 1.0
        assert "refinement_ratio" in rep.summary()


class TestLowerBound:
    def test_zero_flagged(self):
        s = make_system(4)
        rep = dg.lower_bound_report(integrate(ModalState.zeros(4), 1.0, SolverConfig(), s), s.spec)
        assert rep.zero_data and rep.min == 0.0

    def test_conservative_constant(self):
        s = make_system(16, kappa=0.0, gamma=0.0, coeffs=(0,))
        cfg = SolverConfig()
        tr = integrate(project_initial(BENCH, s.spec), 5.0, cfg, s)
        rep = dg.lower_bound_report(tr, s.spec)
        E0 = float(s.energy(tr.a[0], tr.b[0]))
        assert np.all(np.abs(rep.norms - math.sqrt(2 * E0)) <= 10 * cfg.rtol)

    def test_full_model_positive_and_decaying(self):
        s = make_system(16)
        rep = dg.lower_bound_report(integrate(project_initial(BENCH, s.spec), 5.0, SolverConfig(), s),
                                    s.spec)
        assert 0 < rep.min < rep.initial and rep.final < rep.initial
        assert rep.summary()["positive"]


class TestDependence:
    def test_coincident_rejected(self):
        s = make_system(4)
        x0 = project_initial(BENCH, s.spec)
        with pytest.raises(ValueError):
            dg.dependence_report(x0, x0, 1.0, s, SolverConfig())

    def test_linear_conservative_isometry(self):
        s = make_system(12, kappa=0.0, gamma=0.0, coeffs=(0,))
        cfg = SolverConfig()
        u0 = project_initial(BENCH, s.spec)
        v0 = ModalState(u0.a + 1e-3 * np.eye(12)[2], u0.b)
        rep = dg.dependence_report(u0, v0, 5.0, s, cfg, epsilons=[1e-3, 5e-4])
        assert abs(rep.ratio - 1.0) <= 10 * cfg.rtol
        r1, r2 = rep.ladder[1e-3], rep.ladder[5e-4]
        assert abs(r1 / r2 - 1) <= 0.01

    def test_linear_damped_ratio_bounded(self):
        # f = 0, kappa = 0 with damping: the difference cannot grow beyond
        # the propagator norm of the undamped problem
        s = make_system(8, kappa=0.0, coeffs=(0,))
        u0 = project_initial(BENCH, s.spec)
        v0 = ModalState(u0.a + 1e-5 * np.eye(8)[0], u0.b)
        rep = dg.dependence_report(u0, v0, 3.0, s, SolverConfig())
        assert np.isfinite(rep.ratio) and rep.ratio >= 1.0 - 1e-9

    def test_full_model_ladder(self):
        s = make_system(16)
        u0 = project_initial(BENCH, s.spec)
        v0 = ModalState(u0.a + 1e-4 * np.eye(16)[0], u0.b)
        rep = dg.dependence_report(u0, v0, 3.0, s, SolverConfig(), epsilons=[1e-4, 1e-5, 1e-6])
        assert rep.ladder_spread <= 1.2
        assert all(np.isfinite(v) for v in rep.ladder.values())

    def test_bad_epsilon(self):
        s = make_system(4)
        u0 = project_initial(BENCH, s.spec)
        v0 = ModalState(u0.a + 1e-3, u0.b)
        with pytest.raises(ValueError):
            dg.dependence_report(u0, v0, 0.5, s, SolverConfig(), epsilons=[0.0])


class TestAbsorb:
    def test_zero_state_enters_immediately(self):
        rep = dg.absorb_experiment(ctx_for(), 8, 1, (0, 0), [0.1, 1.0], 2.0,
                                   states=[ModalState.zeros(8)])
        assert np.all(rep.entry_times == 0) and rep.R0 == 0.1

    def test_no_source_stays_in_initial_ball(self):
        ctx = ctx_for(coeffs=(0,))
        sys_ = ctx.system(8)
        states = dg.ensemble_states(sys_.spec, 3, (1.0, 3.0), seed=5)
        norms = [math.sqrt(sys_.h_norm_sq(s.a, s.b)) for s in states]
        # with kappa = 0 the norm is bounded by the initial value exactly
        ctx0 = ctx_for(kappa=0.0, coeffs=(0,))
        for st, n0 in zip(states, norms):
            rep = dg.absorb_experiment(ctx0, 8, 1, (0, 0), [n0 * (1 + 1e-9)], 5.0, states=[st])
            assert rep.entry_times[0, 0] == 0.0 and not rep.exited[0, 0]

    def test_censored_and_flagged(self):
        ctx = ctx_for(coeffs=(0, -2.0))
        rep = dg.absorb_experiment(ctx, 4, 2, (1.0, 2.0), [1e-6], 0.5, seed=1)
        assert not rep.dissipative
        assert np.all(np.isinf(rep.entry_times)) and rep.R0 == math.inf
        assert rep.summary()["censored"] == 2

    def test_ensemble_norms_in_range(self):
        sys_ = ctx_for().system(16)
        states = dg.ensemble_states(sys_.spec, 10, (1.0, 10.0), seed=0)
        norms = [math.sqrt(sys_.h_norm_sq(s.a, s.b)) for s in states]
        assert all(1.0 <= n <= 10.0 for n in norms)
        again = dg.ensemble_states(sys_.spec, 10, (1.0, 10.0), seed=0)
        np.testing.assert_array_equal(states[3].a, again[3].a)

    def test_exit_detected(self):
        # a conservative oscillator moves between kinetic and potential
        # energy; with kappa > 0 the phase-space norm oscillates
        ctx = ctx_for(kappa=3.0, gamma=0.0, coeffs=(0,))
        st = ModalState([1.0, 0, 0, 0], [0, 0, 0, 0])
        rep = dg.absorb_experiment(ctx, 4, 1, (0, 0), [1.0 + 1e-9], 5.0, states=[st])
        assert rep.entry_times[0, 0] == 0.0 and rep.exited[0, 0]
        assert rep.R0 == math.inf


class TestTail:
    def test_support_gives_zero_tail(self):
        s = make_system(8, coeffs=(0,))
        x0 = ModalState(np.r_[1.0, 0.5, 0.2, np.zeros(5)], np.zeros(8))
        tr = integrate(x0, 2.0, SolverConfig(), s)
        rep = dg.tail_report(tr, s.spec, 1.0, range(9), 1e-12)
        assert rep.certificate == (3, 0.0)
        assert np.all(rep.tails[3:] == 0)

    def test_matches_projector(self, rng):
        s = make_system(10)
        a, b = rng.standard_normal((2, 10))
        tails = dg.tail_norms(a, b, s.spec, 0.5)
        for m in range(11):
            ref = math.sqrt(hs_norm_sq(tail_project(a, m), tail_project(b, m), s.spec, 0.5))
            assert tails[m] == pytest.approx(ref, rel=1e-13, abs=1e-300)

    def test_monotone_exactly(self, rng):
        s = make_system(32)
        tr = integrate(project_initial(BENCH, s.spec), 1.0, SolverConfig(), s)
        rep = dg.tail_report(tr, s.spec, 1.0, range(33), 1e-3)
        assert np.all(np.diff(rep.tails, axis=0) <= 0)

    def test_fixed_t0_and_relaxed_epsilon(self):
        s = make_system(32)
        tr = integrate(project_initial(InitialData("rough", r=0.51), s.spec), 2.0, SolverConfig(), s)
        tight = dg.tail_report(tr, s.spec, 1.0, range(33), 1e-2, t0=0.5)
        loose = dg.tail_report(tr, s.spec, 1.0, range(33), 1e-1, t0=0.5)
        assert tight.certificate is not None and loose.certificate is not None
        assert loose.certificate[0] <= tight.certificate[0]

    def test_frontier_when_not_certified(self):
        s = make_system(8)
        tr = integrate(project_initial(BENCH, s.spec), 0.5, SolverConfig(), s)
        rep = dg.tail_report(tr, s.spec, 1.0, [0, 1], 1e-30)
        assert rep.certificate is None and set(rep.frontier) == {0, 1}

    def test_bad_m_list(self):
        s = make_system(4)
        tr = integrate(ModalState.zeros(4), 0.5, SolverConfig(), s)
        with pytest.raises(ValueError):
            dg.tail_report(tr, s.spec, 1.0, [5], 0.1)


class TestDecay:
    def test_no_source_decays(self):
        s = make_system(8, coeffs=(0,))
        tr = integrate(project_initial(BENCH, s.spec), 3.0, SolverConfig(), s)
        rep = dg.decay_report(tr, s)
        assert rep.monotone and rep.ratio < 1.0
        assert rep.single_point is True

    def test_weak_damping_ratio_near_one(self):
        s = make_system(8, gamma=1e-6, coeffs=(0,))
        tr = integrate(project_initial(BENCH, s.spec), 3.0, SolverConfig(), s)
        assert dg.decay_report(tr, s).ratio == pytest.approx(1.0, abs=1e-4)

    def test_verdicts(self):
        s = make_system(8, coeffs=(0, 1, -12, 1))
        tr = integrate(project_initial(BENCH, s.spec), 0.2, SolverConfig(), s)
        assert dg.decay_report(tr, s).single_point is False  # theta exceeds lambda1
        s_bad = make_system(4, coeffs=(0, -2.0))
        tr = integrate(ModalState.zeros(4), 0.2, SolverConfig(), s_bad)
        assert dg.decay_report(tr, s_bad).single_point is None


class TestRefinement:
    def test_errors_shrink(self):
        errs = dg.galerkin_refinement(ctx_for(), InitialData("decay", r=3.0, amp_v=0.5), [4, 8], 0.5)
        assert errs[8] < errs[4]


def test_reports_are_deterministic():
    s = make_system(8)
    x0 = project_initial(BENCH, s.spec)
    r1 = dg.tail_report(integrate(x0, 1.0, SolverConfig(), s), s.spec, 1.0, range(9), 1e-2)
    r2 = dg.tail_report(integrate(x0, 1.0, SolverConfig(), s), s.spec, 1.0, range(9), 1e-2)
    np.testing.assert_array_equal(r1.tails, r2.tails)
    assert r1.summary() == r2.summary()


def test_audit_helper():
    s = make_system(8)
    out = dg.audit(integrate(project_initial(BENCH, s.spec), 1.0, SolverConfig(), s), s)
    assert out["passed"] and out["max_residual"] <= out["tolerance"]

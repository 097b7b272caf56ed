import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracepi.epimodels import (Model, ModelParams, NoEndemicEquilibriumError, beta_forcing,
                               endemic_equilibrium, equilibrium, lambda_forcing,
                               seirs_controlled_rhs, seirs_rhs, simulate, sirs_rhs)
from fracepi.frackernel import Grid, ParameterDomainError
from oracles import damped_newton

SEIRS = ModelParams.seirs_default()
SIRS = ModelParams.sirs_default()
REFERENCE_EQ = (0.4081, 0.0110, 0.0278, 0.5531)

times = st.floats(-20, 20, allow_nan=False)
props = st.floats(0, 1, allow_nan=False)


class TestParams:
    @pytest.mark.parametrize("field,value", [("mu", -1.0), ("b1", 1.0), ("c1", -0.1),
                                             ("alpha", 1.2), ("alpha", 0.0), ("phi", math.inf)])
    def test_domain(self, field, value):
        with pytest.raises(ParameterDomainError):
            SEIRS.replace(**{field: value})

    def test_r0(self):
        assert SEIRS.r0 == pytest.approx(2.4503, abs=1e-4)


class TestForcing:
    def test_beta_closed_form(self):
        # cos(7pi/5) = -(sqrt5 - 1)/4
        expected = 74.2 * (1 - 0.14 * (math.sqrt(5) - 1) / 4)
        assert beta_forcing(0.0, SIRS) == pytest.approx(expected, rel=1e-14)
        assert beta_forcing(0.0, SIRS) == pytest.approx(70.98993146243305, rel=1e-14)

    def test_lambda_average_at_quarter_phase(self):
        assert lambda_forcing(0.0, SEIRS.replace(phi=math.pi / 2)) == pytest.approx(SEIRS.mu, abs=1e-18)

    def test_lambda_value(self):
        assert lambda_forcing(0.25, SEIRS) == pytest.approx(0.013126979567802990, rel=1e-14)

    @given(t=times)
    def test_c1_zero_is_constant(self, t):
        assert lambda_forcing(t, SEIRS.replace(c1=0.0)) == SEIRS.mu

    @given(t=times)
    def test_periodic(self, t):
        assert beta_forcing(t + 1, SEIRS) == pytest.approx(beta_forcing(t, SEIRS), rel=1e-12)
        assert lambda_forcing(t + 1, SEIRS) == pytest.approx(lambda_forcing(t, SEIRS), rel=1e-12)

    def test_vectorised(self):
        t = np.linspace(0, 1, 5)
        assert beta_forcing(t, SEIRS).shape == (5,)


class TestRightHandSides:
    def test_sirs_disease_free(self):
        np.testing.assert_array_equal(sirs_rhs(0.3, (1.0, 0.0, 0.0), SIRS), 0.0)

    def test_sirs_value(self):
        np.testing.assert_allclose(sirs_rhs(0.0, (0.9, 0.05, 0.05), SIRS),
                                   [-3.1034169158094871, 1.3939819158094871, 1.709435], rtol=1e-13)

    def test_seirs_value(self):
        np.testing.assert_allclose(
            seirs_rhs(0.0, REFERENCE_EQ, SEIRS),
            [0.053059279351007823, -0.052508730997202097, -0.00011414, -0.00103003],
            rtol=1e-12)

    @given(t=times, y=st.tuples(props, props, props))
    def test_sirs_sum_identity(self, t, y):
        lhs = math.fsum(sirs_rhs(t, y, SIRS))
        assert lhs == pytest.approx(SIRS.mu * (1 - sum(y)), abs=1e-12 * (1 + SIRS.b0))

    @given(t=times, S=props, R=props)
    def test_seirs_without_infection_keeps_e_and_i(self, t, S, R):
        d = seirs_rhs(t, (S, 0.0, 0.0, R), SEIRS)
        assert d[1] == 0.0 and d[2] == 0.0

    def test_control_zero_matches_uncontrolled(self):
        np.testing.assert_array_equal(seirs_controlled_rhs(0.7, REFERENCE_EQ, 0.0, SEIRS),
                                      seirs_rhs(0.7, REFERENCE_EQ, SEIRS))

    def test_full_treatment_moves_infectious(self):
        d0 = seirs_controlled_rhs(0.0, REFERENCE_EQ, 0.0, SEIRS)
        d1 = seirs_controlled_rhs(0.0, REFERENCE_EQ, 1.0, SEIRS)
        assert d0[2] - d1[2] == pytest.approx(0.0278, abs=1e-15)
        assert d1[3] - d0[3] == pytest.approx(0.0278, abs=1e-15)
        np.testing.assert_array_equal(d0[:2], d1[:2])

    @given(t=times, y=st.tuples(props, props, props, props), T=st.floats(0, 1))
    def test_mass_neutral_treatment(self, t, y, T):
        a = math.fsum(seirs_controlled_rhs(t, y, T, SEIRS))
        b = math.fsum(seirs_rhs(t, y, SEIRS))
        assert a == pytest.approx(b, abs=1e-12)


class TestEquilibrium:
    def test_reference_state(self):
        eq = endemic_equilibrium(SEIRS)
        np.testing.assert_allclose(eq, REFERENCE_EQ, atol=5e-5)

    def test_closed_form_susceptible(self):
        p = SEIRS
        assert endemic_equilibrium(p).S == (p.mu + p.epsilon) * (p.mu + p.nu) / (p.epsilon * p.b0)

    def test_residual(self):
        r = seirs_rhs(0.37, endemic_equilibrium(SEIRS), SEIRS.unforced())
        assert np.max(np.abs(r)) <= 1e-10

    def test_newton_oracle(self):
        p = SEIRS.unforced()
        root = damped_newton(lambda y: seirs_rhs(0.0, y, p), [0.5, 0.02, 0.02, 0.46])
        np.testing.assert_allclose(endemic_equilibrium(SEIRS), root, atol=1e-8)

    def test_threshold(self):
        p = SEIRS
        b0 = (p.mu + p.epsilon) * (p.mu + p.nu) / p.epsilon
        q = p.replace(b0=b0)
        with pytest.raises(NoEndemicEquilibriumError):
            endemic_equilibrium(q)
        assert endemic_equilibrium(q, disease_free=True) == (1.0, 0.0, 0.0, 0.0)

    def test_no_turnover(self):
        with pytest.raises(NoEndemicEquilibriumError):
            endemic_equilibrium(SEIRS.replace(mu=0.0))
        with pytest.raises(NoEndemicEquilibriumError):
            equilibrium("sirs", SIRS.replace(mu=0.0))

    @settings(max_examples=50)
    @given(b0=st.floats(40, 400), nu=st.floats(5, 60), gamma=st.floats(0.1, 10), eps=st.floats(10, 200))
    def test_residual_property(self, b0, nu, gamma, eps):
        p = SEIRS.replace(b0=b0, nu=nu, gamma=gamma, epsilon=eps)
        if p.r0 <= 1.01:
            return
        eq = endemic_equilibrium(p)
        assert min(eq) > 0
        assert np.max(np.abs(seirs_rhs(0.0, eq, p.unforced()))) <= 1e-10

    def test_sirs_equilibrium_residual(self):
        eq = equilibrium("sirs", SIRS)
        assert np.max(np.abs(sirs_rhs(0.0, eq, SIRS.unforced()))) <= 1e-10


class TestSimulate:
    def test_fixed_point_persists(self):
        p = SEIRS.unforced().replace(alpha=0.9)
        eq = endemic_equilibrium(p)
        tr = simulate(Model.SEIRS, p, eq, Grid(0, 5, 1000))
        assert np.max(np.abs(tr.values - np.asarray(eq))) <= 1e-6

    def test_sirs_mass(self):
        tr = simulate("sirs", SIRS.replace(alpha=1.0), (0.9, 0.05, 0.05), Grid(0, 5, 1000))
        assert np.max(np.abs(tr.values.sum(axis=1) - 1)) <= 1e-8

    @pytest.mark.parametrize("y0", [REFERENCE_EQ, (0.99, 0.0, 0.01, 0.0), (0.5, 0.1, 0.1, 0.3)])
    def test_positivity(self, y0):
        tr = simulate("seirs", SEIRS.replace(alpha=0.993), y0, Grid(0, 5, 1000))
        assert tr.values.min() >= -1e-9

    @settings(max_examples=25, deadline=None)
    @given(w=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda w: sum(w) > 0.1))
    def test_positivity_random_states(self, w):
        y0 = np.array(w) / sum(w)
        tr = simulate("seirs", SEIRS.replace(alpha=0.993), y0, Grid(0, 5, 1000))
        assert tr.values.min() >= -1e-9

    def test_annual_peaks(self):
        tr = simulate("seirs", SEIRS.replace(alpha=0.993), endemic_equilibrium(SEIRS),
                      Grid(0, 5, 1000))
        I = tr[2]
        peaks = [k for k in range(1, len(I) - 1) if I[k] > I[k - 1] and I[k] >= I[k + 1]]
        assert 4 <= len(peaks) <= 6
        gaps = np.diff(tr.times[peaks])
        # the first cycle is a transient away from the unforced fixed point
        assert 0.8 < gaps[0] < 1.2
        np.testing.assert_allclose(gaps[1:], 1.0, atol=0.02)

    def test_state_shape_checked(self):
        with pytest.raises(ParameterDomainError):
            simulate("seirs", SEIRS, (0.5, 0.5, 0.0), Grid(0, 1, 10))
        with pytest.raises(ParameterDomainError):
            simulate("sirs", SIRS, (1.2, -0.1, 0.0), Grid(0, 1, 10))

import numpy as np
import pytest

from cavitychaos.io import read_csv
from cavitychaos.lyapunov import (jacobian, lyapunov_spectrum, max_lyapunov)
from cavitychaos.model import (ControlParams, FockPairModel,
                               InitialPreparation, LadderModel,
                               RunningWaveBlochModel, SemiclassicalModel,
                               prepare_initial)

PARAMS = ControlParams(alpha=1e-3, delta=0.4, nbar=10)

CHAOTIC_Y0 = prepare_initial(
    InitialPreparation(x0=0.0, p0=50.0, z_in=0.99), PARAMS).as_array()


def central_fd_jacobian(model, y, h=1e-6):
    n = y.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (np.asarray(model.rhs(y + e)) -
                   np.asarray(model.rhs(y - e))) / (2 * h)
    return J


class TestJacobians:
    # a generic off-manifold point exercises every term of the Jacobian
    def probe(self, dim, seed=7):
        rng = np.random.default_rng(seed)
        y = rng.uniform(-1.0, 1.0, size=dim)
        y[0] = 0.9  # x
        y[1] = 37.0  # p
        return y

    @pytest.mark.parametrize("model", [
        SemiclassicalModel(PARAMS, N=11.0),
        FockPairModel(PARAMS),
        LadderModel(PARAMS, n_max=4),
        RunningWaveBlochModel(detuning=0.7, coupling=1.9),
    ], ids=lambda m: type(m).__name__)
    def test_matches_central_differences(self, model):
        y = self.probe(model.dim)
        J = jacobian(model, y)
        np.testing.assert_allclose(J, central_fd_jacobian(model, y),
                                   rtol=0, atol=5e-7)

    @pytest.mark.parametrize("model", [
        SemiclassicalModel(PARAMS, N=11.0),
        FockPairModel(PARAMS),
        LadderModel(PARAMS, n_max=4),
    ], ids=lambda m: type(m).__name__)
    def test_flow_is_volume_preserving(self, model):
        # the vector field is divergence-free, so trace J = 0 everywhere
        y = self.probe(model.dim, seed=11)
        assert abs(np.trace(jacobian(model, y))) < 1e-12


class TestMaxLyapunov:
    def test_linear_precession_gives_zero_exponent(self):
        model = RunningWaveBlochModel(detuning=1.0, coupling=1.5)
        res = max_lyapunov(model, np.array([0.0, 0.0, -1.0]), tau_total=2000.0)
        assert abs(res.lambda_max) < 1e-3

    def test_chaotic_regime_is_positive(self):
        res = max_lyapunov(FockPairModel(PARAMS), CHAOTIC_Y0,
                           tau_total=2000.0)
        assert res.lambda_max > 0.02

    def test_renorm_interval_invariance(self):
        kw = dict(tau_total=1500.0, rel_tol=1e-8, abs_tol=1e-10)
        a = max_lyapunov(FockPairModel(PARAMS), CHAOTIC_Y0,
                         renorm_interval=1.0, **kw)
        b = max_lyapunov(FockPairModel(PARAMS), CHAOTIC_Y0,
                         renorm_interval=2.0, **kw)
        assert a.lambda_max == pytest.approx(b.lambda_max, abs=0.02)

    def test_convergence_history_recorded(self):
        res = max_lyapunov(FockPairModel(PARAMS), CHAOTIC_Y0,
                           tau_total=500.0, record_every=50)
        taus = res.convergence[:, 0]
        assert taus[0] > 0 and taus[-1] == pytest.approx(500.0)
        assert np.all(np.diff(taus) > 0)
        assert res.uncertainty >= 0

    def test_csv_round_trip(self, tmp_path):
        res = max_lyapunov(FockPairModel(PARAMS), CHAOTIC_Y0,
                           tau_total=300.0, record_every=100)
        path = tmp_path / "lyap.csv"
        res.to_csv(path)
        _, columns, rows = read_csv(path)
        assert columns[0] == "tau"
        assert len(rows) == res.convergence.shape[0]


class TestSpectrum:
    def test_spectrum_sums_to_zero_and_is_sorted(self):
        res = lyapunov_spectrum(SemiclassicalModel(PARAMS, N=11.0),
                                CHAOTIC_Y0[:5], tau_total=2000.0)
        assert len(res.spectrum) == 5
        assert list(res.spectrum) == sorted(res.spectrum, reverse=True)
        # divergence-free flow: exponents must cancel
        assert abs(sum(res.spectrum)) < 5e-3
        assert res.spectrum[0] == pytest.approx(res.lambda_max)

    def test_leading_exponent_consistent_with_single_vector(self):
        spec = lyapunov_spectrum(FockPairModel(PARAMS), CHAOTIC_Y0,
                                 tau_total=1000.0, rel_tol=1e-8,
                                 abs_tol=1e-10)
        single = max_lyapunov(FockPairModel(PARAMS), CHAOTIC_Y0,
                              tau_total=1000.0, rel_tol=1e-8, abs_tol=1e-10)
        assert spec.spectrum[0] == pytest.approx(single.lambda_max, abs=0.03)

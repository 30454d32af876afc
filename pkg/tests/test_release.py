import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import i1e
from scipy.stats import ks_2samp

from gkpmod import hilbert, modular, release
from gkpmod.errors import RegimeError
from gkpmod.hilbert import FockSpace
from gkpmod.modular import AncillaPrep
from gkpmod.rng import substream

from conftest import mc_stderr

SQRT_PI = math.sqrt(math.pi)


class TestStepAmplitudes:
    def test_completeness(self):
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=5.0, steps=1000)
        amps = cfg.step_amplitudes(math.sqrt(3.0))
        total = float(np.sum(amps**2))
        assert total == pytest.approx(3.0 * (1 - math.exp(-5.0)), rel=0.01)

    def test_zero_time(self):
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=0.0)
        psi = hilbert.vacuum(FockSpace(60))
        rng = substream(1, "zero-time")
        out, post = release.release_shot(psi, AncillaPrep(math.sqrt(3.0)), cfg, rng)
        assert out.i_out == 0.0 and out.q_out == 0.0 and out.k_eff == 0.0
        assert abs(np.vdot(post.amplitudes, psi.amplitudes)) == pytest.approx(1.0, abs=1e-12)

    def test_regime_guard(self):
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=5.0, steps=3)
        with pytest.raises(RegimeError):
            cfg.step_amplitudes(1.0)


class TestMoments:
    def test_closed_form_long_time(self):
        prep = AncillaPrep(math.sqrt(3.0))
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=200.0, steps=20000)
        mean_k2, bound = release.release_moments(prep, cfg)
        assert mean_k2 == pytest.approx(48.0, rel=1e-6)
        assert bound == pytest.approx(
            1 / math.sqrt(4 * math.pi * math.sqrt(3) * 2), rel=1e-9)

    def test_zero_time_moment(self):
        prep = AncillaPrep(math.sqrt(3.0))
        assert release.release_moments(prep, release.ReleaseConfig(1.0, 0.0))[0] == 0.0

    def test_monte_carlo_matches(self, space300):
        prep = AncillaPrep(math.sqrt(3.0))
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=6.0)
        psi = hilbert.vacuum(space300)
        rng = substream(3, "release-moments")
        k2 = np.array([release.release_shot(psi, prep, cfg, rng)[0].k_eff ** 2
                       for _ in range(2500)])
        closed, _ = release.release_moments(prep, cfg)
        assert abs(k2.mean() - closed) < 3 * mc_stderr(k2)

    def test_keff_ensemble_bound(self, space300):
        prep = AncillaPrep(math.sqrt(3.0))
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=8.0)
        psi = hilbert.vacuum(space300)
        rng = substream(5, "release-bound")
        ks = np.array([release.release_shot(psi, prep, cfg, rng)[0].k_eff
                       for _ in range(1500)])
        bound = 2 * math.sqrt(3.0) * math.sqrt(1 + 3.0)
        assert ks.mean() < bound + 3 * mc_stderr(ks)


class TestEquivalenceWithDirect:
    def test_delta_q_distribution(self, space300):
        prep = AncillaPrep(math.sqrt(3.0))
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=12.0)
        psi = hilbert.vacuum(space300)
        rng = substream(7, "release-vs-direct")
        d_rel, d_dir = [], []
        for _ in range(500):
            _, post = release.release_shot(psi, prep, cfg, rng)
            d_rel.append(hilbert.effective_squeezing(post).delta_q)
            rec = modular.sample_outcome(psi, prep, rng)
            dpost, _ = modular.post_measurement_state(psi, prep, rec.beta)
            d_dir.append(hilbert.effective_squeezing(dpost).delta_q)
        res = ks_2samp(d_rel, d_dir)
        assert res.pvalue > 0.05

    def test_input_independence(self, space300):
        prep = AncillaPrep(math.sqrt(3.0))
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=6.0)
        vacuum = hilbert.vacuum(space300)
        squeezed = hilbert.make_squeezed_vacuum(2.5, space300)
        rng = substream(9, "release-lemma1")

        def moment(state):
            out, _ = release.release_shot(state, prep, cfg, rng)
            return out.i_out ** 2 + out.q_out ** 2

        m_vac = np.array([moment(vacuum) for _ in range(800)])
        m_sq = np.array([moment(squeezed) for _ in range(800)])
        err = math.hypot(mc_stderr(m_vac), mc_stderr(m_sq))
        assert abs(m_vac.mean() - m_sq.mean()) < 3 * err

    def test_mean_integrated_signal_for_localized_input(self, space300):
        # E[I + iQ] = √2·α·(1−e^{−κt})·e^{i2√π q0} for input localized at q0
        q0 = 0.4
        peak = hilbert.make_squeezed_vacuum(0.25, space300).amplitudes
        shifted = hilbert.displacement(space300, q0 / math.sqrt(2)) @ peak
        psi = hilbert.StateVector(shifted / np.linalg.norm(shifted), space300)
        prep = AncillaPrep(math.sqrt(3.0), counter_displacement_on=False)
        cfg = release.ReleaseConfig(kappa_open=1.0, t_meas=6.0)
        rng = substream(11, "release-mean")
        zs = []
        for _ in range(1200):
            out, _ = release.release_shot(psi, prep, cfg, rng)
            zs.append(out.i_out + 1j * out.q_out)
        zs = np.array(zs)
        # exact conditional mean: the finite peak width contracts the
        # rotation average by <e^{i2sqrt(pi)q}> over the input diagonal
        vals, vecs, _ = hilbert.position_eigensystem(space300)
        pk = np.abs(vecs.conj().T @ psi.amplitudes) ** 2
        rotation = complex(pk @ np.exp(1j * 2 * SQRT_PI * vals))
        assert abs(np.angle(rotation) - 2 * SQRT_PI * q0) < 0.02   # phase set by q0
        target = math.sqrt(2) * math.sqrt(3.0) * cfg.captured_fraction * rotation
        err = math.hypot(mc_stderr(zs.real), mc_stderr(zs.imag))
        assert abs(zs.mean() - target) < 4 * err


class TestBesselIdentity:
    @pytest.mark.parametrize("y", [0.0, 1.0, 2.5, 4.0])
    def test_first_order_integral(self, y):
        # 2∫ x² e^{−y²−x²} I₁(2xy) dx = y
        f = lambda x: 2 * x * x * math.exp(-((x - y) ** 2)) * i1e(2 * x * y)
        val = integrate.quad(f, 0, y + 9, limit=300)[0]
        assert val == pytest.approx(y, abs=1e-8)

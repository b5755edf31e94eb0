import numpy as np
import pytest

from obsreg.nse_solver import SolverConfig, beltrami_field, random_solenoidal_field, run
from obsreg.observers import NodalData, observe_modal, observe_nodal
from obsreg.regularity_monitor import (
    ObservationSeries,
    check,
    check_series,
    first_admissible,
    h_sweep,
    mh,
    mh_modal,
    mh_nodal,
    mh_series,
    modal_sweep,
    wh,
)
from obsreg.spectral_core import SpectralField, TorusConfig, norms
from obsreg.tetra_interpolant import default_basis, h1_data_norms


@pytest.fixture(scope="module")
def decay_traj():
    cfg = TorusConfig(1.0, 16)
    return run(beltrami_field(cfg, m=1, amplitude=0.01), SolverConfig(0.1, 1e-2, 0.2), snapshot_every=5)


class TestSeries:
    def test_validation(self, torus16):
        d = observe_modal(SpectralField.zeros(torus16), 5)
        with pytest.raises(ValueError, match="increasing"):
            ObservationSeries("modal", 0.0, 1.0, ((0.5, d), (0.5, d)))
        with pytest.raises(ValueError, match="window"):
            ObservationSeries("modal", 0.0, 1.0, ((2.0, d),))
        with pytest.raises(ValueError, match="holds"):
            ObservationSeries("nodal", 0.0, 1.0, ((0.0, d),))
        with pytest.raises(ValueError, match="empty"):
            mh_modal(ObservationSeries("modal", 0.0, 1.0, ()))

    def test_kind_mismatch(self, decay_traj):
        s = ObservationSeries.from_trajectory(decay_traj, "nodal", 4)
        with pytest.raises(ValueError, match="modal"):
            mh_modal(s)


class TestModalNorm:
    def test_zero(self, torus16):
        s = ObservationSeries("modal", 0.0, 0.0, ((0.0, observe_modal(SpectralField.zeros(torus16), 30)),))
        assert mh_modal(s) == 0.0

    def test_single_pair(self, torus16):
        a = 0.3 + 0.4j
        c = np.zeros((3, 16, 16, 16), complex)
        c[2, 1, 1, 0] = a
        c[2, -1, -1, 0] = np.conj(a)
        u = SpectralField(c, torus16)
        s = ObservationSeries("modal", 0.0, 1.0, ((0.0, observe_modal(u, 30)), (1.0, observe_modal(u, 30))))
        expected = 2 * torus16.L**3 * 2.0 * abs(a) ** 2
        assert mh_modal(s) == pytest.approx(expected, rel=1e-14)
        assert mh_modal(s) == pytest.approx(norms(u)[1] ** 2, rel=1e-14)

    def test_matches_projection_oracle(self, torus16, rng):
        fields = [random_solenoidal_field(torus16, rng, l2=a) for a in (1.0, 3.0, 2.0)]
        s = ObservationSeries("modal", 0.0, 2.0, tuple((float(t), observe_modal(u, 80)) for t, u in enumerate(fields)))
        oracle = norms(observe_modal(fields[1], 80).reconstruct())[1] ** 2
        assert abs(mh_modal(s) - oracle) <= 1e-12 * oracle
        assert mh(s) == mh_modal(s)


class TestNodalNorm:
    def test_zero(self):
        s = ObservationSeries("nodal", 0.0, 0.0, ((0.0, NodalData(3, 1.0, np.zeros((3, 3, 3, 3)))),))
        assert mh_nodal(s) == 0.0

    def test_linear_field_bracket(self, rng):
        G = rng.standard_normal((3, 3))
        idx = np.arange(5) * 0.25
        X = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), -1)
        d = NodalData(4, 1.0, X @ G.T)
        s = ObservationSeries("nodal", 0.0, 1.0, ((0.0, d), (1.0, d)))
        B = default_basis()
        exact2 = np.sum(G**2)
        m2 = mh_nodal(s)
        assert exact2 / B.norm_M**2 <= m2 * (1 + 1e-12)
        assert m2 <= exact2 * B.norm_M_inv**2 * (1 + 1e-12)

    def test_decay_max_at_start(self, decay_traj):
        s = ObservationSeries.from_trajectory(decay_traj, "nodal", 8)
        rows = mh_series(s)
        assert max(rows, key=lambda r: r[1])[0] == 0.0
        assert mh_nodal(s) == pytest.approx(h1_data_norms(s.entries[0][1]).data ** 2, rel=1e-15)


class TestWh:
    def test_formula(self, torus16):
        assert wh(0.0, None, 1.0, 1.0) == 0.0
        assert wh(2.5, None, 1.0, 1.0, c=3.0) == 7.5
        assert wh(0.0, 4.0, 1.0, 1.0) == 16.0
        f = beltrami_field(torus16, amplitude=0.5)
        assert wh(1.0, f, 0.5, 2.0, 2.0) == pytest.approx(2 * norms(f)[0] ** 2 / (0.25 * 2) + 2.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="positive"):
            wh(1.0, None, 0.0, 1.0)


class TestCheck:
    def test_hand_cases(self):
        r = check(1.0, None, 1.0, 1.0, 0.5, 1.0)
        assert r.terms == {"nu_lambda1": 1.0, "wh4_over_nu3": 1.0, "grad0_term": 1.0}
        assert r.threshold == 4.0 and r.satisfied
        r = check(1.0, None, 1.0, 1.0, 2.0, 1.0)
        assert r.threshold == 0.25 and not r.satisfied
        assert r.predicted_bound == 1.0

    def test_iff_threshold(self):
        r = check(0.0, None, 1.0, 1.0, 0.5, 0.0, variant="iff")
        assert r.threshold == 1.0 and r.satisfied
        with pytest.raises(ValueError, match="variant"):
            check(0.0, None, 1.0, 1.0, 0.5, 0.0, variant="thm")

    @pytest.mark.parametrize("c", [0.5, 1.0, 4.0])
    def test_zero_flow(self, c):
        lam1 = 4 * np.pi**2
        hs = np.linspace(0.01, 1.0, 200)
        verdicts = [check(0.0, None, 0.1, lam1, h, 0.0, c=c).satisfied for h in hs]
        assert verdicts == [h**2 <= 1 / (c * lam1) for h in hs]
        # monotone: once unsatisfied, stays so for larger h
        assert verdicts == sorted(verdicts, reverse=True)

    def test_report_self_consistent(self, decay_traj):
        s = ObservationSeries.from_trajectory(decay_traj, "nodal", 8)
        r = check_series(s, None, 0.1, decay_traj.torus.lambda1, reference=decay_traj.fields[0])
        assert r.recompute() == r.satisfied
        assert r.grad0 == pytest.approx(norms(decay_traj.fields[0])[1])
        assert r.h == pytest.approx(1 / 8)
        d = r.to_dict()
        assert d["max_term"] == max(r.terms.values()) and d["notes"] == []

    def test_fallback_gradient_is_flagged(self, decay_traj):
        s = ObservationSeries.from_trajectory(decay_traj, "nodal", 8)
        r = check_series(s, None, 0.1, decay_traj.torus.lambda1)
        assert r.grad0_source == "observation"
        assert r.notes


class TestSweeps:
    def test_beltrami_stabilizes(self, decay_traj):
        reports = h_sweep(decay_traj, None, 0.1, 1.0, [1 / 8, 1 / 16, 1 / 32])
        m = [r.mh2 for r in reports]
        assert abs(m[2] - m[1]) / m[2] < 0.1
        assert first_admissible(reports) is not None

    def test_zero_trajectory(self):
        cfg = TorusConfig(1.0, 8)
        traj = run(SpectralField.zeros(cfg), SolverConfig(0.1, 0.1, 0.2))
        hs = [1 / 2, 1 / 4, 1 / 8, 1 / 16]
        reports = h_sweep(traj, None, 0.1, 1.0, hs)
        assert [r.satisfied for r in reports] == [h**2 <= 1 / cfg.lambda1 for h in hs]

    def test_white_noise_fails(self, decay_traj):
        rng = np.random.default_rng(7)

        def noisy(u, n):
            return NodalData(n, u.config.L, rng.standard_normal((n, n, n, 3)))

        reports = h_sweep(decay_traj, None, 0.1, 1.0, [1 / 4, 1 / 8, 1 / 16], observe=noisy)
        m = [r.mh2 for r in reports]
        assert m[0] < m[1] < m[2]
        assert first_admissible(reports) is None

    def test_bad_h(self, decay_traj):
        with pytest.raises(ValueError, match="divide"):
            h_sweep(decay_traj, None, 0.1, 1.0, [0.3])

    def test_modal_sweep(self, decay_traj):
        reports = modal_sweep(decay_traj, None, 0.1, 1.0, [6, 12, 100])
        # the Beltrami field lives on the unit shell: every cutoff >= 12 sees all of it
        assert reports[1].mh2 == pytest.approx(reports[2].mh2, rel=1e-14)
        assert reports[2].h < reports[1].h

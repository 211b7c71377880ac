import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydgate.dynamics import propagate
from rydgate.models import (
    RYDBERG_MANIFOLD,
    SINGLE_ION,
    TWO_ION,
    GateSchedule,
    adiabatic_decompose3,
    adiabatic_transform4,
    build_full_two_qubit,
    build_h2q_ryd,
    build_h3,
    build_h4,
    dd_strength,
    h3_matrix,
    h4_matrix,
    ion_swap16,
    manifold_rotation,
    resonant_u11,
    rotated_basis_hamiltonian,
    ryd_matrix,
)
from rydgate.pulses import constant, ddp_pair, gaussian, ttl_truncate, zero

rates = st.floats(0.0, 2.0)
positive = st.floats(0.01, 2.0)
detunings = st.floats(-2.0, 2.0)


class TestH3:
    def test_no_drive(self):
        h = build_h3(zero(), zero(), 0.4)
        assert np.array_equal(h(3.0), np.diag([0, 0.4, 0]).astype(complex))

    def test_equal_resonant_drive(self):
        h = build_h3(constant(1.0), constant(1.0), 0.0)
        ev = np.linalg.eigvalsh(h(0.0))
        assert np.allclose(ev, [-1 / np.sqrt(2), 0, 1 / np.sqrt(2)], atol=1e-14)

    @given(rates, rates, detunings)
    def test_spectrum_closed_form(self, p, s, d):
        rms = np.hypot(p, s)
        root = np.sqrt(d**2 + rms**2)
        expected = sorted([0.5 * (d + root), 0.5 * (d - root), 0.0])
        assert np.allclose(np.linalg.eigvalsh(h3_matrix(p, s, d)), expected, atol=1e-12)


class TestDecompose3:
    def test_equal_couplings(self):
        ang, dec = adiabatic_decompose3(0.5, 0.5, 0.2)
        assert ang.theta == pytest.approx(np.pi / 4)
        assert np.allclose(dec.dark.amplitudes, [1 / np.sqrt(2), 0, -1 / np.sqrt(2)])

    def test_resonant(self):
        ang, dec = adiabatic_decompose3(0.3, 0.4, 0.0)
        assert ang.phi == pytest.approx(np.pi / 4)
        assert np.allclose(dec.energies, [0.25, 0.0, -0.25])

    def test_dark_starts_in_ground_when_stokes_leads(self):
        _, dec = adiabatic_decompose3(1e-9, 1.0, 0.3)
        assert abs(dec.dark.amplitude("0")) == pytest.approx(1.0)

    def test_undefined(self):
        with pytest.raises(ValueError, match="mixing angle undefined"):
            adiabatic_decompose3(0.0, 0.0, 1.0)

    @settings(max_examples=200)
    @given(positive, positive, detunings)
    def test_diagonalizes(self, p, s, d):
        ang, dec = adiabatic_decompose3(p, s, d)
        u = dec.transform
        assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12)
        m = u.conj().T @ h3_matrix(p, s, d) @ u
        assert np.max(np.abs(m - np.diag(dec.energies))) < 1e-12
        assert dec.dark.amplitude("e") == 0
        assert 0 <= ang.theta <= np.pi / 2
        assert ang.rms == pytest.approx(np.hypot(p, s))

    @given(positive, positive, detunings)
    def test_gamma_branch(self, p, s, d):
        # half the angle whose cotangent is d / rms, on the (0, pi) branch
        ang, _ = adiabatic_decompose3(p, s, d)
        assert 0 < 2 * ang.gamma < np.pi
        assert np.cos(2 * ang.gamma) / np.sin(2 * ang.gamma) == pytest.approx(d / ang.rms, abs=1e-9)


class TestH4:
    def test_reduces_to_h3(self):
        p, s = gaussian(1.0, 10.0, 5.0), gaussian(0.8, 5.0, 5.0)
        h4 = build_h4(p, s, zero(), 0.3, zero())
        h3 = build_h3(p, s, 0.3)
        for t in (0.0, 7.0, 12.5):
            assert np.array_equal(h4(t)[:3, :3], h3(t))
            assert np.all(h4(t)[3] == 0) and np.all(h4(t)[:, 3] == 0)

    def test_microwave_feeds_intermediate_level(self):
        # counter-intuitive Gaussian STIRAP with and without the microwave
        p, s = gaussian(0.377, 205.0, 70.0), gaussian(0.377, 145.0, 70.0)
        pe = {}
        for mw in (0.0, 0.19):
            res = propagate(build_h4(p, s, constant(mw), 0.0), SINGLE_ION.basis("0"), 0.0, 350.0, sample_dt=0.5)
            pe[mw] = res.population("e").max()
        assert pe[0.19] > 0.05
        assert pe[0.19] > 10 * pe[0.0]


class TestTransform4:
    def test_no_microwave_block_diagonal(self):
        m = adiabatic_transform4(0.3, 0.5, 0.0, 0.2, 0.1)
        _, dec = adiabatic_decompose3(0.3, 0.5, 0.2)
        assert np.allclose(m, np.diag([*dec.energies, 0.1]), atol=1e-15)

    @settings(max_examples=200)
    @given(positive, positive, rates, detunings, detunings)
    def test_conjugation_and_spectrum(self, p, s, w, d, drr):
        _, dec = adiabatic_decompose3(p, s, d)
        u = np.eye(4, dtype=complex)
        u[:3, :3] = dec.transform
        h = h4_matrix(p, s, w, d, drr)
        m = adiabatic_transform4(p, s, w, d, drr)
        assert np.max(np.abs(u.conj().T @ h @ u - m)) < 1e-12
        assert np.allclose(np.linalg.eigvalsh(m), np.linalg.eigvalsh(h), atol=1e-12)
        assert m[1, 3] == pytest.approx(-w * p / (2 * np.hypot(p, s)), abs=1e-15)

    def test_dark_leak_scales_with_rms(self):
        # dark-to-rP coupling is nonzero iff w*p != 0 and goes as w p / rms
        p = np.array([0.1, 0.5, 1.0, 2.0])
        s = 3 * p
        w = 0.7
        c = np.array([adiabatic_transform4(pi, si, w, 0.1, 0.0)[1, 3] for pi, si in zip(p, s)])
        ratio = c / (w * p / np.hypot(p, s))
        assert np.allclose(ratio, -0.5, atol=1e-14)
        assert adiabatic_transform4(0.0, 1.0, w, 0.1, 0.0)[1, 3] == 0
        assert adiabatic_transform4(0.5, 1.0, 0.0, 0.1, 0.0)[1, 3] == 0

    def test_undefined(self):
        with pytest.raises(ValueError):
            adiabatic_transform4(0.0, 0.0, 1.0, 0.0, 0.0)


class TestDdStrength:
    def test_values(self):
        assert dd_strength(2.0, 0.5, 0.0) == 2.0
        assert dd_strength(2.0, 0.5, 0.5) == pytest.approx(1.0)
        assert dd_strength(2.0, 0.0, 0.3) == 0.0

    @given(positive, rates, detunings)
    def test_bounds(self, V0, w, d):
        if w == 0 and d == 0:
            return
        assert 0 <= dd_strength(V0, w, d) <= V0

    def test_undefined(self):
        with pytest.raises(ValueError):
            dd_strength(1.0, 0.0, 0.0)


SWAP4 = np.eye(4)[[0, 2, 1, 3]]


class TestManifold:
    def test_undriven(self):
        h = build_h2q_ryd(zero(), constant(0.3), zero())
        assert np.allclose(h(0.0), np.diag([0, 0.3, 0.3, 0.6]))

    @given(rates, detunings, rates)
    def test_swap_symmetry(self, w, d, v):
        h = ryd_matrix(w, d, v)
        assert np.max(np.abs(SWAP4 @ h - h @ SWAP4)) < 1e-12

    def test_layout(self):
        w, d, v = 0.3, 0.2, 0.1
        expected = 0.5 * np.array([[0, w, w, 0], [w, 2 * d, 2 * v, w], [w, 2 * v, 2 * d, w], [0, w, w, 4 * d]])
        assert np.allclose(ryd_matrix(w, d, v), expected)


class TestResonantU11:
    def test_start(self):
        assert resonant_u11(0.3, 0.2, 0.0) == 1

    def test_no_interaction(self):
        t = np.linspace(0, 50, 11)
        assert np.allclose(resonant_u11(0.3, 0.0, t), 0.5 * (1 + np.cos(0.3 * t)))
        assert abs(resonant_u11(0.3, 0.0, np.pi / 0.3)) < 1e-15

    def test_cpr_point(self):
        V0 = 0.17
        u = resonant_u11(np.sqrt(3) / 2 * V0, V0, 4 * np.pi / V0)
        assert abs(u - 1) < 1e-12

    @given(rates, rates, st.floats(0, 500))
    def test_bounded(self, w, V0, t):
        assert abs(resonant_u11(w, V0, t)) <= 1 + 1e-12

    def test_negative_time(self):
        with pytest.raises(ValueError):
            resonant_u11(0.1, 0.1, -1.0)


class TestRotatedBasis:
    @given(rates, rates)
    def test_conjugation(self, w, V0):
        r = manifold_rotation()
        h_rot = r.T @ ryd_matrix(w, 0.0, V0) @ r
        expected = rotated_basis_hamiltonian(constant(w), V0)(0.0)
        assert np.max(np.abs(h_rot - expected)) < 1e-12

    def test_no_microwave(self):
        h = rotated_basis_hamiltonian(zero(), 0.4)(0.0)
        assert np.allclose(h, np.diag([0, 0.4, -0.4, 0]))

    def test_reproduces_u11(self):
        w, V0 = 0.25, 0.15
        r = manifold_rotation()
        psi = RYDBERG_MANIFOLD.basis("rSrS")
        from rydgate.dynamics import QuantumState
        from rydgate.models import ROTATED_MANIFOLD

        start = QuantumState(ROTATED_MANIFOLD, r.T @ psi.amplitudes)
        grid = np.linspace(0, 80, 17)
        res = propagate(rotated_basis_hamiltonian(constant(w), V0), start, 0.0, 80.0, tol=1e-12, times=grid)
        back = res.states @ r.T
        assert np.max(np.abs(back[:, 0] - np.conj(resonant_u11(w, V0, grid)))) < 1e-8


def _schedule(V0=0.0, dip=(100.0, 150.0), peak=0.3):
    pu, su = ddp_pair(peak, 20.0, 3.0, 25.0, 4, 50.0)
    pd, sd = ddp_pair(peak, 20.0, 3.0, 25.0, 4, dip[1] + 50.0, reverse=True)
    from rydgate.pulses import envelope_sum

    pump = envelope_sum(ttl_truncate(pu, 0.0, dip[0]), ttl_truncate(pd, dip[1], dip[1] + 100.0))
    stokes = envelope_sum(ttl_truncate(su, 0.0, dip[0]), ttl_truncate(sd, dip[1], dip[1] + 100.0))
    if dip[1] > dip[0]:
        mw, det = ttl_truncate(constant(0.2), *dip), ttl_truncate(constant(0.05), *dip)
    else:
        mw, det = zero(), zero()
    return GateSchedule((0.0, dip[0]), dip, (dip[1], dip[1] + 100.0), (pump, pump), (stokes, stokes), mw, det, 0.1, V0)


class TestFullModel:
    def test_minkowski_spectrum(self):
        s = _schedule(V0=0.0)
        h = build_full_two_qubit(s)
        for t in (40.0, 120.0, 180.0):
            h1 = h4_matrix(s.pump[0](t), s.stokes[0](t), s.microwave(t), s.delta, s.detuning_rr(t))
            e1 = np.linalg.eigvalsh(h1)
            expected = np.sort((e1[:, None] + e1[None, :]).ravel())
            assert np.allclose(np.linalg.eigvalsh(h(t)), expected, atol=1e-12)

    def test_exchange_symmetry(self):
        sw = ion_swap16()
        h = build_full_two_qubit(_schedule(V0=0.3))
        for t in np.linspace(0, 250, 51):
            m = h(t)
            assert np.max(np.abs(sw @ m - m @ sw)) < 1e-12

    def test_embedding_matches_manifold(self):
        s = _schedule(V0=0.3)
        h16 = build_full_two_qubit(s)
        stage = s.dressing_stage()
        a, b = s.dipole
        grid = np.linspace(a, b, 11)
        idx = [TWO_ION.index(lab) for lab in RYDBERG_MANIFOLD.labels]
        from rydgate.dynamics import QuantumState

        full = propagate(h16, TWO_ION.basis("rSrS"), a, b, times=grid)
        small = propagate(stage.hamiltonian(), RYDBERG_MANIFOLD.basis("rSrS"), a, b, times=grid)
        assert np.max(np.abs(full.populations()[:, idx] - small.populations())) < 1e-8
        assert isinstance(full.final, QuantumState)

    def test_schedule_validation(self):
        _schedule().validate()
        _schedule(dip=(100.0, 100.0)).validate()
        bad = _schedule()
        from dataclasses import replace

        with pytest.raises(ValueError, match="overlap"):
            replace(bad, dipole=(90.0, 150.0)).validate()
        with pytest.raises(ValueError, match="microwave"):
            replace(bad, microwave=constant(0.1)).validate()
        with pytest.raises(ValueError, match="pump"):
            replace(bad, pump=(constant(0.1), constant(0.1))).validate()

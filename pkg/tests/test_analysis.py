import numpy as np
import pytest

from rydgate.analysis import (
    LowReturnError,
    cpr_rabi_for_detuning,
    detect_jumps,
    drift_compensated_gate_time,
    entangling_phase,
    find_cpr_time,
    full_gate_report,
    perturbative_entangling_phase,
    perturbative_gate_time,
    perturbative_phase,
    phase_linearity,
    stirap_infidelity,
    sweep,
)
from rydgate.cli import load_preset, preset_path
from rydgate.experiments import ExperimentConfig, load_json, run_sweep
from rydgate.models import DressingStage, GateSchedule
from rydgate.pulses import chirped_detuning, constant, ddp_pair, envelope_sum, gaussian, ttl_truncate, zero
from rydgate.units import MHZ


def chirp_stage(V0=0.0, delta0=25 * MHZ, start=120.0, length=200.0):
    end = start + length
    mw = ttl_truncate(constant(cpr_rabi_for_detuning(delta0)), start, end)
    det = ttl_truncate(chirped_detuning(delta0, 200.0, -3 * np.pi / 5), start, end)
    return DressingStage(mw, det, V0, start)


class TestClosedForms:
    def test_perturbative_phase(self):
        t = np.linspace(0, 10, 101)
        assert perturbative_phase(t, np.zeros_like(t), 0.3) == 0
        assert perturbative_phase(t, np.ones_like(t), np.pi / 10) == pytest.approx(np.pi)

    def test_perturbative_phase_array_coupling_and_error(self):
        t = np.linspace(0, 1, 201)
        value, err = perturbative_phase(t, np.ones_like(t), 2 * t, return_error=True)
        assert value == pytest.approx(1.0)
        assert err < 1e-12

    def test_perturbative_phase_errors(self):
        with pytest.raises(ValueError):
            perturbative_phase([], [], 1.0)
        with pytest.raises(ValueError):
            perturbative_phase([0, 0], [1, 1], 1.0)

    def test_gate_time(self):
        assert perturbative_gate_time(8 * np.pi / 3) == pytest.approx(1.0)
        assert perturbative_gate_time(2.0) == pytest.approx(perturbative_gate_time(1.0) / 2)
        assert perturbative_gate_time(1 * MHZ) == pytest.approx(1333.333, rel=1e-6)
        with pytest.raises(ValueError):
            perturbative_gate_time(0.0)

    def test_cpr_rabi(self):
        assert cpr_rabi_for_detuning(25 * MHZ) / MHZ == pytest.approx(48.412, abs=5e-4)
        assert cpr_rabi_for_detuning(2.0) == pytest.approx(np.sqrt(15))
        c0 = 4
        assert cpr_rabi_for_detuning(1.0) == pytest.approx(0.5 * np.sqrt(c0**2 - 1))
        with pytest.raises(ValueError):
            cpr_rabi_for_detuning(-1.0)

    def test_drift(self):
        assert drift_compensated_gate_time(164.0, 0.0, 1.0) == 164.0
        V0, d0 = 14.72 * MHZ, 25 * MHZ
        assert drift_compensated_gate_time(164.0, V0, d0) == pytest.approx(164.0 * np.cos(14.72 / 150))
        with pytest.raises(ValueError):
            drift_compensated_gate_time(164.0, 0.1, 0.0)

    def test_linearity_fit_unwraps(self):
        v = np.linspace(0, 1, 11)
        phases = np.angle(np.exp(1j * (-5.0 * v + 0.2)))
        fit = phase_linearity(v, phases)
        assert fit["slope"] == pytest.approx(-5.0)
        assert fit["max_residual"] < 1e-12

    def test_detect_jumps(self):
        assert detect_jumps([170, 168, 190, 188, 186, 165], 10) == [2, 5]


class TestStirap:
    def test_ddp_beats_gaussian(self):
        pump, stokes = ddp_pair(44.07 * MHZ, 51.4, 3.0, 56.4, 4, 60.0)
        ddp = stirap_infidelity(pump, stokes, 20 * MHZ, (0.0, 120.0))
        gauss = stirap_infidelity(gaussian(40 * MHZ, 75, 20), gaussian(40 * MHZ, 45, 20), 20 * MHZ, (0.0, 120.0))
        assert ddp < 1e-5
        assert gauss > 100 * ddp


class TestCpr:
    def test_no_dynamics(self):
        stage = DressingStage(zero(), constant(0.2), 0.0, 10.0)
        res = find_cpr_time(stage, (5.0, 20.0))
        assert res.tau_g == 5.0
        assert res.P_return == pytest.approx(1.0)
        assert not res.flagged

    def test_chirp_return(self):
        res = find_cpr_time(chirp_stage(), (150.0, 172.0))
        assert res.P_return > 0.99
        assert res.tau_g == pytest.approx(164.0, abs=3.0)
        assert res.tau_g / 200.0 == pytest.approx(0.82, abs=0.02)

    def test_flag_below_threshold(self):
        stage = DressingStage(constant(0.3), zero(), 0.0, 0.0)
        res = find_cpr_time(stage, (1.0, 4.0), threshold=0.999)
        assert res.flagged

    def test_empty_window(self):
        with pytest.raises(ValueError):
            find_cpr_time(chirp_stage(), (10.0, 10.0))


class TestPhase:
    def test_zero_interaction(self):
        assert entangling_phase(chirp_stage(0.0), 164.05) == 0.0

    def test_low_return_names_run(self):
        with pytest.raises(LowReturnError, match="interacting run"):
            entangling_phase(chirp_stage(5 * MHZ), 10.0)

    def test_perturbative_agreement(self):
        # weak interaction, V0 <= delta0 / 10
        for v in (1.0, 2.5):
            stage = chirp_stage(v * MHZ)
            tau = find_cpr_time(stage, (150.0, 172.0)).tau_g
            exact = entangling_phase(stage, tau)
            approx = perturbative_entangling_phase(stage, tau)
            assert abs(approx - exact) < 0.1 * abs(exact)
        # the smallest swept value
        stage = chirp_stage(1.0 * MHZ)
        tau = find_cpr_time(stage, (150.0, 172.0)).tau_g
        assert perturbative_entangling_phase(stage, tau) / entangling_phase(stage, tau) == pytest.approx(1.0, abs=0.02)


def _round_trip_schedule(V0=0.0):
    pu, su = ddp_pair(44.07 * MHZ, 51.4, 3.0, 56.4, 4, 60.0)
    pd, sd = ddp_pair(44.07 * MHZ, 51.4, 3.0, 56.4, 4, 180.0, reverse=True)
    pump = envelope_sum(ttl_truncate(pu, 0.0, 120.0), ttl_truncate(pd, 120.0, 240.0))
    stokes = envelope_sum(ttl_truncate(su, 0.0, 120.0), ttl_truncate(sd, 120.0, 240.0))
    return GateSchedule(
        (0.0, 120.0), (120.0, 120.0), (120.0, 240.0), (pump, pump), (stokes, stokes), zero(), zero(), 20 * MHZ, V0
    )


def test_round_trip_without_dressing():
    report = full_gate_report(_round_trip_schedule(V0=10 * MHZ), sample_dt=1.0)
    assert report.F_return > 1 - 1e-4
    assert abs(report.phi_ent) < 1e-9
    assert report.tau_g == 0.0
    assert 0 <= report.residual_rydberg < 1e-4


def test_full_gate_rejects_bad_schedule():
    from dataclasses import replace

    bad = replace(_round_trip_schedule(), microwave=constant(0.1))
    with pytest.raises(ValueError, match="microwave"):
        full_gate_report(bad)


class TestSweep:
    @staticmethod
    def f(p):
        return {"y": p["a"] ** 2 + p.get("b", 0.0), "z": p["c"]}

    def test_single_point(self):
        res = sweep({"a": [3.0]}, self.f, base={"c": 1.0})
        assert res.outputs["y"].shape == (1,)
        assert res.outputs["y"][0] == self.f({"a": 3.0, "c": 1.0})["y"]

    def test_shape_and_points(self):
        res = sweep([("a", [1.0, 2.0, 3.0]), ("b", [0.0, 10.0])], self.f, base={"c": 2.0})
        assert res.shape == (3, 2)
        assert res.outputs["y"][2, 1] == 19.0
        assert res.points[5] == {"c": 2.0, "a": 3.0, "b": 10.0}

    def test_reversal(self):
        grid = [0.5, 1.5, 2.5]
        fwd = sweep({"a": grid}, self.f, base={"c": 0.0})
        rev = sweep({"a": grid[::-1]}, self.f, base={"c": 0.0})
        assert np.array_equal(fwd.outputs["y"][::-1], rev.outputs["y"])

    def test_partial_failure(self):
        def g(p):
            if p["a"] < 0:
                raise ValueError("negative")
            return {"y": p["a"]}

        res = sweep({"a": [-1.0, 1.0]}, g)
        assert np.isnan(res.outputs["y"][0]) and res.outputs["y"][1] == 1.0
        assert "negative" in res.errors[(0,)]

    def test_unknown_evaluator(self):
        with pytest.raises(KeyError):
            sweep({"a": [1.0]}, "no-such-evaluator")

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            sweep({"a": []}, self.f)


def gate_config(dipole_ns, V0):
    """The bundled full-gate preset with the dressing stage resized."""
    raw = load_json(preset_path("fig6"))
    mid = 120.0 + dipole_ns
    raw["stages"]["dipole"][1] = mid
    raw["stages"]["stirap_down"] = [mid, mid + 120.0]
    for ch in ("pump", "stokes"):
        down = raw["envelopes"][ch][1]
        down["t_on"], down["t_off"] = mid, mid + 120.0
        down["inner"]["center"] = mid + 60.0
    for ch in ("microwave", "detuning_rr"):
        raw["envelopes"][ch]["t_off"] = mid
    raw["parameters"]["V0"] = V0
    return ExperimentConfig.from_dict(raw)


@pytest.fixture(scope="module")
def own_cpr_report():
    # without interaction the CPR point sits at 164.05 ns rather than
    # the drift-shifted 163.27 ns of the interacting preset
    tau0 = find_cpr_time(chirp_stage(), (150.0, 172.0)).tau_g
    return full_gate_report(gate_config(tau0, 0.0).gate_schedule(), sample_dt=1.0)


class TestFullGateReference:
    def test_zero_interaction_has_zero_phase(self):
        cfg = gate_config(163.27, 0.0)
        rep = full_gate_report(cfg.gate_schedule(), sample_dt=1.0)
        assert rep.phi_ent == 0.0
        assert rep.F_return == rep.F_return_reference

    def test_zero_interaction_at_its_own_cpr_time(self, own_cpr_report, preset_runs):
        # both are capped by the dressing-stage return, not by the interaction
        assert own_cpr_report.F_return == pytest.approx(preset_runs["fig6"][0]["report"]["F_return"], abs=1e-4)

    @pytest.mark.xfail(reason="non-interacting gate is 8e-6 below the interacting one", strict=True)
    def test_zero_interaction_not_worse_than_gate(self, own_cpr_report, preset_runs):
        assert own_cpr_report.F_return >= preset_runs["fig6"][0]["report"]["F_return"]

    def test_report_fields(self, preset_runs):
        rep = preset_runs["fig6"][0]["report"]
        assert 0 <= rep["F_return"] <= 1
        assert -np.pi < rep["phi_ent"] <= np.pi and -np.pi < rep["phi_loc"] <= np.pi
        assert rep["tau_g"] == pytest.approx(163.27)


def test_delta_scan_jumps(preset_runs):
    sw = preset_runs["fig5-delta-scan"][0]["sweep"]
    offsets = np.array(sw["axes"]["envelopes.detuning_rr.inner.offset"])
    jumps = detect_jumps(sw["outputs"]["tau_g"], 10.0)
    assert offsets[-1] - offsets[0] <= 6.0
    assert len(jumps) >= 2


def test_sweep_determinism():
    cfg = load_preset("fig4-phase-sweep")
    raw = dict(cfg.raw, sweep=dict(cfg.raw["sweep"], axes={"parameters.V0": [3.0, 9.0]}))
    a = run_sweep(ExperimentConfig.from_dict(raw))
    b = run_sweep(ExperimentConfig.from_dict(raw))
    assert all(np.array_equal(a.outputs[k], b.outputs[k]) for k in a.outputs)
    assert a.points == b.points

import numpy as np
import pytest

from windtwin.catalog import load_catalog
from windtwin.errors import InvalidRange, ParseError
from windtwin.simulator import (DOF_PARAMETERS, FaultRates, SimConfig,
                                WindProcess, format_scenario, frames,
                                generate, make_initial_state, parse_scenario,
                                step)
from windtwin.store import TimeseriesStore

CAT = load_catalog()
WAVE_FREQS = (1 / 8.0, 1 / 5.5, 1 / 11.0)


def test_generate_is_deterministic():
    a = generate(SimConfig(seed=42), 120.0)
    b = generate(SimConfig(seed=42), 120.0)
    assert a == b
    c = generate(SimConfig(seed=43), 120.0)
    assert a != c


def test_calm_wind_means_zero_power():
    cfg = SimConfig(seed=1, wind_process=WindProcess(mean=0.0, volatility=0.0))
    state = make_initial_state(cfg)
    state.wind_speed = 0.0
    for _ in range(30):
        state, _ = step(state, cfg, 1.0)
    assert state.wind_speed == 0.0
    assert state.last_power == 0.0


def test_rated_wind_holds_rated_power_within_noise():
    cfg = SimConfig(seed=1, wind_process=WindProcess(mean=18.0, volatility=0.05))
    state = make_initial_state(cfg)
    powers = []
    for _ in range(300):
        state, _ = step(state, cfg, 1.0)
        powers.append(state.last_power)
    powers = np.array(powers[60:])
    assert np.all(np.abs(powers - 2300.0) <= 2300.0 * 0.07)
    assert abs(powers.mean() - 2300.0) <= 2300.0 * 0.02


def test_cadence_emission_counts():
    records = generate(SimConfig(seed=2), 60.0)
    wmet_instants = {r.timestamp for r in records if r.parameter.startswith("WMET.")}
    assert len(wmet_instants) == 30  # cadence 2 s over 60 s
    wtrm_instants = {r.timestamp for r in records if r.parameter.startswith("WTRM.")}
    assert len(wtrm_instants) == 15  # cadence 4 s


def test_zero_faults_all_records_physical():
    report = TimeseriesStore(CAT).ingest_batch(generate(SimConfig(seed=3), 600.0))
    assert report.rejected_unphysical == 0
    assert report.rejected_unknown == 0


def test_spike_rate_injects_unphysical_records():
    cfg = SimConfig(seed=4, fault_injection=FaultRates(spike=0.01))
    records = generate(cfg, 600.0)
    n = len(records)
    bad = sum(0 if CAT.is_physical(r.parameter, r.value) else 1 for r in records)
    expect = 0.01 * n
    sigma = (n * 0.01 * 0.99) ** 0.5
    assert abs(bad - expect) <= 3 * sigma


def test_gap_rate_drops_records():
    base = len(generate(SimConfig(seed=5), 600.0))
    cfg = SimConfig(seed=5, fault_injection=FaultRates(gap=0.05))
    kept = len(generate(cfg, 600.0))
    dropped = base - kept
    sigma = (base * 0.05 * 0.95) ** 0.5
    assert abs(dropped - 0.05 * base) <= 3 * sigma


def test_duplicate_rate_appends_unsorted_pairs():
    cfg = SimConfig(seed=6, fault_injection=FaultRates(duplicate=0.02))
    records = generate(cfg, 600.0)
    ts = [r.timestamp for r in records]
    assert any(b < a for a, b in zip(ts, ts[1:]))  # out of order by design
    report = TimeseriesStore(CAT).ingest_batch(records)
    n_base = report.accepted
    sigma = (n_base * 0.02 * 0.98) ** 0.5
    assert abs(report.deduplicated - 0.02 * n_base) <= 3 * sigma


def test_wind_lag1_autocorrelation_above_09():
    fs = frames(SimConfig(seed=7), 3600.0, ["WMET.WindSpeed"])
    w = fs.values[~fs.missing[:, 0], 0]
    r = np.corrcoef(w[:-1], w[1:])[0, 1]
    assert r > 0.9


def test_dof_bounded_by_wave_amplitudes():
    cfg = SimConfig(seed=8)
    bound = sum(w.amplitude for w in cfg.wave_spectrum)
    fs = frames(cfg, 3600.0, list(DOF_PARAMETERS))
    assert np.max(np.abs(fs.values)) <= bound + 1e-9


def test_dof_spectral_peaks_match_wave_periods():
    fs = frames(SimConfig(seed=9), 3600.0, list(DOF_PARAMETERS))
    n = len(fs)
    freqs = np.fft.rfftfreq(n, 1.0)
    bin_width = freqs[1]
    for d in range(6):
        x = fs.values[:, d] - fs.values[:, d].mean()
        peak = freqs[np.argmax(np.abs(np.fft.rfft(x))[1:]) + 1]
        off = min(abs(peak - wf) for wf in WAVE_FREQS)
        assert off <= bin_width + 1e-12


def test_energy_integrates_power():
    cfg = SimConfig(seed=10)
    state = make_initial_state(cfg)
    integral = 0.0
    for _ in range(3900):
        state, _ = step(state, cfg, 1.0, emit=False)
        integral += state.last_power / 3600.0
    assert state.energy_kwh == pytest.approx(integral, rel=0.01)


def test_frames_matches_record_pipeline():
    cfg = SimConfig(seed=11)
    names = CAT.forecast_set()
    store = TimeseriesStore(CAT)
    store.ingest_batch(generate(cfg, 600.0))
    grid = store.resample(cfg.start + 1.0, cfg.start + 600.0, names, 1.0)
    bulk = frames(cfg, 600.0, names)
    k = len(grid.values)
    assert np.array_equal(np.isnan(grid.values), bulk.missing[:k])
    assert np.array_equal(grid.padded, bulk.padded[:k])
    ok = ~bulk.missing[:k]
    assert np.max(np.abs(grid.values[ok] - bulk.values[:k][ok])) < 1e-12


def test_frames_coarse_step_is_gap_free():
    fs = frames(SimConfig(seed=12), 4 * 500.0, CAT.forecast_set(), step_s=4.0)
    assert len(fs) == 500
    assert not fs.padded.any()
    assert not fs.missing.any()
    again = frames(SimConfig(seed=12), 4 * 500.0, CAT.forecast_set(), step_s=4.0)
    assert np.array_equal(fs.values, again.values)


def test_frames_rejects_fractional_steps():
    with pytest.raises(InvalidRange):
        frames(SimConfig(seed=0), 100.0, ["WMET.WindSpeed"], step_s=2.0)
    with pytest.raises(InvalidRange):
        frames(SimConfig(seed=0), 100.0, ["WMET.WindSpeed"], step_s=0.5)


def test_scenario_round_trip():
    cfg = SimConfig(seed=99, rated_power=3000.0,
                    wind_process=WindProcess(11.0, 0.01, 0.4),
                    fault_injection=FaultRates(gap=0.1, spike=0.005))
    cfg.cadence_per_node["WMET"] = 1
    parsed = parse_scenario(format_scenario(cfg))
    assert parsed == cfg


def test_scenario_errors_carry_line_numbers():
    with pytest.raises(ParseError, match="line 2"):
        parse_scenario("seed = 1\nnot_a_key = 5\n")
    with pytest.raises(ParseError):
        parse_scenario("wave = 1.0\n")  # needs amplitude period direction


def test_cadence_outside_bounds_rejected():
    cfg = SimConfig(seed=0)
    cfg.cadence_per_node["WMET"] = 5
    with pytest.raises(InvalidRange):
        cfg.validate()

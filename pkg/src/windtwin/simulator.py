"""Synthetic floating-turbine telemetry.

Stands in for a proprietary turbine feed: one seeded generator drives
physically plausible, cross-correlated signals for every catalog
parameter at per-node cadences of 1 to 4 seconds. Wind speed is a
mean-reverting (Ornstein-Uhlenbeck) process, tower motion is the
steady-state response of damped oscillators to a deterministic wave
spectrum, active power follows a cut-in/rated/cut-out curve, and the
nacelle tracks a low-passed wind direction. Fault injection can add
unphysical spikes, duplicate records (appended late, so the output is
also unsorted), and gaps to exercise the ingest pipeline.

State updates use exact discretizations (exponential decay for the OU
and first-order-lag processes, closed-form sinusoids for waves), so the
same update rule is valid at dt = 1 s and at coarse strides such as one
minute or one hour.

Randomness is split into named substreams, one per stochastic process,
all spawned from the single config seed. step() consumes each substream
one draw at a time; frames() pre-draws whole arrays from the same
substreams and replays the identical recursions, which is what makes
the bulk path agree with the record path (to float tolerance; summation
order differs in a few derived quantities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .catalog import Catalog, load_catalog
from .errors import InvalidRange, ParseError
from .store import FrameSeries, NormalizationStats, TelemetryRecord
from .timeutil import iso_format, iso_parse

TWO_PI = 2.0 * math.pi

GEAR_RATIO = 91.0  # generator rpm per rotor rpm

DEFAULT_CADENCES = {
    "WMET": 2, "WROT": 1, "WYAW": 2, "WTOW": 1, "WTRM": 4, "WTUR": 1,
    "WGEN": 1, "WCNV": 2, "WTRF": 4, "WSTR": 4, "WPPD": 4, "WAVL": 4,
}

DOF_PARAMETERS = ("WTOW.Surge", "WTOW.Sway", "WTOW.Heave",
                  "WTOW.Roll", "WTOW.Pitch", "WTOW.Yaw")

# damped-oscillator response per DOF:
# (natural period s, damping ratio, coupling gain, wave-heading projection)
_DOF_RESPONSE = (
    (120.0, 0.15, 1.0, "cos"),   # surge
    (120.0, 0.15, 1.0, "sin"),   # sway
    (27.0, 0.15, 0.8, "one"),    # heave
    (35.0, 0.15, 0.02, "sin"),   # roll
    (35.0, 0.15, 0.02, "cos"),   # pitch
    (8.0, 0.20, 0.005, "sin2"),  # yaw
)

# named random substreams, in spawn order
_STREAMS = ("init", "wind", "dir", "air", "rpm", "pitch",
            "intensity", "freq", "ballast", "power", "faults", "waves")

# slow met-ocean processes as (OU reversion rate 1/s, volatility); sea state,
# wind direction, air mass and ballast trim hold their character for hours
_DIR_PROCESS = (1.0 / 7200.0, 0.23)
_AIR_PROCESS = (1.0 / 21600.0, 0.02)
_INTENSITY_PROCESS = (1.0 / 21600.0, 0.0024)
_BALLAST_PROCESS = (1.0 / 21600.0, 0.012)

# Brownian drift of each wave component's phase, rad/sqrt(s). Sea states lose
# phase coherence over hours; this rate keeps 1 h spectral peaks within one
# FFT bin while samples taken hours apart see effectively fresh phases.
_WAVE_PHASE_DIFFUSION = math.pi / 120.0


@dataclass
class WindProcess:
    mean: float = 10.0            # m/s
    reversion_rate: float = 0.05  # 1/s
    volatility: float = 0.8       # m/s per sqrt(s)


@dataclass
class WaveComponent:
    amplitude: float  # m
    period: float     # s
    direction: float  # rad


@dataclass
class FaultRates:
    gap: float = 0.0        # P(record dropped)
    duplicate: float = 0.0  # P(record re-emitted after the batch)
    spike: float = 0.0      # P(value replaced by an unphysical one)


def default_waves() -> list[WaveComponent]:
    return [
        WaveComponent(1.2, 8.0, 0.4),
        WaveComponent(0.6, 5.5, 1.1),
        WaveComponent(0.3, 11.0, 5.8),
    ]


@dataclass
class SimConfig:
    seed: int = 0
    start: float = 1644710400.0  # 2022-02-13T00:00:00Z
    rated_power: float = 2300.0  # kW
    cut_in: float = 4.0          # m/s
    rated_speed: float = 13.0    # m/s
    cut_out: float = 25.0        # m/s
    wind_process: WindProcess = field(default_factory=WindProcess)
    wave_spectrum: list[WaveComponent] = field(default_factory=default_waves)
    cadence_per_node: dict = field(default_factory=lambda: dict(DEFAULT_CADENCES))
    fault_injection: FaultRates = field(default_factory=FaultRates)

    def validate(self) -> None:
        if not self.cut_in < self.rated_speed < self.cut_out:
            raise InvalidRange("need cut_in < rated_speed < cut_out")
        if not self.wave_spectrum:
            raise InvalidRange("wave_spectrum must not be empty")
        for node, c in self.cadence_per_node.items():
            if not 1 <= c <= 4:
                raise InvalidRange(f"cadence for {node} must be in [1, 4] s, got {c}")


@dataclass
class SimState:
    time: float
    rngs: dict
    wind_speed: float
    wind_dir: float        # deg in [0, 360)
    wind_dir_lp: float     # low-passed direction the yaw drive tracks
    air_temp: float
    yaw: float             # nacelle yaw, deg
    rotor_rpm: float
    gen_rpm: float
    pitch: float           # collective blade pitch, deg
    pitch_offsets: np.ndarray   # fixed per-blade trim
    blade_pitch: np.ndarray     # per-blade = collective + trim
    wave_phases: np.ndarray     # per spectrum component; drifts slowly
    wave_intensity: float       # slow sea-state factor in [0.2, 1.0]
    dof: np.ndarray             # surge, sway, heave m; roll, pitch, yaw rad
    gen_temp: float
    stator_temp: float
    bearing_temp: float
    gearbox_temp: float
    trf_oil_temp: float
    trf_winding_temp: float
    freq_dev: float             # grid frequency deviation from 50 Hz
    ballast: float
    last_power: float = 0.0     # kW at self.time
    availability_h: float = 0.0
    operation_h: float = 0.0
    energy_kwh: float = 0.0
    grid_fault_h: float = 0.0
    service_h: float = 0.0
    standstill_h: float = 0.0


def make_initial_state(config: SimConfig) -> SimState:
    config.validate()
    children = np.random.SeedSequence(config.seed).spawn(len(_STREAMS))
    rngs = {name: np.random.default_rng(c) for name, c in zip(_STREAMS, children)}
    init = rngs["init"]
    wind0 = max(0.0, config.wind_process.mean + 0.5 * init.standard_normal())
    dir0 = (240.0 + 10.0 * init.standard_normal()) % 360.0
    offsets = 0.15 * init.standard_normal(3)
    phases = init.uniform(0.0, TWO_PI, len(config.wave_spectrum))
    pitch0 = _pitch_target(wind0, config)
    state = SimState(
        time=config.start,
        rngs=rngs,
        wind_speed=wind0,
        wind_dir=dir0,
        wind_dir_lp=dir0,
        air_temp=8.0,
        yaw=dir0,
        rotor_rpm=_rpm_target(wind0, config),
        gen_rpm=0.0,
        pitch=pitch0,
        pitch_offsets=offsets,
        blade_pitch=pitch0 + offsets,
        wave_phases=phases,
        wave_intensity=0.7,
        dof=np.zeros(6),
        gen_temp=40.0,
        stator_temp=40.0,
        bearing_temp=35.0,
        gearbox_temp=45.0,
        trf_oil_temp=40.0,
        trf_winding_temp=45.0,
        freq_dev=0.0,
        ballast=70.0,
    )
    state.gen_rpm = min(3000.0, state.rotor_rpm * GEAR_RATIO)
    state.dof = _dof_at(0.0, state, config)
    state.last_power = _power_curve(wind0, config)
    return state


def _ou_coeffs(rate: float, vol: float, dt: float) -> tuple:
    # exact discretization of dx = rate (mean - x) dt + vol dW
    decay = math.exp(-rate * dt)
    eq_sd = vol * math.sqrt(max(0.0, (1.0 - decay * decay) / (2.0 * rate)))
    return decay, eq_sd


def _lag_gain(tau: float, dt: float) -> float:
    return 1.0 - math.exp(-dt / tau)


def _angle_diff(a: float, b: float) -> float:
    """Signed shortest rotation from b to a, degrees in (-180, 180]."""
    d = (a - b) % 360.0
    return d - 360.0 if d > 180.0 else d


def _power_curve(ws: float, config: SimConfig) -> float:
    if ws < config.cut_in or ws >= config.cut_out:
        return 0.0
    if ws >= config.rated_speed:
        return config.rated_power
    span = config.rated_speed**3 - config.cut_in**3
    return config.rated_power * (ws**3 - config.cut_in**3) / span


def _power_curve_array(ws: np.ndarray, config: SimConfig) -> np.ndarray:
    span = config.rated_speed**3 - config.cut_in**3
    ramp = config.rated_power * (ws**3 - config.cut_in**3) / span
    p = np.where(ws >= config.rated_speed, config.rated_power, ramp)
    off = (ws < config.cut_in) | (ws >= config.cut_out)
    return np.where(off, 0.0, p)


def _rpm_target(ws: float, config: SimConfig) -> float:
    if ws < config.cut_in or ws >= config.cut_out:
        return 0.0
    if ws >= config.rated_speed:
        return 16.0
    return 6.0 + 10.0 * (ws - config.cut_in) / (config.rated_speed - config.cut_in)


def _pitch_target(ws: float, config: SimConfig) -> float:
    if ws < config.cut_in:
        return 0.0
    if ws >= config.cut_out:
        return 88.0  # feathered
    if ws <= config.rated_speed:
        return 0.0
    return min(30.0, 3.0 * (ws - config.rated_speed))


_TABLE_CACHE: dict = {}


def _dof_tables(config: SimConfig):
    """(omegas [W], coeff [6, W], phase [6, W]) for the configured spectrum.

    coeff folds wave amplitude, DOF coupling gain, the damped-oscillator
    magnitude |H| capped at 1 (keeps each DOF within the configured wave
    amplitudes), and the heading projection.
    """
    key = tuple((w.amplitude, w.period, w.direction) for w in config.wave_spectrum)
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    omegas = np.array([TWO_PI / w.period for w in config.wave_spectrum])
    coeff = np.zeros((6, len(key)))
    phase = np.zeros((6, len(key)))
    for d, (t0, zeta, gain, proj) in enumerate(_DOF_RESPONSE):
        for i, w in enumerate(config.wave_spectrum):
            r = t0 / w.period  # omega / omega_natural
            h = min(1.0, 1.0 / math.sqrt((1.0 - r * r) ** 2 + (2.0 * zeta * r) ** 2))
            if proj == "cos":
                p = math.cos(w.direction)
            elif proj == "sin":
                p = math.sin(w.direction)
            elif proj == "sin2":
                p = math.sin(2.0 * w.direction)
            else:
                p = 1.0
            coeff[d, i] = w.amplitude * gain * h * p
            phase[d, i] = math.atan2(2.0 * zeta * r, 1.0 - r * r)
    _TABLE_CACHE[key] = (omegas, coeff, phase)
    return omegas, coeff, phase


def _dof_at(t_rel: float, state: SimState, config: SimConfig) -> np.ndarray:
    omegas, coeff, phase = _dof_tables(config)
    arg = omegas * t_rel + state.wave_phases + phase
    return np.sum(coeff * np.sin(arg), axis=1)


def _elevation(t_rel: float, state: SimState, config: SimConfig) -> float:
    omegas, _, _ = _dof_tables(config)
    amps = np.array([w.amplitude for w in config.wave_spectrum])
    total = float(np.sum(amps * np.sin(omegas * t_rel + state.wave_phases)))
    return state.wave_intensity * total


def step(state: SimState, config: SimConfig, dt: float, emit: bool = True):
    """Advance the turbine by dt seconds.

    Returns (new_state, records). Records are emitted for nodes whose
    cadence divides the elapsed whole seconds since config.start.
    Deterministic given (state, config, dt): all randomness comes from
    the substreams carried in the state, and every substream is consumed
    at a fixed rate regardless of the trajectory.
    """
    if dt <= 0:
        raise InvalidRange(f"dt must be positive, got {dt}")
    wp = config.wind_process
    r = state.rngs
    new = replace(state)
    new.time = state.time + dt

    decay, sd = _ou_coeffs(wp.reversion_rate, wp.volatility, dt)
    new.wind_speed = min(60.0, max(0.0, wp.mean + (state.wind_speed - wp.mean) * decay
                                   + sd * r["wind"].standard_normal()))

    decay, sd = _ou_coeffs(*_DIR_PROCESS, dt)
    d = _angle_diff(state.wind_dir, 240.0)
    new.wind_dir = (240.0 + d * decay + sd * r["dir"].standard_normal()) % 360.0
    g = _lag_gain(120.0, dt)
    new.wind_dir_lp = (state.wind_dir_lp + g * _angle_diff(new.wind_dir, state.wind_dir_lp)) % 360.0
    g = _lag_gain(60.0, dt)
    new.yaw = (state.yaw + g * _angle_diff(new.wind_dir_lp, state.yaw)) % 360.0

    decay, sd = _ou_coeffs(*_AIR_PROCESS, dt)
    new.air_temp = 8.0 + (state.air_temp - 8.0) * decay + sd * r["air"].standard_normal()

    g = _lag_gain(10.0, dt)
    new.rotor_rpm = max(0.0, state.rotor_rpm
                        + g * (_rpm_target(new.wind_speed, config) - state.rotor_rpm)
                        + 0.05 * r["rpm"].standard_normal())
    new.gen_rpm = min(3000.0, new.rotor_rpm * GEAR_RATIO)
    g = _lag_gain(5.0, dt)
    new.pitch = min(95.0, max(-5.0, state.pitch
                              + g * (_pitch_target(new.wind_speed, config) - state.pitch)
                              + 0.05 * r["pitch"].standard_normal()))
    new.blade_pitch = new.pitch + new.pitch_offsets

    decay, sd = _ou_coeffs(*_INTENSITY_PROCESS, dt)
    new.wave_intensity = min(1.0, max(0.2, 0.7 + (state.wave_intensity - 0.7) * decay
                                      + sd * r["intensity"].standard_normal()))
    decay, sd = _ou_coeffs(1.0 / 60.0, 0.01, dt)
    new.freq_dev = state.freq_dev * decay + sd * r["freq"].standard_normal()
    decay, sd = _ou_coeffs(*_BALLAST_PROCESS, dt)
    new.ballast = min(120.0, max(0.0, 70.0 + (state.ballast - 70.0) * decay
                                 + sd * r["ballast"].standard_normal()))

    power = _power_curve(new.wind_speed, config)
    jitter = r["power"].standard_normal()  # drawn unconditionally: fixed stream rate
    if power > 0.0:
        power = min(config.rated_power * 1.05,
                    power * (1.0 + 0.02 * max(-3.0, min(3.0, jitter))))
    new.last_power = power
    producing = power > 0.0

    heat = power / config.rated_power
    g = _lag_gain(900.0, dt)
    new.gen_temp = state.gen_temp + g * (new.air_temp + 30.0 + 60.0 * heat - state.gen_temp)
    new.stator_temp = state.stator_temp + g * (new.air_temp + 25.0 + 55.0 * heat - state.stator_temp)
    g = _lag_gain(1200.0, dt)
    new.bearing_temp = state.bearing_temp + g * (new.air_temp + 20.0 + 30.0 * heat - state.bearing_temp)
    new.gearbox_temp = state.gearbox_temp + g * (new.air_temp + 35.0 + 25.0 * heat - state.gearbox_temp)
    g = _lag_gain(1800.0, dt)
    new.trf_oil_temp = state.trf_oil_temp + g * (new.air_temp + 25.0 + 35.0 * heat - state.trf_oil_temp)
    g = _lag_gain(1500.0, dt)
    new.trf_winding_temp = state.trf_winding_temp + g * (new.air_temp + 30.0 + 45.0 * heat
                                                         - state.trf_winding_temp)

    hours = dt / 3600.0
    new.availability_h = state.availability_h + hours
    new.operation_h = state.operation_h + (hours if producing else 0.0)
    new.standstill_h = state.standstill_h + (0.0 if producing else hours)
    new.energy_kwh = state.energy_kwh + power * hours

    new.wave_phases = (state.wave_phases
                       + _WAVE_PHASE_DIFFUSION * math.sqrt(dt)
                       * r["waves"].standard_normal(len(state.wave_phases)))

    t_rel = new.time - config.start
    new.dof = _dof_at(t_rel, new, config)

    if not emit:
        return new, []
    elapsed = round(t_rel)
    due = {node for node, c in config.cadence_per_node.items() if elapsed % int(c) == 0}
    return new, _emit(new, config, due)


def _bundle_from_state(state: SimState, config: SimConfig) -> dict:
    t_rel = state.time - config.start
    return {
        "wind_speed": state.wind_speed,
        "wind_dir": state.wind_dir,
        "air_temp": state.air_temp,
        "elevation": _elevation(t_rel, state, config),
        "intensity": state.wave_intensity,
        "pitch_a": state.blade_pitch[0],
        "pitch_b": state.blade_pitch[1],
        "pitch_c": state.blade_pitch[2],
        "yaw": state.yaw,
        "rotor_rpm": state.rotor_rpm,
        "gen_rpm": state.gen_rpm,
        "surge": state.dof[0], "sway": state.dof[1], "heave": state.dof[2],
        "roll": state.dof[3], "tower_pitch": state.dof[4], "tower_yaw": state.dof[5],
        "gen_temp": state.gen_temp,
        "stator_temp": state.stator_temp,
        "bearing_temp": state.bearing_temp,
        "gearbox_temp": state.gearbox_temp,
        "trf_oil_temp": state.trf_oil_temp,
        "trf_winding_temp": state.trf_winding_temp,
        "freq_dev": state.freq_dev,
        "ballast": state.ballast,
        "power": state.last_power,
        "producing": state.last_power > 0.0,
        "availability_h": state.availability_h,
        "operation_h": state.operation_h,
        "energy_kwh": state.energy_kwh,
        "grid_fault_h": state.grid_fault_h,
        "service_h": state.service_h,
        "standstill_h": state.standstill_h,
    }


def _value_table(b: dict, config: SimConfig) -> dict:
    """Parameter values from a signal bundle.

    Shared between the per-record path (scalar bundle entries) and the
    bulk frame path (array entries): every expression must be valid for
    both, which keeps the two paths from drifting apart.
    """
    biggest = max(config.wave_spectrum, key=lambda w: w.amplitude)
    sigma = math.sqrt(sum(w.amplitude**2 for w in config.wave_spectrum) / 2.0)
    on = np.where(b["producing"], 1.0, 0.0)
    current = b["power"] * (1000.0 / (math.sqrt(3.0) * 690.0 * 0.97))
    return {
        "WMET.WindSpeed": b["wind_speed"],
        "WMET.WindDirection": b["wind_dir"],
        "WMET.AirTemperature": b["air_temp"],
        "WMET.WaveHeight": b["elevation"],
        "WMET.WaveHeightAvg": 2.5 * sigma * b["intensity"],
        "WMET.WavePeriod": biggest.period,
        "WMET.WaveDirection": math.degrees(biggest.direction) % 360.0,
        "WROT.BladePitchA": b["pitch_a"],
        "WROT.BladePitchB": b["pitch_b"],
        "WROT.BladePitchC": b["pitch_c"],
        "WROT.RotorRPM": b["rotor_rpm"],
        "WYAW.YawAngle": b["yaw"],
        "WYAW.SystemStatus": 1.0,
        "WTOW.Surge": b["surge"],
        "WTOW.Sway": b["sway"],
        "WTOW.Heave": b["heave"],
        "WTOW.Roll": b["roll"],
        "WTOW.Pitch": b["tower_pitch"],
        "WTOW.Yaw": b["tower_yaw"],
        "WTRM.ShaftBearingTemp": b["bearing_temp"],
        "WTRM.ShaftBearingStatus": 0.0,
        "WTRM.BrakeStatus": 0.0,
        "WTRM.GearboxOilTemp": b["gearbox_temp"],
        "WTRM.GearboxOilStatus": 0.0,
        "WTUR.ActivePower": b["power"],
        "WTUR.ReactivePower": 0.2 * b["power"],
        "WTUR.GeneratorTemp": b["gen_temp"],
        "WTUR.StatorTemp": b["stator_temp"],
        "WTUR.OperationMode": on,
        "WTUR.TurbineStatus": on,
        "WTUR.AlarmCode": 0.0,
        "WGEN.GeneratorRPM": b["gen_rpm"],
        "WGEN.GeneratorStatus": on,
        "WCNV.GridFrequency": 50.0 + b["freq_dev"],
        "WTRF.CurrentL1": current * 1.002,
        "WTRF.CurrentL2": current * 0.999,
        "WTRF.CurrentL3": current * 0.999,
        "WTRF.VoltageL12": 690.0 + 2.0 * b["freq_dev"],
        "WTRF.VoltageL23": 690.0 - 1.0 * b["freq_dev"],
        "WTRF.VoltageL31": 690.0 + 1.0 * b["freq_dev"],
        "WTRF.OilTemp": b["trf_oil_temp"],
        "WTRF.OilStatus": 0.0,
        "WTRF.WindingTemp": b["trf_winding_temp"],
        "WTRF.OilLevel": 85.0,
        "WSTR.BallastDepth": b["ballast"],
        "WPPD.ControlSystemStatus": 0.0,
        "WAVL.AvailabilityTime": b["availability_h"],
        "WAVL.OperationTime": b["operation_h"],
        "WAVL.AccumulatedEnergy": b["energy_kwh"],
        "WAVL.GridFaultTime": b["grid_fault_h"],
        "WAVL.ServiceTime": b["service_h"],
        "WAVL.StandstillTime": b["standstill_h"],
        "WAVL.AvailabilityStatus": 1.0,
        "WAVL.OperationStatus": on,
        "WAVL.GridStatus": 1.0,
        "WAVL.MaintenanceStatus": 0.0,
        "WAVL.RemoteControlStatus": 1.0,
        "WAVL.CommunicationStatus": 1.0,
    }


def _emit(state: SimState, config: SimConfig, due_nodes) -> list[TelemetryRecord]:
    table = _value_table(_bundle_from_state(state, config), config)
    t = state.time
    return [
        TelemetryRecord(t, pid, float(val), "simulator")
        for pid, val in table.items()
        if pid.split(".", 1)[0] in due_nodes
    ]


def generate(config: SimConfig, duration: float,
             catalog: Catalog | None = None) -> list[TelemetryRecord]:
    """Telemetry for `duration` seconds of operation, faults included.

    Concatenation of per-second step() emissions. With nonzero fault
    rates, spikes replace values with out-of-bounds ones, gaps drop
    records, and duplicates are re-appended after the main batch, which
    also leaves the output unsorted.
    """
    if duration <= 0:
        raise InvalidRange(f"duration must be positive, got {duration}")
    catalog = catalog or load_catalog()
    state = make_initial_state(config)
    faults = config.fault_injection
    frng = state.rngs["faults"]
    out: list[TelemetryRecord] = []
    late: list[TelemetryRecord] = []
    for _ in range(int(round(duration))):
        state, records = step(state, config, 1.0)
        for rec in records:
            if faults.gap > 0 and frng.random() < faults.gap:
                continue
            if faults.spike > 0 and frng.random() < faults.spike:
                rec = replace(rec, value=_spike_value(catalog, rec.parameter, frng))
            out.append(rec)
            if faults.duplicate > 0 and frng.random() < faults.duplicate:
                late.append(rec)
    return out + late


def _spike_value(catalog: Catalog, pid: str, rng) -> float:
    d = catalog.lookup(pid)
    if d.kind == "status":
        return float(max(d.codes) + 1)
    span = d.upper_bound - d.lower_bound
    return d.upper_bound + span * rng.uniform(0.1, 2.0)


def _recurse_ou(x0, mean, rate, vol, dt, eps, lo=None, hi=None) -> np.ndarray:
    decay, sd = _ou_coeffs(rate, vol, dt)
    out = np.empty(eps.size)
    x = x0
    for i in range(eps.size):
        x = mean + (x - mean) * decay + sd * eps[i]
        if lo is not None and x < lo:
            x = lo
        if hi is not None and x > hi:
            x = hi
        out[i] = x
    return out


def _recurse_lag(x0, targets, tau, dt, eps=None, noise=0.0, lo=None, hi=None) -> np.ndarray:
    g = _lag_gain(tau, dt)
    out = np.empty(len(targets))
    x = x0
    for i in range(len(targets)):
        x = x + g * (targets[i] - x)
        if eps is not None:
            x += noise * eps[i]
        if lo is not None and x < lo:
            x = lo
        if hi is not None and x > hi:
            x = hi
        out[i] = x
    return out


def frames(config: SimConfig, duration: float, parameters,
           step_s: float = 1.0) -> FrameSeries:
    """Bulk-simulate a resampled frame matrix without record objects.

    For step_s == 1 this mirrors generate -> ingest -> resample: a cell
    refreshes only at its node's cadence instants, is forward-padded in
    between, and is missing before the first emission. For coarser steps
    every cadence has fired within each grid interval, so cells are
    instantaneous samples at the grid instants (the decimation rule for
    minute and hour datasets). Noise comes from the same substreams as
    step(), so trajectories agree with the record path.
    """
    if duration <= 0:
        raise InvalidRange(f"duration must be positive, got {duration}")
    if step_s != 1.0 and step_s < 4.0:
        # between 1 s and the slowest cadence, "every node has fired" fails
        raise InvalidRange(f"step_s must be 1 or >= 4, got {step_s}")
    catalog = load_catalog()
    params = [catalog.lookup(p).id for p in parameters]
    n = int(round(duration / step_s))
    if n < 1:
        raise InvalidRange("duration shorter than one step")
    state0 = make_initial_state(config)
    r = state0.rngs
    wp = config.wind_process
    dt = step_s

    wind = _recurse_ou(state0.wind_speed, wp.mean, wp.reversion_rate, wp.volatility,
                       dt, r["wind"].standard_normal(n), lo=0.0, hi=60.0)

    # direction and its followers wrap, so they keep an explicit loop
    decay, sd = _ou_coeffs(*_DIR_PROCESS, dt)
    eps = r["dir"].standard_normal(n)
    g_lp, g_yaw = _lag_gain(120.0, dt), _lag_gain(60.0, dt)
    wdir = np.empty(n)
    lp = np.empty(n)
    yaw = np.empty(n)
    x, xl, xy = state0.wind_dir, state0.wind_dir_lp, state0.yaw
    for i in range(n):
        d = _angle_diff(x, 240.0)
        x = (240.0 + d * decay + sd * eps[i]) % 360.0
        xl = (xl + g_lp * _angle_diff(x, xl)) % 360.0
        xy = (xy + g_yaw * _angle_diff(xl, xy)) % 360.0
        wdir[i], lp[i], yaw[i] = x, xl, xy

    air = _recurse_ou(state0.air_temp, 8.0, *_AIR_PROCESS, dt,
                      r["air"].standard_normal(n))
    rpm_targets = np.array([_rpm_target(w, config) for w in wind])
    rpm = _recurse_lag(state0.rotor_rpm, rpm_targets, 10.0, dt,
                       eps=r["rpm"].standard_normal(n), noise=0.05, lo=0.0)
    pitch_targets = np.array([_pitch_target(w, config) for w in wind])
    pitch = _recurse_lag(state0.pitch, pitch_targets, 5.0, dt,
                         eps=r["pitch"].standard_normal(n), noise=0.05, lo=-5.0, hi=95.0)
    intensity = _recurse_ou(state0.wave_intensity, 0.7, *_INTENSITY_PROCESS, dt,
                            r["intensity"].standard_normal(n), lo=0.2, hi=1.0)
    freq = _recurse_ou(state0.freq_dev, 0.0, 1.0 / 60.0, 0.01, dt,
                       r["freq"].standard_normal(n))
    ballast = _recurse_ou(state0.ballast, 70.0, *_BALLAST_PROCESS, dt,
                          r["ballast"].standard_normal(n), lo=0.0, hi=120.0)

    base = _power_curve_array(wind, config)
    jitter = np.clip(r["power"].standard_normal(n), -3.0, 3.0)
    power = np.where(base > 0.0,
                     np.minimum(config.rated_power * 1.05, base * (1.0 + 0.02 * jitter)),
                     0.0)
    heat = power / config.rated_power

    gen_t = _recurse_lag(state0.gen_temp, air + 30.0 + 60.0 * heat, 900.0, dt)
    stator_t = _recurse_lag(state0.stator_temp, air + 25.0 + 55.0 * heat, 900.0, dt)
    bearing_t = _recurse_lag(state0.bearing_temp, air + 20.0 + 30.0 * heat, 1200.0, dt)
    gearbox_t = _recurse_lag(state0.gearbox_temp, air + 35.0 + 25.0 * heat, 1200.0, dt)
    oil_t = _recurse_lag(state0.trf_oil_temp, air + 25.0 + 35.0 * heat, 1800.0, dt)
    winding_t = _recurse_lag(state0.trf_winding_temp, air + 30.0 + 45.0 * heat, 1500.0, dt)

    hours = dt / 3600.0
    producing = power > 0.0
    avail = np.cumsum(np.full(n, hours))
    oper = np.cumsum(np.where(producing, hours, 0.0))
    standstill = np.cumsum(np.where(producing, 0.0, hours))
    energy = np.cumsum(power * hours)

    t_rel = dt * np.arange(1, n + 1)
    omegas, coeff, phase = _dof_tables(config)
    dphase = (_WAVE_PHASE_DIFFUSION * math.sqrt(dt)
              * r["waves"].standard_normal((n, omegas.size)))
    # cumsum over rows seeded with the initial phases reproduces the
    # stepwise left-to-right accumulation bit for bit
    phases = np.cumsum(np.vstack([state0.wave_phases, dphase]), axis=0)[1:]
    dof_cols = [np.sin(np.outer(t_rel, omegas) + phases + phase[d]) @ coeff[d]
                for d in range(6)]
    elev = intensity * (np.sin(np.outer(t_rel, omegas) + phases)
                        @ np.array([w.amplitude for w in config.wave_spectrum]))

    bundle = {
        "wind_speed": wind, "wind_dir": wdir, "air_temp": air,
        "elevation": elev, "intensity": intensity,
        "pitch_a": pitch + state0.pitch_offsets[0],
        "pitch_b": pitch + state0.pitch_offsets[1],
        "pitch_c": pitch + state0.pitch_offsets[2],
        "yaw": yaw, "rotor_rpm": rpm,
        "gen_rpm": np.minimum(3000.0, rpm * GEAR_RATIO),
        "surge": dof_cols[0], "sway": dof_cols[1], "heave": dof_cols[2],
        "roll": dof_cols[3], "tower_pitch": dof_cols[4], "tower_yaw": dof_cols[5],
        "gen_temp": gen_t, "stator_temp": stator_t, "bearing_temp": bearing_t,
        "gearbox_temp": gearbox_t, "trf_oil_temp": oil_t, "trf_winding_temp": winding_t,
        "freq_dev": freq, "ballast": ballast,
        "power": power, "producing": producing,
        "availability_h": avail, "operation_h": oper, "energy_kwh": energy,
        "grid_fault_h": 0.0, "service_h": 0.0, "standstill_h": standstill,
    }
    table = _value_table(bundle, config)

    values = np.empty((n, len(params)))
    padded = np.zeros((n, len(params)), dtype=bool)
    elapsed = np.arange(1, n + 1) if step_s == 1.0 else None
    for j, pid in enumerate(params):
        col = np.asarray(table[pid], dtype=float)
        if col.ndim == 0:
            col = np.full(n, float(col))
        c = int(config.cadence_per_node[pid.split(".", 1)[0]])
        if step_s == 1.0 and c > 1:
            src = (elapsed // c) * c  # last emission instant at or before t
            live = src >= 1
            values[:, j] = np.where(live, col[np.maximum(src, 1) - 1], np.nan)
            padded[:, j] = (elapsed % c) != 0
        else:
            values[:, j] = col
    missing = np.isnan(values)
    stats = NormalizationStats.from_matrix(params, values)
    return FrameSeries(config.start + step_s, step_s, tuple(params),
                       values, padded, missing, stats)


# scenario files: plain-text key = value lines mapping onto SimConfig

_SCALAR_KEYS = ("seed", "start", "rated_power", "cut_in", "rated_speed", "cut_out")


def parse_scenario(text: str) -> SimConfig:
    """Parse a key = value scenario into a SimConfig.

    Recognized keys: the scalar fields, wind.mean / wind.reversion_rate /
    wind.volatility, repeatable `wave = amplitude period direction`,
    cadence.<NODE>, and fault.gap / fault.duplicate / fault.spike.
    Unknown keys are errors, so typos do not silently become defaults.
    """
    config = SimConfig()
    waves: list[WaveComponent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        try:
            if key == "seed":
                config.seed = int(val)
            elif key == "start":
                config.start = iso_parse(val)
            elif key in _SCALAR_KEYS:
                setattr(config, key, float(val))
            elif key.startswith("wind."):
                attr = key[5:]
                if attr not in ("mean", "reversion_rate", "volatility"):
                    raise ValueError(f"unknown wind field {attr!r}")
                setattr(config.wind_process, attr, float(val))
            elif key == "wave":
                a, p, d = val.split()
                waves.append(WaveComponent(float(a), float(p), float(d)))
            elif key.startswith("cadence."):
                node = key[8:]
                if node not in DEFAULT_CADENCES:
                    raise ValueError(f"unknown node {node!r}")
                config.cadence_per_node[node] = int(val)
            elif key.startswith("fault."):
                attr = key[6:]
                if attr not in ("gap", "duplicate", "spike"):
                    raise ValueError(f"unknown fault field {attr!r}")
                setattr(config.fault_injection, attr, float(val))
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if waves:
        config.wave_spectrum = waves
    config.validate()
    return config


def format_scenario(config: SimConfig) -> str:
    lines = [
        f"seed = {config.seed}",
        f"start = {iso_format(config.start)}",
        f"rated_power = {config.rated_power!r}",
        f"cut_in = {config.cut_in!r}",
        f"rated_speed = {config.rated_speed!r}",
        f"cut_out = {config.cut_out!r}",
        f"wind.mean = {config.wind_process.mean!r}",
        f"wind.reversion_rate = {config.wind_process.reversion_rate!r}",
        f"wind.volatility = {config.wind_process.volatility!r}",
    ]
    lines += [f"wave = {w.amplitude!r} {w.period!r} {w.direction!r}"
              for w in config.wave_spectrum]
    lines += [f"cadence.{node} = {c}" for node, c in config.cadence_per_node.items()]
    f = config.fault_injection
    lines += [f"fault.gap = {f.gap!r}", f"fault.duplicate = {f.duplicate!r}",
              f"fault.spike = {f.spike!r}"]
    return "\n".join(lines) + "\n"

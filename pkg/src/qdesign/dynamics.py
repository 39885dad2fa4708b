"""Two-level Bloch-equation simulator with piecewise-constant controls.

State convention: the Bloch vector starts at (0, 0, +1) for the ground state
and a pi pulse takes <sigma_z> to -1. Controls are rectangular; X/Y segments
carry a rotation rate in Hz (angle = 2 pi rate duration), Z segments carry a
current-pulse amplitude eta in uA that maps to a frequency shift through the
Z-control calibration. Damping uses 1/T1 toward the ground state and 1/T2 on
the transverse components.

Per constant segment the propagation is closed form: detuning-only segments
(idle, Z) commute with damping and advance in a single exact step; driven
segments split rotation and damping at substeps of at most 1 ns. Every shot
draws a quasi-static detuning from a per-shot RNG stream spawned from the
master seed, so results are independent of any execution schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoDecayError

SUBSTEP_NS = 1.0
_AXES = ("x", "y", "z", "idle", "readout")


@dataclass
class QubitNoiseParams:
    """Relaxation and dephasing inputs; times in us, sigma in Hz."""

    t1_us: float = 9.1
    t2_us: float = 10.0
    quasistatic_sigma_hz: float = 1.007e5

    def __post_init__(self):
        if self.t1_us <= 0 or self.t2_us <= 0:
            raise DomainError("T1 and T2 must be positive")
        if self.t2_us > 2.0 * self.t1_us + 1e-12:
            raise DomainError(f"T2 = {self.t2_us} us exceeds 2 T1 = {2 * self.t1_us} us")
        if self.quasistatic_sigma_hz < 0:
            raise DomainError("quasistatic detuning sigma must be non-negative")


@dataclass
class ZControlCalibration:
    """Linear Z-control map: frequency shift = df_deta * eta."""

    df_deta_mhz_per_ua: float = 65.0 / 32.0

    def __post_init__(self):
        if self.df_deta_mhz_per_ua <= 0:
            raise DomainError("df_deta must be positive")

    def shift_hz(self, eta_ua: float) -> float:
        return self.df_deta_mhz_per_ua * 1e6 * eta_ua


@dataclass
class Segment:
    """One piecewise-constant control interval.

    amplitude is a rotation rate (Hz) for x/y, a current amplitude (uA) for
    z, and ignored for idle/readout. A zero-duration x/y segment is an ideal
    hard pulse: its amplitude is then the rotation angle in radians and
    neither damping nor detuning act during it.
    """

    duration_ns: float
    axis: str
    amplitude: float = 0.0

    def __post_init__(self):
        if self.axis not in _AXES:
            raise DomainError(f"unknown axis {self.axis!r}")
        if self.duration_ns < 0:
            raise DomainError("durations must be non-negative")

    @property
    def is_hard_pulse(self) -> bool:
        return self.axis in ("x", "y") and self.duration_ns == 0.0 and self.amplitude != 0.0


@dataclass
class PulseSequence:
    segments: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        markers = [s for s in self.segments if s.axis == "readout"]
        if len(markers) != 1:
            raise DomainError("a sequence needs exactly one readout marker")
        if self.segments[-1].axis != "readout":
            raise DomainError("the readout marker must terminate the sequence")

    @property
    def duration_ns(self) -> float:
        return sum(s.duration_ns for s in self.segments)


def pi_pulse(duration_ns: float = 20.0, axis: str = "x") -> Segment:
    """Rectangular pi pulse (rate * duration = 1/2); duration 0 gives a hard pulse."""
    if duration_ns == 0.0:
        return Segment(0.0, axis, amplitude=math.pi)
    return Segment(duration_ns, axis, amplitude=0.5 / (duration_ns * 1e-9))


def pi_half_pulse(duration_ns: float = 10.0, axis: str = "x") -> Segment:
    if duration_ns == 0.0:
        return Segment(0.0, axis, amplitude=math.pi / 2.0)
    return Segment(duration_ns, axis, amplitude=0.25 / (duration_ns * 1e-9))


def _spawn_detunings(seed: int, shots: int, sigma_hz: float) -> np.ndarray:
    """One quasi-static angular detuning per shot from split RNG streams."""
    streams = np.random.SeedSequence(seed).spawn(shots)
    draws = np.array([np.random.default_rng(s).standard_normal() for s in streams])
    return 2.0 * math.pi * sigma_hz * draws


class _BlochState:
    """Vectorized Bloch vectors: transverse coherence c = x + i y and z."""

    def __init__(self, n: int):
        self.c = np.zeros(n, dtype=complex)
        self.z = np.ones(n)

    def damp(self, t_s, t1_s, t2_s):
        self.c *= np.exp(-t_s / t2_s)
        self.z = 1.0 + (self.z - 1.0) * np.exp(-t_s / t1_s)

    def precess(self, angle):
        """Exact rotation about +z by per-element angle."""
        self.c *= np.exp(1j * angle)

    def rotate(self, ux, uy, uz, angle):
        """Rodrigues rotation about per-element unit axis (ux, uy, uz)."""
        x, y, z = self.c.real, self.c.imag, self.z
        cs, sn = np.cos(angle), np.sin(angle)
        dot = ux * x + uy * y + uz * z
        cx = uy * z - uz * y
        cy = uz * x - ux * z
        cz = ux * y - uy * x
        xn = x * cs + cx * sn + ux * dot * (1.0 - cs)
        yn = y * cs + cy * sn + uy * dot * (1.0 - cs)
        zn = z * cs + cz * sn + uz * dot * (1.0 - cs)
        self.c = xn + 1j * yn
        self.z = zn

    def sigma_z(self) -> float:
        return float(np.mean(self.z))


def _step_segment(state: _BlochState, seg: Segment, delta, noise, cal, duration_ns=None):
    """Advance all shots through one segment. delta is angular detuning per shot."""
    if seg.is_hard_pulse:
        state.rotate(1.0 if seg.axis == "x" else 0.0,
                     1.0 if seg.axis == "y" else 0.0,
                     0.0, seg.amplitude)
        return
    t_ns = seg.duration_ns if duration_ns is None else duration_ns
    if seg.axis == "readout" or np.all(np.asarray(t_ns) == 0.0):
        return
    t_s = (np.asarray(t_ns, float) if np.ndim(t_ns) else float(t_ns)) * 1e-9
    t1_s, t2_s = noise.t1_us * 1e-6, noise.t2_us * 1e-6
    if seg.axis in ("idle", "z"):
        dz = delta
        if seg.axis == "z":
            dz = delta + 2.0 * math.pi * cal.shift_hz(seg.amplitude)
        state.precess(dz * t_s)
        state.damp(t_s, t1_s, t2_s)
        return
    # driven segment: rotation axis (wx, wy, delta), split at <= 1 ns substeps
    omega = 2.0 * math.pi * seg.amplitude
    wx = omega if seg.axis == "x" else 0.0
    wy = omega if seg.axis == "y" else 0.0
    n_sub = max(1, int(math.ceil(float(np.max(t_ns)) / SUBSTEP_NS)))
    dt_s = t_s / n_sub
    mag = np.sqrt(wx * wx + wy * wy + delta * delta)
    safe = np.where(mag == 0.0, 1.0, mag)
    ux, uy, uz = wx / safe, wy / safe, delta / safe
    for _ in range(n_sub):
        state.rotate(ux, uy, uz, mag * dt_s)
        state.damp(dt_s, t1_s, t2_s)


def evolve(
    seq: PulseSequence,
    noise: QubitNoiseParams,
    cal: ZControlCalibration,
    shots: int = 1000,
    seed: int = 0,
    sample_dt_ns: float = 10.0,
):
    """Shot-averaged <sigma_z>(t) over the sequence.

    Returns (t_ns, sigma_z) sampled every sample_dt_ns plus at every segment
    boundary. Deterministic for a fixed seed.
    """
    if shots < 1:
        raise DomainError("shots must be >= 1")
    delta = _spawn_detunings(seed, shots, noise.quasistatic_sigma_hz)
    state = _BlochState(shots)
    times = [0.0]
    values = [state.sigma_z()]
    now = 0.0
    for seg in seq.segments:
        remaining = seg.duration_ns
        while remaining > 0.0:
            slice_ns = min(sample_dt_ns, remaining)
            _step_segment(state, seg, delta, noise, cal, duration_ns=slice_ns)
            remaining -= slice_ns
            now += slice_ns
            times.append(now)
            values.append(state.sigma_z())
    return np.array(times), np.array(values)


def _sweep_final(build_segments, delays_ns, noise, cal, shots, seed):
    """Final <sigma_z> for a family of sequences indexed by a delay.

    The state is vectorized over (delay, shot); per-shot detunings repeat
    across delays, so each shot stream contributes one draw per sweep as the
    quasi-static model prescribes.
    """
    delays = np.asarray(delays_ns, float)
    delta1 = _spawn_detunings(seed, shots, noise.quasistatic_sigma_hz)
    delta = np.repeat(delta1[None, :], len(delays), axis=0).ravel()
    state = _BlochState(len(delays) * shots)
    for seg, dur in build_segments(delays):
        if np.ndim(dur):
            dur_full = np.repeat(np.asarray(dur, float)[:, None], shots, axis=1).ravel()
        else:
            dur_full = dur
        _step_segment(state, seg, delta, noise, cal, duration_ns=dur_full)
    z = state.z.reshape(len(delays), shots)
    return delays, z.mean(axis=1)


def t1_experiment(
    noise: QubitNoiseParams,
    cal: ZControlCalibration,
    delays_ns,
    shots: int = 10_000,
    seed: int = 0,
    pi_ns: float = 20.0,
):
    """Inversion-recovery sweep: pi pulse, delay, readout."""

    def build(delays):
        yield pi_pulse(pi_ns), pi_ns
        yield Segment(1.0, "idle"), delays

    return _sweep_final(build, delays_ns, noise, cal, shots, seed)


def ramsey_experiment(
    noise: QubitNoiseParams,
    cal: ZControlCalibration,
    delays_ns,
    echo: bool = False,
    shots: int = 10_000,
    seed: int = 0,
    pi_ns: float = 20.0,
):
    """Ramsey fringe sweep, optionally with a refocusing pi pulse mid-delay.

    Returns the readout <sigma_z>, which follows -cos(delta t) under a static
    detuning; with the echo the quasi-static phase cancels exactly.
    """

    def build(delays):
        half = pi_ns / 2.0
        yield pi_half_pulse(half), half
        if echo:
            yield Segment(1.0, "idle"), delays / 2.0
            yield pi_pulse(pi_ns), pi_ns
            yield Segment(1.0, "idle"), delays / 2.0
        else:
            yield Segment(1.0, "idle"), delays
        yield pi_half_pulse(half), half

    return _sweep_final(build, delays_ns, noise, cal, shots, seed)


def simulate_z_precession(
    eta_ua: float,
    dts_ns,
    cal: ZControlCalibration,
    noise: QubitNoiseParams,
    shots: int = 2000,
    seed: int = 0,
    pi_ns: float = 20.0,
):
    """Z-pulse calibration sweep: pi/2, Z rotation of length dt, pi/2.

    The fringe precesses at the calibrated shift df_deta * eta.
    """

    def build(delays):
        half = pi_ns / 2.0
        yield pi_half_pulse(half), half
        yield Segment(1.0, "z", amplitude=eta_ua), delays
        yield pi_half_pulse(half), half

    return _sweep_final(build, dts_ns, noise, cal, shots, seed)


def fringe_frequency_hz(t_ns, values):
    """Dominant fringe frequency by discrete Fourier peak, with the bin width."""
    t = np.asarray(t_ns, float)
    y = np.asarray(values, float) - np.mean(values)
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt):
        raise DomainError("fringe extraction needs a uniform time grid")
    spec = np.abs(np.fft.rfft(y))
    freqs = np.fft.rfftfreq(len(y), d=dt * 1e-9)
    peak = int(np.argmax(spec[1:]) + 1)
    return float(freqs[peak]), float(freqs[1])


def write_sequence(path, seq: PulseSequence):
    """Plain text sequence block: 'segment <ns> <axis> [amplitude]' lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# qdesign pulse sequence; durations in ns, x/y amplitudes in Hz, z in uA\n")
        for s in seq.segments:
            if s.axis == "readout":
                fh.write("readout\n")
            elif s.axis == "idle":
                fh.write(f"segment {s.duration_ns:.17g} idle\n")
            else:
                fh.write(f"segment {s.duration_ns:.17g} {s.axis} {s.amplitude:.17g}\n")


def read_sequence(path) -> PulseSequence:
    """Parse a sequence file; bad lines raise with their line number."""
    from .errors import DataFormatError

    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line == "readout":
                segments.append(Segment(0.0, "readout"))
                continue
            parts = line.split()
            if parts[0] != "segment" or len(parts) not in (3, 4):
                raise DataFormatError(f"line {lineno}: expected 'segment <ns> <axis> [amp]'")
            try:
                dur = float(parts[1])
                amp = float(parts[3]) if len(parts) == 4 else 0.0
            except ValueError:
                raise DataFormatError(f"line {lineno}: bad number") from None
            segments.append(Segment(dur, parts[2], amp))
    return PulseSequence(segments)


def extract_decay(t_us, values, model: str = "exponential"):
    """Fit a decay law to a trace; 'exponential' or 'damped_cosine'.

    Returns a dict with tau_us, and for the damped cosine also freq_mhz and
    phase_rad, each with a one-sigma standard error. Raises NoDecayError when
    the trace carries no resolvable decay. The fit reuses the damped
    least-squares machinery of the spectroscopy module.
    """
    from .spectrofit import damped_least_squares

    t = np.asarray(t_us, float)
    y = np.asarray(values, float)
    if len(t) < 8:
        raise DomainError("need at least 8 points to fit a decay")
    span = float(np.max(y) - np.min(y))
    if span < 1e-9 * max(1.0, float(np.max(np.abs(y)))):
        raise NoDecayError("no decay detected: trace is constant")

    window = t[-1] - t[0]
    if model == "exponential":
        a0 = y[0] - y[-1]
        tau0 = max(window / 3.0, 1e-6)
        x0 = np.array([a0, tau0, y[-1]])

        def resid(p):
            a, tau, c = p
            return a * np.exp(-t / abs(tau)) + c - y

        x, stderr, rms, nfev, ok = damped_least_squares(resid, x0)
        a, tau, c = x
        if abs(tau) > 50.0 * window or abs(a) < 1e-6 * max(abs(c), 1.0):
            raise NoDecayError("no decay detected: decay time unresolved in window")
        return {
            "model": model,
            "tau_us": abs(float(tau)),
            "tau_stderr_us": float(stderr[1]),
            "amplitude": float(a),
            "offset": float(c),
            "residual_rms": rms,
            "converged": ok,
        }
    if model == "damped_cosine":
        f0, _ = fringe_frequency_hz(t * 1e3, y)  # t in us -> ns grid
        f0_per_us = f0 * 1e-6
        if f0_per_us <= 0:
            raise NoDecayError("no oscillation detected")
        a0 = span / 2.0
        x0 = np.array([a0, max(window / 3.0, 1e-6), f0_per_us, 0.0, float(np.mean(y))])

        def resid(p):
            a, tau, f, ph, c = p
            return a * np.exp(-t / abs(tau)) * np.cos(2 * math.pi * f * t + ph) + c - y

        x, stderr, rms, nfev, ok = damped_least_squares(resid, x0)
        a, tau, f, ph, c = x
        return {
            "model": model,
            "tau_us": abs(float(tau)),
            "tau_stderr_us": float(stderr[1]),
            "freq_mhz": abs(float(f)),
            "freq_stderr_mhz": float(stderr[2]),
            "phase_rad": float(ph),
            "offset": float(c),
            "residual_rms": rms,
            "converged": ok,
        }
    raise DomainError(f"unknown decay model {model!r}")

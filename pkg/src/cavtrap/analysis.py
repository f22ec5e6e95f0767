"""Post-processing of transit ensembles into the experiment's observables.

Durations: a transit spans the first to the last sample at which the
(bandwidth-limited, noiseless) transmission is distinguishable from the
empty-cavity level, meaning |s - empty| > threshold_sigma * noise_std; the
transmission may drop to the empty level mid-transit and return, so the
window deliberately keys on first/last crossings rather than contiguity.
Thresholding a noisy realization instead would plant spurious 2-sigma
crossings anywhere in the record, so noise enters through the threshold.

Modulations: consecutive local maxima H1, H2 with the intervening minimum Hc
define one oscillation event with period P = peak-to-peak time and amplitude
A = 2[(H1+H2)/2 - Hc]/(H1+H2); events below an amplitude floor are dropped as
noise-born.  The matching theory curve comes from one-dimensional energy
conservation in the radial potential: a transmission period equals half the
mechanical period because the atom crosses the axis twice per orbit.

Spectrograms: Hanning-windowed FFT magnitudes of the full-resolution
photon-number record, windows of fixed width stepped uniformly in time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import butter, find_peaks, sosfiltfilt

from .constants import mass_tilde, mk_to_angfreq


class NoTransit(Exception):
    """Signal never distinguishable from the empty-cavity level."""


class EmptyEnsemble(Exception):
    """No valid durations to histogram."""


class SignalTooShort(Exception):
    """Record shorter than one spectrogram window."""


class IntegrableSingularity(Exception):
    """Turning-point quadrature failed to converge."""


@dataclass
class TransitSignal:
    t: np.ndarray
    raw: np.ndarray
    filtered: np.ndarray
    bandwidth_khz: float
    noise_model: str = "none"
    noise_meta: dict = field(default_factory=dict)


@dataclass
class TransitWindow:
    duration: float
    t_start: float
    t_end: float


@dataclass
class ModulationEvent:
    period: float
    amplitude: float
    h1: float
    h2: float
    hc: float
    t_mid: float
    angular_momentum: float = np.nan


@dataclass
class Spectrogram:
    times: np.ndarray           # window centers, us
    frequencies: np.ndarray     # MHz (cycles/us)
    magnitudes: np.ndarray      # (n_windows, n_freq) |FFT|
    window: float               # us
    step: float                 # us
    nfft: int


@dataclass
class HistogramResult:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    dispersion: float
    n: int


def transit_duration(t, signal, empty_level, noise_std, threshold_sigma=2.0):
    """First-to-last distinguishable time span of one transit.

    empty_level and noise_std may be scalars or per-sample arrays (the
    empty-cavity level changes when the drive switches).  Raises NoTransit
    when no sample clears the threshold.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(signal, dtype=float)
    empty = np.broadcast_to(np.asarray(empty_level, dtype=float), s.shape)
    std = np.broadcast_to(np.asarray(noise_std, dtype=float), s.shape)
    mask = np.abs(s - empty) > threshold_sigma * std
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise NoTransit("signal stays within the noise of the empty-cavity level")
    t0, t1 = t[idx[0]], t[idx[-1]]
    return TransitWindow(duration=float(t1 - t0), t_start=float(t0), t_end=float(t1))


def boxcar_average(t, signal, window):
    """Non-overlapping window means (counting-detection view of a record)."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(signal, dtype=float)
    dt = t[1] - t[0]
    w = max(int(round(window / dt)), 1)
    n_bins = len(s) // w
    if n_bins == 0:
        return t[:1], s[:1]
    sb = s[:n_bins * w].reshape(n_bins, w).mean(axis=1)
    tb = t[:n_bins * w].reshape(n_bins, w).mean(axis=1)
    return tb, sb


def bandwidth_process(t, raw, bandwidth_khz, noise_model="none", rng=None,
                      noise_sigma=0.05, noise_ref_signal=0.32,
                      count_rate=2.0, count_window=10.0):
    """Zero-phase low-pass to the detection bandwidth, plus optional noise.

    Fourth-order Butterworth applied forward-backward (second-order
    sections).  noise_model: 'none' (noiseless), 'heterodyne' (per-sample
    Gaussian with std noise_sigma*sqrt(s/ref)), 'counting' (Poisson counts in
    count_window bins at count_rate per photon, returned as a zero-order-hold
    photon-equivalent signal; the low-pass is skipped since binning sets the
    bandwidth).
    """
    t = np.asarray(t, dtype=float)
    raw = np.asarray(raw, dtype=float)
    dt = t[1] - t[0]
    nyquist_khz = 0.5 / dt * 1e3
    if bandwidth_khz >= nyquist_khz:
        raise ValueError(f"bandwidth {bandwidth_khz} kHz at or above Nyquist "
                         f"{nyquist_khz:.0f} kHz")
    meta = {}
    if noise_model == "counting":
        dtw = max(int(round(count_window / dt)), 1)
        n_bins = len(raw) // dtw
        lam = raw[:n_bins * dtw].reshape(n_bins, dtw).mean(axis=1) * count_rate * dtw * dt
        if rng is None:
            raise ValueError("counting noise requires an rng")
        counts = rng.poisson(lam)
        level = counts / (count_rate * dtw * dt)
        filtered = np.repeat(level, dtw)
        filtered = np.concatenate([filtered, np.full(len(raw) - len(filtered),
                                                     filtered[-1] if len(filtered) else 0.0)])
        meta = {"count_rate_per_us": count_rate, "count_window_us": count_window}
    else:
        sos = butter(4, bandwidth_khz * 1e-3 / (0.5 / dt), output="sos")
        filtered = sosfiltfilt(sos, raw)
        if noise_model == "heterodyne":
            if rng is None:
                raise ValueError("heterodyne noise requires an rng")
            std = noise_sigma * np.sqrt(np.maximum(filtered, 0.0) / noise_ref_signal)
            filtered = filtered + std * rng.standard_normal(len(filtered))
            meta = {"noise_sigma": noise_sigma, "noise_ref_signal": noise_ref_signal}
        elif noise_model != "none":
            raise ValueError(f"unknown noise model {noise_model!r}")
    return TransitSignal(t=t, raw=raw, filtered=filtered,
                         bandwidth_khz=bandwidth_khz, noise_model=noise_model,
                         noise_meta=meta)


def duration_histogram(durations, bin_width):
    """Counts, mean and dispersion (population std) of transit durations."""
    durations = np.asarray([float(d) for d in durations], dtype=float)
    if durations.size == 0:
        raise EmptyEnsemble("no valid durations")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    top = max(durations.max(), bin_width)
    edges = np.arange(0.0, top + bin_width, bin_width)
    if edges[-1] < top + 1e-12:
        edges = np.append(edges, edges[-1] + bin_width)
    counts, edges = np.histogram(durations, bins=edges)
    return HistogramResult(edges=edges, counts=counts,
                           mean=float(durations.mean()),
                           dispersion=float(durations.std(ddof=0)),
                           n=int(durations.size))


def extract_modulations(t, filtered, amplitude_floor=0.05, t_min=None, t_max=None):
    """Oscillation events from consecutive local maxima of a filtered signal."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(filtered, dtype=float)
    if t_min is not None or t_max is not None:
        lo = t_min if t_min is not None else t[0]
        hi = t_max if t_max is not None else t[-1]
        sel = (t >= lo) & (t <= hi)
        t, s = t[sel], s[sel]
    if len(s) < 3:
        return []
    peaks, _ = find_peaks(s)
    events = []
    for a, b in zip(peaks[:-1], peaks[1:]):
        h1, h2 = s[a], s[b]
        ic = a + int(np.argmin(s[a:b + 1]))
        hc = s[ic]
        denom = h1 + h2
        if denom <= 0:
            continue
        amp = 2.0 * ((h1 + h2) / 2.0 - hc) / denom
        if amp < amplitude_floor:
            continue
        events.append(ModulationEvent(period=float(t[b] - t[a]), amplitude=float(amp),
                                      h1=float(h1), h2=float(h2), hc=float(hc),
                                      t_mid=float(0.5 * (t[a] + t[b]))))
    return events


def angular_momentum_series(record, params):
    """L(t) = m (y z' - z y') about the cavity axis, in units of hbar."""
    y, z = record.r[:, 1], record.r[:, 2]
    qy, qz = record.p[:, 1], record.p[:, 2]
    return params.k * (y * qz - z * qy)


def tag_angular_momentum(events, record, params):
    """Attach |L| at each event's mid-time from the underlying trajectory."""
    if not events:
        return events
    L = angular_momentum_series(record, params)
    for ev in events:
        i = int(np.searchsorted(record.t, ev.t_mid))
        i = min(max(i, 0), len(L) - 1)
        ev.angular_momentum = float(L[i])
    return events


@dataclass
class PeriodAmplitudeCurve:
    rho_max: np.ndarray
    amplitude: np.ndarray
    period: np.ndarray

    def period_at(self, amplitude):
        order = np.argsort(self.amplitude)
        return np.interp(amplitude, self.amplitude[order], self.period[order])


def period_amplitude_theory(profile, transmission_map, mass_kg,
                            n_curve=80, rho_lo_frac=0.02, rho_hi_frac=0.98,
                            n_quad=160):
    """Transmission-modulation period versus amplitude for radial orbits.

    One-dimensional motion in the radial potential: for a turning radius
    rho_m the full mechanical period is 4 int_0^rho_m sqrt(m/(2[U(rho_m) -
    U(rho)])) d rho and the transmission period is half of it (two axis
    crossings per orbit).  The turning-point 1/sqrt singularity is handled by
    the substitution rho = rho_m sin(theta), which makes the integrand
    bounded; Gauss-Legendre in theta then converges fast.  The amplitude is
    A = 1 - T(rho_m)/T(0) with T the transmission observable along the
    radial coordinate.
    """
    s = np.asarray(profile.coordinate, dtype=float)
    u = mk_to_angfreq(np.asarray(profile.potential, dtype=float))
    if s[0] > 0 or np.any(np.diff(s) <= 0):
        raise ValueError("radial profile must start at 0 with increasing coordinate")
    m_t = mass_tilde(mass_kg)
    i_rim = int(np.argmax(u))
    if i_rim < 8:
        raise ValueError("profile has no usable well")
    spline = CubicSpline(s[:i_rim + 1], u[:i_rim + 1])
    rim = s[i_rim]
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    theta = 0.25 * np.pi * (nodes + 1.0)     # map [-1, 1] -> [0, pi/2]
    wq = weights * 0.25 * np.pi
    rho_grid = np.linspace(rho_lo_frac, rho_hi_frac, n_curve) * rim
    periods = np.empty(n_curve)
    for i, rho_m in enumerate(rho_grid):
        rr = rho_m * np.sin(theta)
        du = spline(rho_m) - spline(rr)
        tiny = 1e-14 * max(abs(spline(rho_m)), 1.0)
        if np.any(du < -tiny):
            raise IntegrableSingularity("potential not monotone below the rim")
        du = np.maximum(du, tiny)
        integrand = rho_m * np.cos(theta) / np.sqrt(du)
        periods[i] = 2.0 * np.sqrt(m_t / 2.0) * float(np.sum(wq * integrand))
    trans = np.asarray(transmission_map(rho_grid), dtype=float)
    t0 = float(transmission_map(np.zeros(1))[0])
    amps = 1.0 - trans / t0
    return PeriodAmplitudeCurve(rho_max=rho_grid, amplitude=amps, period=periods)


def transmission_vs_radius(table, observable):
    """Radial transmission map rho -> observable for the theory curve."""
    p = table.params

    def mapper(rho):
        rho = np.asarray(rho, dtype=float)
        g = p.g0 * np.exp(-rho**2 / p.waist**2)
        return table.transmission(g, observable)

    return mapper


def spectrogram(t, signal, window=25.0, step=5.0, nfft_factor=4):
    """Hanning-windowed FFT magnitudes stepped along the record.

    Frequencies in MHz.  Parseval holds per window in the numpy convention
    sum_k |X_k|^2 = nfft * sum_n |x_n w_n|^2 (zero-padding preserves it).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(signal, dtype=float)
    dt = t[1] - t[0]
    nw = int(round(window / dt))
    hop = max(int(round(step / dt)), 1)
    if len(s) < nw:
        raise SignalTooShort(f"need at least {nw} samples, got {len(s)}")
    taper = np.hanning(nw)
    nfft = int(nfft_factor * nw)
    starts = np.arange(0, len(s) - nw + 1, hop)
    mags = np.empty((len(starts), nfft // 2 + 1))
    for i, k in enumerate(starts):
        mags[i] = np.abs(np.fft.rfft(s[k:k + nw] * taper, n=nfft))
    freqs = np.fft.rfftfreq(nfft, d=dt)
    centers = t[starts] + 0.5 * (nw - 1) * dt
    return Spectrogram(times=centers, frequencies=freqs, magnitudes=mags,
                       window=window, step=step, nfft=nfft)


def classify_axial_activity(record, window=25.0, step=5.0, wavelength=0.780,
                            burst_lo=0.3, flight_lo=2.0):
    """Label spectrogram windows by the axial excursion they contain.

    Returns labels aligned with spectrogram(...) windows: 'flight' when the
    axial range spans more than flight_lo wells (well width lambda/2),
    'burst' for large-amplitude motion confined within one well, 'quiet'
    otherwise.
    """
    t = record.t
    x = record.r[:, 0]
    dt = t[1] - t[0]
    nw = int(round(window / dt))
    hop = max(int(round(step / dt)), 1)
    well = wavelength / 2.0
    labels = []
    for k in range(0, len(x) - nw + 1, hop):
        span = float(x[k:k + nw].max() - x[k:k + nw].min())
        if span > flight_lo * well:
            labels.append("flight")
        elif span > burst_lo * well and span < 0.95 * well:
            labels.append("burst")
        else:
            labels.append("quiet")
    return np.array(labels)


# ---------------------------------------------------------------------------
# preset-faithful duration pipeline

def record_duration(record, trigger, threshold_sigma=2.0):
    """Duration of one simulated transit using the drive-aware empty level.

    Heterodyne: |<a>|^2 filtered to the detection bandwidth; counting: <a+a>
    averaged over the count window.  The empty-cavity level and its noise std
    follow the recorded drive flag (probe before the switch, trap after).
    """
    obs = record.transmission(trigger.observable)
    if trigger.observable == "heterodyne":
        sig = bandwidth_process(record.t, obs, trigger.bandwidth_khz)
        t, s = sig.t, sig.filtered
        flag = record.drive_flag
    else:
        t, s = boxcar_average(record.t, obs, trigger.window)
        flag = np.interp(t, record.t, record.drive_flag)
    empty = np.where(flag > 0.5, trigger.trap_level, trigger.probe_level)
    std = trigger.noise_std(empty)
    return transit_duration(t, s, empty, std, threshold_sigma=threshold_sigma)


def ensemble_durations(records, trigger, threshold_sigma=2.0):
    """Durations for an ensemble; NoTransit events are counted, not raised."""
    durations, windows = [], []
    n_no_transit = 0
    for rec in records:
        try:
            w = record_duration(rec, trigger, threshold_sigma=threshold_sigma)
        except NoTransit:
            n_no_transit += 1
            continue
        durations.append(w.duration)
        windows.append(w)
    return durations, windows, n_no_transit


# ---------------------------------------------------------------------------
# persistence

def save_histogram(hist, csv_path, meta=None):
    csv_path = str(csv_path)
    rows = np.column_stack([hist.edges[:-1], hist.edges[1:], hist.counts])
    np.savetxt(csv_path, rows, delimiter=",", fmt="%.10g",
               header="bin_lo,bin_hi,count", comments="")
    side = {"kind": "duration_histogram", "mean_us": hist.mean,
            "dispersion_us": hist.dispersion, "n": hist.n}
    side.update(meta or {})
    with open(_sidecar(csv_path), "w") as fh:
        json.dump(side, fh, sort_keys=True, indent=1)
    return csv_path


def save_modulations(events, csv_path, meta=None):
    csv_path = str(csv_path)
    rows = np.array([[e.period, e.amplitude, e.h1, e.h2, e.hc,
                      e.angular_momentum, e.t_mid] for e in events]
                    ) if events else np.empty((0, 7))
    np.savetxt(csv_path, rows, delimiter=",", fmt="%.10g",
               header="P,A,H1,H2,Hc,L,t_mid", comments="")
    side = {"kind": "modulation_events", "n_events": len(events)}
    side.update(meta or {})
    with open(_sidecar(csv_path), "w") as fh:
        json.dump(side, fh, sort_keys=True, indent=1)
    return csv_path


def save_spectrogram(spec, csv_path, meta=None):
    csv_path = str(csv_path)
    nt, nf = spec.magnitudes.shape
    rows = np.column_stack([
        np.repeat(spec.times, nf),
        np.tile(spec.frequencies, nt),
        spec.magnitudes.reshape(-1)])
    np.savetxt(csv_path, rows, delimiter=",", fmt="%.8g",
               header="t_i,f,magnitude", comments="")
    side = {"kind": "spectrogram", "window_us": spec.window,
            "step_us": spec.step, "nfft": spec.nfft}
    side.update(meta or {})
    with open(_sidecar(csv_path), "w") as fh:
        json.dump(side, fh, sort_keys=True, indent=1)
    return csv_path


def _sidecar(csv_path):
    return csv_path[:-4] + ".json" if csv_path.endswith(".csv") else csv_path + ".json"

"""Photon-number-resolving witness spectra: synthesis and inverse analysis.

Forward model: each cavity occupation n contributes one Lorentzian line at
the witness frequency shifted by its ladder offset, weighted by P(n).
Inverse pipeline: peak finding (topographic prominence) -> photon-number
assignment against predicted line positions -> normalized distribution ->
correlation functions. Spectrum grids are in GHz; chi and linewidths in MHz.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.fft import rfft, rfftfreq
from scipy.optimize import curve_fit
from scipy.signal import find_peaks as _scipy_find_peaks

from .dynamics import UndefinedCorrelationError, gm_from_distribution
from .hilbert import PhotonDistribution

MHZ_PER_GHZ = 1e3
MIN_POINTS_PER_LINEWIDTH = 5
DEFAULT_MIN_PROMINENCE = 0.05


class ResolutionError(ValueError):
    """Frequency grid too coarse to resolve the requested linewidth."""


class NoPeaksError(RuntimeError):
    """Peak finding produced no peaks above the prominence threshold."""


class AmbiguousAssignmentError(RuntimeError):
    """Two peaks map to the same photon number."""


class UndersampledTraceError(ValueError):
    """A time trace violates the sampling preconditions for fitting."""


class FitConvergenceError(RuntimeError):
    """Least-squares fit failed to converge."""


@dataclass(frozen=True)
class PnrSpectrum:
    """Witness response spectrum on a strictly ascending GHz grid."""

    freq: np.ndarray
    response: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = np.asarray(self.freq, dtype=float)
        r = np.asarray(self.response, dtype=float)
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "response", r)
        if f.ndim != 1 or f.size < 2:
            raise ValueError("frequency grid must be 1-d with at least 2 points")
        if r.shape != f.shape:
            raise ValueError("response and frequency grids differ in length")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        if not np.all(np.isfinite(r)):
            raise ValueError("response contains non-finite values")


@dataclass(frozen=True)
class Peak:
    position: float          # GHz
    prominence: float
    assigned_n: int | None = None
    spurious: bool = False


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[Peak, ...]

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        ns = [p.assigned_n for p in self.peaks if p.assigned_n is not None and not p.spurious]
        if len(ns) != len(set(ns)):
            raise AmbiguousAssignmentError("duplicate photon-number assignment")

    def assigned(self) -> list[Peak]:
        return [p for p in self.peaks if p.assigned_n is not None and not p.spurious]

    def __len__(self):
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)


def _lorentzian(x: np.ndarray, center: float, fwhm: float) -> np.ndarray:
    hw = 0.5 * fwhm
    return hw * hw / ((x - center) ** 2 + hw * hw)


def synthesize_spectrum(P: PhotonDistribution, chi: float, omega_w_tilde: float,
                        shifts, linewidth: float, grid) -> PnrSpectrum:
    """Sum of Lorentzian lines, one per photon number.

    Line n sits at ``omega_w_tilde + shifts[n] * chi`` with weight P(n) and
    common FWHM ``linewidth``. ``omega_w_tilde`` and ``grid`` are GHz; chi
    and linewidth MHz; ``shifts`` is the ladder of offsets in units of chi
    (index = photon number, vacuum entry 0).
    """
    if linewidth <= 0:
        raise ValueError(f"linewidth must be > 0, got {linewidth}")
    grid = np.asarray(grid, dtype=float)
    step = float(np.max(np.diff(grid)))
    if step > (linewidth / MHZ_PER_GHZ) / MIN_POINTS_PER_LINEWIDTH:
        raise ResolutionError(
            f"grid step {step:.3g} GHz gives fewer than {MIN_POINTS_PER_LINEWIDTH} "
            f"points per linewidth {linewidth} MHz"
        )
    shifts = np.asarray(shifts, dtype=float)
    if shifts.size < P.probabilities.size:
        raise ValueError(
            f"ladder covers n <= {shifts.size - 1} but P extends to n = {P.n_max}"
        )
    response = np.zeros_like(grid)
    for n, weight in enumerate(P.probabilities):
        if weight <= 0:
            continue
        center = omega_w_tilde + shifts[n] * chi / MHZ_PER_GHZ
        response += weight * _lorentzian(grid, center, linewidth / MHZ_PER_GHZ)
    meta = {"chi_mhz": chi, "omega_w_tilde_ghz": omega_w_tilde,
            "linewidth_mhz": linewidth, "source": "simulated"}
    return PnrSpectrum(freq=grid, response=response, meta=meta)


def find_peaks(s: PnrSpectrum, min_prominence: float = DEFAULT_MIN_PROMINENCE) -> PeakSet:
    """Local maxima with topographic prominence above ``min_prominence`` of
    the spectrum maximum (after sign normalization and median baseline
    removal); prominence ratios are invariant under global response scaling.
    """
    y = s.response.copy()
    if abs(y.min() - np.median(y)) > abs(y.max() - np.median(y)):
        y = -y  # phase-response data may point downward
    y = y - np.median(y)
    top = float(y.max())
    if top <= 0:
        raise NoPeaksError("spectrum is flat after baseline removal")
    idx, props = _scipy_find_peaks(y, prominence=min_prominence * top)
    if idx.size == 0:
        raise NoPeaksError(
            f"no peaks with prominence >= {min_prominence} of the maximum"
        )
    peaks = tuple(
        Peak(position=float(s.freq[i]), prominence=float(p))
        for i, p in zip(idx, props["prominences"])
    )
    return PeakSet(peaks)


def assign_photon_numbers(peaks: PeakSet, omega_w_tilde: float, chi: float,
                          shifts, max_offset: float | None = None) -> PeakSet:
    """Label each peak with the photon number of the nearest predicted line.

    Peaks farther than ``max_offset`` GHz from every line (default: 40% of
    the smallest line spacing) are flagged spurious; two peaks claiming the
    same n raise an ambiguity error.
    """
    shifts = np.asarray(shifts, dtype=float)
    centers = omega_w_tilde + shifts * chi / MHZ_PER_GHZ
    if max_offset is None:
        spacings = np.abs(np.diff(np.sort(centers)))
        spacings = spacings[spacings > 0]
        max_offset = 0.4 * float(spacings.min()) if spacings.size else np.inf

    assigned: dict[int, Peak] = {}
    out = []
    for p in peaks:
        dist = np.abs(centers - p.position)
        n = int(np.argmin(dist))
        if dist[n] > max_offset:
            out.append(replace(p, assigned_n=None, spurious=True))
            continue
        if n in assigned:
            raise AmbiguousAssignmentError(
                f"peaks at {assigned[n].position} and {p.position} GHz both map to n={n}"
            )
        new = replace(p, assigned_n=n, spurious=False)
        assigned[n] = new
        out.append(new)
    return PeakSet(tuple(out))


def distribution_from_peaks(peaks: PeakSet, n_max: int | None = None) -> PhotonDistribution:
    """P(n) = W_n / sum W_n with peak prominences as the weights W_n;
    unobserved photon numbers get zero probability."""
    assigned = peaks.assigned()
    if not assigned:
        raise NoPeaksError("no assigned peaks to build a distribution from")
    top = max(p.assigned_n for p in assigned)
    size = (n_max if n_max is not None else top) + 1
    if top >= size:
        raise ValueError(f"peak with n={top} exceeds requested n_max={n_max}")
    w = np.zeros(size)
    for p in assigned:
        w[p.assigned_n] = p.prominence
    return PhotonDistribution(w / w.sum())


def g2_from_spectrum(s: PnrSpectrum, chi: float, omega_w_tilde: float, shifts,
                     min_prominence: float = DEFAULT_MIN_PROMINENCE) -> float:
    """find_peaks -> assign -> distribution -> g2, as one call."""
    peaks = find_peaks(s, min_prominence=min_prominence)
    peaks = assign_photon_numbers(peaks, omega_w_tilde, chi, shifts)
    P = distribution_from_peaks(peaks)
    return gm_from_distribution(P, 2)


def analyze_spectrum(s: PnrSpectrum, chi: float, omega_w_tilde: float, shifts,
                     min_prominence: float = DEFAULT_MIN_PROMINENCE,
                     gm_orders: tuple[int, ...] = (2, 3)) -> dict:
    """Full inverse pipeline returning a JSON-ready report."""
    peaks = find_peaks(s, min_prominence=min_prominence)
    peaks = assign_photon_numbers(peaks, omega_w_tilde, chi, shifts)
    P = distribution_from_peaks(peaks)
    report = {
        "peaks": [
            {"position_ghz": p.position, "prominence": p.prominence,
             "n": p.assigned_n, "spurious": p.spurious}
            for p in peaks
        ],
        "P": P.probabilities.tolist(),
        "diagnostics": {
            "n_peaks": len(peaks),
            "n_spurious": sum(1 for p in peaks if p.spurious),
            "min_prominence": min_prominence,
            "mean_n": P.mean(),
        },
    }
    gm = {}
    for m in gm_orders:
        try:
            gm[str(m)] = gm_from_distribution(P, m)
        except UndefinedCorrelationError:
            gm[str(m)] = None
    report["g2"] = gm.get("2")
    report["gm"] = gm
    return report


# ---------------------------------------------------------------------------
# Rabi-trace fitting and drive calibration


@dataclass(frozen=True)
class RabiFit:
    """Damped-cosine fit p(t) = A exp(-Gamma t) cos(2 pi f t + phi) + c."""

    rabi_rate: float      # f, MHz
    decay_rate: float     # Gamma, 1/us
    amplitude: float
    phase: float
    offset: float
    residual: float       # rms of fit residuals

    def __post_init__(self):
        if self.rabi_rate < 0:
            raise ValueError("rabi_rate must be >= 0")


def _damped_cosine(t, amplitude, freq, phase, decay, offset):
    return amplitude * np.exp(-decay * t) * np.cos(2.0 * np.pi * freq * t + phase) + offset


def fit_rabi(times, populations, min_periods: float = 3.0,
             min_points_per_period: float = 8.0) -> RabiFit:
    """Least-squares damped-cosine fit of a population trace.

    ``times`` in microseconds, sampled uniformly enough for an FFT initial
    guess; the trace must span at least ``min_periods`` oscillations at
    ``min_points_per_period`` samples each (judged from the dominant FFT
    component), otherwise the fit is refused as under-sampled.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(populations, dtype=float)
    if t.ndim != 1 or t.shape != y.shape or t.size < 8:
        raise ValueError("need matching 1-d time/population arrays with >= 8 samples")
    dt = float(np.mean(np.diff(t)))
    if dt <= 0:
        raise ValueError("times must be ascending")

    # dominant discrete-spectrum component as the frequency guess
    detrended = y - y.mean()
    amp = np.abs(rfft(detrended))
    freqs = rfftfreq(t.size, d=dt)
    f0 = float(freqs[int(np.argmax(amp[1:])) + 1])
    if f0 <= 0:
        raise UndersampledTraceError("no oscillation component found in trace")
    span_periods = (t[-1] - t[0]) * f0
    points_per_period = 1.0 / (dt * f0)
    if span_periods < min_periods or points_per_period < min_points_per_period:
        raise UndersampledTraceError(
            f"trace spans {span_periods:.2f} periods at {points_per_period:.2f} "
            f"points/period; need >= {min_periods} and >= {min_points_per_period}"
        )

    a0 = float(np.sqrt(2.0) * detrended.std())
    p0 = [-a0, f0, 0.0, 0.1 / (t[-1] - t[0] + dt), float(y.mean())]
    try:
        popt, _ = curve_fit(_damped_cosine, t, y, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise FitConvergenceError(f"Rabi fit did not converge: {exc}") from exc
    amplitude, freq, phase, decay, offset = popt
    if freq < 0:
        freq, phase = -freq, -phase
    resid = float(np.sqrt(np.mean((_damped_cosine(t, *popt) - y) ** 2)))
    return RabiFit(rabi_rate=float(freq), decay_rate=float(decay),
                   amplitude=float(amplitude), phase=float(phase),
                   offset=float(offset), residual=resid)


@dataclass(frozen=True)
class CalibrationResult:
    """Through-origin linear fit of Rabi rate vs drive amplitude."""

    slope: float                 # MHz per volt
    residuals: np.ndarray        # rate - slope * amplitude, all points
    used_points: int

    def __post_init__(self):
        object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=float))


def calibrate_drive(amplitudes, rates, n_points: int = 4) -> CalibrationResult:
    """Rate-to-amplitude ratio from the low-amplitude subset.

    Fits rate = slope * amplitude (least squares through the origin) using
    the first ``n_points`` samples; later points, where the response
    saturates, are excluded from the fit but reported in the residuals.
    """
    a = np.asarray(amplitudes, dtype=float)
    r = np.asarray(rates, dtype=float)
    if a.shape != r.shape or a.ndim != 1:
        raise ValueError("amplitudes and rates must be matching 1-d arrays")
    if a.size < 2:
        raise ValueError(f"need at least 2 calibration points, got {a.size}")
    used = min(n_points, a.size)
    a_fit, r_fit = a[:used], r[:used]
    denom = float(a_fit @ a_fit)
    if denom == 0:
        raise ValueError("calibration amplitudes are all zero")
    slope = float(a_fit @ r_fit) / denom
    return CalibrationResult(slope=slope, residuals=r - slope * a, used_points=used)


# ---------------------------------------------------------------------------
# spectrum file I/O (CSV with header freq_ghz,response or
# freq_ghz,drive_amp_v,response for amplitude sweeps in long format)


def save_spectrum_csv(path, spectra) -> None:
    """Write one spectrum or a {drive_amp_v: spectrum} mapping to CSV."""
    if isinstance(spectra, PnrSpectrum):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["freq_ghz", "response"])
            for f, r in zip(spectra.freq, spectra.response):
                writer.writerow([f"{f:.9f}", f"{r:.9g}"])
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["freq_ghz", "drive_amp_v", "response"])
        for amp, s in spectra.items():
            for f, r in zip(s.freq, s.response):
                writer.writerow([f"{f:.9f}", f"{amp:.9g}", f"{r:.9g}"])


def load_spectrum_csv(path):
    """Read the CSV formats written by ``save_spectrum_csv``.

    Returns a single PnrSpectrum for the two-column format, or a dict
    {drive_amp_v: PnrSpectrum} for the long three-column format.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [row for row in reader if row]
    if header == ["freq_ghz", "response"]:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
        return PnrSpectrum(freq=data[:, 0], response=data[:, 1],
                           meta={"source": "measured"})
    if header == ["freq_ghz", "drive_amp_v", "response"]:
        by_amp: dict[float, list[tuple[float, float]]] = {}
        for r in rows:
            by_amp.setdefault(float(r[1]), []).append((float(r[0]), float(r[2])))
        out = {}
        for amp, pts in by_amp.items():
            pts.sort()
            arr = np.array(pts)
            out[amp] = PnrSpectrum(freq=arr[:, 0], response=arr[:, 1],
                                   meta={"source": "measured", "drive_amp_v": amp})
        return out
    raise ValueError(
        f"unrecognized spectrum CSV header {header}; expected freq_ghz,response "
        "or freq_ghz,drive_amp_v,response"
    )

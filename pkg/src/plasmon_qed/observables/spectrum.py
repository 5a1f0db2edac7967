"""
Incoherent resonance-fluorescence spectrum from the connected polarization correlator
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks
from scipy.signal.windows import hann

from ..config import Config
from ..errors import GridError
from ..quantum.dynamics import CorrelatorSeries, two_time_correlator
from ..quantum.liouvillian import Liouvillian
from ..quantum.space import DensityMatrix, expectation
from .polarization import PolarizationOps

logger = logging.getLogger(__name__)

RIPPLE_LIMIT = 0.01
TAPER_FRACTION = 0.5
CHUNK_ROWS = 256


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Spectral density on a lab-frame detection grid [meV]"""

    omega: np.ndarray
    values: np.ndarray
    window: str = "none"
    ripple: float = 0.0

    def integrated(self) -> float:
        """Frequency integral / 2 pi"""
        return float(trapezoid(self.values, self.omega) / (2.0 * np.pi))

    def peaks(self, rel_prominence: float = 1e-3) -> np.ndarray:
        """Lab-frame frequencies of local maxima more prominent than rel_prominence * max"""
        indices, _ = find_peaks(self.values, prominence=rel_prominence * float(np.max(self.values)))
        return self.omega[indices]

    def value_at(self, omega: float) -> float:
        return float(np.interp(omega, self.omega, self.values))


def detection_grid(tau_grid: np.ndarray, omega_i: float) -> np.ndarray:
    """
    Lab-frame grid spanning the full Nyquist band of tau_grid with 2n+1 points

    On this grid the trapezoid integral of the spectrum equals the connected
    correlator at tau = 0 exactly.
    """
    tau = np.asarray(tau_grid, dtype=float)
    half_band = np.pi * Config.HBAR_MEV_PS / (tau[1] - tau[0])
    return omega_i + np.linspace(-half_band, half_band, 2 * len(tau) + 1)


def connected_correlator(
    L: Liouvillian, rho_ss: DensityMatrix, pol: PolarizationOps, tau_grid: np.ndarray
) -> CorrelatorSeries:
    """<P-(0) P+(tau)> - <P-><P+>"""
    series = two_time_correlator(L, rho_ss, [pol.minus], [pol.plus], tau_grid, labels=("P-", "P+"))
    coherent = abs(expectation(rho_ss, pol.plus)) ** 2
    return CorrelatorSeries(series.tau, series.values - coherent, labels=("P-", "P+", "connected"))


def _negative_ripple(values: np.ndarray) -> float:
    peak = float(np.max(values))
    return max(0.0, -float(np.min(values)) / peak) if peak > 0 else 0.0


def _transform(series: CorrelatorSeries, weights: np.ndarray, frame_frequency: float, omega: np.ndarray) -> np.ndarray:
    hbar = Config.HBAR_MEV_PS
    weighted = weights * series.values * series.step / hbar
    phase_rate = 1j * series.tau / hbar

    values = np.empty(len(omega))
    for start in range(0, len(omega), CHUNK_ROWS):
        detuning = omega[start : start + CHUNK_ROWS] - frame_frequency
        kernel = np.exp(np.outer(detuning, phase_rate))
        values[start : start + CHUNK_ROWS] = 2.0 * (kernel @ weighted).real
    return values


def spectrum_from_correlator(
    series: CorrelatorSeries,
    frame_frequency: float,
    omega_s: Optional[np.ndarray] = None,
    window: Optional[str] = None,
) -> Spectrum:
    """
    S(w) = 2 Re sum_k w_k C(tau_k) exp(i (w - w_i) tau_k / hbar) dtau / hbar

    Trapezoid weights w_k. A Hann taper is applied to the last half of the delays
    only when the plain transform dips below zero by more than 1% of its peak.

    Args:
        series: Connected correlator
        frame_frequency: Rotating-frame (drive) frequency [meV]
        omega_s: Lab-frame detection frequencies [meV]; defaults to the Nyquist grid
        window: Force "none" or "hann-tail" instead of choosing from the ripple

    Returns:
        Spectrum

    Raises:
        GridError: Correlator tail above 1e-4 of its initial value
    """
    tail = abs(series.values[-1])
    head = abs(series.values[0])
    if tail > Config.TAIL_TOLERANCE * head:
        raise GridError(
            f"correlator has not decayed at tau_max = {series.tau[-1]:.4g} ps "
            f"(|C(tau_max)| / |C(0)| = {tail / head:.2e}); extend the delay grid"
        )

    omega = detection_grid(series.tau, frame_frequency) if omega_s is None else np.asarray(omega_s, dtype=float)
    weights = np.ones(len(series))
    weights[0] = weights[-1] = 0.5

    if window is None:
        values = _transform(series, weights, frame_frequency, omega)
        ripple = _negative_ripple(values)
        if ripple <= RIPPLE_LIMIT:
            return Spectrum(omega=omega, values=values, window="none", ripple=ripple)
        logger.warning(f"Spectrum ripple {ripple:.2%} of peak; applying a Hann taper to the delay tail")
        window = "hann-tail"

    if window == "hann-tail":
        taper_length = int(TAPER_FRACTION * len(series))
        taper = np.ones(len(series))
        taper[-taper_length:] = hann(2 * taper_length, sym=False)[taper_length:]
        weights = weights * taper
    elif window != "none":
        raise ValueError(f"unknown spectrum window '{window}'")

    values = _transform(series, weights, frame_frequency, omega)
    return Spectrum(omega=omega, values=values, window=window, ripple=_negative_ripple(values))


def fluorescence_spectrum(
    L: Liouvillian,
    rho_ss: DensityMatrix,
    pol: PolarizationOps,
    tau_grid: np.ndarray,
    omega_s: Optional[np.ndarray] = None,
) -> Spectrum:
    """
    Incoherent fluorescence spectrum of the steady state

    Args:
        L: Lindblad generator (rotating at the drive frequency)
        rho_ss: Steady state of L
        pol: Polarization operators
        tau_grid: Uniform delays starting at 0 [ps]
        omega_s: Lab-frame detection frequencies [meV]; defaults to detection_grid

    Returns:
        Spectrum
    """
    series = connected_correlator(L, rho_ss, pol, tau_grid)
    spectrum = spectrum_from_correlator(series, L.frame_frequency, omega_s)
    logger.debug(f"Fluorescence spectrum: {len(spectrum.omega)} points, window {spectrum.window}")
    return spectrum

"""
Location and characterisation of the Fano dip/peak pair in a scattering scan
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import argrelextrema

from ..errors import NotFoundError
from ..observables.scattering import solve_scattering
from ..quantum.liouvillian import SystemParams
from ..semiclassical.mean_field import mnp_only_intensity

logger = logging.getLogger(__name__)


def _extrema_indices(omega: np.ndarray, intensity: np.ndarray, omega_x: float) -> Tuple[int, int]:
    minima = argrelextrema(intensity, np.less)[0]
    maxima = argrelextrema(intensity, np.greater)[0]
    if len(minima) == 0 or len(maxima) == 0:
        raise NotFoundError(f"scan has {len(minima)} local minima and {len(maxima)} local maxima; no Fano pair")

    dip = int(minima[np.argmin(np.abs(omega[minima] - omega_x))])
    peak = int(maxima[np.argmin(np.abs(maxima - dip))])
    return dip, peak


def locate_fano_extrema(omega_i: np.ndarray, intensity: np.ndarray, omega_x: float) -> Tuple[float, float]:
    """
    Local minimum of the scan nearest omega_x and the local maximum adjacent to it

    Args:
        omega_i: Drive frequencies, ascending [meV]
        intensity: Scattering intensity at each frequency
        omega_x: Exciton energy [meV]

    Returns:
        (omega_dip, omega_peak) [meV]

    Raises:
        NotFoundError: No local minimum or no local maximum in the scan
    """
    omega = np.asarray(omega_i, dtype=float)
    values = np.asarray(intensity, dtype=float)
    dip, peak = _extrema_indices(omega, values, omega_x)
    logger.info(f"Fano dip at {omega[dip]:.4f} meV, peak at {omega[peak]:.4f} meV (scan resolution)")
    return float(omega[dip]), float(omega[peak])


def refine_fano_extrema(
    omega_i: np.ndarray,
    intensity: np.ndarray,
    omega_x: float,
    intensity_fn: Callable[[float], float],
    xatol: float = 1e-6,
) -> Tuple[float, float]:
    """
    Polish scan-located extrema by bounded scalar minimisation between neighbouring scan points

    Args:
        omega_i: Scan drive frequencies, ascending [meV]
        intensity: Scan intensities
        omega_x: Exciton energy [meV]
        intensity_fn: Intensity as a function of drive frequency
        xatol: Absolute frequency tolerance [meV]

    Returns:
        (omega_dip, omega_peak) [meV]
    """
    omega = np.asarray(omega_i, dtype=float)
    dip, peak = _extrema_indices(omega, np.asarray(intensity, dtype=float), omega_x)

    dip_fit = minimize_scalar(intensity_fn, bounds=(omega[dip - 1], omega[dip + 1]), method="bounded", options={"xatol": xatol})
    peak_fit = minimize_scalar(
        lambda w: -intensity_fn(w), bounds=(omega[peak - 1], omega[peak + 1]), method="bounded", options={"xatol": xatol}
    )
    logger.info(f"Refined Fano dip {dip_fit.x:.6f} meV, peak {peak_fit.x:.6f} meV")
    return float(dip_fit.x), float(peak_fit.x)


def quantum_intensity(p: SystemParams, n_max: int) -> Callable[[float], float]:
    """Full-quantum I_s as a function of the drive frequency"""

    def intensity(omega_i: float) -> float:
        return solve_scattering(p.with_drive(omega_i=float(omega_i)), n_max)[1].I_s

    return intensity


@dataclass(frozen=True)
class FanoFeature:
    """Dip/peak intensities against the MNP-only baseline [mu^2]"""

    omega_dip: float
    omega_peak: float
    I_dip: float
    I_peak: float
    base_dip: float
    base_peak: float

    @property
    def suppression(self) -> float:
        """1 - I_dip / I_base"""
        return 1.0 - self.I_dip / self.base_dip

    @property
    def contrast(self) -> float:
        """(I_peak - I_dip) / I_base"""
        return (self.I_peak - self.I_dip) / self.base_dip

    @property
    def interferes(self) -> bool:
        return self.I_dip < self.base_dip and self.I_peak > self.base_peak


def fano_feature(
    p: SystemParams, omega_dip: float, omega_peak: float, intensity_fn: Callable[[float], float]
) -> FanoFeature:
    """Evaluate intensities and MNP-only baselines at a dip/peak pair"""
    return FanoFeature(
        omega_dip=omega_dip,
        omega_peak=omega_peak,
        I_dip=float(intensity_fn(omega_dip)),
        I_peak=float(intensity_fn(omega_peak)),
        base_dip=mnp_only_intensity(p, omega_dip),
        base_peak=mnp_only_intensity(p, omega_peak),
    )

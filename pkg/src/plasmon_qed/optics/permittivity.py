"""
Tabulated metal permittivity: ingestion, interpolation and SP resonance search
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect

from ..errors import (
    ConvergenceError,
    NoResonanceError,
    OutOfDomainError,
    TableParseError,
    TableValidationError,
)
from ..utils.file_utils import trim_bom

logger = logging.getLogger(__name__)

CSV_HEADER = ["energy_ev", "eps_re", "eps_im"]
MIN_ROWS = 4
RESONANCE_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class PermittivityTable:
    """Complex metal permittivity tabulated against photon energy [eV]"""

    energies: np.ndarray
    eps_re: np.ndarray
    eps_im: np.ndarray
    source: str = "unknown"
    _re_interp: PchipInterpolator = field(init=False, repr=False)
    _im_interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float)
        eps_re = np.array(self.eps_re, dtype=float)
        eps_im = np.array(self.eps_im, dtype=float)

        if not (energies.ndim == 1 and energies.shape == eps_re.shape == eps_im.shape):
            raise TableValidationError("energies, eps_re and eps_im must be 1-D arrays of equal length")
        if len(energies) < MIN_ROWS:
            raise TableValidationError(f"table has {len(energies)} rows, at least {MIN_ROWS} required")
        if not np.all(np.isfinite(energies)) or not np.all(np.isfinite(eps_re)) or not np.all(np.isfinite(eps_im)):
            raise TableValidationError("table contains non-finite values")

        steps = np.diff(energies)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0)) + 1
            raise TableValidationError(f"energies not strictly increasing at row {bad + 1} ({energies[bad]} eV)")

        if np.any(eps_im < 0):
            bad = int(np.argmax(eps_im < 0))
            raise TableValidationError(f"Im eps_m < 0 at {energies[bad]} eV (passive medium required)")

        for array in (energies, eps_re, eps_im):
            array.setflags(write=False)

        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "eps_re", eps_re)
        object.__setattr__(self, "eps_im", eps_im)
        object.__setattr__(self, "_re_interp", PchipInterpolator(energies, eps_re, extrapolate=False))
        object.__setattr__(self, "_im_interp", PchipInterpolator(energies, eps_im, extrapolate=False))

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def energy_range(self) -> Tuple[float, float]:
        """Tabulated energy span [eV]"""
        return float(self.energies[0]), float(self.energies[-1])

    def _check_domain(self, energy_ev: np.ndarray) -> None:
        low, high = self.energy_range
        if np.any(energy_ev < low) or np.any(energy_ev > high):
            raise OutOfDomainError(
                f"energy outside the tabulated range [{low}, {high}] eV of '{self.source}' (no extrapolation)"
            )


def load_permittivity_table(path: Path) -> PermittivityTable:
    """
    Load a permittivity CSV with header `energy_ev,eps_re,eps_im`

    Args:
        path: Path to the CSV file

    Returns:
        Validated PermittivityTable

    Raises:
        TableParseError: Missing header or malformed row (line number included)
        TableValidationError: Non-monotone energies, too few rows or Im eps < 0
    """
    path = Path(path)
    logger.info(f"Loading permittivity table from {path}")

    rows: List[Tuple[float, float, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        for line_number, record in enumerate(reader, start=1):
            if line_number == 1:
                header = [trim_bom(column.strip()) for column in record]
                if header != CSV_HEADER:
                    raise TableParseError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}", line_number)
                continue
            if not record or all(not column.strip() for column in record):
                continue
            if len(record) != 3:
                raise TableParseError(f"expected 3 columns, got {len(record)}", line_number)
            try:
                rows.append(tuple(float(column) for column in record))  # type: ignore[arg-type]
            except ValueError as e:
                raise TableParseError(f"non-numeric value ({e})", line_number) from e

    if not rows:
        raise TableValidationError(f"no data rows in {path}")

    data = np.array(rows, dtype=float)
    table = PermittivityTable(data[:, 0], data[:, 1], data[:, 2], source=path.stem)

    low, high = table.energy_range
    logger.info(f"Permittivity table '{table.source}' loaded: {len(table)} rows, {low:.2f}-{high:.2f} eV")
    return table


def permittivity(table: PermittivityTable, energy_ev):
    """
    Interpolated complex permittivity eps_m(omega)

    Args:
        table: Permittivity table
        energy_ev: Photon energy [eV], scalar or array

    Returns:
        Complex permittivity (complex for scalars, complex ndarray otherwise)

    Raises:
        OutOfDomainError: Energy outside the tabulated range
    """
    energy = np.asarray(energy_ev, dtype=float)
    table._check_domain(energy)
    value = table._re_interp(energy) + 1j * table._im_interp(energy)
    if value.ndim == 0:
        return complex(value)
    return value


def permittivity_slope(table: PermittivityTable, energy_ev: float) -> float:
    """Analytic derivative d Re eps_m / d omega of the interpolant [1/eV]"""
    energy = np.asarray(energy_ev, dtype=float)
    table._check_domain(energy)
    return float(table._re_interp(energy, 1))


def find_sp_resonance(table: PermittivityTable, eps_b: float) -> float:
    """
    Locate the SP dipole resonance Re eps_m(omega_sp) = -2 eps_b

    Brackets every sign change of Re eps_m + 2 eps_b between table nodes and bisects the
    interpolant. The lowest-energy root is the dipole resonance.

    Args:
        table: Permittivity table
        eps_b: Background permittivity

    Returns:
        omega_sp [eV]

    Raises:
        NoResonanceError: No sign change inside the table
        ConvergenceError: Bisection residual above 1e-10
    """

    def condition(energy: float) -> float:
        return float(table._re_interp(energy)) + 2.0 * eps_b

    nodes = table.energies
    values = table.eps_re + 2.0 * eps_b

    roots: List[float] = []
    for k in range(len(nodes) - 1):
        left, right = values[k], values[k + 1]
        if left == 0.0:
            roots.append(float(nodes[k]))
        elif left * right < 0.0:
            roots.append(bisect(condition, nodes[k], nodes[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))
    if values[-1] == 0.0:
        roots.append(float(nodes[-1]))

    if not roots:
        raise NoResonanceError(f"Re eps_m + 2*{eps_b} never changes sign in '{table.source}'")

    if len(roots) > 1:
        listed = ", ".join(f"{root:.6f}" for root in roots)
        logger.warning(f"Resonance condition has {len(roots)} roots ({listed} eV), using the lowest")

    omega_sp = roots[0]
    residual = abs(condition(omega_sp))
    if residual >= RESONANCE_TOLERANCE:
        raise ConvergenceError("SP resonance bisection did not converge", residual)

    logger.debug(f"SP resonance at {omega_sp:.9f} eV (residual {residual:.2e})")
    return omega_sp

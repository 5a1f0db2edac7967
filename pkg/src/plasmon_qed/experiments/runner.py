"""
Experiment runner: sweeps, worker pool dispatch and result files
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import __version__
from ..config import Config
from ..errors import NotFoundError, SimulationError
from ..observables.correlations import g2_incoherent, g2_scattered, g2_zero
from ..observables.polarization import PolarizationOps, polarization_for
from ..observables.scattering import scattering_intensities, two_photon_numerator
from ..observables.spectrum import connected_correlator, spectrum_from_correlator
from ..optics.coupling import dipole_moment_debye, effective_qd_damping, local_field_factor
from ..optics.quasi_mode import QuasiModeParams
from ..quantum.dynamics import (
    converge_fock_cutoff,
    default_tau_grid,
    recovery_time,
    steady_state,
    steady_state_residual,
)
from ..quantum.liouvillian import Liouvillian, SystemParams, build_system_liouvillian, liouvillian_spectrum_gap
from ..quantum.space import DensityMatrix, HilbertSpace, SystemOperators, build_system_operators, expectation
from ..semiclassical.mean_field import mean_field_steady_state, mnp_only_intensity, weak_drive_response
from ..utils.file_utils import format_value, write_failures, write_meta, write_results_csv
from .config import ExperimentConfig
from .fano import fano_feature, quantum_intensity, refine_fano_extrema
from .settings import build_system_params, resolve_quasi_mode

logger = logging.getLogger(__name__)

Row = Tuple[float, ...]


@dataclass(frozen=True)
class SweepContext:
    """Everything a worker needs to evaluate one sweep point"""

    cfg: ExperimentConfig
    q: QuasiModeParams
    n_max: int = 0


@dataclass(frozen=True)
class PointJob:
    """Column layout and evaluation of one sweep point"""

    columns: Tuple[str, ...]
    coordinates: Callable[[SweepContext, Any], Row]
    compute: Callable[[SweepContext, Any], Tuple[Row, float]]


@dataclass(frozen=True)
class PointOutcome:
    index: int
    row: Row
    error: Optional[str] = None
    residual: float = 0.0


@dataclass
class ExperimentResult:
    """Rows, failures and metadata of one experiment run"""

    kind: str
    columns: Tuple[str, ...]
    rows: List[Row]
    failures: List[Tuple[int, str, str]] = field(default_factory=list)
    meta: Dict[str, str] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.failures:
            return "ok"
        if len(self.failures) >= len(self.rows):
            return "failed"
        return "partial"


@dataclass(frozen=True)
class SteadySolution:
    ops: SystemOperators
    L: Liouvillian
    rho: DensityMatrix
    pol: PolarizationOps
    residual: float


def solve_steady(p: SystemParams, n_max: int) -> SteadySolution:
    """Operators, generator, steady state and polarization for p on cutoff n_max"""
    space = HilbertSpace(n_max)
    ops = build_system_operators(space)
    L = build_system_liouvillian(p, space, ops)
    rho = steady_state(L)
    return SteadySolution(ops=ops, L=L, rho=rho, pol=polarization_for(p, ops), residual=steady_state_residual(L, rho))


def scattered_intensity(p: SystemParams, space: HilbertSpace) -> float:
    """Fock-convergence observable: full-quantum I_s"""
    sol = solve_steady(p, space.n_max)
    return scattering_intensities(sol.rho, sol.pol).I_s


# Sweep point evaluations (module level so worker processes can unpickle them)


def _distance_coordinates(ctx: SweepContext, R_nm: float) -> Row:
    return (float(R_nm),)


def _coupling_point(ctx: SweepContext, R_nm: float) -> Tuple[Row, float]:
    p = build_system_params(ctx.cfg, ctx.q, R_nm=R_nm)
    damping = effective_qd_damping(p.g, ctx.q, p.omega_x)
    enhancement = abs(local_field_factor(p.coupling, ctx.q, p.omega_x))
    return (p.g, p.coupling.field, p.coupling.chi_over_mu, damping, enhancement), 0.0


def _map_coordinates(ctx: SweepContext, point: Tuple[float, float]) -> Row:
    return (float(point[0]), float(point[1]))


def _damping_point(ctx: SweepContext, point: Tuple[float, float]) -> Tuple[Row, float]:
    R_nm, detuning = point
    p = build_system_params(ctx.cfg, ctx.q, R_nm=R_nm, detuning=detuning)
    return (p.g, effective_qd_damping(p.g, ctx.q, p.omega_x)), 0.0


def _offset_coordinates(ctx: SweepContext, offset: float) -> Row:
    omega_x = ctx.q.omega_sp + ctx.cfg.detuning
    return (omega_x + float(offset), float(offset))


def _scattering_point(ctx: SweepContext, offset: float) -> Tuple[Row, float]:
    p = build_system_params(ctx.cfg, ctx.q, offset=offset)
    sol = solve_steady(p, ctx.n_max)
    result = scattering_intensities(sol.rho, sol.pol, p.drive.omega_i)
    population = expectation(sol.rho, sol.ops.n_x).real
    row = (
        result.I_s,
        result.I_coh,
        result.I_incoh,
        mnp_only_intensity(p),
        weak_drive_response(p).intensity,
        population,
    )
    return row, sol.residual


def _rabi_coordinates(ctx: SweepContext, rabi: float) -> Row:
    return (float(rabi),)


def _power_point(ctx: SweepContext, rabi: float) -> Tuple[Row, float]:
    p = build_system_params(ctx.cfg, ctx.q, rabi=rabi)
    sol = solve_steady(p, ctx.n_max)
    result = scattering_intensities(sol.rho, sol.pol, p.drive.omega_i)

    bare = solve_steady(p.without_mnp(), 1)
    bare_result = scattering_intensities(bare.rho, bare.pol, p.drive.omega_i)

    row = (
        result.I_s,
        result.I_coh,
        result.I_incoh,
        expectation(sol.rho, sol.ops.n_x).real,
        mean_field_steady_state(p).population,
        bare_result.I_incoh,
    )
    return row, max(sol.residual, bare.residual)


def _g2_scan_point(ctx: SweepContext, offset: float) -> Tuple[Row, float]:
    p = build_system_params(ctx.cfg, ctx.q, offset=offset)
    sol = solve_steady(p, ctx.n_max)
    I_s = scattering_intensities(sol.rho, sol.pol).I_s
    numerator = two_photon_numerator(sol.rho, sol.pol)
    return (I_s, numerator, I_s**2, g2_zero(sol.rho, sol.pol)), sol.residual


def _cutoff_coordinates(ctx: SweepContext, n_max: int) -> Row:
    return (int(n_max),)


def _convergence_point(ctx: SweepContext, n_max: int) -> Tuple[Row, float]:
    p = build_system_params(ctx.cfg, ctx.q)
    sol = solve_steady(p, int(n_max))
    result = scattering_intensities(sol.rho, sol.pol)
    return (result.I_s, result.I_incoh, expectation(sol.rho, sol.ops.n_sp).real, sol.residual), sol.residual


COUPLING_JOB = PointJob(
    ("R_nm", "g_meV", "field_V_per_m", "chi_over_mu", "gamma_eff_meV", "local_field_abs"),
    _distance_coordinates,
    _coupling_point,
)
DAMPING_JOB = PointJob(("R_nm", "detuning_meV", "g_meV", "gamma_eff_meV"), _map_coordinates, _damping_point)
SCATTERING_JOB = PointJob(
    ("omega_i_meV", "offset_meV", "I_s", "I_coh", "I_incoh", "I_mnp", "I_linear", "population"),
    _offset_coordinates,
    _scattering_point,
)
POWER_JOB = PointJob(
    (
        "rabi_meV",
        "I_s",
        "I_coh",
        "I_incoh",
        "population",
        "population_mean_field",
        "I_incoh_bare",
    ),
    _rabi_coordinates,
    _power_point,
)
G2_SCAN_JOB = PointJob(
    ("omega_i_meV", "offset_meV", "I_s", "numerator", "I_s_squared", "g2_zero"),
    _offset_coordinates,
    _g2_scan_point,
)
CONVERGENCE_JOB = PointJob(("n_max", "I_s", "I_incoh", "n_sp", "residual"), _cutoff_coordinates, _convergence_point)


def _run_point(job: PointJob, ctx: SweepContext, item: Tuple[int, Any]) -> PointOutcome:
    index, value = item
    coordinates = job.coordinates(ctx, value)
    try:
        values, residual = job.compute(ctx, value)
    except SimulationError as e:
        filler = (math.nan,) * (len(job.columns) - len(coordinates))
        return PointOutcome(index, coordinates + filler, f"{type(e).__name__}: {e}", math.nan)
    return PointOutcome(index, coordinates + tuple(values), None, residual)


def map_points(job: PointJob, ctx: SweepContext, values: Sequence[Any], workers: int) -> List[PointOutcome]:
    """
    Evaluate every sweep point, in a process pool when workers > 1

    Outcomes come back in sweep order whatever the completion order.
    """
    items = list(enumerate(values))
    run = partial(_run_point, job, ctx)
    total = len(items)

    if workers <= 1 or total < 2:
        outcomes = (run(item) for item in items)
        return _collect(outcomes, total)

    with ProcessPoolExecutor(max_workers=min(workers, total)) as executor:
        return _collect(executor.map(run, items), total)


def _collect(outcomes, total: int) -> List[PointOutcome]:
    collected = []
    for outcome in outcomes:
        collected.append(outcome)
        position = f"[{outcome.index + 1}/{total}]"
        if outcome.error:
            logger.error(f"{position} sweep point {format_value(outcome.row[0])} failed: {outcome.error}")
        else:
            logger.info(f"{position} sweep point {format_value(outcome.row[0])} done")
    return collected


def _failures(outcomes: List[PointOutcome], columns: Sequence[str]) -> List[Tuple[int, str, str]]:
    return [
        (outcome.index, f"{columns[0]}={format_value(outcome.row[0])}", outcome.error)
        for outcome in outcomes
        if outcome.error
    ]


def _max_residual(outcomes: List[PointOutcome]) -> float:
    residuals = [outcome.residual for outcome in outcomes if not outcome.error]
    return max(residuals) if residuals else math.nan


def resolve_cutoff(cfg: ExperimentConfig, worst: SystemParams, meta: Dict[str, str]) -> int:
    """Configured Fock cutoff, or the converged one at the most demanding sweep point"""
    if cfg.n_max is not None:
        meta["solver.n_max_used"] = str(cfg.n_max)
        return cfg.n_max
    n_max, value = converge_fock_cutoff(worst, scattered_intensity, tol=cfg.fock_tol, cap=cfg.fock_cap)
    meta["solver.n_max_used"] = f"{n_max} (auto, I_s = {format_value(value)} at omega_i = {format_value(worst.drive.omega_i)})"
    return n_max


def tau_grid(cfg: ExperimentConfig, p: SystemParams) -> np.ndarray:
    if cfg.tau_max is None:
        return default_tau_grid(p, points=cfg.tau_points)
    return np.linspace(0.0, cfg.tau_max, cfg.tau_points)


def _sweep_result(
    cfg: ExperimentConfig, job: PointJob, ctx: SweepContext, values: Sequence[Any], workers: int, meta: Dict[str, str]
) -> ExperimentResult:
    outcomes = map_points(job, ctx, values, workers)
    meta["solver.max_residual"] = format_value(_max_residual(outcomes))
    return ExperimentResult(
        kind=cfg.kind,
        columns=job.columns,
        rows=[outcome.row for outcome in outcomes],
        failures=_failures(outcomes, job.columns),
        meta=meta,
    )


def _most_demanding_offset(cfg: ExperimentConfig, q: QuasiModeParams, offsets: np.ndarray) -> SystemParams:
    """Sweep point driven closest to the SP resonance (largest SP occupation)"""
    target = -cfg.detuning
    offset = float(offsets[np.argmin(np.abs(offsets - target))])
    return build_system_params(cfg, q, offset=offset)


# Experiment kinds


def _run_coupling(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    return _sweep_result(cfg, COUPLING_JOB, SweepContext(cfg, q), cfg.sweep.values(), workers, meta)


def _run_damping_map(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    points = [(R, detuning) for R in cfg.sweep.values() for detuning in cfg.sweep2.values()]
    return _sweep_result(cfg, DAMPING_JOB, SweepContext(cfg, q), points, workers, meta)


def _run_scattering(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    offsets = cfg.sweep.values()
    n_max = resolve_cutoff(cfg, _most_demanding_offset(cfg, q, offsets), meta)
    return _sweep_result(cfg, SCATTERING_JOB, SweepContext(cfg, q, n_max), offsets, workers, meta)


def _run_power_series(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    rabis = cfg.sweep.values()
    n_max = resolve_cutoff(cfg, build_system_params(cfg, q, rabi=float(np.max(rabis))), meta)
    result = _sweep_result(cfg, POWER_JOB, SweepContext(cfg, q, n_max), rabis, workers, meta)

    meta["enhancement.definition"] = "max over the sweep of I_incoh / max over the sweep of I_incoh_bare"
    meta.update(peak_enhancement(result.columns, result.rows))
    return result


def peak_enhancement(columns: Sequence[str], rows: Sequence[Row]) -> Dict[str, str]:
    """
    Ratio of the peak incoherent emission with the MNP to the peak without it

    The two peaks may sit at different Rabi energies. Failed (nan) rows are skipped.

    Returns:
        Metadata entries, empty when either curve has no finite positive value
    """
    table = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    rabi = table[:, columns.index("rabi_meV")]
    hybrid = table[:, columns.index("I_incoh")]
    bare = table[:, columns.index("I_incoh_bare")]

    hybrid = np.where(np.isfinite(hybrid), hybrid, -np.inf)
    bare = np.where(np.isfinite(bare), bare, -np.inf)
    if len(rows) == 0 or not np.max(hybrid) > 0 or not np.max(bare) > Config.MIN_INTENSITY:
        logger.warning("No finite incoherent peak in the power series, enhancement not reported")
        return {}

    i, j = int(np.argmax(hybrid)), int(np.argmax(bare))
    ratio = float(hybrid[i] / bare[j])
    logger.info(f"Peak incoherent enhancement {ratio:.4g} (hybrid peak at {rabi[i]:.4g} meV, bare at {rabi[j]:.4g} meV)")
    return {
        "enhancement.peak_ratio": format_value(ratio),
        "enhancement.rabi_peak_meV": format_value(float(rabi[i])),
        "enhancement.rabi_peak_bare_meV": format_value(float(rabi[j])),
        "enhancement.I_incoh_peak": format_value(float(hybrid[i])),
        "enhancement.I_incoh_bare_peak": format_value(float(bare[j])),
    }


def _run_g2_scan(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    offsets = cfg.sweep.values()
    n_max = resolve_cutoff(cfg, _most_demanding_offset(cfg, q, offsets), meta)
    result = _sweep_result(cfg, G2_SCAN_JOB, SweepContext(cfg, q, n_max), offsets, workers, meta)

    g2 = np.array([row[-1] for row in result.rows], dtype=float)
    finite = g2[np.isfinite(g2) & (g2 > 0)]
    if len(finite) >= 2:
        meta["g2.max_over_min"] = format_value(float(np.max(finite) / np.min(finite)))
    return result


def _run_rf_spectrum(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    p = build_system_params(cfg, q)
    n_max = resolve_cutoff(cfg, p, meta)
    sol = solve_steady(p, n_max)
    tau = tau_grid(cfg, p)

    series = connected_correlator(sol.L, sol.rho, sol.pol, tau)
    full = spectrum_from_correlator(series, sol.L.frame_frequency)
    offsets = cfg.sweep.values()
    spectrum = spectrum_from_correlator(series, sol.L.frame_frequency, p.omega_x + offsets, window=full.window)

    I_incoh = float(series.values[0].real)
    meta["solver.max_residual"] = format_value(sol.residual)
    meta["tau.max_ps"] = format_value(float(tau[-1]))
    meta["tau.points"] = str(len(tau))
    meta["spectrum.window"] = full.window
    meta["spectrum.negative_ripple"] = format_value(full.ripple)
    meta["spectrum.sum_rule"] = format_value(full.integrated())
    meta["spectrum.I_incoh"] = format_value(I_incoh)
    meta["spectrum.peaks_meV"] = " ".join(format_value(float(w)) for w in full.peaks())
    logger.info(f"Spectrum sum rule {full.integrated():.6e} vs I_incoh {I_incoh:.6e}")

    rows = [(float(w), float(o), float(s)) for w, o, s in zip(spectrum.omega, offsets, spectrum.values)]
    return ExperimentResult(kind=cfg.kind, columns=("omega_s_meV", "offset_meV", "S"), rows=rows, meta=meta)


def _locate_drive(cfg: ExperimentConfig, q: QuasiModeParams, p: SystemParams, n_max: int, workers: int, meta: Dict[str, str]) -> SystemParams:
    offsets = cfg.locate_axis.values()
    outcomes = map_points(SCATTERING_JOB, SweepContext(cfg, q, n_max), offsets, workers)
    failed = [outcome for outcome in outcomes if outcome.error]
    if failed:
        raise NotFoundError(f"Fano scan failed at {len(failed)} points: {failed[0].error}")

    omegas = np.array([outcome.row[0] for outcome in outcomes])
    intensity = np.array([outcome.row[2] for outcome in outcomes])
    intensity_fn = quantum_intensity(p, n_max)
    omega_dip, omega_peak = refine_fano_extrema(omegas, intensity, p.omega_x, intensity_fn)
    feature = fano_feature(p, omega_dip, omega_peak, intensity_fn)

    meta["fano.omega_dip_meV"] = format_value(feature.omega_dip)
    meta["fano.omega_peak_meV"] = format_value(feature.omega_peak)
    meta["fano.suppression"] = format_value(feature.suppression)
    meta["fano.contrast"] = format_value(feature.contrast)
    return p.with_drive(omega_i=omega_dip if cfg.locate == "dip" else omega_peak)


def _run_g2_trace(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    p = build_system_params(cfg, q)
    n_max = resolve_cutoff(cfg, p, meta)
    if cfg.locate != "none":
        p = _locate_drive(cfg, q, p, n_max, workers, meta)
    meta["drive.omega_i_used_meV"] = format_value(p.drive.omega_i)

    sol = solve_steady(p, n_max)
    tau = tau_grid(cfg, p)
    if cfg.trace_observable == "incoherent":
        series = g2_incoherent(sol.L, sol.rho, sol.ops, tau)
    else:
        series = g2_scattered(sol.L, sol.rho, sol.pol, tau)
        meta["g2.zero_direct"] = format_value(g2_zero(sol.rho, sol.pol))

    meta["solver.max_residual"] = format_value(sol.residual)
    meta["g2.zero"] = format_value(float(series.real[0]))
    meta["g2.recovery_time_ps"] = format_value(recovery_time(series))
    rows = [(float(t), float(v)) for t, v in zip(series.tau, series.real)]
    return ExperimentResult(kind=cfg.kind, columns=("tau_ps", "g2"), rows=rows, meta=meta)


def _run_convergence(cfg: ExperimentConfig, q: QuasiModeParams, workers: int, meta: Dict[str, str]) -> ExperimentResult:
    cutoffs = []
    n_max = Config.FOCK_START
    while n_max <= cfg.fock_cap:
        cutoffs.append(n_max)
        n_max *= 2

    p = build_system_params(cfg, q)
    gap = liouvillian_spectrum_gap(build_system_liouvillian(p, HilbertSpace(cutoffs[0])))
    meta["spectrum_gap.second_per_ps"] = format_value(gap.second)
    meta["spectrum_gap.radius_per_ps"] = format_value(gap.radius)
    meta["spectrum_gap.unique"] = str(gap.unique_steady_state).lower()

    result = _sweep_result(cfg, CONVERGENCE_JOB, SweepContext(cfg, q), cutoffs, workers, meta)
    rows = []
    previous = math.nan
    for row in result.rows:
        I_s = row[1]
        change = abs(I_s - previous) / abs(I_s) if math.isfinite(previous) and I_s != 0 else math.nan
        rows.append(row + (change,))
        previous = I_s
    result.rows = rows
    result.columns = CONVERGENCE_JOB.columns + ("relative_change",)
    return result


RUNNERS: Dict[str, Callable[[ExperimentConfig, QuasiModeParams, int, Dict[str, str]], ExperimentResult]] = {
    "coupling-vs-distance": _run_coupling,
    "damping-map": _run_damping_map,
    "scattering-sweep": _run_scattering,
    "power-series": _run_power_series,
    "rf-spectrum": _run_rf_spectrum,
    "g2-scan": _run_g2_scan,
    "g2-trace": _run_g2_trace,
    "convergence-report": _run_convergence,
}


def _base_meta(cfg: ExperimentConfig) -> Dict[str, str]:
    meta = {"code_version": __version__}
    meta.update(cfg.resolved)
    meta["assumed"] = ", ".join(cfg.assumed) if cfg.assumed else "none"
    return meta


def _model_meta(cfg: ExperimentConfig, q: QuasiModeParams) -> Dict[str, str]:
    p = build_system_params(cfg, q)
    return {
        "quasi_mode.omega_sp_meV": format_value(q.omega_sp),
        "quasi_mode.gamma_sp_meV": format_value(q.gamma_sp),
        "quasi_mode.eta_meV": format_value(q.eta),
        "exciton.omega_x_meV": format_value(p.omega_x),
        "coupling.g_meV": format_value(p.g),
        "coupling.chi_over_mu": format_value(p.coupling.chi_over_mu),
        "coupling.field_V_per_m": format_value(p.coupling.field),
        "coupling.gamma_eff_meV": format_value(effective_qd_damping(p.g, q, p.omega_x)),
        "geometry.mu_debye": format_value(dipole_moment_debye(cfg.geometry.mu_enm)),
    }


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """
    Run one configured experiment and write results.csv, meta.txt and failures.txt

    The metadata sidecar is written even when the run fails. Failed sweep points
    leave nan rows in the results and a line in the failure manifest.

    Args:
        cfg: Resolved experiment config
        workers: Worker processes for sweeps (default: number of processors)

    Returns:
        ExperimentResult

    Raises:
        SimulationError: Setup failed or a single-shot experiment failed
    """
    workers = workers or os.cpu_count() or 1
    output_dir = Config.ensure_output_directory(cfg.output_dir)
    meta = _base_meta(cfg)
    logger.info(f"Running {cfg.kind} experiment '{cfg.name}' with {workers} worker(s)")

    try:
        q = resolve_quasi_mode(cfg)
        meta.update(_model_meta(cfg, q))
        result = RUNNERS[cfg.kind](cfg, q, workers, meta)

        write_results_csv(output_dir / Config.RESULTS_FILE, result.columns, result.rows)
        failures_path = output_dir / Config.FAILURES_FILE
        if result.failures:
            write_failures(failures_path, result.failures)
        elif failures_path.exists():
            failures_path.unlink()

        meta["rows"] = str(len(result.rows))
        meta["failed_points"] = str(len(result.failures))
        meta["status"] = result.status
        result.meta = meta
        return result
    except SimulationError as e:
        meta["status"] = "error"
        meta["error"] = f"{type(e).__name__}: {e}"
        raise
    finally:
        write_meta(output_dir / Config.META_FILE, meta)

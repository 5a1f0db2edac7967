import math
from pathlib import Path

import numpy as np
import pytest

from plasmon_qed.config import Config
from plasmon_qed.errors import NoResonanceError, ParameterError
from plasmon_qed.experiments import runner
from plasmon_qed.experiments.config import EXPERIMENT_KINDS, load_experiment_config
from plasmon_qed.experiments.runner import PointJob, run_experiment
from tests.conftest import write_table


def load(tmp_path: Path, text: str, name: str = "experiment.conf"):
    path = tmp_path / name
    path.write_text(text + "output.dir = out\n", encoding="utf-8")
    return load_experiment_config(path)


def read_results(directory: Path):
    lines = (directory / Config.RESULTS_FILE).read_text(encoding="utf-8").splitlines()
    columns = lines[0].split(",")
    rows = np.array([[float(value) for value in line.split(",")] for line in lines[1:]])
    return columns, rows


def read_meta(directory: Path):
    meta = {}
    for line in (directory / Config.META_FILE).read_text(encoding="utf-8").splitlines():
        key, value = line.split(" = ", 1)
        meta[key] = value
    return meta


COUPLING = "experiment.kind = coupling-vs-distance\nsweep.start = 10\nsweep.stop = 30\nsweep.count = 5\n"


def test_coupling_vs_distance(tmp_path):
    cfg = load(tmp_path, COUPLING)
    result = run_experiment(cfg, workers=1)
    assert result.status == "ok"

    columns, rows = read_results(cfg.output_dir)
    assert columns == list(runner.COUPLING_JOB.columns)
    assert len(rows) == cfg.expected_rows
    g = rows[:, 1]
    assert np.all(np.diff(g) < 0)
    assert np.all(rows[:, 4] > 0)
    assert not (cfg.output_dir / Config.FAILURES_FILE).exists()

    meta = read_meta(cfg.output_dir)
    assert meta["status"] == "ok"
    assert meta["rows"] == "5"
    assert meta["assumed"] == ", ".join(Config.ASSUMED_KEYS)
    assert float(meta["quasi_mode.omega_sp_meV"]) == pytest.approx(2872.0, abs=30.0)


def test_damping_map_rows(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = damping-map\nsweep.start = 12\nsweep.stop = 20\nsweep.count = 2\n"
        "sweep2.start = -100\nsweep2.stop = 100\nsweep2.count = 3\n",
    )
    run_experiment(cfg, workers=1)
    columns, rows = read_results(cfg.output_dir)
    assert columns == ["R_nm", "detuning_meV", "g_meV", "gamma_eff_meV"]
    assert len(rows) == 6
    assert list(rows[:3, 0]) == [12.0, 12.0, 12.0]
    assert list(rows[:3, 1]) == [-100.0, 0.0, 100.0]
    assert np.all(rows[:, 3] > 0)
    assert rows[1, 3] > rows[0, 3] and rows[1, 3] > rows[2, 3]


def test_scattering_sweep(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = scattering-sweep\nsweep.start = -2\nsweep.stop = 2\nsweep.count = 5\nsolver.n_max = 2\n",
    )
    result = run_experiment(cfg, workers=1)
    assert result.status == "ok"
    columns, rows = read_results(cfg.output_dir)
    assert columns[:2] == ["omega_i_meV", "offset_meV"]
    assert np.allclose(rows[:, 1], np.linspace(-2.0, 2.0, 5))
    I_s, I_coh, I_incoh = rows[:, 2], rows[:, 3], rows[:, 4]
    assert np.allclose(I_s, I_coh + I_incoh, rtol=1e-12)
    assert np.all(rows[:, 5] > 0)
    assert read_meta(cfg.output_dir)["solver.n_max_used"] == "2"


SMALL_CONFIGS = {
    "coupling-vs-distance": COUPLING,
    "damping-map": "experiment.kind = damping-map\nsweep.start = 12\nsweep.stop = 20\nsweep.count = 2\n"
    "sweep2.start = -100\nsweep2.stop = 100\nsweep2.count = 3\n",
    "scattering-sweep": "experiment.kind = scattering-sweep\nsweep.start = -2\nsweep.stop = 2\nsweep.count = 4\n"
    "solver.n_max = 2\n",
    "power-series": "experiment.kind = power-series\nexciton.detuning_meV = 0\nsweep.start = 0.1\nsweep.stop = 0.5\n"
    "sweep.count = 3\nsolver.n_max = 2\n",
    "rf-spectrum": "experiment.kind = rf-spectrum\nexciton.detuning_meV = 0\ndrive.rabi_meV = 0.5\n"
    "sweep.start = -5\nsweep.stop = 5\nsweep.count = 11\nsolver.n_max = 2\nsolver.tau_points = 256\nsolver.tau_max_ps = 8\n",
    "g2-scan": "experiment.kind = g2-scan\nsweep.start = -1\nsweep.stop = 1\nsweep.count = 3\nsolver.n_max = 2\n",
    "g2-trace": "experiment.kind = g2-trace\ndrive.locate = dip\nsolver.n_max = 3\nsolver.tau_points = 64\n"
    "solver.tau_max_ps = 5\n",
    "convergence-report": "experiment.kind = convergence-report\nsolver.fock_cap = 8\n",
}


def test_small_configs_cover_every_kind():
    assert set(SMALL_CONFIGS) == set(EXPERIMENT_KINDS)


@pytest.mark.parametrize("kind", sorted(SMALL_CONFIGS))
def test_pooled_run_is_byte_identical(tmp_path, kind):
    text = SMALL_CONFIGS[kind]
    serial = load(tmp_path, text, "serial.conf").with_overrides(output_dir=tmp_path / "serial")
    pooled = load(tmp_path, text, "pooled.conf").with_overrides(output_dir=tmp_path / "pooled")
    assert run_experiment(serial, workers=1).status == "ok"
    assert run_experiment(pooled, workers=2).status == "ok"
    first = (tmp_path / "serial" / Config.RESULTS_FILE).read_bytes()
    assert first == (tmp_path / "pooled" / Config.RESULTS_FILE).read_bytes()


def test_rerun_is_deterministic(tmp_path):
    cfg = load(tmp_path, COUPLING)
    run_experiment(cfg, workers=1)
    first = (cfg.output_dir / Config.RESULTS_FILE).read_bytes()
    run_experiment(cfg, workers=1)
    assert (cfg.output_dir / Config.RESULTS_FILE).read_bytes() == first


def test_power_series_enhancement(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = power-series\nexciton.detuning_meV = 0\n"
        "sweep.start = 1\nsweep.stop = 1.6\nsweep.count = 4\nsolver.n_max = auto\nsolver.fock_cap = 32\n",
    )
    result = run_experiment(cfg, workers=1)
    assert result.status == "ok"
    columns, rows = read_results(cfg.output_dir)
    assert "enhancement" not in columns
    population = rows[:, columns.index("population")]
    assert np.all((population > 0.3) & (population < 0.5))

    meta = read_meta(cfg.output_dir)
    assert "auto" in meta["solver.n_max_used"]
    assert meta["enhancement.definition"].startswith("max over the sweep")
    ratio = float(meta["enhancement.peak_ratio"])
    assert 130.0 < ratio < 520.0
    hybrid = rows[:, columns.index("I_incoh")]
    bare = rows[:, columns.index("I_incoh_bare")]
    assert ratio == pytest.approx(np.max(hybrid) / np.max(bare), rel=1e-12)
    assert float(meta["enhancement.rabi_peak_meV"]) in rows[:, 0]


def test_peak_enhancement_skips_failed_rows():
    columns = runner.POWER_JOB.columns
    nan_row = (2.0,) + (math.nan,) * (len(columns) - 1)
    rows = [
        (0.5, 1.0, 0.5, 40.0, 0.4, 0.4, 0.30),
        (1.0, 1.0, 0.5, 60.0, 0.4, 0.4, 0.45),
        (1.5, 1.0, 0.5, 50.0, 0.4, 0.4, 0.50),
        nan_row,
    ]
    meta = runner.peak_enhancement(columns, rows)
    assert float(meta["enhancement.peak_ratio"]) == pytest.approx(120.0)
    assert float(meta["enhancement.rabi_peak_meV"]) == 1.0
    assert float(meta["enhancement.rabi_peak_bare_meV"]) == 1.5
    assert runner.peak_enhancement(columns, [nan_row]) == {}


def test_g2_scan(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = g2-scan\nsweep.start = -1\nsweep.stop = 1\nsweep.count = 5\nsolver.n_max = 3\n",
    )
    run_experiment(cfg, workers=1)
    columns, rows = read_results(cfg.output_dir)
    g2 = rows[:, columns.index("g2_zero")]
    ratio = rows[:, columns.index("numerator")] / rows[:, columns.index("I_s_squared")]
    assert np.allclose(g2, ratio, rtol=1e-12)
    assert float(read_meta(cfg.output_dir)["g2.max_over_min"]) > 1.0


def test_g2_trace_at_located_dip(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = g2-trace\ndrive.locate = dip\nsolver.n_max = 8\nsolver.tau_points = 600\n",
    )
    result = run_experiment(cfg, workers=1)
    assert result.status == "ok"
    columns, rows = read_results(cfg.output_dir)
    assert columns == ["tau_ps", "g2"]
    assert len(rows) == 600
    assert rows[0, 0] == 0.0

    meta = read_meta(cfg.output_dir)
    assert float(meta["fano.suppression"]) > 0.5
    assert float(meta["g2.zero"]) > 1e2
    assert float(meta["g2.zero"]) == pytest.approx(float(meta["g2.zero_direct"]), rel=1e-6)
    omega_dip = float(meta["fano.omega_dip_meV"])
    assert float(meta["drive.omega_i_used_meV"]) == omega_dip
    assert abs(omega_dip - float(meta["exciton.omega_x_meV"])) < 1.0


def test_incoherent_trace_starts_at_zero(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = g2-trace\nexciton.detuning_meV = 0\ntrace.observable = incoherent\n"
        "solver.n_max = 3\nsolver.tau_points = 256\nsolver.tau_max_ps = 10\n",
    )
    run_experiment(cfg, workers=1)
    _, rows = read_results(cfg.output_dir)
    assert abs(rows[0, 1]) < 1e-8
    assert rows[-1, 1] == pytest.approx(1.0, abs=1e-3)
    assert "g2.zero_direct" not in read_meta(cfg.output_dir)


def test_rf_spectrum_sum_rule(tmp_path):
    cfg = load(
        tmp_path,
        "experiment.kind = rf-spectrum\nexciton.detuning_meV = 0\ndrive.rabi_meV = 0.5\n"
        "sweep.start = -20\nsweep.stop = 20\nsweep.count = 81\n"
        "solver.n_max = 6\nsolver.tau_points = 1024\nsolver.tau_max_ps = 8\n",
    )
    result = run_experiment(cfg, workers=1)
    assert result.status == "ok"
    columns, rows = read_results(cfg.output_dir)
    assert columns == ["omega_s_meV", "offset_meV", "S"]
    assert len(rows) == 81

    meta = read_meta(cfg.output_dir)
    assert float(meta["spectrum.sum_rule"]) == pytest.approx(float(meta["spectrum.I_incoh"]), rel=1e-8)
    assert meta["spectrum.window"] in ("none", "hann-tail")
    assert meta["tau.points"] == "1024"


def test_convergence_report(tmp_path):
    cfg = load(tmp_path, "experiment.kind = convergence-report\n").with_overrides(fock_cap=8)
    result = run_experiment(cfg, workers=1)
    assert result.status == "ok"
    columns, rows = read_results(cfg.output_dir)
    assert columns[-1] == "relative_change"
    assert list(rows[:, 0]) == [4.0, 8.0]
    assert math.isnan(rows[0, -1])
    assert rows[1, -1] < 0.1
    meta = read_meta(cfg.output_dir)
    assert meta["spectrum_gap.unique"] == "true"
    assert meta["solver.fock_cap"] == "8"


def _failing_above(threshold: float):
    def compute(ctx, R_nm):
        if R_nm > threshold:
            raise ParameterError(f"refusing R = {R_nm}")
        return runner._coupling_point(ctx, R_nm)

    return PointJob(runner.COUPLING_JOB.columns, runner._distance_coordinates, compute)


def test_partial_failure_keeps_going(tmp_path, monkeypatch):
    monkeypatch.setattr(runner, "COUPLING_JOB", _failing_above(20.0))
    cfg = load(tmp_path, COUPLING)
    result = run_experiment(cfg, workers=1)
    assert result.status == "partial"

    _, rows = read_results(cfg.output_dir)
    assert len(rows) == 5
    assert np.all(np.isfinite(rows[:3, 1]))
    assert np.all(np.isnan(rows[3:, 1]))
    assert list(rows[:, 0]) == [10.0, 15.0, 20.0, 25.0, 30.0]

    failures = (cfg.output_dir / Config.FAILURES_FILE).read_text(encoding="utf-8").splitlines()
    assert len(failures) == 2
    assert failures[0].startswith("3\tR_nm=")
    assert "ParameterError" in failures[0]
    meta = read_meta(cfg.output_dir)
    assert meta["status"] == "partial"
    assert meta["failed_points"] == "2"


def test_all_points_failing(tmp_path, monkeypatch):
    monkeypatch.setattr(runner, "COUPLING_JOB", _failing_above(0.0))
    cfg = load(tmp_path, COUPLING)
    assert run_experiment(cfg, workers=1).status == "failed"
    assert read_meta(cfg.output_dir)["status"] == "failed"


def test_meta_written_when_setup_fails(tmp_path):
    energies = np.linspace(1.0, 4.0, 7)
    table = write_table(tmp_path / "flat.csv", energies, np.full(7, 2.0), np.full(7, 0.1))
    cfg = load(tmp_path, f"experiment.kind = convergence-report\nmaterial.table = {table}\n")
    with pytest.raises(NoResonanceError):
        run_experiment(cfg, workers=1)
    meta = read_meta(cfg.output_dir)
    assert meta["status"] == "error"
    assert meta["error"].startswith("NoResonanceError")
    assert not (cfg.output_dir / Config.RESULTS_FILE).exists()

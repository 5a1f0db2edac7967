import numpy as np
import pytest

from plasmon_qed.errors import (
    NoResonanceError,
    OutOfDomainError,
    TableParseError,
    TableValidationError,
)
from plasmon_qed.optics.permittivity import (
    PermittivityTable,
    find_sp_resonance,
    load_permittivity_table,
    permittivity,
    permittivity_slope,
)
from tests.conftest import write_table


def test_silver_table_spans_visible_range(silver_table):
    assert len(silver_table) == 49
    assert silver_table.energy_range == (0.64, 6.60)
    assert np.all(np.diff(silver_table.energies) > 0)
    assert np.all(silver_table.eps_im >= 0)


def test_valid_rows_pass_through(tmp_path):
    energies = [2.0, 2.5, 3.0, 3.5, 4.0, 4.5]
    path = write_table(tmp_path / "t.csv", energies, [-6, -5, -4.0, -3, -2, -1], [0.2] * 6)
    table = load_permittivity_table(path)
    assert len(table) == 6
    assert table.source == "t"
    assert permittivity(table, 3.0) == complex(-4.0, 0.2)


def test_byte_order_mark_in_header_is_accepted(tmp_path):
    path = tmp_path / "bom.csv"
    write_table(path, [1, 2, 3, 4], [1, 2, 3, 4], [0, 0, 0, 0])
    path.write_bytes(b"\xef\xbb\xbf" + path.read_bytes())
    assert len(load_permittivity_table(path)) == 4


def test_duplicate_energy_is_rejected(tmp_path):
    path = write_table(tmp_path / "dup.csv", [2.0, 3.0, 3.0, 4.0, 5.0], [-6, -4, -4, -2, -1], [0.2] * 5)
    with pytest.raises(TableValidationError, match="strictly increasing"):
        load_permittivity_table(path)


def test_too_few_rows_is_rejected(tmp_path):
    path = write_table(tmp_path / "short.csv", [1.0, 2.0, 3.0], [-3, -2, -1], [0.1] * 3)
    with pytest.raises(TableValidationError, match="at least 4"):
        load_permittivity_table(path)


def test_active_medium_is_rejected(tmp_path):
    path = write_table(tmp_path / "gain.csv", [1, 2, 3, 4], [-3, -2, -1, 0], [0.1, -0.1, 0.1, 0.1])
    with pytest.raises(TableValidationError, match="passive"):
        load_permittivity_table(path)


def test_malformed_row_reports_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("energy_ev,eps_re,eps_im\n1.0,-3,0.1\n2.0,abc,0.1\n3.0,-1,0.1\n4.0,0,0.1\n", encoding="utf-8")
    with pytest.raises(TableParseError) as excinfo:
        load_permittivity_table(path)
    assert excinfo.value.line_number == 3
    assert "line 3" in str(excinfo.value)


def test_wrong_column_count_and_header(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("energy_ev,eps_re,eps_im\n1.0,-3\n", encoding="utf-8")
    with pytest.raises(TableParseError) as excinfo:
        load_permittivity_table(path)
    assert excinfo.value.line_number == 2

    path = write_table(tmp_path / "header.csv", [1, 2, 3, 4], [1, 2, 3, 4], [0] * 4, header="ev,re,im")
    with pytest.raises(TableParseError) as excinfo:
        load_permittivity_table(path)
    assert excinfo.value.line_number == 1


def test_interpolation_reproduces_nodes(silver_table):
    for k in (0, 10, 25, 47):
        value = permittivity(silver_table, silver_table.energies[k])
        assert value.real == silver_table.eps_re[k]
        assert value.imag == silver_table.eps_im[k]


def test_linear_table_is_interpolated_exactly():
    energies = np.linspace(1.0, 5.0, 9)
    table = PermittivityTable(energies, energies.copy(), np.zeros_like(energies))
    midpoint = 0.5 * (energies[3] + energies[4])
    assert abs(permittivity(table, midpoint).real - midpoint) < 1e-12


def test_silver_near_3ev_is_metallic(silver_table):
    value = permittivity(silver_table, 3.05)
    assert -5.18 < value.real < -4.28
    assert value.imag > 0


def test_array_input_returns_array(silver_table):
    values = permittivity(silver_table, np.array([2.0, 3.0, 4.0]))
    assert values.shape == (3,)
    assert values.dtype == complex


def test_out_of_domain(silver_table):
    with pytest.raises(OutOfDomainError):
        permittivity(silver_table, 0.5)
    with pytest.raises(OutOfDomainError):
        permittivity(silver_table, np.array([3.0, 7.0]))
    with pytest.raises(OutOfDomainError):
        permittivity_slope(silver_table, 6.7)


def test_slope_matches_smooth_derivative():
    energies = np.arange(1.0, 5.0001, 0.05)
    table = PermittivityTable(energies, 5.0 - 80.0 / energies**2, 0.3 + 0.01 * energies)
    for energy in (2.0, 2.5, 3.3):
        exact = 160.0 / energy**3
        assert permittivity_slope(table, energy) == pytest.approx(exact, rel=0.05)


def test_resonance_on_synthetic_table():
    energies = np.linspace(1.0, 8.0, 15)
    table = PermittivityTable(energies, -energies, np.full_like(energies, 0.1))
    assert find_sp_resonance(table, 3.0) == pytest.approx(6.0, abs=1e-10)


def test_silver_resonance_condition(silver_table):
    omega_3 = find_sp_resonance(silver_table, 3.0)
    assert 2.75 < omega_3 < 2.88
    assert abs(permittivity(silver_table, omega_3).real + 6.0) < 1e-10

    omega_1 = find_sp_resonance(silver_table, 1.0)
    assert abs(permittivity(silver_table, omega_1).real + 2.0) < 1e-10
    assert omega_1 > omega_3


def test_no_sign_change_raises():
    energies = np.linspace(1.0, 4.0, 7)
    table = PermittivityTable(energies, np.full_like(energies, 2.0), np.full_like(energies, 0.1))
    with pytest.raises(NoResonanceError):
        find_sp_resonance(table, 3.0)


def test_multiple_roots_pick_lowest(caplog):
    energies = np.linspace(1.0, 5.0, 17)
    eps_re = -6.0 + np.cos(np.pi * (energies - 1.0))
    table = PermittivityTable(energies, eps_re, np.full_like(energies, 0.1))
    root = find_sp_resonance(table, 3.0)
    assert root == pytest.approx(1.5, abs=1e-3)
    assert "roots" in caplog.text

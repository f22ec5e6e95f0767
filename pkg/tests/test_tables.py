"""Tests for coefficient tables, lookup, potentials and heating."""

import numpy as np
import pytest

from cavtrap.constants import TWOPI, mk_to_angfreq
from cavtrap.quantum import SystemParams, mode_function
from cavtrap.tables import (OutOfRange, build_table, drive_for_target,
                            effective_potential, heating_rate, lookup,
                            load_table, save_table, small_amplitude_frequency)


def test_drive_for_target_closed_forms():
    hood = SystemParams(g0=TWOPI * 110, gamma=TWOPI * 2.6, kappa=TWOPI * 14.2,
                        delta_ac=-TWOPI * 47, delta_probe=-TWOPI * 125)
    amp = drive_for_target(hood, 0.3)
    # |<a>|^2 = E^2/(kappa^2 + dcp^2) with dcp = 2pi*78 MHz
    assert amp == pytest.approx(np.sqrt(0.3 * ((TWOPI * 14.2) ** 2 + (TWOPI * 78) ** 2)))
    assert amp / TWOPI == pytest.approx(43.42, abs=0.01)
    pinkse = SystemParams(g0=TWOPI * 16, gamma=TWOPI * 3, kappa=TWOPI * 1.4,
                          delta_ac=-TWOPI * 35, delta_probe=-TWOPI * 40)
    amp = drive_for_target(pinkse, 0.9)
    assert amp == pytest.approx(np.sqrt(0.9 * ((TWOPI * 1.4) ** 2 + (TWOPI * 5) ** 2)))
    assert drive_for_target(pinkse, 0.0) == 0.0


def test_table_rows_at_zero_coupling(hood_tables, pinkse_tables):
    hood_trap = hood_tables[1]
    row = hood_trap.row(0)
    assert row.mean_phi == pytest.approx(0.0, abs=1e-10)
    assert row.photon_number == pytest.approx(0.3, abs=1e-9)
    pinkse_trap = pinkse_tables[1]
    assert pinkse_trap.row(0).photon_number == pytest.approx(0.9, abs=1e-9)


def test_table_invariants(hood_tables):
    for table in hood_tables:
        table.validate()
        assert table.grid[0] == 0.0
        assert table.grid[-1] == pytest.approx(table.params.g0)


def test_rows_vary_smoothly(hood_tables, pinkse_tables):
    # jumps measured against the column's dynamic range (several columns
    # cross zero, which makes pointwise relative jumps meaningless)
    for table in (*hood_tables, *pinkse_tables):
        for name in ("mean_phi", "xi", "chi", "excited_pop", "photon_number"):
            col = getattr(table, name)
            scale = col.max() - col.min()
            if scale == 0:
                continue
            assert np.abs(np.diff(col)).max() / scale < 0.05, name


def test_lookup_identity_on_grid_points(hood_small_tables):
    table = hood_small_tables[1]
    i = 17
    point, hint = lookup(table, table.grid[i], hint=3)
    ref = table.row(i)
    assert point.mean_phi == pytest.approx(ref.mean_phi, rel=1e-12)
    assert point.xi == pytest.approx(ref.xi, rel=1e-12)
    assert point.photon_number == pytest.approx(ref.photon_number, rel=1e-12)


def test_lookup_midpoint_is_average(hood_small_tables):
    table = hood_small_tables[1]
    i = 30
    g = 0.5 * (table.grid[i] + table.grid[i + 1])
    point, hint = lookup(table, g)
    assert hint == i
    assert point.mean_phi == pytest.approx(
        0.5 * (table.mean_phi[i] + table.mean_phi[i + 1]), rel=1e-12)
    assert point.field_amp == pytest.approx(
        0.5 * (table.field_amp[i] + table.field_amp[i + 1]), rel=1e-12)


def test_lookup_hint_matches_fresh_search(hood_small_tables):
    table = hood_small_tables[1]
    rng = np.random.default_rng(3)
    # a continuous path in g, queried with carried hint vs cold start
    g_path = table.params.g0 * 0.5 * (1 + np.sin(np.linspace(0, 10, 400)))
    g_path += rng.uniform(-1e-3, 1e-3, g_path.size) * table.params.g0
    g_path = np.clip(g_path, 0.0, table.params.g0)
    hint = 0
    for g in g_path:
        with_hint, hint = lookup(table, g, hint)
        cold, exhaustive = lookup(table, g, 0)
        # exhaustive bracket from a full scan
        j = int(np.searchsorted(table.grid, g, side="right") - 1)
        j = min(max(j, 0), len(table) - 2)
        assert hint == exhaustive == j
        assert with_hint.mean_phi == cold.mean_phi
        assert with_hint.xi == cold.xi


def test_lookup_out_of_range(hood_small_tables):
    table = hood_small_tables[1]
    with pytest.raises(OutOfRange):
        lookup(table, -1e-6)
    with pytest.raises(OutOfRange):
        lookup(table, table.params.g0 * 1.001)


def test_interpolation_refinement(cache_dir, hood_tables):
    # doubling the production grid must not move interpolated values by more
    # than 1e-3 of the column scale anywhere along g
    from cavtrap.cli import ensure_table
    from cavtrap.config import resolve_config

    coarse = hood_tables[0]
    cfg = resolve_config(preset="hood",
                         set_args=[f"table.n_grid={2 * len(coarse)}"])
    fine = ensure_table(cfg, "probe", cache_dir, quiet=True)
    gs = np.linspace(0, coarse.params.g0, 1500)
    for name in ("mean_phi", "xi", "chi", "excited_pop", "photon_number"):
        a = coarse.interp(name, gs)
        b = fine.interp(name, gs)
        scale = np.abs(b).max()
        assert np.abs(a - b).max() / scale < 1e-3, name


def test_zero_drive_potential_is_flat():
    p = SystemParams(g0=TWOPI * 110, gamma=TWOPI * 2.6, kappa=TWOPI * 14.2,
                     delta_ac=-TWOPI * 47, delta_probe=-TWOPI * 125,
                     wavelength=0.852, waist=14.06, mass=2.2069e-25,
                     drive=0.0, fock_cutoff=3)
    table = build_table(p, n_grid=64)
    prof = effective_potential(table, "radial", n_points=200)
    assert np.abs(prof.potential).max() < 1e-12
    assert np.abs(prof.heating).max() < 1e-12


def test_axial_profile_periodicity(hood_tables):
    trap = hood_tables[1]
    lam = trap.params.wavelength
    prof = effective_potential(trap, "axial", n_points=1601, s_max=lam)
    s, u = prof.coordinate, prof.potential
    # one axial period is lambda/2: U(s + lambda/2) = U(s)
    u_shift = np.interp(s[s < lam / 2] + lam / 2, s, u)
    assert np.abs(u_shift - u[s < lam / 2]).max() < 1e-3 * np.abs(u).max()
    assert lam / 2 == pytest.approx(0.426, abs=5e-4)


def test_profile_mirror_symmetry(hood_tables):
    prof = effective_potential(hood_tables[1], "axial", n_points=801)
    assert np.allclose(prof.potential, prof.potential[::-1], atol=1e-10)
    assert np.allclose(prof.heating, prof.heating[::-1], atol=1e-10)


def test_potential_derivative_matches_force(hood_tables):
    trap = hood_tables[1]
    p = trap.params
    prof = effective_potential(trap, "radial", n_points=4000)
    s, u = prof.coordinate, mk_to_angfreq(prof.potential)
    du = np.gradient(u, s)
    r = np.zeros((len(s), 3))
    r[:, 1] = s
    psi, grad = mode_function(r, p)
    force_term = p.g0 * trap.interp("mean_phi", p.g0 * np.abs(psi)) * grad[:, 1]
    # away from the flat regions, dU/ds = hbar g0 <Phi> dpsi/ds
    sel = np.abs(force_term) > 0.05 * np.abs(force_term).max()
    rel = np.abs(du[sel] - force_term[sel]) / np.abs(force_term[sel])
    assert np.percentile(rel, 99) < 0.01


def test_heating_rate_limiting_form_at_antinode(hood_tables):
    trap = hood_tables[1]
    p = trap.params
    rate = heating_rate(trap, np.zeros(3))
    pop = trap.excited_pop[-1]
    from cavtrap.constants import MK_PER_ANGFREQ

    expected = p.k**2 * p.gamma * pop / p.mass_tilde * MK_PER_ANGFREQ * 1e3
    assert rate == pytest.approx(expected, rel=1e-9)


def test_axial_heating_minima_at_nodes_and_antinodes(hood_tables):
    prof = effective_potential(hood_tables[1], "axial", n_points=1601)
    lam = hood_tables[1].params.wavelength
    s, h = prof.coordinate, prof.heating
    i_anti = int(np.argmin(np.abs(s)))           # antinode
    i_node = int(np.argmin(np.abs(s - lam / 4)))  # node
    i_mid = int(np.argmin(np.abs(s - lam / 8)))   # between
    assert h[i_mid] > 3 * h[i_anti]
    assert h[i_mid] > 3 * h[i_node]


def test_small_amplitude_frequency_harmonic_check(hood_tables):
    # quadratic test profile: f must reproduce the constructed frequency
    from cavtrap.constants import angfreq_to_mk, mass_tilde
    from cavtrap.tables import PotentialProfile

    m = hood_tables[1].params.mass
    f_khz = 9.0
    omega = TWOPI * f_khz * 1e-3
    s = np.linspace(0, 5.0, 800)
    pot = angfreq_to_mk(0.5 * mass_tilde(m) * omega**2 * s**2)
    prof = PotentialProfile(coordinate=s, potential=pot,
                            heating=np.zeros_like(s), label="test")
    assert small_amplitude_frequency(prof, m) == pytest.approx(f_khz, rel=1e-4)


def test_table_persistence_round_trip(tmp_path, hood_small_tables):
    table = hood_small_tables[1]
    path = tmp_path / "table.csv"
    save_table(table, path)
    loaded = load_table(path)
    assert np.array_equal(loaded.grid, table.grid)
    assert np.array_equal(loaded.xi, table.xi)
    assert np.array_equal(loaded.field_amp, table.field_amp)
    assert loaded.drive_label == table.drive_label
    assert loaded.params.g0 == table.params.g0
    # deterministic bytes
    path2 = tmp_path / "table2.csv"
    save_table(table, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_build_table_rejects_small_grid(hood_small_tables):
    with pytest.raises(ValueError):
        build_table(hood_small_tables[1].params, n_grid=32)

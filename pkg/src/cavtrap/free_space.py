"""Equivalent free-space standing-wave trap for comparison with the cavity.

The cavity mode is replaced by a classical field of the same geometry driving
the two-level atom directly: H = -delta sigma+sigma + (Omega/2)(sigma +
sigma+), with Omega(r) = Omega0 psi(r) and the gamma dissipator.  The force
operator is -hbar (Omega0/2) grad(psi) (sigma + sigma+), so the cavity
machinery carries over with the interaction operator Phi replaced by the
dipole quadrature and the coupling axis u = Omega/2 running from 0 to
Omega0/2; the resulting table plugs straight into the potential and heating
profile builders.

Peak-field calibration: by default Omega0 = 2 g0 |<a>_ss(g=g0)| at the trap
drive, i.e. the free-space intensity matches the atom-loaded intracavity
intensity at the mode center.  The empty-cavity variant
Omega0 = 2 g0 sqrt(n_empty) is available; the choice is recorded in the
profile metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quantum, tables
from .constants import mass_tilde, TWOPI
from .quantum import CouplingPointData, EvolutionGenerator


@dataclass(frozen=True)
class FreeSpaceParams:
    """Classical standing-wave trap matched to a cavity geometry."""

    rabi_peak: float           # Omega0, angular (rad/us)
    detuning: float            # field-atom detuning (delta_probe of the cavity case)
    gamma: float
    wavelength: float
    waist: float
    mass: float

    def __post_init__(self):
        if self.rabi_peak < 0:
            raise ValueError("rabi_peak must be nonnegative")

    # duck-typed geometry interface shared with SystemParams so the table and
    # profile machinery applies unchanged with g0 -> Omega0/2
    @property
    def g0(self):
        return self.rabi_peak / 2.0

    @property
    def k(self):
        return TWOPI / self.wavelength

    @property
    def mass_tilde(self):
        return mass_tilde(self.mass)


def _two_level_generator(omega, params):
    s = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    sd = s.conj().T
    quad = s + sd
    ham = -params.detuning * (sd @ s) + 0.5 * omega * quad
    L = quantum.liouvillian_matrix(ham, [(s, params.gamma)])
    ops = {"sigma": s, "sigmad": sd, "phi": quad, "sigsig": sd @ s}
    return EvolutionGenerator(dimension=2, matrix=L, ops=ops, params=None, g=omega / 2.0)


def free_space_point_data(omega, params):
    """Dipole analog of the cavity CouplingPointData at local Rabi frequency omega.

    mean_phi is the mean dipole quadrature <sigma + sigma+>, xi/chi its
    integrated symmetrized correlation and weighted commutator; the cavity
    field entries are zero.
    """
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    gen = _two_level_generator(omega, params)
    rho = quantum.steady_state(gen, check_cutoff=False)
    m = rho.matrix
    quad = gen.ops["phi"]
    mean = np.trace(quad @ m).real
    pop = np.trace(gen.ops["sigsig"] @ m).real
    xi = quantum.integrated_symmetric_correlation(gen, rho)
    chi = quantum.integrated_weighted_commutator(gen, rho)
    return CouplingPointData(g=omega / 2.0, mean_phi=mean, xi=xi, chi=chi,
                             excited_pop=pop, field_amp=0.0, photon_number=0.0)


def calibrate_rabi_peak(cavity_params, trap_table=None, mode="loaded"):
    """Omega0 matching the cavity intensity at mode center.

    mode='loaded': 2 g0 |<a>_ss(g0)| with the atom maximally coupled (from the
    trap table's last row, or computed directly); mode='empty': the
    empty-cavity value 2 g0 sqrt(n_empty).
    """
    if mode == "empty":
        return 2.0 * cavity_params.g0 * np.sqrt(cavity_params.empty_photon_number)
    if mode != "loaded":
        raise ValueError(f"unknown calibration mode {mode!r}")
    if trap_table is not None:
        amp = abs(complex(trap_table.field_amp[-1]))
    else:
        gen = quantum.build_generator(cavity_params, cavity_params.g0)
        rho = quantum.steady_state(gen)
        amp = abs(quantum.static_expectations(rho, gen).field_amp)
    return 2.0 * cavity_params.g0 * amp


def build_free_space_table(params, n_grid=200):
    """CoefficientTable analog over u = Omega/2 in [0, Omega0/2]."""
    if n_grid < 64:
        raise ValueError("n_grid must be at least 64")
    omegas = np.linspace(0.0, params.rabi_peak, n_grid)
    cols = {name: np.zeros(n_grid) for name in
            ("mean_phi", "xi", "chi", "excited_pop", "photon_number")}
    field = np.zeros(n_grid, dtype=complex)
    for i, om in enumerate(omegas):
        pt = free_space_point_data(om, params)
        cols["mean_phi"][i] = pt.mean_phi
        cols["xi"][i] = pt.xi
        cols["chi"][i] = pt.chi
        cols["excited_pop"][i] = pt.excited_pop
    return tables.CoefficientTable(params=params, grid=omegas / 2.0,
                                   field_amp=field, drive_label="free_space",
                                   **cols)


def build_free_space_profiles(params, n_grid=200, n_points=1200):
    """Radial and axial potential/heating profiles of the equivalent trap."""
    table = build_free_space_table(params, n_grid=n_grid)
    radial = tables.effective_potential(table, "radial", n_points=n_points)
    axial = tables.effective_potential(table, "axial", n_points=n_points)
    radial.label = axial.label = "free_space"
    return radial, axial

"""Coupling-value look-up tables and the derived potentials and heating rates.

A CoefficientTable samples the CouplingPointData scalars on an ascending grid
of coupling values g in [0, g0]; the trajectory integrator reads it by linear
interpolation with a carried search hint.  Because the scalars depend on
position only through g, the effective potential is a function of |g| alone:
U(r) = V(|g(r)|) - V(|g(0)|) with V(u) = hbar * int_0^u <Phi>(u') du', and the
local heating rate is Tr[D]/m = (hbar^2 g0^2 xi |grad psi|^2
+ hbar^2 k^2 gamma <sigma+sigma>) / m.

Potentials are reported in mK and heating rates in mK/ms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import quantum
from .constants import MK_PER_ANGFREQ
from .quantum import (CouplingPointData, EvolutionGenerator, SystemParams,
                      mode_function)

TABLE_COLUMNS = ("g", "mean_phi", "xi", "chi", "excited_pop", "re_a", "im_a", "n")
FORMAT_VERSION = 1


class OutOfRange(Exception):
    """Lookup coupling outside [0, g0]."""


@dataclass
class CoefficientTable:
    """Ordered grid of coupling-point scalars for one drive level."""

    params: SystemParams
    grid: np.ndarray
    mean_phi: np.ndarray
    xi: np.ndarray
    chi: np.ndarray
    excited_pop: np.ndarray
    field_amp: np.ndarray          # complex
    photon_number: np.ndarray
    drive_label: str = "trap"

    def validate(self):
        g = self.grid
        if g[0] != 0.0 or abs(g[-1] - self.params.g0) > 1e-9 * self.params.g0:
            raise ValueError("grid must run from 0 to g0")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        for i in range(len(g)):
            self.row(i).validate()
        return self

    def __len__(self):
        return len(self.grid)

    def row(self, i):
        return CouplingPointData(
            g=self.grid[i], mean_phi=self.mean_phi[i], xi=self.xi[i],
            chi=self.chi[i], excited_pop=self.excited_pop[i],
            field_amp=complex(self.field_amp[i]), photon_number=self.photon_number[i])

    def columns_matrix(self):
        """(n_grid, 7) float matrix in kernel column order (no g column)."""
        return np.ascontiguousarray(np.column_stack([
            self.mean_phi, self.xi, self.chi, self.excited_pop,
            self.field_amp.real, self.field_amp.imag, self.photon_number]))

    def potential_of_coupling(self):
        """V(g) = int_0^g <Phi> dg' on the table grid (rad/us, hbar=1)."""
        return cumulative_trapezoid(self.mean_phi, self.grid, initial=0.0)

    def interp(self, name, g):
        """Vectorized linear interpolation of one column at couplings g."""
        col = getattr(self, name)
        if np.iscomplexobj(col):
            return (np.interp(g, self.grid, col.real)
                    + 1j * np.interp(g, self.grid, col.imag))
        return np.interp(g, self.grid, col)

    def transmission(self, g, observable):
        """|<a>|^2 ('heterodyne') or <a+a> ('counting') at coupling(s) g."""
        if observable == "heterodyne":
            return np.abs(self.interp("field_amp", g)) ** 2
        if observable == "counting":
            return self.interp("photon_number", g)
        raise ValueError(f"unknown observable {observable!r}")


@dataclass
class PotentialProfile:
    """Potential (mK) and heating rate (mK/ms) sampled along one axis (um)."""

    coordinate: np.ndarray
    potential: np.ndarray
    heating: np.ndarray
    label: str
    axis: str = "radial"

    def well_depth(self):
        return float(self.potential.max() - self.potential.min())


def drive_for_target(params, target, observable="photon_number"):
    """Drive amplitude giving the target empty-cavity level.

    For the empty (g=0) cavity the steady state is coherent, so |<a>|^2 and
    <a+a> coincide and both equal |E|^2 / (kappa^2 + delta_cp^2).
    """
    if target < 0:
        raise ValueError("target must be nonnegative")
    if observable not in ("photon_number", "heterodyne"):
        raise ValueError(f"unknown observable {observable!r}")
    return float(np.sqrt(target * (params.kappa**2 + params.delta_cp**2)))


def build_table(params, n_grid=200, drive_label="trap", progress=None):
    """Solve the fixed-position problem on a uniform g grid from 0 to g0.

    Raises CutoffTooSmall / SolveFailure annotated with the offending g.
    """
    if n_grid < 64:
        raise ValueError("n_grid must be at least 64")
    grid = np.linspace(0.0, params.g0, n_grid)
    n_max = params.resolved_cutoff()
    a, s = quantum._operators(n_max)
    ad, sd = a.conj().T, s.conj().T
    phi = ad @ s + sd @ a
    d = 2 * (n_max + 1)
    ham0 = (-params.delta_probe * (sd @ s)
            + (params.delta_ac - params.delta_probe) * (ad @ a)
            + params.drive * ad + np.conj(params.drive) * a)
    base = quantum.liouvillian_matrix(ham0, [(a, params.kappa), (s, params.gamma)])
    coupling = quantum.liouvillian_matrix(phi, [])
    ops = {"a": a, "ad": ad, "sigma": s, "sigmad": sd, "phi": phi,
           "num": ad @ a, "sigsig": sd @ s, "n_max": n_max}

    cols = {name: np.zeros(n_grid) for name in
            ("mean_phi", "xi", "chi", "excited_pop", "photon_number")}
    field = np.zeros(n_grid, dtype=complex)
    for i, g in enumerate(grid):
        gen = EvolutionGenerator(dimension=d, matrix=base + g * coupling,
                                 ops=ops, params=params, g=g)
        try:
            point = quantum.coupling_point_data(params, g, gen=gen)
        except (quantum.CutoffTooSmall, quantum.SolveFailure,
                quantum.SingularLiouvillian) as exc:
            raise type(exc)(f"table row {i} (g = {g:.4f} rad/us): {exc}") from exc
        cols["mean_phi"][i] = point.mean_phi
        cols["xi"][i] = point.xi
        cols["chi"][i] = point.chi
        cols["excited_pop"][i] = point.excited_pop
        cols["photon_number"][i] = point.photon_number
        field[i] = point.field_amp
        if progress is not None:
            progress(i + 1, n_grid)
    return CoefficientTable(params=params, grid=grid, field_amp=field,
                            drive_label=drive_label, **cols)


def lookup(table, g, hint=0):
    """Linear interpolation between the bracketing rows, searching from hint.

    Returns (CouplingPointData, lower bracket index).  The walk from the hint
    is O(1) for the path-continuous queries of a trajectory.
    """
    grid = table.grid
    n = len(grid)
    if g < 0.0 or g > grid[-1] + 1e-12:
        raise OutOfRange(f"g = {g} outside [0, {grid[-1]}]")
    g = min(g, grid[-1])
    i = min(max(int(hint), 0), n - 2)
    while i + 1 < n - 1 and g > grid[i + 1]:
        i += 1
    while i > 0 and g < grid[i]:
        i -= 1
    f = (g - grid[i]) / (grid[i + 1] - grid[i])
    lo, hi = table.row(i), table.row(i + 1)
    point = CouplingPointData(
        g=g,
        mean_phi=lo.mean_phi + f * (hi.mean_phi - lo.mean_phi),
        xi=lo.xi + f * (hi.xi - lo.xi),
        chi=lo.chi + f * (hi.chi - lo.chi),
        excited_pop=lo.excited_pop + f * (hi.excited_pop - lo.excited_pop),
        field_amp=lo.field_amp + f * (hi.field_amp - lo.field_amp),
        photon_number=lo.photon_number + f * (hi.photon_number - lo.photon_number))
    return point, i


def _path(table, axis, n_points, s_max=None):
    p = table.params
    if axis == "radial":
        if s_max is None:
            s_max = 3.0 * p.waist
        s = np.linspace(0.0, s_max, n_points)
        r = np.zeros((n_points, 3))
        r[:, 1] = s
    elif axis == "axial":
        if s_max is None:
            s_max = p.wavelength / 2.0
        if n_points % 2 == 0:
            n_points += 1          # keep x = 0 (the path origin) on the grid
        s = np.linspace(-s_max, s_max, n_points)
        r = np.zeros((n_points, 3))
        r[:, 0] = s
    else:
        raise ValueError(f"axis must be 'radial' or 'axial', got {axis!r}")
    return s, r


def heating_rate_arrays(table, psi, grad_norm2):
    """Tr[D]/m in mK/ms from mode value(s) and |grad psi|^2."""
    p = table.params
    u = p.g0 * np.abs(psi)
    xi = table.interp("xi", u)
    pop = table.interp("excited_pop", u)
    rate = (p.g0**2 * xi * grad_norm2 + p.k**2 * p.gamma * pop) / p.mass_tilde
    return rate * MK_PER_ANGFREQ * 1e3


def heating_rate(table, r):
    """Local heating rate dE/dt = Tr[D]/m at position r, in mK/ms."""
    psi, grad = mode_function(np.asarray(r, dtype=float), table.params)
    return float(heating_rate_arrays(table, psi, np.sum(grad**2, axis=-1)))


def effective_potential(table, axis="radial", n_points=1200, s_max=None):
    """Potential U(s) = -int F.ds (mK) and heating (mK/ms) along one axis.

    U is fixed to zero at the path origin (mode center radially, the antinode
    x=0 axially); the integral is a composite trapezoid over n_points samples
    of hbar * g0 * <Phi>(g(s)) * dpsi/ds.
    """
    p = table.params
    s, r = _path(table, axis, n_points, s_max)
    psi, grad = mode_function(r, p)
    u = p.g0 * np.abs(psi)
    mphi_signed = np.sign(psi) * table.interp("mean_phi", u)
    dpsi_ds = grad[:, 0] if axis == "axial" else grad[:, 1]
    integrand = p.g0 * mphi_signed * dpsi_ds
    if axis == "axial":
        # integrate outward from the origin so U(0) = 0 on the two-sided path
        i0 = np.searchsorted(s, 0.0)
        pot = np.empty_like(s)
        pot[i0:] = cumulative_trapezoid(integrand[i0:], s[i0:], initial=0.0)
        pot[:i0 + 1] = cumulative_trapezoid(integrand[i0::-1], s[i0::-1], initial=0.0)[::-1]
    else:
        pot = cumulative_trapezoid(integrand, s, initial=0.0)
    heat = heating_rate_arrays(table, psi, np.sum(grad**2, axis=-1))
    return PotentialProfile(coordinate=s, potential=pot * MK_PER_ANGFREQ,
                            heating=heat, label=table.drive_label, axis=axis)


def small_amplitude_frequency(profile, mass_kg, fit_span=None):
    """Oscillation frequency (kHz) from the curvature at the profile minimum.

    Quadratic fit of the potential over +-fit_span (um) around its minimum;
    default span is 2% of the coordinate range.
    """
    from .constants import mass_tilde, mk_to_angfreq, TWOPI

    s = profile.coordinate
    pot = mk_to_angfreq(profile.potential)
    if fit_span is None:
        fit_span = 0.02 * (s[-1] - s[0])
    s0 = s[np.argmin(pot)]
    sel = np.abs(s - s0) <= fit_span
    if np.count_nonzero(sel) < 5:
        raise ValueError("profile too coarse for curvature fit; increase n_points")
    coeff = np.polyfit(s[sel] - s0, pot[sel], 2)
    omega2 = 2.0 * coeff[0] / mass_tilde(mass_kg)
    if omega2 <= 0:
        raise ValueError("profile minimum has non-positive curvature")
    return float(np.sqrt(omega2) / TWOPI * 1e3)


def heating_per_period(profile, mass_kg):
    """Heating expressed as energy gained per small-amplitude oscillation
    period, as a fraction of the well depth (the scaled comparison view)."""
    f_khz = small_amplitude_frequency(profile, mass_kg)
    period_ms = 1.0 / f_khz
    depth = profile.well_depth()
    return profile.heating * period_ms / depth


# ---------------------------------------------------------------------------
# persistence: versioned CSV + JSON sidecar

def params_dict(params):
    d = asdict(params)
    d["drive"] = [complex(params.drive).real, complex(params.drive).imag]
    return d


def params_from_dict(d):
    d = dict(d)
    dr = d.get("drive", 0.0)
    if isinstance(dr, (list, tuple)):
        d["drive"] = complex(dr[0], dr[1])
    return SystemParams(**d)


def table_hash(params, n_grid, drive_label):
    payload = json.dumps({"params": params_dict(params), "n_grid": n_grid,
                          "drive_label": drive_label, "version": FORMAT_VERSION},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def save_table(table, csv_path):
    csv_path = str(csv_path)
    data = np.column_stack([table.grid, table.mean_phi, table.xi, table.chi,
                            table.excited_pop, table.field_amp.real,
                            table.field_amp.imag, table.photon_number])
    np.savetxt(csv_path, data, delimiter=",", fmt="%.17g",
               header=",".join(TABLE_COLUMNS), comments="")
    meta = {"kind": "coefficient_table", "version": FORMAT_VERSION,
            "drive_label": table.drive_label, "n_grid": len(table),
            "fock_cutoff": table.params.resolved_cutoff(),
            "params": params_dict(table.params),
            "hash": table_hash(table.params, len(table), table.drive_label)}
    with open(_sidecar(csv_path), "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
    return csv_path


def load_table(csv_path):
    csv_path = str(csv_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    with open(_sidecar(csv_path)) as fh:
        meta = json.load(fh)
    params = params_from_dict(meta["params"])
    return CoefficientTable(
        params=params, grid=data[:, 0], mean_phi=data[:, 1], xi=data[:, 2],
        chi=data[:, 3], excited_pop=data[:, 4],
        field_amp=data[:, 5] + 1j * data[:, 6], photon_number=data[:, 7],
        drive_label=meta["drive_label"])


def save_profile(profile, csv_path, extra_meta=None):
    csv_path = str(csv_path)
    data = np.column_stack([profile.coordinate, profile.potential, profile.heating])
    np.savetxt(csv_path, data, delimiter=",", fmt="%.17g",
               header="s,potential_mK,heating_mK_per_ms", comments="")
    meta = {"kind": "potential_profile", "version": FORMAT_VERSION,
            "axis": profile.axis, "label": profile.label}
    if extra_meta:
        meta.update(extra_meta)
    with open(_sidecar(csv_path), "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
    return csv_path


def _sidecar(csv_path):
    return csv_path[:-4] + ".json" if csv_path.endswith(".csv") else csv_path + ".json"

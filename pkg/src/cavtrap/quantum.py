"""Fixed-position internal dynamics of a driven atom-cavity system.

Builds the master-equation generator for a two-level atom coupled to a single
driven cavity mode with the atomic position held fixed, solves for the steady
state, and extracts the static expectations and integrated two-time
correlations of the interaction operator Phi = a^dag sigma + sigma^dag a that
drive the motional model (mean force, momentum diffusion, friction).

Conventions
-----------
hbar = 1; angular frequencies in rad/us.  Detunings are stored as
delta_ac = omega_cavity - omega_atom and delta_probe = omega_probe -
omega_atom; the internal Hamiltonian is written in the frame rotating at the
probe frequency, so its coefficients are -delta_probe (atom) and
delta_ac - delta_probe (cavity).  gamma and kappa are amplitude decay rates:
the dissipators are rate*(2 c rho c+ - c+c rho - rho c+c), i.e. total atomic
linewidth 2*gamma.

Density operators are vectorized column-major: vec(A rho B) =
kron(B.T, A) vec(rho).  The Hilbert space is atom (g, e) tensor Fock(0..N),
dimension 2*(N+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve

from .constants import mass_tilde, TWOPI


class CutoffTooSmall(Exception):
    """Steady state puts more than the tolerated population in the top Fock level."""


class SolveFailure(Exception):
    """Bordered steady-state system is singular beyond tolerance."""


class SingularLiouvillian(Exception):
    """Constrained inverse on the traceless subspace failed."""


TOP_LEVEL_TOL = 1e-6


@dataclass(frozen=True)
class SystemParams:
    """Physical and drive parameters of one experimental regime.

    g0, gamma, kappa, delta_ac, delta_probe and drive are angular (rad/us);
    wavelength and waist in um; mass in kg.  fock_cutoff=None selects the
    default truncation N = ceil(n_emp + 6 sqrt(n_emp) + 6) from the
    empty-cavity photon number n_emp.
    """

    g0: float
    gamma: float
    kappa: float
    delta_ac: float
    delta_probe: float
    drive: complex = 0.0
    wavelength: float = 0.852
    waist: float = 14.0
    mass: float = 2.2069e-25
    fock_cutoff: int | None = None

    def __post_init__(self):
        if not (self.g0 > 0 and self.gamma > 0 and self.kappa > 0):
            raise ValueError("g0, gamma, kappa must be positive")
        if not (self.wavelength > 0 and self.waist > 0 and self.mass > 0):
            raise ValueError("wavelength, waist, mass must be positive")
        if self.fock_cutoff is not None and self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be >= 2")

    @property
    def k(self):
        return TWOPI / self.wavelength

    @property
    def mass_tilde(self):
        return mass_tilde(self.mass)

    @property
    def delta_cp(self):
        """Probe-cavity detuning omega_cavity - omega_probe... stored as delta_ac - delta_probe."""
        return self.delta_ac - self.delta_probe

    @property
    def empty_photon_number(self):
        """Empty-cavity steady-state photon number |E|^2 / (kappa^2 + delta_cp^2)."""
        return abs(self.drive) ** 2 / (self.kappa**2 + self.delta_cp**2)

    def resolved_cutoff(self):
        if self.fock_cutoff is not None:
            return self.fock_cutoff
        n_emp = self.empty_photon_number
        return int(math.ceil(n_emp + 6.0 * math.sqrt(n_emp) + 6.0))

    def replace(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


@dataclass
class EvolutionGenerator:
    """Vectorized master-equation generator at one coupling value."""

    dimension: int
    matrix: np.ndarray                 # (d^2, d^2) complex
    ops: dict = field(repr=False, default_factory=dict)
    params: SystemParams | None = None
    g: float = 0.0
    _lu: tuple | None = field(default=None, repr=False)

    def apply(self, rho):
        d = self.dimension
        return (self.matrix @ rho.reshape(-1, order="F")).reshape((d, d), order="F")


@dataclass
class DensityState:
    """Hermitian trace-one state; validate() enforces the numeric invariants."""

    matrix: np.ndarray

    def validate(self, tr_tol=1e-10, herm_tol=1e-10, eig_tol=-1e-8):
        rho = self.matrix
        if abs(np.trace(rho) - 1.0) > tr_tol:
            raise ValueError("trace deviates from one")
        if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
            raise ValueError("not Hermitian")
        if np.linalg.eigvalsh(rho).min() < eig_tol:
            raise ValueError("negative eigenvalue beyond tolerance")
        return self


@dataclass
class StaticMoments:
    """Position-independent steady-state expectations at one coupling value."""

    mean_phi: float
    excited_pop: float
    field_amp: complex
    photon_number: float


@dataclass
class CouplingPointData:
    """The scalars entering the motional model at one coupling value g.

    xi is the integrated symmetrized autocovariance of Phi (us) and chi the
    tau-weighted commutator integral (us^2); both depend on position only
    through g.
    """

    g: float
    mean_phi: float
    xi: float
    chi: float
    excited_pop: float
    field_amp: complex
    photon_number: float

    def validate(self):
        if self.xi < 0:
            raise ValueError("xi must be nonnegative")
        if not (-1e-9 <= self.excited_pop <= 0.5 + 1e-9):
            raise ValueError("excited_pop outside [0, 1/2]")
        if self.photon_number < abs(self.field_amp) ** 2 - 1e-9:
            raise ValueError("photon_number < |field_amp|^2")
        return self


@dataclass
class RecoilTensor:
    exx: float
    eyy: float
    ezz: float

    @property
    def trace(self):
        return self.exx + self.eyy + self.ezz


@dataclass
class ValidityReport:
    recoil_over_gamma: float
    recoil_over_kappa: float
    epsilon1: float
    epsilon2: float


def mode_function(r, params):
    """Cavity mode psi and its gradient at position(s) r.

    psi = cos(k x) exp(-(y^2+z^2)/w0^2).  r may be shape (3,) or (n, 3);
    returns (psi, grad_psi) with matching leading shape.
    """
    r = np.asarray(r, dtype=float)
    k = params.k
    w0 = params.waist
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    env = np.exp(-(y**2 + z**2) / w0**2)
    cx = np.cos(k * x)
    psi = cx * env
    grad = np.empty_like(r)
    grad[..., 0] = -k * np.sin(k * x) * env
    grad[..., 1] = -2.0 * y / w0**2 * psi
    grad[..., 2] = -2.0 * z / w0**2 * psi
    return psi, grad


def dressed_energies(g, delta_ac):
    """First-manifold dressed energies relative to (omega_atom+omega_cavity)/2."""
    root = np.sqrt(np.asarray(g, dtype=float) ** 2 + delta_ac**2 / 4.0)
    return root, -root


def _operators(n_max):
    """Atom (x) Fock operator set on the 2*(n_max+1) space."""
    a1 = np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |g><e|, basis (g, e)
    eye_a = np.eye(2, dtype=complex)
    eye_c = np.eye(n_max + 1, dtype=complex)
    a = np.kron(eye_a, a1)
    s = np.kron(sm, eye_c)
    return a, s


def _spre(op, d):
    return np.kron(np.eye(d, dtype=complex), op)


def _spost(op, d):
    return np.kron(op.T, np.eye(d, dtype=complex))


def _dissipator(c, d):
    cd = c.conj().T
    cdc = cd @ c
    return 2.0 * np.kron(c.conj(), c) - _spre(cdc, d) - _spost(cdc, d)


def liouvillian_matrix(hamiltonian, collapse):
    """-i[H, .] plus rate*(2 c . c+ - {c+c, .}) terms, vectorized column-major."""
    d = hamiltonian.shape[0]
    L = -1j * (_spre(hamiltonian, d) - _spost(hamiltonian, d))
    for c, rate in collapse:
        L = L + rate * _dissipator(c, d)
    return L


def build_generator(params, g):
    """Generator of the fixed-position master equation at coupling g >= 0.

    The spontaneous-emission recoil factors integrate to the plain sigma
    dissipator once the position is held fixed; the dipole-pattern second
    moments reappear in the motional model through recoil_tensor().
    """
    if g < 0:
        raise ValueError("g must be nonnegative")
    n_max = params.resolved_cutoff()
    a, s = _operators(n_max)
    ad, sd = a.conj().T, s.conj().T
    phi = ad @ s + sd @ a
    ham = (-params.delta_probe * (sd @ s)
           + (params.delta_ac - params.delta_probe) * (ad @ a)
           + g * phi
           + params.drive * ad + np.conj(params.drive) * a)
    L = liouvillian_matrix(ham, [(a, params.kappa), (s, params.gamma)])
    ops = {"a": a, "ad": ad, "sigma": s, "sigmad": sd, "phi": phi,
           "num": ad @ a, "sigsig": sd @ s, "n_max": n_max}
    return EvolutionGenerator(dimension=2 * (n_max + 1), matrix=L, ops=ops,
                              params=params, g=g)


def _trace_indices(d):
    return np.arange(d) * (d + 1)


def _bordered_lu(gen):
    """LU of the generator with row 0 replaced by the trace functional."""
    if gen._lu is None:
        d = gen.dimension
        M = gen.matrix.copy()
        M[0, :] = 0.0
        M[0, _trace_indices(d)] = 1.0
        try:
            gen._lu = lu_factor(M)
        except Exception as exc:  # LinAlgError from a singular factorization
            raise SolveFailure(str(exc)) from exc
        if not np.all(np.isfinite(gen._lu[0])):
            raise SolveFailure("bordered system is singular")
    return gen._lu


def steady_state(gen, check_cutoff=True):
    """Steady state via the trace-constrained bordered linear solve."""
    d = gen.dimension
    lu = _bordered_lu(gen)
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    rho = lu_solve(lu, b).reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    resid = np.linalg.norm(gen.matrix @ rho.reshape(-1, order="F"))
    if not np.isfinite(resid) or resid > 1e-6 * np.linalg.norm(gen.matrix):
        raise SolveFailure(f"steady-state residual too large: {resid:.3e}")
    if check_cutoff and "n_max" in gen.ops:
        n_max = gen.ops["n_max"]
        top = rho[n_max, n_max].real + rho[2 * n_max + 1, 2 * n_max + 1].real
        if top > TOP_LEVEL_TOL:
            raise CutoffTooSmall(
                f"top Fock level holds {top:.2e} population at g={gen.g:.4f}; "
                f"raise fock_cutoff above {n_max}")
    return DensityState(rho)


def static_expectations(rho, gen):
    """Steady-state <Phi>, <sigma+sigma>, <a>, <a+a>; <Phi> is real (Phi Hermitian)."""
    m = rho.matrix if isinstance(rho, DensityState) else rho
    mean_phi = np.trace(gen.ops["phi"] @ m)
    if abs(mean_phi.imag) > 1e-8:
        raise ValueError("<Phi> acquired an imaginary part; state is inconsistent")
    return StaticMoments(
        mean_phi=mean_phi.real,
        excited_pop=np.trace(gen.ops["sigsig"] @ m).real,
        field_amp=complex(np.trace(gen.ops["a"] @ m)),
        photon_number=np.trace(gen.ops["num"] @ m).real,
    )


def _constrained_solve(gen, source_mat):
    """Solve gen X = source on the traceless subspace with Tr X = 0.

    The source is projected traceless; replacing row 0 with the trace
    constraint then pins the free null-space component.  Because the trace
    functional is a left null vector of the generator, the remaining rows
    force gen X = source exactly.
    """
    d = gen.dimension
    lu = _bordered_lu(gen)
    src = source_mat.reshape(-1, order="F").astype(complex).copy()
    tr = np.trace(source_mat) / d
    if tr != 0.0:
        src[_trace_indices(d)] -= tr
    src[0] = 0.0
    x = lu_solve(lu, src)
    if not np.all(np.isfinite(x)):
        raise SingularLiouvillian("constrained solve produced non-finite values")
    return x.reshape((d, d), order="F")


def integrated_symmetric_correlation(gen, rho):
    """xi = int_0^inf dtau (1/2)<{dPhi(tau), dPhi(0)}> via the regression theorem.

    Solves gen X = -(1/2)(dPhi rho + rho dPhi) with Tr X = 0 and returns
    Re Tr[dPhi X]; tiny negative results from roundoff are clamped to zero.
    """
    m = rho.matrix if isinstance(rho, DensityState) else rho
    phi = gen.ops["phi"]
    dphi = phi - np.trace(phi @ m).real * np.eye(gen.dimension)
    source = -0.5 * (dphi @ m + m @ dphi)
    x = _constrained_solve(gen, source)
    xi = np.trace(dphi @ x).real
    if xi < 0.0:
        if xi < -1e-12:
            raise SingularLiouvillian(f"xi = {xi:.3e} significantly negative")
        xi = 0.0
    return xi


def integrated_weighted_commutator(gen, rho):
    """chi = i int_0^inf dtau tau <[Phi(tau), Phi(0)]> via two constrained solves.

    int tau e^(L tau) = (constrained inverse)^2 on the traceless subspace;
    the commutator source Phi rho - rho Phi is traceless by construction.
    """
    m = rho.matrix if isinstance(rho, DensityState) else rho
    phi = gen.ops["phi"]
    source = phi @ m - m @ phi
    x1 = _constrained_solve(gen, source)
    x2 = _constrained_solve(gen, x1)
    chi = 1j * np.trace(phi @ x2)
    if abs(chi.imag) > 1e-9 * max(1.0, abs(chi.real)):
        raise SingularLiouvillian(f"chi has imaginary part {chi.imag:.3e}")
    return chi.real


def coupling_point_data(params, g, gen=None):
    """All CouplingPointData fields at one coupling value."""
    if gen is None:
        gen = build_generator(params, g)
    rho = steady_state(gen)
    stat = static_expectations(rho, gen)
    xi = integrated_symmetric_correlation(gen, rho)
    chi = integrated_weighted_commutator(gen, rho)
    return CouplingPointData(g=g, mean_phi=stat.mean_phi, xi=xi, chi=chi,
                             excited_pop=stat.excited_pop, field_amp=stat.field_amp,
                             photon_number=stat.photon_number).validate()


def recoil_tensor(n_polar=64, n_azimuth=64):
    """Angular second moments of the dipole emission pattern S = (1+(k.x)^2)/2.

    Evaluates (3/8 pi) int S(k.x) k_i k_j d^2k by Gauss-Legendre in cos(theta)
    and a trapezoid in phi (the integrand is a low-order polynomial, so this
    is exact to roundoff); x is the polar axis.
    """
    nodes, weights = leggauss(n_polar)           # cos(theta) in [-1, 1]
    phi = np.linspace(0.0, TWOPI, n_azimuth, endpoint=False)
    dphi = TWOPI / n_azimuth
    c = nodes[:, None]
    s = np.sqrt(1.0 - c**2)
    kx = np.broadcast_to(c, (n_polar, n_azimuth))
    ky = s * np.cos(phi)[None, :]
    kz = s * np.sin(phi)[None, :]
    pattern = 0.5 * (1.0 + kx**2)
    norm = 3.0 / (8.0 * np.pi)
    w2 = weights[:, None] * dphi
    exx = norm * np.sum(w2 * pattern * kx * kx)
    eyy = norm * np.sum(w2 * pattern * ky * ky)
    ezz = norm * np.sum(w2 * pattern * kz * kz)
    return RecoilTensor(exx=exx, eyy=eyy, ezz=ezz)


def validity_report(params, delta_p):
    """Quasiclassical validity estimates for a momentum spread delta_p (units hbar k).

    epsilon1 = hbar k / dp, epsilon2 = k dp / (m min(gamma, kappa)), and the
    recoil-to-linewidth consistency ratios.
    """
    if delta_p <= 0:
        raise ValueError("delta_p must be positive")
    k = params.k
    mt = params.mass_tilde
    recoil = k**2 / (2.0 * mt)       # rad/us
    return ValidityReport(
        recoil_over_gamma=recoil / params.gamma,
        recoil_over_kappa=recoil / params.kappa,
        epsilon1=1.0 / delta_p,
        epsilon2=delta_p * k**2 / (mt * min(params.gamma, params.kappa)),
    )

"""Stochastic atom trajectories with the experimental trigger/detection loop.

The motional state (r, p) evolves under the Ito equations

    dr = p/m dt
    dp = -hbar g0 <Phi> grad(psi) dt - (hbar g0^2/m) chi (p.grad psi) grad(psi) dt
         + momentum noise with per-step covariance 2 D dt,
    D  = hbar^2 g0^2 xi grad(psi) grad(psi)^T
         + hbar^2 k^2 gamma <sigma+sigma> E,

with <Phi>, xi, chi, <sigma+sigma> read from the coupling look-up tables at
|g(r)| (all four are even in g apart from <Phi>, which is odd; the sign of
psi multiplies the mean-force coefficient).  Momentum is carried in hbar*k
units, so the recoil kicks are O(1).

Step splitting: deterministic kick-drift-kick (velocity Verlet) with the
stochastic kick appended to the second half step.  Plain Euler-Maruyama gains
energy at the relative rate (w dt)^2 per step and is unstable for the axial
oscillation (~0.4-0.7 MHz) at the default dt = 10 ns; the splitting has the
same weak order for this SDE and bounded energy error, which the noise-off
conservation property requires.

Triggering: the transmission observable (|<a>|^2 heterodyne or <a+a>
counting) is window-averaged with detection noise and compared to the
threshold; on crossing, the drive switches from the probe to the trap level
after the configured delay, which swaps the coefficient table.

Randomness: one Philox (counter-based) stream pair per trajectory derived
from SeedSequence(base_seed, spawn_key=(index,)) - dynamics noise and
detection noise are independent streams, so results are bit-reproducible and
order-independent across the ensemble.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .constants import G_EARTH, KB
from .tables import CoefficientTable
from .quantum import recoil_tensor

TERMINATION = {1: "radial_exit", 2: "axial_exit", 3: "max_time"}
RECORD_COLUMNS = ("t", "x", "y", "z", "px", "py", "pz", "g", "n_bar",
                  "a_re", "a_im", "sigsig", "drive_flag")

_CHUNK_STEPS = 65536


@dataclass(frozen=True)
class InitialConditionModel:
    """Experiment-faithful launch distribution.

    Axes: x axial (standing wave), z vertical (drop/fountain direction),
    y the horizontal transverse coordinate.  Speeds in um/us.
    """

    mode: str = "drop"                   # 'drop' (fall from MOT) or 'fountain'
    start_plane_offset: float = 1.75     # waists above (drop) / below (fountain)
    y_halfwidth: float = 1.5             # waists, flat distribution
    vx_max: float = 0.0046               # axial speed bound, flat distribution
    mot_temperature: float = 20e-6       # K, transverse thermal velocity
    mot_height: float = 3200.0           # um above mode center (drop)
    mot_sigma: float = 600.0             # um spatial spread of the MOT (drop)
    fountain_v_mean: float = 0.2         # um/us (fountain)
    fountain_v_sigma: float = 0.1        # um/us (fountain)

    def __post_init__(self):
        if self.mode not in ("drop", "fountain"):
            raise ValueError("mode must be 'drop' or 'fountain'")
        if self.vx_max <= 0 or self.mot_temperature <= 0:
            raise ValueError("speed scales must be positive")


def sample_initial(model, params, rng):
    """Draw (r, p) for one trajectory; p in hbar*k units.

    The start plane sits at +-start_plane_offset waists along z; x is flat
    over one axial period, y flat over +-y_halfwidth waists, vx flat over
    +-vx_max, vy thermal at the MOT temperature, and vz from free fall
    (drop) or the launch distribution (fountain).
    """
    w0 = params.waist
    lam = params.wavelength
    x = rng.uniform(-lam / 4.0, lam / 4.0)
    y = rng.uniform(-model.y_halfwidth * w0, model.y_halfwidth * w0)
    vx = rng.uniform(-model.vx_max, model.vx_max)
    v_th = math.sqrt(KB * model.mot_temperature / params.mass) * 1e-6 * 1e6  # m/s = um/us
    vy = rng.normal(0.0, v_th)
    if model.mode == "drop":
        z = model.start_plane_offset * w0
        h = max(rng.normal(model.mot_height, model.mot_sigma), 100.0)
        vz = -math.sqrt(2.0 * G_EARTH * h)
    else:
        z = -model.start_plane_offset * w0
        # fountain kinematics: an atom slower than the free-rise speed over
        # the start-plane offset turns around under gravity before reaching
        # the mode center and never enters the ensemble
        v_floor = math.sqrt(2.0 * G_EARTH * model.start_plane_offset * w0)
        vz = rng.normal(model.fountain_v_mean, model.fountain_v_sigma)
        while vz < v_floor:
            vz = rng.normal(model.fountain_v_mean, model.fountain_v_sigma)
    r = np.array([x, y, z])
    v = np.array([vx, vy, vz])
    q = v * params.mass_tilde / params.k
    return r, q


@dataclass(frozen=True)
class TriggerConfig:
    """Detection and drive-switching model."""

    observable: str = "heterodyne"      # 'heterodyne' -> |<a>|^2, 'counting' -> <a+a>
    probe_level: float = 0.05           # empty-cavity level at the probe drive
    threshold: float = 0.32
    trap_level: float = 0.3             # empty-cavity level at the trap drive
    window: float = 9.0                 # averaging / binning time, us
    delay: float = 2.0                  # trigger-to-switch delay, us
    noise_sigma: float = 0.05           # Gaussian std at reference signal (heterodyne)
    noise_ref_signal: float = 0.32
    bandwidth_khz: float = 100.0        # detection bandwidth (analysis filtering)
    count_rate: float = 2.0             # counts/us per intracavity photon (counting)

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.observable not in ("heterodyne", "counting"):
            raise ValueError("observable must be 'heterodyne' or 'counting'")
        if not self.probe_level < self.threshold:
            raise ValueError("threshold must exceed the probe-level transmission")

    def noise_std(self, signal):
        """Detection noise std at a window-averaged signal level."""
        s = np.maximum(np.asarray(signal, dtype=float), 0.0)
        if self.observable == "heterodyne":
            return self.noise_sigma * np.sqrt(s / self.noise_ref_signal)
        return np.sqrt(s / (self.count_rate * self.window))


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01                  # us (10 ns)
    record_dt: float = 0.25           # us between stored samples
    max_time: float = 5000.0          # us
    axial_bound: float = 5.0          # um, |x| exit
    mean_force: bool = True
    friction_sign: float = 1.0        # +1 physical, -1 reversed, 0 off
    cavity_noise: bool = True
    recoil_noise: bool = True
    freeze_coefficients: bool = False
    pair_noise: bool = False          # consume paired normals (dt-halving studies)

    def steps(self):
        rec_every = max(int(round(self.record_dt / self.dt)), 1)
        n_max = int(math.ceil(self.max_time / self.dt))
        n_max = ((n_max + rec_every - 1) // rec_every) * rec_every
        return rec_every, n_max


@dataclass
class TransitSetup:
    """Everything a trajectory needs: tables for both drive levels plus models."""

    probe_table: CoefficientTable
    trap_table: CoefficientTable
    trigger: TriggerConfig
    initial: InitialConditionModel
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    triggered: bool = True
    preset_id: str = "custom"

    @property
    def params(self):
        return self.trap_table.params


@dataclass
class TrajectoryRecord:
    """Uniformly sampled time series of one simulated transit."""

    t: np.ndarray
    r: np.ndarray              # (n, 3) um
    p: np.ndarray              # (n, 3) hbar*k
    g: np.ndarray              # signed coupling g0*psi(r(t))
    photon_number: np.ndarray
    field_re: np.ndarray
    field_im: np.ndarray
    excited_pop: np.ndarray
    drive_flag: np.ndarray
    termination: str
    trigger_time: float | None
    seed: int | None = None
    index: int = 0
    preset_id: str = "custom"

    def transmission(self, observable):
        if observable == "heterodyne":
            return self.field_re**2 + self.field_im**2
        if observable == "counting":
            return self.photon_number
        raise ValueError(f"unknown observable {observable!r}")

    @property
    def duration_simulated(self):
        return float(self.t[-1] - self.t[0])

    def switch_time(self, delay):
        return None if self.trigger_time is None else self.trigger_time + delay

    def data_matrix(self):
        return np.column_stack([self.t, self.r, self.p, self.g,
                                self.photon_number, self.field_re,
                                self.field_im, self.excited_pop,
                                self.drive_flag])

    def save(self, csv_path):
        csv_path = str(csv_path)
        np.savetxt(csv_path, self.data_matrix(), delimiter=",", fmt="%.10g",
                   header=",".join(RECORD_COLUMNS), comments="")
        meta = {"kind": "trajectory_record", "seed": self.seed, "index": self.index,
                "preset": self.preset_id, "termination": self.termination,
                "trigger_time_us": self.trigger_time}
        with open(csv_path[:-4] + ".json" if csv_path.endswith(".csv")
                  else csv_path + ".json", "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=1)
        return csv_path

    @classmethod
    def load(cls, csv_path):
        csv_path = str(csv_path)
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
        side = csv_path[:-4] + ".json" if csv_path.endswith(".csv") else csv_path + ".json"
        with open(side) as fh:
            meta = json.load(fh)
        return cls(t=data[:, 0], r=data[:, 1:4], p=data[:, 4:7], g=data[:, 7],
                   photon_number=data[:, 8], field_re=data[:, 9],
                   field_im=data[:, 10], excited_pop=data[:, 11],
                   drive_flag=data[:, 12], termination=meta["termination"],
                   trigger_time=meta["trigger_time_us"], seed=meta["seed"],
                   index=meta["index"], preset_id=meta["preset"])


def _rng_pair(seed, index):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    dyn_ss, det_ss = ss.spawn(2)
    return (np.random.Generator(np.random.Philox(dyn_ss)),
            np.random.Generator(np.random.Philox(det_ss)))


_SQRT_E = None


def _recoil_weights():
    global _SQRT_E
    if _SQRT_E is None:
        e = recoil_tensor()
        _SQRT_E = (math.sqrt(e.exx), math.sqrt(e.eyy), math.sqrt(e.ezz))
    return _SQRT_E


def _kernel_args(setup):
    p = setup.params
    trig = setup.trigger
    it = setup.integrator
    se = _recoil_weights()
    rec_every, n_max = it.steps()
    w_steps = max(int(round(trig.window / it.dt)), 1)
    if setup.triggered:
        trig_mode = (_kernel.TRIG_HETERODYNE if trig.observable == "heterodyne"
                     else _kernel.TRIG_COUNTING)
    else:
        trig_mode = _kernel.TRIG_NONE
    return dict(
        grid_p=np.ascontiguousarray(setup.probe_table.grid),
        cols_p=setup.probe_table.columns_matrix(),
        grid_t=np.ascontiguousarray(setup.trap_table.grid),
        cols_t=setup.trap_table.columns_matrix(),
        g0=p.g0, k=p.k, m_t=p.mass_tilde, w0=p.waist, gamma=p.gamma,
        se_x=se[0], se_y=se[1], se_z=se[2],
        dt=it.dt, rec_every=rec_every, n_steps_max=n_max,
        trig_mode=trig_mode, w_steps=w_steps, threshold=trig.threshold,
        delay_steps=int(round(trig.delay / it.dt)),
        sigma_ref=trig.noise_sigma, s_ref=trig.noise_ref_signal,
        count_rate=trig.count_rate,
        x_bound=it.axial_bound,
        mean_on=1.0 if it.mean_force else 0.0,
        fric_sign=float(it.friction_sign),
        cav_on=1.0 if it.cavity_noise else 0.0,
        rec_on=1.0 if it.recoil_noise else 0.0,
        freeze=1 if it.freeze_coefficients else 0,
        nz=2 if it.pair_noise else 1,
    )


def _frozen_row(setup, r0, drive0):
    """Full coefficient set (table row plus mode geometry) at the initial
    position, pinned for freeze_coefficients runs."""
    from .quantum import mode_function

    table = setup.trap_table if drive0 == 1 else setup.probe_table
    psi, grad = mode_function(r0, setup.params)
    psi = float(psi)
    u = setup.params.g0 * abs(psi)
    return np.array([
        float(table.interp("mean_phi", u)), float(table.interp("xi", u)),
        float(table.interp("chi", u)), float(table.interp("excited_pop", u)),
        float(table.interp("field_amp", u).real),
        float(table.interp("field_amp", u).imag),
        float(table.interp("photon_number", u)),
        float(grad[0]), float(grad[1]), float(grad[2]),
        1.0 if psi >= 0 else -1.0, psi])


def run_transit(setup, seed, index=0, initial_state=None, rho_exit=None):
    """Integrate one transit; deterministic given (seed, index).

    Terminates when the atom exceeds its starting radial distance (or the
    explicit rho_exit), leaves the axial bound, or reaches max_time (recorded
    as the termination reason).
    """
    args = _kernel_args(setup)
    it = setup.integrator
    rng_dyn, rng_det = _rng_pair(seed, index)
    if initial_state is None:
        r0, q0 = sample_initial(setup.initial, setup.params, rng_dyn)
    else:
        r0, q0 = (np.asarray(initial_state[0], dtype=float),
                  np.asarray(initial_state[1], dtype=float))
    if rho_exit is None:
        rho_exit2 = float(r0[1]**2 + r0[2]**2)
    else:
        rho_exit2 = float(rho_exit) ** 2

    n_max = args["n_steps_max"]
    w_steps = args["w_steps"]
    if args["trig_mode"] == _kernel.TRIG_HETERODYNE:
        det = rng_det.standard_normal(n_max // w_steps + 2)
    elif args["trig_mode"] == _kernel.TRIG_COUNTING:
        det = rng_det.random(n_max // w_steps + 2)
    else:
        det = np.zeros(1)

    drive0 = 0 if setup.triggered else 1
    fstate = np.zeros(8)
    fstate[0:3] = r0
    fstate[3:6] = q0
    istate = np.zeros(10, dtype=np.int64)
    istate[_kernel.DRIVE] = drive0
    istate[_kernel.TRIGGER_STEP] = -1
    istate[_kernel.SWITCH_AT] = np.iinfo(np.int64).max // 2
    win = np.zeros(w_steps)
    rec = np.empty((n_max // args["rec_every"] + 2, 13))
    frozen = (_frozen_row(setup, r0, drive0) if it.freeze_coefficients
              else np.zeros(12))

    nz = args["nz"]
    status = _kernel.ST_RUNNING
    while status == _kernel.ST_RUNNING:
        remaining = n_max - istate[_kernel.STEP]
        steps = min(_CHUNK_STEPS, remaining)
        znorm = rng_dyn.standard_normal((steps * nz, 4))
        status = _kernel.run_chunk(
            fstate, istate, win, rec, znorm, det,
            args["grid_p"], args["cols_p"], args["grid_t"], args["cols_t"],
            args["g0"], args["k"], args["m_t"], args["w0"], args["gamma"],
            args["se_x"], args["se_y"], args["se_z"],
            args["dt"], args["rec_every"], n_max,
            1 if steps == remaining else 0,
            args["trig_mode"], w_steps, args["threshold"], args["delay_steps"],
            args["sigma_ref"], args["s_ref"], args["count_rate"],
            rho_exit2, args["x_bound"],
            args["mean_on"], args["fric_sign"], args["cav_on"], args["rec_on"],
            args["freeze"], nz, frozen)

    n_rec = istate[_kernel.REC_COUNT]
    data = rec[:n_rec]
    trig_step = istate[_kernel.TRIGGER_STEP]
    return TrajectoryRecord(
        t=data[:, 0].copy(), r=data[:, 1:4].copy(), p=data[:, 4:7].copy(),
        g=data[:, 7].copy(), photon_number=data[:, 8].copy(),
        field_re=data[:, 9].copy(), field_im=data[:, 10].copy(),
        excited_pop=data[:, 11].copy(), drive_flag=data[:, 12].copy(),
        termination=TERMINATION[int(status)],
        trigger_time=None if trig_step < 0 else float(trig_step * it.dt),
        seed=seed, index=index, preset_id=setup.preset_id)


@dataclass
class EnsembleResult:
    records: list
    errors: list

    def __len__(self):
        return len(self.records)


def run_ensemble(setup, n, base_seed, progress=None):
    """n independent transits with per-index seeds derived from base_seed.

    Per-trajectory failures are collected, not raised, so one bad draw cannot
    abort the ensemble.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    records, errors = [], []
    for i in range(n):
        try:
            records.append(run_transit(setup, base_seed, index=i))
        except Exception as exc:  # aggregate per-trajectory errors
            errors.append((i, repr(exc)))
        if progress is not None:
            progress(i + 1, n)
    return EnsembleResult(records=records, errors=errors)


# ---------------------------------------------------------------------------
# reference single-step update and detection monitor (python mirrors of the
# kernel, for tests and interactive use)

@dataclass
class PhaseState:
    r: np.ndarray
    p: np.ndarray              # hbar*k
    hint: int = 0


def step(state, table, dt, rng, mean_force=True, friction_sign=1.0,
         cavity_noise=True, recoil_noise=True):
    """One kick-drift-kick update against a single coefficient table.

    Reference implementation of the kernel step (tested for parity); returns
    a new PhaseState.
    """
    from .quantum import mode_function
    from .tables import lookup

    p_sys = table.params
    g0, k, m_t = p_sys.g0, p_sys.k, p_sys.mass_tilde
    se = _recoil_weights()

    def accel(r, q, hint):
        psi, grad = mode_function(r, p_sys)
        u = g0 * abs(float(psi))
        point, hint = lookup(table, u, hint)
        sgn = 1.0 if psi >= 0 else -1.0
        qd = float(q @ grad)
        a = (-(mean_force * (g0 / k) * sgn * point.mean_phi) * grad
             - friction_sign * (g0**2 / m_t) * point.chi * qd * grad)
        return a, grad, point, hint

    r = state.r.astype(float).copy()
    q = state.p.astype(float).copy()
    a1, _, _, hint = accel(r, q, state.hint)
    q = q + 0.5 * dt * a1
    r = r + dt * (k / m_t) * q
    a2, grad, point, hint = accel(r, q, hint)
    q = q + 0.5 * dt * a2
    z = rng.standard_normal(4)
    amp_cav = (1.0 if cavity_noise else 0.0) * (g0 / k) * math.sqrt(2.0 * max(point.xi, 0.0) * dt)
    amp_rec = (1.0 if recoil_noise else 0.0) * math.sqrt(2.0 * p_sys.gamma * max(point.excited_pop, 0.0) * dt)
    q = q + amp_cav * grad * z[0] + amp_rec * np.array(se) * z[1:4]
    return PhaseState(r=r, p=q, hint=hint)


class DetectionMonitor:
    """Rolling-window (heterodyne) or binned-counting trigger monitor.

    update() consumes one instantaneous observable sample per integrator step
    and returns (window value or None, trigger decision).  Noise draws are
    held for one full window duration (their bandwidth is 1/window).
    """

    def __init__(self, config, dt):
        self.config = config
        self.dt = dt
        self.w_steps = max(int(round(config.window / dt)), 1)
        self.buf = np.zeros(self.w_steps)
        self.pos = 0
        self.filled = 0
        self.total = 0.0
        self.acc = 0.0
        self.n = 0
        self.noise = 0.0
        self.triggered = False
        self.value = None

    def update(self, obs, rng):
        cfg = self.config
        if cfg.observable == "heterodyne":
            if self.filled < self.w_steps:
                self.buf[self.pos] = obs
                self.total += obs
                self.filled += 1
            else:
                self.total += obs - self.buf[self.pos]
                self.buf[self.pos] = obs
            self.pos = (self.pos + 1) % self.w_steps
            if self.n % self.w_steps == 0:
                self.noise = rng.standard_normal()
            self.n += 1
            if self.filled == self.w_steps:
                avg = self.total / self.w_steps
                self.value = avg + float(cfg.noise_std(avg)) * self.noise
                if self.value >= cfg.threshold:
                    self.triggered = True
            return self.value, self.triggered
        # counting
        self.acc += obs * self.dt
        self.n += 1
        if self.n % self.w_steps == 0:
            lam = cfg.count_rate * self.acc
            counts = _poisson_from_uniform(rng.random(), lam)
            self.value = counts / (cfg.count_rate * self.w_steps * self.dt)
            if self.value >= cfg.threshold:
                self.triggered = True
            self.acc = 0.0
        return self.value, self.triggered


def _poisson_from_uniform(u, lam):
    return _kernel._poisson_inv(u, lam)


def detection_update(monitor, obs, dt, rng):
    """Functional wrapper over DetectionMonitor.update (dt fixed at init)."""
    if abs(dt - monitor.dt) > 1e-15:
        raise ValueError("monitor was initialized with a different dt")
    return monitor.update(obs, rng)

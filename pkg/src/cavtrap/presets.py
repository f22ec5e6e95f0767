"""Parameter presets for the two experimental regimes.

All rates are angular (rad/us = 2*pi*MHz).  `hood` is the cesium experiment
(heterodyne detection of |<a>|^2, drop loading); `pinkse` the rubidium one
(photon counting of <a+a>, fountain loading) with the detunings used for its
trajectory simulations; `pinkse_fig4` carries the slightly different
detunings of its published potential/heating profiles.

Fock cutoffs are validated values: with the atom maximally coupled the
intracavity photon number exceeds the empty-cavity level (pinkse trap drive
peaks near nbar = 3.9), so the default empty-cavity cutoff formula would
truncate too low; every table build still checks the top-level population.
"""

import copy

from .constants import (CS133_MASS, CS_D2_WAVELENGTH, RB87_MASS,
                        RB_D2_WAVELENGTH, TWOPI)

DEFAULTS = {
    "hood": {
        "preset": "hood",
        "system": {
            "g0": TWOPI * 110.0, "gamma": TWOPI * 2.6, "kappa": TWOPI * 14.2,
            "delta_ac": -TWOPI * 47.0, "delta_probe": -TWOPI * 125.0,
            "wavelength": CS_D2_WAVELENGTH, "waist": 14.06, "mass": CS133_MASS,
        },
        "drive": {
            "observable": "heterodyne", "probe_target": 0.05, "trap_target": 0.3,
            "probe_fock_cutoff": 10, "trap_fock_cutoff": 13,
        },
        "trigger": {
            "observable": "heterodyne", "probe_level": 0.05, "threshold": 0.32,
            "trap_level": 0.3, "window": 9.0, "delay": 2.0,
            "noise_sigma": 0.05, "noise_ref_signal": 0.32,
            "bandwidth_khz": 100.0, "count_rate": 2.0,
        },
        "initial": {
            "mode": "drop", "start_plane_offset": 1.75, "y_halfwidth": 1.5,
            "vx_max": 0.0046, "mot_temperature": 20e-6,
            "mot_height": 3200.0, "mot_sigma": 600.0,
            "fountain_v_mean": 0.2, "fountain_v_sigma": 0.1,
        },
        "integrator": {
            "dt": 0.01, "record_dt": 0.25, "max_time": 5000.0,
            "axial_bound": 5.0, "friction_sign": 1.0,
        },
        "table": {"n_grid": 200},
        "analysis": {
            "duration_threshold_sigma": 2.0, "histogram_bin_us": 50.0,
            "modulation_cutoff_khz": 25.0, "spectrogram_window_us": 25.0,
            "spectrogram_step_us": 5.0, "run": ["histogram"],
        },
        "run": {"n_trajectories": 400, "base_seed": 1, "triggered": True,
                "out_dir": "out"},
    },
    "pinkse": {
        "preset": "pinkse",
        "system": {
            "g0": TWOPI * 16.0, "gamma": TWOPI * 3.0, "kappa": TWOPI * 1.4,
            "delta_ac": -TWOPI * 35.0, "delta_probe": -TWOPI * 40.0,
            "wavelength": RB_D2_WAVELENGTH, "waist": 29.0, "mass": RB87_MASS,
        },
        "drive": {
            "observable": "counting", "probe_target": 0.15, "trap_target": 0.9,
            "probe_fock_cutoff": 12, "trap_fock_cutoff": 20,
        },
        "trigger": {
            "observable": "counting", "probe_level": 0.15, "threshold": 0.85,
            "trap_level": 0.9, "window": 10.0, "delay": 0.0,
            "noise_sigma": 0.05, "noise_ref_signal": 0.32,
            "bandwidth_khz": 100.0, "count_rate": 2.0,
        },
        "initial": {
            "mode": "fountain", "start_plane_offset": 1.75, "y_halfwidth": 1.5,
            "vx_max": 0.004, "mot_temperature": 20e-6,
            "mot_height": 3200.0, "mot_sigma": 600.0,
            "fountain_v_mean": 0.2, "fountain_v_sigma": 0.1,
        },
        "integrator": {
            "dt": 0.01, "record_dt": 0.25, "max_time": 5000.0,
            "axial_bound": 50.0, "friction_sign": 1.0,
        },
        # the friction coefficient has a sharp resonant feature near g0 at
        # the probe drive; 200 grid points fail the row-smoothness guard
        "table": {"n_grid": 300},
        # counting-mode distinguishability uses a 4-sigma cut: per 10-us bin
        # the Poisson noise at the empty trap level is 24% relative, and a
        # 2-sigma cut would flag false transits in 1 of 22 empty bins
        "analysis": {
            "duration_threshold_sigma": 4.0, "histogram_bin_us": 50.0,
            "modulation_cutoff_khz": 10.0, "spectrogram_window_us": 25.0,
            "spectrogram_step_us": 5.0, "run": ["histogram"],
        },
        "run": {"n_trajectories": 400, "base_seed": 1, "triggered": True,
                "out_dir": "out"},
    },
}

# profile-figure variant of the pinkse detunings
DEFAULTS["pinkse_fig4"] = copy.deepcopy(DEFAULTS["pinkse"])
DEFAULTS["pinkse_fig4"]["preset"] = "pinkse_fig4"
DEFAULTS["pinkse_fig4"]["system"]["delta_ac"] = -TWOPI * 40.0
DEFAULTS["pinkse_fig4"]["system"]["delta_probe"] = -TWOPI * 45.0

# custom preset: every system field must come from the user's config
DEFAULTS["custom"] = copy.deepcopy(DEFAULTS["hood"])
DEFAULTS["custom"]["preset"] = "custom"
for _key in DEFAULTS["custom"]["system"]:
    DEFAULTS["custom"]["system"][_key] = None
DEFAULTS["custom"]["drive"]["probe_fock_cutoff"] = None
DEFAULTS["custom"]["drive"]["trap_fock_cutoff"] = None


def preset_defaults(name):
    if name not in DEFAULTS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(DEFAULTS)}")
    return copy.deepcopy(DEFAULTS[name])

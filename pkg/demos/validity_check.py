"""Quasiclassical-validity report for both parameter sets.

The trajectory model treats the atomic center of mass as a classical
stochastic particle, which requires single-photon momentum kicks small
against the momentum spread (epsilon1) and Doppler shifts small against the
atomic and cavity linewidths (epsilon2); both must hold simultaneously,
which needs the recoil frequency well below gamma and kappa.

Run:  python demos/validity_check.py
"""

import numpy as np

from cavtrap.config import resolve_config
from cavtrap.constants import KB, HBAR
from cavtrap.quantum import validity_report


def thermal_dp(params, temperature):
    """sqrt(m k_B T) in hbar*k units."""
    p_si = np.sqrt(params.mass * KB * temperature)
    return p_si / (HBAR * params.k * 1e6)


def main():
    for preset in ("hood", "pinkse"):
        cfg = resolve_config(preset=preset)
        p = cfg.trap_params
        dp = thermal_dp(p, cfg.initial.mot_temperature)
        rep = validity_report(p, dp)
        print(f"{preset}: delta_p = {dp:.1f} hbar k at "
              f"{cfg.initial.mot_temperature * 1e6:.0f} uK")
        print(f"  recoil/gamma = {rep.recoil_over_gamma:.2e}   "
              f"recoil/kappa = {rep.recoil_over_kappa:.2e}")
        print(f"  epsilon1 = {rep.epsilon1:.3f}   epsilon2 = {rep.epsilon2:.3f}")
        worst = max(rep.epsilon1, rep.epsilon2)
        print(f"  -> both expansion parameters {'<< 1: OK' if worst < 0.3 else 'NOT small'}")


if __name__ == "__main__":
    main()
